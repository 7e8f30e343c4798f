use dissext::expr::{Expr, C64};
use dissext::grid::{make_grid, DomainKind, GridSpec};

fn p(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

#[test]
fn interval_grid_covers_unit_measure() {
    let g = make_grid(DomainKind::Interval { b: 1.0 }, 64, 0.0).unwrap();
    assert_eq!(g.n(), 64);
    assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
    assert!(g.nodes.iter().all(|&x| x > 0.0 && x < 1.0));
    assert!(g.weights.iter().all(|&w| w > 0.0));
    assert!((g.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn offset_grid_starts_at_offset() {
    let g = make_grid(DomainKind::Interval { b: 1.0 }, 64, 1e-3).unwrap();
    assert!((g.left() - 1e-3).abs() < 1e-15);
    assert!(g.nodes[0] >= 1e-3);
    assert!((g.weights.iter().sum::<f64>() - (1.0 - 1e-3)).abs() < 1e-12);
}

#[test]
fn halfline_grid_reaches_truncation() {
    let g = make_grid(DomainKind::Halfline { r: 40.0 }, 512, 0.0).unwrap();
    assert!((g.right() - 40.0).abs() < 1e-12);
    assert!(*g.nodes.last().unwrap() < 40.0);
    assert!((g.weights.iter().sum::<f64>() - 40.0).abs() < 1e-10);
}

#[test]
fn quadrature_matches_exact_integrals() {
    let g = make_grid(DomainKind::Interval { b: 1.0 }, 64, 0.0).unwrap();
    let one = g.sample(&Expr::real(1.0));
    assert!((one.inner(&one).unwrap().re - 1.0).abs() < 1e-12);
    let x = g.sample(&p("x"));
    assert!((x.inner(&x).unwrap().re - 1.0 / 3.0).abs() < 1e-10);
    let h = make_grid(DomainKind::Halfline { r: 40.0 }, 512, 0.0).unwrap();
    let e = h.sample(&p("exp(-x)"));
    assert!((e.inner(&e).unwrap().re - 0.5).abs() < 1e-10);
}

#[test]
fn differentiation_accuracy() {
    let g = make_grid(DomainKind::Interval { b: 1.0 }, 128, 0.0).unwrap();
    let d = g.sample(&p("x")).differentiate();
    assert!(d.values.iter().all(|v| (v - C64::new(1.0, 0.0)).norm() < 1e-8));
    let d = g.sample(&p("x^2 - x")).differentiate();
    assert!((d.norm_sq() - 1.0 / 3.0).abs() < 1e-8);
    let gamma = 0.3;
    let g = GridSpec::new(DomainKind::Interval { b: 1.0 }, 256, 0.0).graded_left(40).build().unwrap();
    let mut f = g.sample(&p("x^1.3"));
    f.source = None;
    let d = f.differentiate();
    for (&x, v) in g.nodes.iter().zip(&d.values) {
        if x > 0.05 {
            assert!((v.re - (gamma + 1.0) * x.powf(gamma)).abs() < 1e-6, "x = {x}");
        }
    }
}

#[test]
fn boundary_traces() {
    let g = make_grid(DomainKind::Interval { b: 1.0 }, 64, 0.0).unwrap();
    let t = g.sample(&p("x^2 - x")).boundary_data();
    let (fb, dfb) = t.right().unwrap();
    assert!(t.f0.norm() < 1e-10 && fb.norm() < 1e-10);
    assert!((t.df0 + 1.0).norm() < 1e-8 && (dfb - 1.0).norm() < 1e-8);

    let h = make_grid(DomainKind::Halfline { r: 40.0 }, 512, 0.0).unwrap();
    let t = h.sample(&p("x^2*exp(-x)")).boundary_data();
    assert!(t.f0.norm() < 1e-10 && t.df0.norm() < 1e-8);
    assert!(t.fb.is_none());
}

#[test]
fn sampled_traces_agree_with_analytic_ones() {
    let g = make_grid(DomainKind::Interval { b: 1.0 }, 128, 0.0).unwrap();
    let mut f = g.sample(&p("exp(x)"));
    f.source = None;
    let t = f.boundary_data();
    let (fb, dfb) = t.right().unwrap();
    assert!((t.f0 - 1.0).norm() < 1e-6 && (t.df0 - 1.0).norm() < 1e-4);
    let e = std::f64::consts::E;
    assert!((fb - e).norm() < 1e-6 && (dfb - e).norm() < 1e-4);
}
