use dissext::expr::{Expr, C64};
use dissext::forms::*;
use dissext::grid::{make_grid, DomainKind, GridSpec};

fn p(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

fn unit_interval(n: usize) -> std::sync::Arc<dissext::grid::Grid> {
    make_grid(DomainKind::Interval { b: 1.0 }, n, 0.0).unwrap()
}

#[test]
fn friedrichs_forms() {
    let g = unit_interval(128);
    let lap = ImaginaryPartSpec::dirichlet_laplacian_interval(1.0);
    assert!((friedrichs_form_sq(&lap, &g.sample(&p("x^2 - x"))).unwrap() - 1.0 / 3.0).abs() < 1e-8);

    let sg = GridSpec::new(DomainKind::Interval { b: 1.0 }, 256, 1e-12).graded_left(40).build().unwrap();
    let mult = ImaginaryPartSpec::multiplication(p("0.25/x"), &sg, Some(0.25)).unwrap();
    assert!(friedrichs_form_sq(&mult, &sg.sample(&Expr::real(1.0))).is_err());

    let h = make_grid(DomainKind::Halfline { r: 40.0 }, 512, 0.0).unwrap();
    let r1 = ImaginaryPartSpec::rank_one(1.0, p("sqrt(2)*exp(-x)"), &h).unwrap();
    assert!((friedrichs_form_sq(&r1, &h.sample(&p("sqrt(2)*exp(-x)"))).unwrap() - 1.0).abs() < 1e-10);
    assert!(ImaginaryPartSpec::rank_one(1.0, p("exp(-x)"), &h).is_err());
}

#[test]
fn krein_forms() {
    let g = unit_interval(128);
    let lap = ImaginaryPartSpec::dirichlet_laplacian_interval(1.0);
    assert!(krein_form_sq(&lap, &g.sample(&p("x"))).unwrap().abs() < 1e-10);
    assert!((krein_form_sq(&lap, &g.sample(&p("x^2"))).unwrap() - 1.0 / 3.0).abs() < 1e-10);
    let h = make_grid(DomainKind::Halfline { r: 40.0 }, 512, 0.0).unwrap();
    let hl = ImaginaryPartSpec::dirichlet_laplacian_halfline();
    let zeta = h.sample(&p("exp(-x)"));
    assert!((krein_form_sq(&hl, &zeta).unwrap() - 0.5).abs() < 1e-8);
    assert!(friedrichs_form_sq(&hl, &zeta).is_err());
}

#[test]
fn family_flags() {
    let g = unit_interval(64);
    assert!(!ImaginaryPartSpec::dirichlet_laplacian_interval(1.0).friedrichs_equals_krein);
    assert!(!ImaginaryPartSpec::dirichlet_laplacian_halfline().friedrichs_equals_krein);
    assert!(ImaginaryPartSpec::multiplication(p("1 + x"), &g, None).unwrap().friedrichs_equals_krein);
    assert!(ImaginaryPartSpec::multiplication(p("x - 0.5"), &g, None).is_err());
}

#[test]
fn ando_nishio_oracle() {
    let lap = ImaginaryPartSpec::dirichlet_laplacian_interval(1.0);
    for d in [2, 8, 32] {
        assert!(krein_form_ando_nishio(&lap, &p("x"), d).unwrap().abs() < 1e-8);
    }
    let v = krein_form_ando_nishio(&lap, &p("x^2"), 32).unwrap();
    assert!((v - 1.0 / 3.0).abs() < 0.02 / 3.0, "{v}");
    let g = GridSpec::new(DomainKind::Interval { b: 1.0 }, 256, 1e-12).graded_left(40).build().unwrap();
    let mult = ImaginaryPartSpec::multiplication(p("0.25/x"), &g, Some(0.25)).unwrap();
    let v = krein_form_ando_nishio(&mult, &p("x*(1 - x)"), 32).unwrap();
    assert!((v - 1.0 / 48.0).abs() < 0.02 / 48.0, "{v}");
    assert!(krein_form_ando_nishio(&lap, &p("x"), 1).is_err());
}

#[test]
fn vf_solve_cases() {
    let g = GridSpec::new(DomainKind::Interval { b: 1.0 }, 256, 1e-12).graded_left(40).build().unwrap();
    let mult = ImaginaryPartSpec::multiplication(p("0.25/x"), &g, Some(0.25)).unwrap();
    let s = vf_solve(&mult, &g.sample(&Expr::real(1.0))).unwrap();
    assert!((s.inv_form - 2.0).abs() < 1e-8);

    let g = unit_interval(128);
    let lap = ImaginaryPartSpec::dirichlet_laplacian_interval(1.0);
    let pi2 = std::f64::consts::PI.powi(2);
    let s = vf_solve(&lap, &g.sample(&p("pi^2*sin(pi*x)"))).unwrap();
    assert!((s.inv_form - pi2 / 2.0).abs() < 1e-8);
    let u = g.sample(&p("sin(pi*x)"));
    assert!(s.u.values.iter().zip(&u.values).all(|(a, b)| (a - b).norm() < 1e-8));
    let z = vf_solve(&lap, &g.sample(&Expr::zero())).unwrap();
    assert_eq!(z.inv_form, 0.0);
    assert!(z.u.max_abs() == 0.0);
}

#[test]
fn projection_onto_kernel() {
    let g = unit_interval(128);
    let lap = ImaginaryPartSpec::dirichlet_laplacian_interval(1.0);
    let affine = g.sample(&p("2 - 3*x"));
    let pv = projection_p(&lap, &affine).unwrap();
    assert!(pv.values.iter().zip(&affine.values).all(|(a, b)| (a - b).norm() < 1e-10));
    let bump = g.sample(&p("(2+i)*x + sin(pi*x)"));
    let pv = projection_p(&lap, &bump).unwrap();
    let expected = g.sample(&p("(2+i)*x"));
    assert!(pv.values.iter().zip(&expected.values).all(|(a, b)| (a - b).norm() < 1e-8));
}

#[test]
fn sqrt_pair_properties() {
    let g = unit_interval(256);
    let lap = ImaginaryPartSpec::dirichlet_laplacian_interval(1.0);
    let pair = discrete_sqrt_pair(&lap, SqrtBasis::IntervalSines { b: 1.0, m: 16 }, &g).unwrap();
    assert!(pair.u_singular_values().unwrap().iter().all(|&s| (0.0..=1.0 + 1e-8).contains(&s)));
    let coeffs: Vec<C64> = (0..pair.dim()).map(|k| C64::new(1.0 / (k + 1) as f64, 0.5 / (k + 2) as f64)).collect();
    let (nf, nk) = pair.norms_of(&coeffs);
    assert!((nf - nk).abs() < 1e-8 * (1.0 + nf));

    let mult = ImaginaryPartSpec::multiplication(p("1 + x"), &g, Some(1.0)).unwrap();
    let pair = discrete_sqrt_pair(&mult, SqrtBasis::Nodal, &g).unwrap();
    let id = nalgebra::DMatrix::<C64>::identity(pair.u.nrows(), pair.u.ncols());
    assert!((&pair.u - id).norm() < 1e-8);
}
