use dissext::catalog::*;
use dissext::criteria::evaluate;
use dissext::expr::{Expr, C64};
use dissext::linalg;
use dissext::oracle::*;

fn p(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

fn rho(re: f64, im: f64) -> Rho {
    Rho::Finite(C64::new(re, im))
}

fn o() -> GridOptions {
    GridOptions::default()
}

#[test]
fn assembled_operators_are_well_formed() {
    let problems = vec![
        build_potsdam(p("exp(-x)"), rho(0.5, 0.1), p("i*x*exp(-x)"), &o()).unwrap(),
        build_shirley(2.0, rho(0.5, 0.375), p("x^2 - x"), &o()).unwrap(),
        build_konzert(0.25, p("1"), KonzertVector::Regular, &o()).unwrap(),
    ];
    for pr in problems {
        let op = assemble_discrete(&pr, 64, OracleMode::Full).unwrap();
        let h = op.imaginary_part();
        assert!(linalg::hermitian_defect(&h) < 1e-12 * (1.0 + h.norm()));
        assert!(linalg::hermitian_eigenvalues(&op.g).unwrap()[0] > 0.0);
        let lhs = pr.im_v_tilde_star_v().unwrap() + pr.im_v_lv().unwrap();
        let d = op.dim() - 1;
        assert!((h[(d, d)].re - lhs).abs() < 1e-8);
    }
}

#[test]
fn small_meshes_are_rejected() {
    let pr = build_konzert(0.25, p("1"), KonzertVector::Regular, &o()).unwrap();
    assert!(matches!(assemble_discrete(&pr, 16, OracleMode::Full), Err(OracleError::MeshTooSmall(..))));
}

#[test]
fn non_dissipative_first_order_case() {
    let pr = build_konzert(0.25, p("1.2"), KonzertVector::Regular, &o()).unwrap();
    for n in [128, 256] {
        assert!(discrete_infimum(&pr, n, OracleMode::Full).unwrap() < -1e-3);
    }
    let r = cross_validate(&pr, &evaluate(&pr).unwrap(), &DEFAULT_MESHES, DEFAULT_TOL).unwrap();
    assert_eq!(r.agreement, Some(true));
    assert!(r.accepted());
    assert!(r.infima.iter().all(|m| m.is_finite()));
}

#[test]
fn dissipative_cases_are_nonnegative() {
    let problems = vec![
        build_shirley(2.0, rho(2.0, 0.0), Expr::zero(), &o()).unwrap(),
        build_shirley(2.0, Rho::Infinity, Expr::zero(), &o()).unwrap(),
        build_potsdam(Expr::zero(), Rho::Infinity, Expr::zero(), &o()).unwrap(),
    ];
    for pr in problems {
        let r = cross_validate(&pr, &evaluate(&pr).unwrap(), &[32, 64, 128], DEFAULT_TOL).unwrap();
        assert!(r.infima.iter().all(|&m| m >= -1e-6), "{:?}", r.infima);
        assert_eq!(r.agreement, Some(true));
    }
}

#[test]
fn nested_meshes_lower_the_infimum() {
    let pr = build_konzert(0.3, p("1 + x"), KonzertVector::Regular, &o()).unwrap();
    let mus: Vec<f64> = [32, 64, 128, 256].iter().map(|&n| discrete_infimum(&pr, n, OracleMode::Full).unwrap()).collect();
    assert!(mus.windows(2).all(|w| w[1] <= w[0] + 1e-10), "{mus:?}");
}

#[test]
fn boundary_case_is_resolution_limited() {
    let pr = build_konzert(0.25, p("1"), KonzertVector::Regular, &o()).unwrap();
    let r = cross_validate(&pr, &evaluate(&pr).unwrap(), &[32, 64], DEFAULT_TOL).unwrap();
    assert!(r.resolution_limited);
    assert!(r.accepted());
}

#[test]
fn extrapolation_of_geometric_sequence() {
    let values = [1.0 + 0.25, 1.0 + 0.0625, 1.0 + 0.015625];
    let (limit, order) = extrapolate(&values);
    assert!((limit - 1.0).abs() < 1e-12);
    assert!((order.unwrap() - 2.0).abs() < 1e-12);
}
