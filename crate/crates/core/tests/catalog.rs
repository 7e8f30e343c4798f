use dissext::catalog::*;
use dissext::criteria::evaluate;
use dissext::expr::{Expr, C64};
use dissext::oracle::{assemble_discrete, OracleMode};

fn p(s: &str) -> Expr {
    Expr::parse(s).unwrap()
}

fn rho(re: f64, im: f64) -> Rho {
    Rho::Finite(C64::new(re, im))
}

fn o() -> GridOptions {
    GridOptions::default()
}

fn dissipative(pr: &ExtensionProblem) -> Option<bool> {
    evaluate(pr).unwrap().dissipative
}

#[test]
fn halfline_laplacian_examples() {
    assert_eq!(dissipative(&build_potsdam(Expr::zero(), rho(1.0, 0.0), Expr::zero(), &o()).unwrap()), Some(true));
    assert_eq!(dissipative(&build_potsdam(Expr::zero(), rho(-0.1, 0.0), Expr::zero(), &o()).unwrap()), Some(false));
    assert_eq!(dissipative(&build_potsdam(Expr::zero(), Rho::Infinity, p("i*x*exp(-x)"), &o()).unwrap()), Some(false));
    assert_eq!(dissipative(&build_potsdam(Expr::zero(), Rho::Infinity, Expr::zero(), &o()).unwrap()), Some(true));
    assert!(build_potsdam(Expr::zero(), rho(1.0, 0.0), p("1 + x*exp(-x)"), &o()).is_err());
}

#[test]
fn inverse_square_examples() {
    let pr = build_shirley(3f64.sqrt(), rho(0.5, 0.375), p("x^2 - x"), &o()).unwrap();
    assert_eq!(dissipative(&pr), Some(true));
    let pr = build_shirley(2.0, rho(2.0, 0.0), Expr::zero(), &o()).unwrap();
    assert!((pr.reference.margin - 2.0).abs() < 1e-12);
    assert_eq!(dissipative(&pr), Some(true));
    // 1/4 ||phi'||^2 + Im phi'(1) = 1 with phi = i c (x^2 - x): c^2/12 + c = 1
    let c = -6.0 + (36.0f64 + 12.0).sqrt();
    let pr = build_shirley(2.0, Rho::Infinity, p("i*(x^2 - x)").scale(C64::new(c, 0.0)), &o()).unwrap();
    assert!(evaluate(&pr).unwrap().margin.abs() < 1e-8);
    assert!(build_shirley(1.5, rho(1.0, 0.0), Expr::zero(), &o()).is_err());
}

#[test]
fn first_order_examples() {
    let m = |ell: &str| evaluate(&build_konzert(0.25, p(ell), KonzertVector::Regular, &o()).unwrap()).unwrap();
    assert!(m("1").margin.abs() < 1e-10);
    assert_eq!(m("1.05").dissipative, Some(false));
    assert!((m("0").margin - 0.5).abs() < 1e-10);
    assert!(build_konzert(0.7, Expr::zero(), KonzertVector::Regular, &o()).is_err());
}

#[test]
fn schrodinger_examples() {
    let pert = Perturbation::RankOne { alpha: 1.0, phi: p("sqrt(2)*exp(-x)"), lambda: C64::new(2.0, 0.0) };
    let pr = build_halfline_schrodinger(rho(0.0, 1.0), pert, &o()).unwrap();
    assert!(pr.reference.margin.abs() < 1e-12);
    for (c, expected) in [(1.9, true), (2.0, true), (2.1, false)] {
        let pert = Perturbation::Multiplication { v: p("ind(0,1)"), k: p("ind(0,1)").scale(C64::new(c, 0.0)) };
        let pr = build_halfline_schrodinger(rho(1.0, 1.0), pert, &o()).unwrap();
        assert_eq!(dissipative(&pr), Some(expected), "c = {c}");
    }
    let pert = Perturbation::Multiplication { v: p("ind(0,1)"), k: p("ind(2,3)") };
    assert!(matches!(build_halfline_schrodinger(rho(1.0, 1.0), pert, &o()), Err(CatalogError::SupportViolation(_))));
}

#[test]
fn dual_pair_split() {
    let pr = build_konzert(0.25, Expr::zero(), KonzertVector::Regular, &o()).unwrap();
    let m = assemble_discrete(&pr, 32, OracleMode::Full).unwrap();
    let scale = 1.0 + m.m.norm();

    let mut sym = m.clone();
    sym.m = dissext::linalg::hermitian_part(&m.m);
    let (s, v) = split_dual_pair(&sym, &sym).unwrap();
    assert!(v.m.norm() < 1e-14 * scale);
    assert!((s.m - &sym.m).norm() < 1e-14 * scale);

    let mut mt = m.clone();
    mt.m = m.m.adjoint();
    let (_, v) = split_dual_pair(&m, &mt).unwrap();
    let d = v.basis.core_dim;
    let core = v.m.view((0, 0), (d, d)).into_owned();
    let g = v.g.view((0, 0), (d, d)).into_owned();
    assert!(dissext::linalg::pencil_eigenvalues(&core, &g).unwrap()[0] > 0.0);

    let mut bad = m.clone();
    bad.m = &m.m - &m.g * C64::new(0.0, 10.0 * scale);
    let mut bad_t = bad.clone();
    bad_t.m = bad.m.adjoint();
    assert!(matches!(split_dual_pair(&bad, &bad_t), Err(CatalogError::IndefiniteImaginaryPart(_))));
    assert!(matches!(split_dual_pair(&m, &m), Err(CatalogError::NotDualPair(_))));
}
