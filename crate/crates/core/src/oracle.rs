//! Brute-force check of dissipativity: discretize the extension on a finite
//! element subspace of its domain plus the extension vector, and compute the
//! smallest eigenvalue of the pencil `(Im M, G)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{DiffAction, ExtensionProblem, Scenario};
use crate::criteria::Verdict;
use crate::expr::C64;
use crate::grid::{gauss_legendre, GridError};
use crate::linalg::{self, CMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("mesh size {0} is below the minimum of 32")]
    MeshTooSmall(usize),
    #[error("basis Gram matrix is ill conditioned (estimate {0:e})")]
    IllConditioned(f64),
    #[error("{0} has no closed form")]
    MissingSource(&'static str),
    #[error("scenario has no separate symmetric part")]
    NoSymmetricPart,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub const MIN_MESH: usize = 32;
pub const DEFAULT_MESHES: [usize; 3] = [64, 128, 256];
pub const DEFAULT_TOL: f64 = 1e-5;
/// Truncation point for half-line core functions.
pub const HALFLINE_CORE_R: f64 = 20.0;
const QUAD_ORDER: usize = 12;
const DYADIC_LEVELS: usize = 30;
const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    /// Piecewise linear hats vanishing at both ends.
    Hats,
    /// `C¹` cubic Hermite elements with double zeros at both ends.
    Hermite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisDescription {
    pub kind: ElementKind,
    pub elements: usize,
    pub core_dim: usize,
    pub left: f64,
    pub right: f64,
}

/// Form matrices of an operator on `span{b_1, …, b_n, v}`; the last index is `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub m: CMatrix,
    pub g: CMatrix,
    pub basis: BasisDescription,
}

impl DiscreteOperator {
    /// `(M − M^H)/(2i)`
    pub fn imaginary_part(&self) -> CMatrix {
        linalg::imaginary_part(&self.m)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OracleMode {
    #[default]
    Full,
    /// Symmetric part with `𝓛`, dropping `iV`.
    WithoutImaginaryPart,
}

fn element_kind(scenario: &Scenario) -> ElementKind {
    match scenario {
        Scenario::Konzert { .. } => ElementKind::Hats,
        _ => ElementKind::Hermite,
    }
}

/// Element count for a mesh size, chosen so the core dimension is about `n`.
pub fn element_count(kind: ElementKind, n: usize) -> usize {
    match kind {
        ElementKind::Hats => n,
        ElementKind::Hermite => n / 2,
    }
}

/// Mapped mesh on `[0, len]`: clustered at both ends on intervals and at 0 on
/// the half-line. Bisecting the parameter yields nested meshes.
fn mesh_nodes(len: f64, elements: usize, halfline: bool) -> Vec<f64> {
    (0..=elements)
        .map(|i| {
            let t = i as f64 / elements as f64;
            if halfline {
                len * (0.5 * t + 0.5 * t * t)
            } else {
                len * (0.5 * t + 0.25 * (1.0 - (std::f64::consts::PI * t).cos()))
            }
        })
        .collect()
}

struct Local {
    index: usize,
    f: f64,
    df: f64,
    d2f: f64,
}

fn local_basis(kind: ElementKind, nodes: &[f64], e: usize, x: f64) -> Vec<Local> {
    let n_el = nodes.len() - 1;
    let (a, b) = (nodes[e], nodes[e + 1]);
    let h = b - a;
    let t = (x - a) / h;
    let mut out = Vec::with_capacity(4);
    match kind {
        ElementKind::Hats => {
            if e >= 1 {
                out.push(Local { index: e - 1, f: 1.0 - t, df: -1.0 / h, d2f: 0.0 });
            }
            if e + 1 < n_el {
                out.push(Local { index: e, f: t, df: 1.0 / h, d2f: 0.0 });
            }
        }
        ElementKind::Hermite => {
            let node_scale = |i: usize| 0.5 * (nodes[i + 1] - nodes[i - 1]);
            let (t2, t3) = (t * t, t * t * t);
            if e >= 1 {
                let s = h / node_scale(e);
                let base = 2 * (e - 1);
                out.push(Local {
                    index: base,
                    f: 2.0 * t3 - 3.0 * t2 + 1.0,
                    df: (6.0 * t2 - 6.0 * t) / h,
                    d2f: (12.0 * t - 6.0) / (h * h),
                });
                out.push(Local {
                    index: base + 1,
                    f: s * (t3 - 2.0 * t2 + t),
                    df: s * (3.0 * t2 - 4.0 * t + 1.0) / h,
                    d2f: s * (6.0 * t - 4.0) / (h * h),
                });
            }
            if e + 1 < n_el {
                let s = h / node_scale(e + 1);
                let base = 2 * e;
                out.push(Local {
                    index: base,
                    f: -2.0 * t3 + 3.0 * t2,
                    df: (-6.0 * t2 + 6.0 * t) / h,
                    d2f: (-12.0 * t + 6.0) / (h * h),
                });
                out.push(Local {
                    index: base + 1,
                    f: s * (t3 - t2),
                    df: s * (3.0 * t2 - 2.0 * t) / h,
                    d2f: s * (6.0 * t - 2.0) / (h * h),
                });
            }
        }
    }
    out
}

fn core_dim(kind: ElementKind, elements: usize) -> usize {
    match kind {
        ElementKind::Hats => elements - 1,
        ElementKind::Hermite => 2 * (elements - 1),
    }
}

/// Quadrature points on `[a, b]`, split at breakpoints and graded toward 0
/// when `a == 0`.
fn element_rule(a: f64, b: f64, breaks: &[f64], rule: &(Vec<f64>, Vec<f64>)) -> Vec<(f64, f64)> {
    let mut cuts = vec![a, b];
    cuts.extend(breaks.iter().copied().filter(|&c| c > a && c < b));
    if a == 0.0 {
        let mut s = b;
        for _ in 0..DYADIC_LEVELS {
            s *= 0.5;
            cuts.push(s);
        }
    }
    cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let half = 0.5 * (hi - lo);
        for (t, wt) in rule.0.iter().zip(&rule.1) {
            out.push((lo + half * (1.0 + t), half * wt));
        }
    }
    out
}

fn act_local(action: &DiffAction, p: C64, l: &Local) -> C64 {
    action.second * l.d2f + action.first * l.df + p * l.f
}

/// Form matrices of the extension on `n` core functions plus `v`.
pub fn assemble_discrete(problem: &ExtensionProblem, n: usize, mode: OracleMode) -> Result<DiscreteOperator, OracleError> {
    if n < MIN_MESH {
        return Err(OracleError::MeshTooSmall(n));
    }
    let action = match mode {
        OracleMode::Full => problem.action.clone(),
        OracleMode::WithoutImaginaryPart => problem.symmetric_action.clone().ok_or(OracleError::NoSymmetricPart)?,
    };
    let v_expr = problem.v.source.clone().ok_or(OracleError::MissingSource("extension vector"))?;
    let lv_expr = problem.lv.source.clone().ok_or(OracleError::MissingSource("Lv"))?;
    let av_expr = action.apply_expr(&v_expr) + lv_expr.clone();

    let kind = element_kind(&problem.scenario);
    let elements = element_count(kind, n);
    let dim = core_dim(kind, elements);
    let halfline = problem.is_halfline();
    let len = if halfline { HALFLINE_CORE_R.min(problem.grid.right()) } else { problem.grid.right() };
    let nodes = mesh_nodes(len, elements, halfline);

    let mut breaks: Vec<f64> = v_expr.breakpoints();
    breaks.extend(lv_expr.breakpoints());
    if let Some(p) = &action.potential {
        breaks.extend(p.breakpoints());
    }
    if let Some((_, phi)) = &action.rank_one {
        breaks.extend(phi.breakpoints());
    }
    let rule = gauss_legendre(QUAD_ORDER);

    let size = dim + 1;
    let mut m = CMatrix::zeros(size, size);
    let mut g = CMatrix::zeros(size, size);
    let mut proj = vec![C64::new(0.0, 0.0); dim];
    for e in 0..elements {
        for (x, w) in element_rule(nodes[e], nodes[e + 1], &breaks, &rule) {
            let p = action.potential.as_ref().map_or(C64::new(0.0, 0.0), |q| q.eval(x));
            let vx = v_expr.eval(x);
            let avx = av_expr.eval(x);
            let phix = action.rank_one.as_ref().map(|(_, phi)| phi.eval(x));
            let locals = local_basis(kind, &nodes, e, x);
            for bj in &locals {
                let j = bj.index;
                let act_j = act_local(&action, p, bj);
                for bk in &locals {
                    let k = bk.index;
                    m[(j, k)] += act_local(&action, p, bk) * (w * bj.f);
                    g[(j, k)] += C64::new(w * bj.f * bk.f, 0.0);
                }
                m[(j, dim)] += avx * (w * bj.f);
                m[(dim, j)] += vx.conj() * act_j * w;
                g[(j, dim)] += vx * (w * bj.f);
                if let Some(phix) = phix {
                    proj[j] += phix.conj() * (w * bj.f);
                }
            }
        }
    }
    for j in 0..dim {
        g[(dim, j)] = g[(j, dim)].conj();
    }
    if let Some((c, phi)) = &action.rank_one {
        let phi_f = problem.grid.sample(phi);
        let phi_v = phi_f.inner(&problem.v)?;
        for j in 0..dim {
            for k in 0..dim {
                m[(j, k)] += *c * proj[j].conj() * proj[k];
            }
            m[(j, dim)] += *c * proj[j].conj() * phi_v;
            m[(dim, j)] += *c * phi_v.conj() * proj[j];
        }
    }
    let av = action.apply(&problem.v)?;
    m[(dim, dim)] = problem.v.inner(&av)? + problem.v.inner(&problem.lv)?;
    g[(dim, dim)] = C64::new(problem.v.norm_sq(), 0.0);

    let l = linalg::cholesky(&g).map_err(|_| OracleError::IllConditioned(f64::INFINITY))?;
    let diag: Vec<f64> = (0..size).map(|i| l[(i, i)].re).collect();
    let hi = diag.iter().copied().fold(0.0, f64::max);
    let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = (hi / lo).powi(2);
    if cond > MAX_CONDITION {
        return Err(OracleError::IllConditioned(cond));
    }
    Ok(DiscreteOperator {
        m,
        g,
        basis: BasisDescription { kind, elements, core_dim: dim, left: 0.0, right: len },
    })
}

/// Infimum of `Im⟨ψ, Aψ⟩/‖ψ‖²` over the discrete subspace.
pub fn discrete_infimum(problem: &ExtensionProblem, n: usize, mode: OracleMode) -> Result<f64, OracleError> {
    let op = assemble_discrete(problem, n, mode)?;
    Ok(linalg::pencil_min_eig(&op.imaginary_part(), &op.g)?.value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub scenario: String,
    pub meshes: Vec<usize>,
    pub infima: Vec<f64>,
    pub extrapolated: f64,
    pub convergence_order: Option<f64>,
    pub margin: f64,
    pub dissipative: Option<bool>,
    pub agreement: Option<bool>,
    pub resolution_threshold: f64,
    pub resolution_limited: bool,
    /// `|v|` at the truncation point of half-line core functions.
    pub tail_bound: Option<f64>,
    pub tolerance: f64,
    pub note: &'static str,
}

impl OracleReport {
    /// Sign agreement, or a margin too small to resolve.
    pub fn accepted(&self) -> bool {
        self.resolution_limited || self.agreement.unwrap_or(true)
    }
}

const ASYMMETRY_NOTE: &str =
    "a negative discrete infimum certifies non-dissipativity; nonnegative infima are evidence, not proof, of dissipativity";

/// Richardson-type extrapolation of the last three values of a sequence on
/// doubling meshes; returns the limit and the observed order.
pub fn extrapolate(values: &[f64]) -> (f64, Option<f64>) {
    let Some(&last) = values.last() else {
        return (f64::NAN, None);
    };
    if values.len() < 3 {
        return (last, None);
    }
    let k = values.len();
    let d1 = values[k - 3] - values[k - 2];
    let d2 = values[k - 2] - values[k - 1];
    if d1 == 0.0 || d2 == 0.0 || d1.signum() != d2.signum() || d2.abs() >= d1.abs() {
        return (last, None);
    }
    let r = d1 / d2;
    (last - d2 / (r - 1.0), Some(r.log2()))
}

/// Runs the oracle on every mesh and compares the sign of the infimum with
/// the analytic verdict.
pub fn cross_validate(
    problem: &ExtensionProblem,
    verdict: &Verdict,
    meshes: &[usize],
    tol: f64,
) -> Result<OracleReport, OracleError> {
    let infima = meshes
        .par_iter()
        .map(|&n| discrete_infimum(problem, n, OracleMode::Full))
        .collect::<Result<Vec<f64>, _>>()?;
    let (extrapolated, convergence_order) = extrapolate(&infima);
    let lowest = infima.iter().copied().fold(extrapolated, f64::min);
    let agreement = verdict.dissipative.map(|d| {
        if d {
            infima.iter().all(|&mu| mu >= -tol)
        } else {
            lowest < -tol
        }
    });
    let kind = element_kind(&problem.scenario);
    let finest = meshes.iter().copied().max().unwrap_or(MIN_MESH);
    let h = 1.0 / element_count(kind, finest) as f64;
    let resolution_threshold = 10.0 * h * h;
    let tail_bound = problem.is_halfline().then(|| {
        let r = HALFLINE_CORE_R.min(problem.grid.right());
        problem.v.source.as_ref().map_or(f64::NAN, |e| e.eval(r).norm())
    });
    Ok(OracleReport {
        scenario: problem.scenario.name().to_string(),
        meshes: meshes.to_vec(),
        infima,
        extrapolated,
        convergence_order,
        margin: verdict.margin,
        dissipative: verdict.dissipative,
        agreement,
        resolution_threshold,
        resolution_limited: verdict.margin.is_finite() && verdict.margin.abs() < resolution_threshold,
        tail_bound,
        tolerance: tol,
        note: ASYMMETRY_NOTE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::*;
    use crate::criteria;
    use crate::expr::Expr;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn o() -> GridOptions {
        GridOptions::default()
    }

    fn rho(re: f64, im: f64) -> Rho {
        Rho::Finite(C64::new(re, im))
    }

    fn verdict(pr: &ExtensionProblem) -> Verdict {
        criteria::evaluate(pr).unwrap()
    }

    /// `∫ w(x) b_j b_k` (or `∫ b_j' b_k'`) with an independent composite rule.
    fn reference_block(op: &DiscreteOperator, len: f64, halfline: bool, w: impl Fn(f64) -> f64, stiffness: bool) -> CMatrix {
        let kind = op.basis.kind;
        let nodes = mesh_nodes(len, op.basis.elements, halfline);
        let dim = op.basis.core_dim;
        let mut out = CMatrix::zeros(dim, dim);
        let rule = gauss_legendre(40);
        for e in 0..op.basis.elements {
            let (a, b) = (nodes[e], nodes[e + 1]);
            let mut cuts = vec![a, b];
            if e == 0 {
                cuts.extend((1..60).map(|k| b * 0.5f64.powi(k)));
            }
            cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for c in cuts.windows(2) {
                let half = 0.5 * (c[1] - c[0]);
                for (t, wt) in rule.0.iter().zip(&rule.1) {
                    let x = c[0] + half * (1.0 + t);
                    let ls = local_basis(kind, &nodes, e, x);
                    for bj in &ls {
                        for bk in &ls {
                            let val = if stiffness { bj.df * bk.df } else { w(x) * bj.f * bk.f };
                            out[(bj.index, bk.index)] += C64::new(half * wt * val, 0.0);
                        }
                    }
                }
            }
        }
        out
    }

    fn max_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn pencil_trivial_cases() {
        let g = CMatrix::identity(2, 2);
        assert!((linalg::pencil_min_eig(&g, &g).unwrap().value - 1.0).abs() < 1e-14);
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(-1.0, 0.0), C64::new(2.0, 0.0)]));
        assert!((linalg::pencil_min_eig(&h, &g).unwrap().value + 1.0).abs() < 1e-14);
    }

    #[test]
    fn konzert_core_block_is_multiplication() {
        let pr = build_konzert(0.25, p("1"), KonzertVector::Regular, &o()).unwrap();
        let op = assemble_discrete(&pr, 64, OracleMode::Full).unwrap();
        let h = op.imaginary_part();
        assert!(linalg::hermitian_defect(&h) < 1e-14 * h.norm());
        let d = op.basis.core_dim;
        let core = h.view((0, 0), (d, d)).into_owned();
        let reference = reference_block(&op, 1.0, false, |x| 0.25 / x, false);
        assert!(max_diff(&core, &reference) < 1e-10, "{}", max_diff(&core, &reference));
    }

    #[test]
    fn shirley_core_block_is_stiffness() {
        let pr = build_shirley(2.0, rho(2.0, 0.0), Expr::zero(), &o()).unwrap();
        let op = assemble_discrete(&pr, 64, OracleMode::Full).unwrap();
        let d = op.basis.core_dim;
        let core = op.imaginary_part().view((0, 0), (d, d)).into_owned();
        let reference = reference_block(&op, 1.0, false, |_| 0.0, true);
        let scale = reference.norm();
        assert!(max_diff(&core, &reference) < 1e-10 * scale);
    }

    #[test]
    fn v_column_matches_criteria_lhs() {
        let cases = vec![
            build_konzert(0.3, p("x"), KonzertVector::Regular, &o()).unwrap(),
            build_shirley(2.0, rho(0.5, 0.375), p("x^2 - x"), &o()).unwrap(),
            build_potsdam(p("exp(-x)"), rho(0.2, 1.0), p("i*x*exp(-x)"), &o()).unwrap(),
            build_halfline_schrodinger(
                rho(0.0, 1.0),
                Perturbation::RankOne { alpha: 1.0, phi: p("sqrt(2)*exp(-x)"), lambda: C64::new(2.0, 0.0) },
                &o(),
            )
            .unwrap(),
        ];
        for pr in cases {
            let op = assemble_discrete(&pr, 32, OracleMode::Full).unwrap();
            let d = op.dim() - 1;
            let lhs = pr.im_v_tilde_star_v().unwrap() + pr.im_v_lv().unwrap();
            assert!((op.imaginary_part()[(d, d)].re - lhs).abs() < 1e-8);
            assert!(linalg::hermitian_defect(&op.g) < 1e-14);
        }
    }

    #[test]
    fn symmetric_part_alone_is_solvable() {
        for pert in [
            Perturbation::RankOne { alpha: 1.0, phi: p("sqrt(2)*exp(-x)"), lambda: C64::new(1.0, 0.5) },
            Perturbation::Multiplication { v: p("ind(0,1)"), k: p("ind(0,1)").scale(C64::new(1.0, 0.5)) },
        ] {
            let pr = build_halfline_schrodinger(rho(0.3, 0.5), pert, &o()).unwrap();
            let mu = discrete_infimum(&pr, 64, OracleMode::WithoutImaginaryPart).unwrap();
            let (eps, l) = criteria::schrodinger_semibound_data(&pr).unwrap();
            assert!(mu < 0.0 && mu >= -l * l / (4.0 * eps) - 1e-5, "{mu}");
        }
    }

    #[test]
    fn konzert_nested_meshes_are_monotone() {
        let pr = build_konzert(0.25, p("1.2"), KonzertVector::Regular, &o()).unwrap();
        let mus: Vec<f64> = [32, 64, 128].iter().map(|&n| discrete_infimum(&pr, n, OracleMode::Full).unwrap()).collect();
        for w in mus.windows(2) {
            assert!(w[1] <= w[0] + 1e-10, "{mus:?}");
        }
    }

    #[test]
    fn konzert_non_dissipative_is_detected() {
        let pr = build_konzert(0.25, p("1.2"), KonzertVector::Regular, &o()).unwrap();
        assert!(discrete_infimum(&pr, 128, OracleMode::Full).unwrap() < -1e-3);
        let r = cross_validate(&pr, &verdict(&pr), &DEFAULT_MESHES, DEFAULT_TOL).unwrap();
        assert_eq!(r.agreement, Some(true));
        assert!(r.infima.iter().all(|m| m.is_finite()));
    }

    #[test]
    fn dissipative_cases_stay_nonnegative() {
        let cases = vec![
            build_shirley(2.0, rho(2.0, 0.0), Expr::zero(), &o()).unwrap(),
            build_shirley(2.0, Rho::Infinity, Expr::zero(), &o()).unwrap(),
            build_konzert(0.25, Expr::zero(), KonzertVector::Regular, &o()).unwrap(),
            build_potsdam(Expr::zero(), Rho::Infinity, Expr::zero(), &o()).unwrap(),
        ];
        for pr in cases {
            let r = cross_validate(&pr, &verdict(&pr), &[32, 64], DEFAULT_TOL).unwrap();
            assert!(r.infima.iter().all(|&m| m >= -1e-6), "{:?}", r.infima);
            assert_eq!(r.agreement, Some(true));
            assert!(r.accepted());
        }
    }

    #[test]
    fn halfline_report_records_tail() {
        let pr = build_potsdam(Expr::zero(), rho(-0.1, 0.0), Expr::zero(), &o()).unwrap();
        let r = cross_validate(&pr, &verdict(&pr), &[32, 64], DEFAULT_TOL).unwrap();
        assert!(r.tail_bound.unwrap() < 1e-5);
        assert_eq!(r.agreement, Some(true));
    }

    #[test]
    fn without_imaginary_part_needs_symmetric_action() {
        let pr = build_shirley(2.0, rho(2.0, 0.0), Expr::zero(), &o()).unwrap();
        assert_eq!(assemble_discrete(&pr, 32, OracleMode::WithoutImaginaryPart).unwrap_err(), OracleError::NoSymmetricPart);
        assert_eq!(assemble_discrete(&pr, 16, OracleMode::Full).unwrap_err(), OracleError::MeshTooSmall(16));
    }

    #[test]
    fn extrapolation() {
        let (lim, order) = extrapolate(&[1.0 + 1.0 / 16.0, 1.0 + 1.0 / 64.0, 1.0 + 1.0 / 256.0]);
        assert!((lim - 1.0).abs() < 1e-14);
        assert!((order.unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(extrapolate(&[3.0, 2.0]), (2.0, None));
        assert_eq!(extrapolate(&[1.0, 2.0, 1.5]), (1.5, None));
    }

    #[test]
    fn near_boundary_is_resolution_limited() {
        let pr = build_potsdam(Expr::zero(), rho(1e-5, 0.0), Expr::zero(), &o()).unwrap();
        let r = cross_validate(&pr, &verdict(&pr), &[32, 64], DEFAULT_TOL).unwrap();
        assert!(r.resolution_limited);
        assert!(r.accepted());
    }
}
