//! The worked scenarios as [`ExtensionProblem`]s: a half-line operator with
//! second-order imaginary part, an inverse-square potential on `(0, 1)`, a
//! first-order operator with `γ/x` imaginary part, and the half-line
//! Schrödinger operator with bounded dissipative perturbations.

use std::fmt;
use std::sync::Arc;

use crate::expr::{Expr, C64};
use crate::forms::{FormError, ImaginaryPartSpec};
use crate::grid::{DomainKind, Grid, GridError, GridFunction, GridSpec, DEFAULT_HALFLINE_R};
use crate::linalg::{self, CMatrix};
use crate::oracle::DiscreteOperator;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CatalogError {
    #[error("gamma = {gamma} out of range: {requirement}")]
    GammaOutOfRange { gamma: f64, requirement: &'static str },
    #[error("phi violates the Dirichlet condition: {0}")]
    PhiBoundary(String),
    #[error("Im h = {0} < 0 is not a dissipative boundary condition")]
    NegativeImH(f64),
    #[error("support violation: k is nonzero at x = {0} where V vanishes")]
    SupportViolation(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("boundary basis system is singular")]
    SingularBasis,
    #[error("dual-pair test failed: defect {0:e}")]
    NotDualPair(f64),
    #[error("imaginary part is indefinite: eigenvalue {0:e}")]
    IndefiniteImaginaryPart(f64),
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Boundary parameter in `ℂ ∪ {∞}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rho {
    Finite(C64),
    Infinity,
}

impl Rho {
    /// Imaginary part with `Im(∞) = 0`.
    pub fn im(&self) -> f64 {
        match self {
            Rho::Finite(z) => z.im,
            Rho::Infinity => 0.0,
        }
    }

    pub fn finite(&self) -> Option<C64> {
        match self {
            Rho::Finite(z) => Some(*z),
            Rho::Infinity => None,
        }
    }
}

impl fmt::Display for Rho {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rho::Infinity => write!(f, "inf"),
            Rho::Finite(z) => write!(f, "{:?}{:+?}i", z.re, z.im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KonzertVector {
    /// `x^{γ+1}`
    Regular,
    /// `x^{-γ}`, in `ker Ã*` but outside the form domain.
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Perturbation {
    RankOne { alpha: f64, phi: Expr, lambda: C64 },
    Multiplication { v: Expr, k: Expr },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    Potsdam { w: Expr },
    Shirley { gamma: f64 },
    Konzert { gamma: f64, vector: KonzertVector },
    HalflineSchrodinger { h: Rho, perturbation: Perturbation },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Potsdam { .. } => "potsdam",
            Scenario::Shirley { .. } => "shirley",
            Scenario::Konzert { .. } => "konzert",
            Scenario::HalflineSchrodinger { .. } => "halfline_schrodinger",
        }
    }
}

/// `f ↦ second·f'' + first·f' + potential·f + c⟨φ, f⟩φ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffAction {
    pub second: C64,
    pub first: C64,
    pub potential: Option<Expr>,
    pub rank_one: Option<(C64, Expr)>,
}

impl DiffAction {
    fn second_order(second: C64, potential: Option<Expr>) -> Self {
        DiffAction { second, first: C64::new(0.0, 0.0), potential, rank_one: None }
    }

    /// Closed form of the differential part applied to `e`.
    pub fn apply_expr(&self, e: &Expr) -> Expr {
        let mut out = Expr::constant(self.second) * e.second_derivative()
            + Expr::constant(self.first) * e.derivative();
        if let Some(p) = &self.potential {
            out = out + p.clone() * e.clone();
        }
        out
    }

    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction, GridError> {
        let grid = &f.grid;
        let mut out = match &f.source {
            Some(e) => {
                let sampled = grid.sample(&self.apply_expr(e));
                if self.rank_one.is_none() {
                    return Ok(sampled);
                }
                grid.from_values(sampled.values)?
            }
            None => {
                let d1 = grid.derivative_values(&f.values);
                let d2 = grid.derivative_values(&d1);
                let vals = (0..grid.n())
                    .map(|i| {
                        let mut s = self.second * d2[i] + self.first * d1[i];
                        if let Some(p) = &self.potential {
                            s += p.eval(grid.nodes[i]) * f.values[i];
                        }
                        s
                    })
                    .collect();
                grid.from_values(vals)?
            }
        };
        if let Some((c, phi)) = &self.rank_one {
            let p = grid.sample(phi);
            let coef = p.inner(f)? * *c;
            for (o, q) in out.values.iter_mut().zip(&p.values) {
                *o += q * coef;
            }
        }
        Ok(out)
    }

    /// The same action without its potential and rank-one terms.
    pub fn differential_only(&self) -> DiffAction {
        DiffAction { second: self.second, first: self.first, potential: None, rank_one: None }
    }
}

/// Closed-form reference decision for a problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub margin: f64,
    pub dissipative: bool,
}

/// A catalog scenario with its extension vector `v`, the value `𝓛v` and the data
/// the criteria need.
#[derive(Debug, Clone)]
pub struct ExtensionProblem {
    pub scenario: Scenario,
    pub rho: Option<Rho>,
    pub grid: Arc<Grid>,
    pub spec: ImaginaryPartSpec,
    /// Action of `Ã*`.
    pub action: DiffAction,
    /// Action of the symmetric part `S*` where the scenario separates it from `iV`.
    pub symmetric_action: Option<DiffAction>,
    pub v: GridFunction,
    pub lv: GridFunction,
    /// `φ` with `𝓛v = V_F φ`, when the scenario is parametrized that way.
    pub phi: Option<GridFunction>,
    pub added_dim: usize,
    pub defect_dim: usize,
    pub reference: Reference,
}

impl ExtensionProblem {
    /// `Im⟨v, Ã* v⟩`.
    pub fn im_v_tilde_star_v(&self) -> Result<f64, GridError> {
        Ok(self.v.inner(&self.action.apply(&self.v)?)?.im)
    }

    /// `Im⟨v, 𝓛v⟩`.
    pub fn im_v_lv(&self) -> Result<f64, GridError> {
        Ok(self.v.inner(&self.lv)?.im)
    }

    pub fn is_halfline(&self) -> bool {
        self.grid.kind.is_halfline()
    }
}

/// Grid resolution for the builders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptions {
    pub n: Option<usize>,
    pub r: f64,
    pub offset: Option<f64>,
}

impl Default for GridOptions {
    fn default() -> Self {
        GridOptions { n: None, r: DEFAULT_HALFLINE_R, offset: None }
    }
}

/// Graded levels at the left end; resolves `x^a` behavior at 0.
const GRADING_LEVELS: usize = 40;

/// Offset used for singular potentials.
pub const SINGULAR_OFFSET: f64 = 1e-12;

fn breakpoints(exprs: &[&Expr]) -> Vec<f64> {
    let mut out: Vec<f64> = exprs.iter().flat_map(|e| e.breakpoints()).collect();
    out.sort_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

fn halfline_grid(opts: &GridOptions, exprs: &[&Expr]) -> Result<Arc<Grid>, GridError> {
    GridSpec::new(DomainKind::Halfline { r: opts.r }, opts.n.unwrap_or(512), opts.offset.unwrap_or(0.0))
        .with_breaks(&breakpoints(exprs))
        .graded_left(8)
        .build()
}

fn interval_grid(opts: &GridOptions, exprs: &[&Expr], singular: bool) -> Result<Arc<Grid>, GridError> {
    let offset = opts.offset.unwrap_or(if singular { SINGULAR_OFFSET } else { 0.0 });
    GridSpec::new(DomainKind::Interval { b: 1.0 }, opts.n.unwrap_or(256), offset)
        .with_breaks(&breakpoints(exprs))
        .graded_left(GRADING_LEVELS)
        .build()
}

/// Combination of `exp(-(1+i)x/√2)` and `exp(-(1-i)x/√2)` with prescribed
/// value and derivative at 0.
pub fn decaying_combination(value: C64, slope: C64) -> Result<Expr, CatalogError> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let a = C64::new(-s, -s);
    let b = C64::new(-s, s);
    let m = CMatrix::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), a, b]);
    let det = b - a;
    if det.norm() < 1e-14 {
        return Err(CatalogError::SingularBasis);
    }
    let c = linalg::solve_dense(&m, &[value, slope]).ok_or(CatalogError::SingularBasis)?;
    Ok(Expr::constant(c[0]) * Expr::x().scale(a).exp() + Expr::constant(c[1]) * Expr::x().scale(b).exp())
}

/// `ζ_ρ` (or `η_h`): value 1 and slope `ρ` at 0; `ρ = ∞` gives value 0 and slope 1.
pub fn boundary_vector(rho: Rho) -> Result<Expr, CatalogError> {
    match rho {
        Rho::Finite(z) => decaying_combination(C64::new(1.0, 0.0), z),
        Rho::Infinity => decaying_combination(C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
    }
}

fn check_decay(f: &GridFunction, what: &str) -> Result<(), CatalogError> {
    f.decay_certificate()
        .map_err(|e| CatalogError::InvalidParameter(format!("{what}: {e}")))
}

fn check_real(e: &Expr, grid: &Grid, what: &str) -> Result<(), CatalogError> {
    for &x in &grid.nodes {
        let v = e.eval(x);
        if !v.re.is_finite() || v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
            return Err(CatalogError::InvalidParameter(format!("{what} must be real and finite (x = {x})")));
        }
    }
    Ok(())
}

fn dirichlet_trace(phi: &Expr, x: f64, grid: &Arc<Grid>) -> Result<(), CatalogError> {
    let v = phi.eval(x);
    let scale = 1.0_f64.max(grid.sample(phi).max_abs());
    if v.norm() > 1e-8 * scale {
        return Err(CatalogError::PhiBoundary(format!("phi({x}) = {v}")));
    }
    Ok(())
}

fn norm_sq_derivative(grid: &Arc<Grid>, phi: &Expr) -> f64 {
    grid.sample(&phi.derivative()).norm_sq()
}

/// Half-line operator `−if'' + Wf` with `𝓛v = −φ''`, `φ(0) = 0`.
pub fn build_potsdam(w: Expr, rho: Rho, phi: Expr, opts: &GridOptions) -> Result<ExtensionProblem, CatalogError> {
    let grid = halfline_grid(opts, &[&w, &phi])?;
    check_real(&w, &grid, "W")?;
    if !grid.sample(&w).norm_sq().is_finite() {
        return Err(CatalogError::InvalidParameter("W must be square integrable".into()));
    }
    dirichlet_trace(&phi, 0.0, &grid)?;
    let v_expr = boundary_vector(rho)?;
    let v = grid.sample(&v_expr);
    check_decay(&v, "extension vector")?;
    let phi_f = grid.sample(&phi);
    check_decay(&phi_f, "phi")?;
    let lv = grid.sample(&(-phi.second_derivative()));
    let energy = norm_sq_derivative(&grid, &phi);
    let dphi0 = phi.derivative().eval(0.0);
    let margin = match rho {
        Rho::Finite(z) => z.re - 0.25 * energy + dphi0.im,
        Rho::Infinity => -0.25 * energy,
    };
    Ok(ExtensionProblem {
        scenario: Scenario::Potsdam { w: w.clone() },
        rho: Some(rho),
        spec: ImaginaryPartSpec::dirichlet_laplacian_halfline(),
        action: DiffAction::second_order(C64::new(0.0, -1.0), (!w.is_zero()).then_some(w)),
        symmetric_action: None,
        v,
        lv,
        phi: Some(phi_f),
        added_dim: 1,
        defect_dim: 1,
        reference: Reference { margin, dissipative: margin >= -1e-12 },
        grid,
    })
}

/// `ω = (1 + √(1 + 4iγ))/2`, principal branch.
pub fn shirley_omega(gamma: f64) -> C64 {
    (C64::new(1.0, 4.0 * gamma).sqrt() + 1.0) * 0.5
}

/// `ξ_ρ` on `(0, 1)`: vanishes with its derivative at 0, `ξ(1) = ρ`, `ξ'(1) = 1`;
/// `ξ_∞(1) = 1`, `ξ_∞'(1) = 0`.
pub fn shirley_vector(gamma: f64, rho: Rho) -> Expr {
    let w = shirley_omega(gamma);
    let wb = w.conj();
    let d = C64::new(2.0, 0.0) + wb - w;
    let a = Expr::power_of_x(w);
    let b = Expr::power_of_x(wb + 2.0);
    let base = (a.clone().scale(C64::new(2.0, 0.0) + wb) - b.clone().scale(w)).scale(d.inv());
    match rho {
        Rho::Infinity => base,
        Rho::Finite(z) => base.scale(z) - (a - b).scale(d.inv()),
    }
}

/// Inverse-square potential: `−if'' − γf/x²` on `(0, 1)`, `γ ≥ √3`, `𝓛v = −φ''`
/// with `φ(0) = φ(1) = 0`.
pub fn build_shirley(gamma: f64, rho: Rho, phi: Expr, opts: &GridOptions) -> Result<ExtensionProblem, CatalogError> {
    if !(gamma >= 3f64.sqrt() * (1.0 - 1e-12)) || !gamma.is_finite() {
        return Err(CatalogError::GammaOutOfRange { gamma, requirement: "gamma >= sqrt(3)" });
    }
    let grid = interval_grid(opts, &[&phi], true)?;
    dirichlet_trace(&phi, 0.0, &grid)?;
    dirichlet_trace(&phi, 1.0, &grid)?;
    let v = grid.sample(&shirley_vector(gamma, rho));
    let lv = grid.sample(&(-phi.second_derivative()));
    let dphi = phi.derivative();
    let dphi1 = dphi.eval(1.0);
    let energy = grid.sample(&dphi).norm_sq();
    let margin = match rho {
        Rho::Finite(z) => z.norm_sqr() - z.re - (z.conj() * dphi1).im - 0.25 * energy,
        Rho::Infinity => 1.0 - dphi1.im - 0.25 * energy,
    };
    let potential = Expr::real(-gamma) / Expr::x().pow(2.0);
    Ok(ExtensionProblem {
        scenario: Scenario::Shirley { gamma },
        rho: Some(rho),
        spec: ImaginaryPartSpec::dirichlet_laplacian_interval(1.0),
        action: DiffAction::second_order(C64::new(0.0, -1.0), Some(potential)),
        symmetric_action: None,
        phi: Some(grid.sample(&phi)),
        v,
        lv,
        added_dim: 1,
        defect_dim: 1,
        reference: Reference { margin, dissipative: margin >= -1e-12 },
        grid,
    })
}

/// First-order operator `if' + iγf/x` on `(0, 1)`, `0 < γ < 1/2`, `𝓛v = ℓ`.
pub fn build_konzert(
    gamma: f64,
    ell: Expr,
    vector: KonzertVector,
    opts: &GridOptions,
) -> Result<ExtensionProblem, CatalogError> {
    if !(gamma > 0.0 && gamma < 0.5) {
        return Err(CatalogError::GammaOutOfRange { gamma, requirement: "0 < gamma < 1/2" });
    }
    let grid = interval_grid(opts, &[&ell], true)?;
    let weight = Expr::real(gamma) / Expr::x();
    let spec = ImaginaryPartSpec::multiplication(weight.clone(), &grid, Some(gamma))?;
    let v_expr = match vector {
        KonzertVector::Regular => Expr::power_of_x(gamma + 1.0),
        KonzertVector::Singular => Expr::power_of_x(-gamma),
    };
    let moment = grid.integrate_real(|x| x * ell.eval(x).norm_sqr());
    let reference = match vector {
        KonzertVector::Regular => {
            let margin = 0.5 - moment / (4.0 * gamma);
            Reference { margin, dissipative: margin >= -1e-12 }
        }
        KonzertVector::Singular => Reference { margin: f64::NAN, dissipative: false },
    };
    Ok(ExtensionProblem {
        scenario: Scenario::Konzert { gamma, vector },
        rho: None,
        spec,
        action: DiffAction {
            second: C64::new(0.0, 0.0),
            first: C64::new(0.0, 1.0),
            potential: Some(weight.scale(C64::new(0.0, 1.0))),
            rank_one: None,
        },
        symmetric_action: None,
        v: grid.sample(&v_expr),
        lv: grid.sample(&ell),
        phi: None,
        added_dim: 1,
        defect_dim: 1,
        reference,
        grid,
    })
}

/// Half-line Schrödinger operator `−f''` with boundary vector `η_h` and a
/// bounded dissipative perturbation `iV`.
pub fn build_halfline_schrodinger(
    h: Rho,
    perturbation: Perturbation,
    opts: &GridOptions,
) -> Result<ExtensionProblem, CatalogError> {
    if let Rho::Finite(z) = h {
        if z.im < 0.0 {
            return Err(CatalogError::NegativeImH(z.im));
        }
    }
    let eta = boundary_vector(h)?;
    let (grid, spec, lv_expr, potential, rank_one, rhs_ref) = match &perturbation {
        Perturbation::RankOne { alpha, phi, lambda } => {
            let grid = halfline_grid(opts, &[phi])?;
            let spec = ImaginaryPartSpec::rank_one(*alpha, phi.clone(), &grid)?;
            check_decay(&grid.sample(phi), "phi")?;
            let rhs = lambda.norm_sqr() / (4.0 * alpha);
            (grid, spec, phi.clone().scale(*lambda), None, Some((C64::new(0.0, *alpha), phi.clone())), rhs)
        }
        Perturbation::Multiplication { v, k } => {
            let grid = halfline_grid(opts, &[v, k])?;
            check_real(v, &grid, "V")?;
            let spec = ImaginaryPartSpec::multiplication(v.clone(), &grid, None)?;
            check_decay(&grid.sample(k), "k")?;
            let mut acc = 0.0;
            for (&x, &wt) in grid.nodes.iter().zip(&grid.weights) {
                let vx = v.eval(x).re;
                let kx = k.eval(x).norm_sqr();
                if vx <= 0.0 {
                    if kx > 0.0 {
                        return Err(CatalogError::SupportViolation(x));
                    }
                } else {
                    acc += wt * kx / vx;
                }
            }
            (grid, spec, k.clone(), Some(v.clone().scale(C64::new(0.0, 1.0))), None, 0.25 * acc)
        }
    };
    let v = grid.sample(&eta);
    check_decay(&v, "extension vector")?;
    let margin = h.im() - rhs_ref;
    let symmetric = DiffAction::second_order(C64::new(-1.0, 0.0), None);
    Ok(ExtensionProblem {
        scenario: Scenario::HalflineSchrodinger { h, perturbation },
        rho: Some(h),
        spec,
        action: DiffAction { second: C64::new(-1.0, 0.0), first: C64::new(0.0, 0.0), potential, rank_one },
        symmetric_action: Some(symmetric),
        v,
        lv: grid.sample(&lv_expr),
        phi: None,
        added_dim: 1,
        defect_dim: 1,
        reference: Reference { margin, dissipative: margin >= -1e-12 },
        grid,
    })
}

/// `S = (M + M̃)/2`, `V = (M − M̃)/(2i)` for a discretized dual pair sharing basis and Gram.
pub fn split_dual_pair(
    m: &DiscreteOperator,
    mt: &DiscreteOperator,
) -> Result<(DiscreteOperator, DiscreteOperator), CatalogError> {
    if m.g != mt.g || m.m.shape() != mt.m.shape() {
        return Err(CatalogError::NotDualPair(f64::INFINITY));
    }
    let scale = 1.0 + m.m.norm() + mt.m.norm();
    // ⟨f, M̃ g⟩ = ⟨M f, g⟩ for every basis pair: M̃ = M^H as form matrices
    let defect = (&mt.m - m.m.adjoint()).norm();
    if defect > 1e-8 * scale {
        return Err(CatalogError::NotDualPair(defect));
    }
    let s = (&m.m + &mt.m) * C64::new(0.5, 0.0);
    let v = (&m.m - &mt.m) * C64::new(0.0, -0.5);
    let low = linalg::pencil_min_eig(&linalg::hermitian_part(&v), &m.g)
        .map_err(|e| CatalogError::InvalidParameter(e.to_string()))?
        .value;
    if low < -1e-8 * scale {
        return Err(CatalogError::IndefiniteImaginaryPart(low));
    }
    Ok((
        DiscreteOperator { m: s, g: m.g.clone(), basis: m.basis.clone() },
        DiscreteOperator { m: v, g: m.g.clone(), basis: m.basis.clone() },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn boundary_vectors_have_prescribed_traces() {
        let rho = C64::new(0.3, -1.2);
        let z = boundary_vector(Rho::Finite(rho)).unwrap();
        assert!((z.eval(0.0) - 1.0).norm() < 1e-14);
        assert!((z.derivative().eval(0.0) - rho).norm() < 1e-14);
        let t = boundary_vector(Rho::Infinity).unwrap();
        assert!(t.eval(0.0).norm() < 1e-14);
        assert!((t.derivative().eval(0.0) - 1.0).norm() < 1e-14);
        // solves -u'' = ±i u componentwise, so u'''' = -u
        let x = 0.7;
        assert!((z.second_derivative().second_derivative().eval(x) + z.eval(x)).norm() < 1e-12);
    }

    #[test]
    fn shirley_vector_traces() {
        let gamma = 3f64.sqrt();
        let w = shirley_omega(gamma);
        assert!((w - C64::new(1.5, 3f64.sqrt() / 2.0)).norm() < 1e-14);
        let rho = C64::new(0.5, 0.375);
        let xi = shirley_vector(gamma, Rho::Finite(rho));
        assert!((xi.eval(1.0) - rho).norm() < 1e-13);
        assert!((xi.derivative().eval(1.0) - 1.0).norm() < 1e-13);
        assert!(xi.eval(0.0).norm() == 0.0);
        let xi = shirley_vector(gamma, Rho::Infinity);
        assert!((xi.eval(1.0) - 1.0).norm() < 1e-13);
        assert!(xi.derivative().eval(1.0).norm() < 1e-13);
    }

    #[test]
    fn shirley_basis_odes() {
        let gamma = 2.0;
        let w = shirley_omega(gamma);
        let act = |e: &Expr, x: f64| C64::new(0.0, -1.0) * e.second_derivative().eval(x) - e.eval(x) * gamma / (x * x);
        let a = Expr::power_of_x(w);
        let b = Expr::power_of_x(w.conj() + 2.0);
        for x in [1e-3, 0.1, 0.5, 1.0] {
            assert!(act(&a, x).norm() <= 1e-10 * a.eval(x).norm() / (x * x));
            // x^{ω̄+2} is not a null solution: Ã* gives (−2γ − i(4ω̄+2)) x^{ω̄}
            let expected = (C64::new(-2.0 * gamma, 0.0) - C64::new(0.0, 1.0) * (w.conj() * 4.0 + 2.0))
                * Expr::power_of_x(w.conj()).eval(x);
            assert!((act(&b, x) - expected).norm() <= 1e-10 * expected.norm());
        }
    }

    #[test]
    fn potsdam_references() {
        let o = GridOptions::default();
        let zero = Expr::zero();
        let pr = build_potsdam(zero.clone(), Rho::Finite(C64::new(1.0, 0.0)), zero.clone(), &o).unwrap();
        assert!(pr.reference.dissipative);
        let pr = build_potsdam(zero.clone(), Rho::Finite(C64::new(-0.1, 0.0)), zero.clone(), &o).unwrap();
        assert!(!pr.reference.dissipative);
        let phi = p("i*x*exp(-x)");
        let pr = build_potsdam(zero.clone(), Rho::Infinity, phi.clone(), &o).unwrap();
        assert!(!pr.reference.dissipative);
        let pr = build_potsdam(zero.clone(), Rho::Finite(C64::new(-15.0 / 16.0, 0.0)), phi, &o).unwrap();
        assert!(pr.reference.margin.abs() < 1e-12);
        assert!(matches!(
            build_potsdam(zero, Rho::Infinity, p("exp(-x)"), &o),
            Err(CatalogError::PhiBoundary(_))
        ));
    }

    #[test]
    fn shirley_references() {
        let o = GridOptions::default();
        let g = 3f64.sqrt();
        let rho = Rho::Finite(C64::new(0.5, 0.375));
        let pr = build_shirley(g, rho, p("x^2 - x"), &o).unwrap();
        assert!((pr.reference.margin - 35.0 / 192.0).abs() < 1e-12);
        let pr = build_shirley(g, rho, Expr::zero(), &o).unwrap();
        assert!(!pr.reference.dissipative);
        assert!(build_shirley(2.0, Rho::Finite(C64::new(2.0, 0.0)), Expr::zero(), &o).unwrap().reference.dissipative);
        assert!(matches!(build_shirley(1.5, rho, Expr::zero(), &o), Err(CatalogError::GammaOutOfRange { .. })));
        assert!(matches!(build_shirley(2.0, rho, p("x"), &o), Err(CatalogError::PhiBoundary(_))));
    }

    #[test]
    fn konzert_references() {
        let o = GridOptions::default();
        let pr = build_konzert(0.25, p("1"), KonzertVector::Regular, &o).unwrap();
        assert!(pr.reference.margin.abs() < 1e-12);
        let pr = build_konzert(0.25, p("1.05"), KonzertVector::Regular, &o).unwrap();
        assert!(!pr.reference.dissipative);
        let pr = build_konzert(0.25, Expr::zero(), KonzertVector::Regular, &o).unwrap();
        assert!((pr.reference.margin - 0.5).abs() < 1e-12);
        assert!(build_konzert(0.7, Expr::zero(), KonzertVector::Regular, &o).is_err());
        // Im⟨v, Ã*v⟩ = 1/2 + γ/(2γ+2)
        let pr = build_konzert(0.3, Expr::zero(), KonzertVector::Regular, &o).unwrap();
        let lhs = pr.im_v_tilde_star_v().unwrap();
        assert!((lhs - (0.5 + 0.3 / 2.6)).abs() < 1e-10);
    }

    #[test]
    fn schrodinger_references() {
        let o = GridOptions::default();
        let phi = p("sqrt(2)*exp(-x)");
        let pert = Perturbation::RankOne { alpha: 1.0, phi: phi.clone(), lambda: C64::new(2.0, 0.0) };
        let pr = build_halfline_schrodinger(Rho::Finite(C64::new(0.0, 1.0)), pert, &o).unwrap();
        assert!(pr.reference.margin.abs() < 1e-12);
        let lhs = pr.v.inner(&pr.symmetric_action.as_ref().unwrap().apply(&pr.v).unwrap()).unwrap().im;
        assert!((lhs - 1.0).abs() < 1e-10);
        let pert = Perturbation::Multiplication { v: p("ind(0,1)"), k: p("3*ind(2,3)") };
        assert!(matches!(
            build_halfline_schrodinger(Rho::Finite(C64::new(1.0, 1.0)), pert, &o),
            Err(CatalogError::SupportViolation(_))
        ));
        let pert = Perturbation::Multiplication { v: p("ind(0,1)"), k: p("2*ind(0,1)") };
        let pr = build_halfline_schrodinger(Rho::Finite(C64::new(1.0, 1.0)), pert.clone(), &o).unwrap();
        assert!(pr.reference.margin.abs() < 1e-12);
        assert!(matches!(
            build_halfline_schrodinger(Rho::Finite(C64::new(1.0, -0.1)), pert, &o),
            Err(CatalogError::NegativeImH(_))
        ));
    }
}
