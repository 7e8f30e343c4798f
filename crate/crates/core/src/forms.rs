//! Friedrichs and Kreĭn–von Neumann square-root forms of the imaginary part
//! `V`, the inverse `V_F^{-1}`, the projection onto `ker V*`, the Ando–Nishio
//! sup formula and the discrete factorization `V_K^{1/2} = U V_F^{1/2}`.

use std::sync::Arc;

use crate::expr::{Expr, C64};
use crate::grid::{diverges_at_zero, DomainKind, Grid, GridError, GridFunction, GridSpec};
use crate::linalg::{self, CMatrix, LinalgError};

/// Boundary traces above this are treated as nonzero.
pub const TRACE_TOL: f64 = 1e-8;

/// `⟨ℓ, V_F^{-1} ℓ⟩` beyond this counts as divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormError {
    #[error("function is outside the form domain: {0}")]
    OutsideFormDomain(String),
    #[error("form integral diverges: {0}")]
    Divergent(String),
    #[error("right-hand side is not in the range of V_F: {0}")]
    NotInRange(String),
    #[error("the projection needs a strictly positive V")]
    NoStrictBound,
    #[error("no closed-form basis of ker V* for this family")]
    NoClosedFormKernel,
    #[error("degenerate test family: form Gram matrix vanishes")]
    DegenerateTestFamily,
    #[error("invalid imaginary part: {0}")]
    InvalidSpec(String),
    #[error("rank-deficient basis Gram matrix")]
    RankDeficientBasis,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    DirichletLaplacianHalfline,
    DirichletLaplacianInterval { b: f64 },
    Multiplication { weight: Expr },
    RankOne { alpha: f64, phi: Expr },
    /// Matrix acting on nodal values of a fixed grid; Hermitian w.r.t. the quadrature weights.
    BoundedMatrix { matrix: CMatrix },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImaginaryPartSpec {
    pub family: Family,
    pub strict_lower_bound: Option<f64>,
    pub friedrichs_equals_krein: bool,
}

impl ImaginaryPartSpec {
    pub fn dirichlet_laplacian_halfline() -> Self {
        ImaginaryPartSpec {
            family: Family::DirichletLaplacianHalfline,
            strict_lower_bound: None,
            friedrichs_equals_krein: false,
        }
    }

    pub fn dirichlet_laplacian_interval(b: f64) -> Self {
        let pi = std::f64::consts::PI;
        ImaginaryPartSpec {
            family: Family::DirichletLaplacianInterval { b },
            strict_lower_bound: Some(pi * pi / (b * b)),
            friedrichs_equals_krein: false,
        }
    }

    /// Multiplication by `w ≥ 0`, checked on the nodes of `grid`.
    pub fn multiplication(weight: Expr, grid: &Grid, lower_bound: Option<f64>) -> Result<Self, FormError> {
        for &x in &grid.nodes {
            let v = weight.eval(x);
            if !(v.re >= 0.0) || v.im.abs() > 1e-12 * (1.0 + v.re.abs()) {
                return Err(FormError::InvalidSpec(format!("weight is not non-negative at x = {x}: {v}")));
            }
        }
        Ok(ImaginaryPartSpec {
            family: Family::Multiplication { weight },
            strict_lower_bound: lower_bound.filter(|&e| e > 0.0),
            friedrichs_equals_krein: true,
        })
    }

    /// `α ⟨φ, ·⟩ φ`; `φ` must have unit norm on `grid`.
    pub fn rank_one(alpha: f64, phi: Expr, grid: &Arc<Grid>) -> Result<Self, FormError> {
        if !(alpha > 0.0) {
            return Err(FormError::InvalidSpec(format!("alpha must be positive, got {alpha}")));
        }
        let norm = grid.sample(&phi).norm_sq();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(FormError::InvalidSpec(format!("phi must have unit norm, got |phi|^2 = {norm}")));
        }
        Ok(ImaginaryPartSpec {
            family: Family::RankOne { alpha, phi },
            strict_lower_bound: None,
            friedrichs_equals_krein: true,
        })
    }

    pub fn bounded_matrix(matrix: CMatrix, grid: &Grid) -> Result<Self, FormError> {
        if matrix.nrows() != grid.n() || matrix.ncols() != grid.n() {
            return Err(FormError::InvalidSpec("matrix size must match the grid".into()));
        }
        let wm = weighted(&matrix, grid);
        if linalg::hermitian_defect(&wm) > 1e-10 * (1.0 + wm.norm()) {
            return Err(FormError::InvalidSpec("matrix is not Hermitian w.r.t. quadrature weights".into()));
        }
        let low = linalg::pencil_min_eig(&wm, &weight_matrix(grid))?.value;
        if low < -1e-10 * (1.0 + wm.norm()) {
            return Err(FormError::InvalidSpec(format!("matrix has negative eigenvalue {low}")));
        }
        Ok(ImaginaryPartSpec {
            family: Family::BoundedMatrix { matrix },
            strict_lower_bound: (low > 0.0).then_some(low),
            friedrichs_equals_krein: true,
        })
    }

    fn is_laplacian(&self) -> bool {
        matches!(
            self.family,
            Family::DirichletLaplacianHalfline | Family::DirichletLaplacianInterval { .. }
        )
    }

    /// The weight function of a multiplication family.
    pub fn weight(&self) -> Option<&Expr> {
        match &self.family {
            Family::Multiplication { weight } => Some(weight),
            _ => None,
        }
    }
}

fn weight_matrix(grid: &Grid) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        grid.n(),
        grid.weights.iter().map(|&w| C64::new(w, 0.0)),
    ))
}

fn weighted(matrix: &CMatrix, grid: &Grid) -> CMatrix {
    let mut wm = matrix.clone();
    for i in 0..grid.n() {
        for j in 0..grid.n() {
            wm[(i, j)] *= grid.weights[i];
        }
    }
    wm
}

fn dirichlet_check(spec: &ImaginaryPartSpec, f: &GridFunction) -> Result<(), FormError> {
    let t = f.boundary_data();
    let scale = 1.0_f64.max(f.max_abs());
    if t.f0.norm() > TRACE_TOL * scale {
        return Err(FormError::OutsideFormDomain(format!("f(0) = {} violates the Dirichlet condition", t.f0)));
    }
    if let Family::DirichletLaplacianInterval { .. } = spec.family {
        let fb = t.right()?.0;
        if fb.norm() > TRACE_TOL * scale {
            return Err(FormError::OutsideFormDomain(format!("f(b) = {fb} violates the Dirichlet condition")));
        }
    }
    Ok(())
}

fn derivative_energy_check(f: &GridFunction) -> Result<(), FormError> {
    if let Some(e) = &f.source {
        let d = e.derivative();
        if diverges_at_zero(|x| d.eval(x).norm_sqr()) {
            return Err(FormError::Divergent(format!("|f'|^2 is not integrable at 0 for f = {e}")));
        }
    }
    Ok(())
}

fn weight_check(weight: &Expr, f: &GridFunction) -> Result<(), FormError> {
    if let Some(e) = &f.source {
        if diverges_at_zero(|x| weight.eval(x).re * e.eval(x).norm_sqr()) {
            return Err(FormError::Divergent(format!("w|f|^2 is not integrable at 0 for f = {e}")));
        }
    }
    Ok(())
}

fn finite(v: f64, what: &str) -> Result<f64, FormError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FormError::Divergent(what.to_string()))
    }
}

/// `⟨f', g'⟩`.
pub fn derivative_inner(f: &GridFunction, g: &GridFunction) -> Result<C64, FormError> {
    Ok(f.differentiate().inner(&g.differentiate())?)
}

/// Sesquilinear Friedrichs form `v_F[f, g]` (no domain checks).
pub fn friedrichs_sesq(spec: &ImaginaryPartSpec, f: &GridFunction, g: &GridFunction) -> Result<C64, FormError> {
    match &spec.family {
        Family::DirichletLaplacianHalfline | Family::DirichletLaplacianInterval { .. } => derivative_inner(f, g),
        Family::Multiplication { weight } => {
            let wg = g.grid.sample(weight);
            let vals: Vec<C64> = wg.values.iter().zip(&g.values).map(|(w, v)| w * v).collect();
            Ok(f.grid.dot(&f.values, &vals))
        }
        Family::RankOne { alpha, phi } => {
            let p = f.grid.sample(phi);
            Ok(p.inner(f)?.conj() * p.inner(g)? * *alpha)
        }
        Family::BoundedMatrix { matrix } => {
            let gv = matrix * nalgebra::DVector::from_column_slice(&g.values);
            Ok(f.grid.dot(&f.values, gv.as_slice()))
        }
    }
}

/// Sesquilinear Kreĭn–von Neumann form `v_K[f, g]` (no domain checks).
pub fn krein_sesq(spec: &ImaginaryPartSpec, f: &GridFunction, g: &GridFunction) -> Result<C64, FormError> {
    match &spec.family {
        Family::DirichletLaplacianInterval { b } => {
            let tf = f.boundary_data();
            let tg = g.boundary_data();
            let jf = tf.right()?.0 - tf.f0;
            let jg = tg.right()?.0 - tg.f0;
            Ok(derivative_inner(f, g)? - jf.conj() * jg / *b)
        }
        _ => friedrichs_sesq(spec, f, g),
    }
}

/// `‖V_F^{1/2} f‖²`.
pub fn friedrichs_form_sq(spec: &ImaginaryPartSpec, f: &GridFunction) -> Result<f64, FormError> {
    match &spec.family {
        Family::DirichletLaplacianHalfline | Family::DirichletLaplacianInterval { .. } => {
            dirichlet_check(spec, f)?;
            derivative_energy_check(f)?;
        }
        Family::Multiplication { weight } => weight_check(weight, f)?,
        _ => {}
    }
    finite(friedrichs_sesq(spec, f, f)?.re, "form value is not finite")
}

/// `‖V_K^{1/2} f‖²`.
pub fn krein_form_sq(spec: &ImaginaryPartSpec, f: &GridFunction) -> Result<f64, FormError> {
    match &spec.family {
        Family::DirichletLaplacianHalfline | Family::DirichletLaplacianInterval { .. } => {
            derivative_energy_check(f)?;
        }
        Family::Multiplication { weight } => weight_check(weight, f)?,
        _ => {}
    }
    finite(krein_sesq(spec, f, f)?.re, "form value is not finite")
}

/// Test family for the Ando–Nishio sup. Laplacians use sines with smooth cutoffs
/// at both ends (elements of `C_c^∞`); multiplications use cosines with a
/// cutoff at the left end only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestFamily {
    CutoffSines,
    LeftCutoffCosines,
    DyadicBumps,
}

/// Width of the smooth cutoff transitions.
pub const CUTOFF_DELTA: f64 = 1e-6;

fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

fn smooth_step_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        return 0.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    let da = a / (t * t);
    let db = -b / ((1.0 - t) * (1.0 - t));
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// Sampled values and derivatives of the `j`-th test function (1-based).
fn test_function(family: TestFamily, j: usize, len: f64, x: f64) -> (f64, f64) {
    let d = CUTOFF_DELTA * len;
    let left = smooth_step((x - d) / d);
    let dleft = smooth_step_deriv((x - d) / d) / d;
    let right = smooth_step((len - d - x) / d);
    let dright = -smooth_step_deriv((len - d - x) / d) / d;
    match family {
        TestFamily::CutoffSines => {
            let k = j as f64 * std::f64::consts::PI / len;
            let (s, c) = ((k * x).sin(), (k * x).cos());
            let chi = left * right;
            let dchi = dleft * right + left * dright;
            (chi * s, dchi * s + chi * k * c)
        }
        TestFamily::LeftCutoffCosines => {
            let k = (j - 1) as f64 * std::f64::consts::PI / len;
            let (s, c) = ((k * x).sin(), (k * x).cos());
            (left * c, dleft * c - left * k * s)
        }
        TestFamily::DyadicBumps => {
            // level l holds 2^l bumps; j enumerates levels breadth-first
            let level = (usize::BITS - j.leading_zeros() - 1) as i32;
            let idx = j - (1usize << level);
            let width = len / 2f64.powi(level);
            let a = idx as f64 * width;
            let t = (x - a) / width;
            if t <= 0.0 || t >= 1.0 {
                return (0.0, 0.0);
            }
            let g = |t: f64| (-1.0 / (t * (1.0 - t))).exp();
            let v = g(t) / g(0.5);
            let dv = v * (1.0 - 2.0 * t) / (t * t * (1.0 - t) * (1.0 - t)) / width;
            (v, dv)
        }
    }
}

/// Grid resolving the test family up to index `m`.
fn test_grid(kind: DomainKind, m: usize) -> Result<Arc<Grid>, FormError> {
    let len = kind.length();
    let d = CUTOFF_DELTA * len;
    let mut breaks = Vec::new();
    for k in 0..=16 {
        let s = d * (1.0 + k as f64 / 16.0);
        breaks.push(s);
        breaks.push(len - s);
    }
    let panels = (8 * m).max(128);
    Ok(GridSpec::new(kind, panels * 8, 0.0).with_breaks(&breaks).graded_left(30).build()?)
}

/// Default family for a spec.
pub fn default_test_family(spec: &ImaginaryPartSpec) -> TestFamily {
    if spec.is_laplacian() {
        TestFamily::CutoffSines
    } else {
        TestFamily::LeftCutoffCosines
    }
}

/// `sup |⟨h, V f⟩|² / ⟨f, V f⟩` over the first `test_dim` test functions,
/// as the largest eigenvalue of the pencil (numerator Gram, form Gram).
pub fn krein_form_ando_nishio(spec: &ImaginaryPartSpec, h: &Expr, test_dim: usize) -> Result<f64, FormError> {
    krein_form_ando_nishio_with(spec, h, test_dim, default_test_family(spec))
}

pub fn krein_form_ando_nishio_with(
    spec: &ImaginaryPartSpec,
    h: &Expr,
    test_dim: usize,
    family: TestFamily,
) -> Result<f64, FormError> {
    if test_dim < 2 {
        return Err(FormError::InvalidSpec("test_dim must be at least 2".into()));
    }
    let kind = match &spec.family {
        Family::DirichletLaplacianHalfline => DomainKind::Halfline { r: crate::grid::DEFAULT_HALFLINE_R },
        Family::DirichletLaplacianInterval { b } => DomainKind::Interval { b: *b },
        Family::Multiplication { .. } | Family::RankOne { .. } => DomainKind::Interval { b: 1.0 },
        Family::BoundedMatrix { .. } => {
            return Err(FormError::InvalidSpec("Ando-Nishio needs a continuum family".into()))
        }
    };
    let grid = test_grid(kind, test_dim)?;
    let len = kind.length();
    let n = grid.n();
    let samples: Vec<Vec<(f64, f64)>> = (1..=test_dim)
        .map(|j| grid.nodes.iter().map(|&x| test_function(family, j, len, x)).collect())
        .collect();
    let to_c = |v: &[(f64, f64)], deriv: bool| -> Vec<C64> {
        v.iter().map(|p| C64::new(if deriv { p.1 } else { p.0 }, 0.0)).collect()
    };
    // images V f_j paired against h and f_k, using the weak form where V is differential
    let (hv, fv): (Vec<C64>, Vec<Vec<C64>>) = match &spec.family {
        Family::DirichletLaplacianHalfline | Family::DirichletLaplacianInterval { .. } => {
            let dh = grid.sample(&h.derivative()).values;
            let ders: Vec<Vec<C64>> = samples.iter().map(|s| to_c(s, true)).collect();
            let a = ders.iter().map(|d| grid.dot(&dh, d)).collect();
            (a, ders)
        }
        Family::Multiplication { weight } => {
            let w = grid.sample(weight).values;
            let hv = grid.sample(h).values;
            let sq: Vec<C64> = w.iter().map(|v| v.sqrt()).collect();
            let hw: Vec<C64> = hv.iter().zip(&sq).map(|(a, b)| a * b).collect();
            let fs: Vec<Vec<C64>> =
                samples.iter().map(|s| to_c(s, false).iter().zip(&sq).map(|(a, b)| a * b).collect()).collect();
            let a = fs.iter().map(|f| grid.dot(&hw, f)).collect();
            (a, fs)
        }
        Family::RankOne { alpha, phi } => {
            let p = grid.sample(phi).values;
            let hp = grid.dot(&grid.sample(h).values, &p);
            let s = alpha.sqrt();
            let fs: Vec<Vec<C64>> = samples
                .iter()
                .map(|f| vec![grid.dot(&p, &to_c(f, false)) * s; 1])
                .collect();
            let a: Vec<C64> = fs.iter().map(|f| hp * s * f[0]).collect();
            let q = CMatrix::from_fn(test_dim, test_dim, |j, k| fs[j][0].conj() * fs[k][0]);
            return pencil_sup(&a, &q);
        }
        Family::BoundedMatrix { .. } => unreachable!(),
    };
    debug_assert!(fv.iter().all(|f| f.len() == n));
    let q = CMatrix::from_fn(test_dim, test_dim, |j, k| grid.dot(&fv[j], &fv[k]));
    pencil_sup(&hv, &q)
}

fn pencil_sup(a: &[C64], q: &CMatrix) -> Result<f64, FormError> {
    let m = a.len();
    let scale = (0..m).map(|i| q[(i, i)].re).fold(0.0, f64::max);
    if !(scale > 0.0) {
        return Err(FormError::DegenerateTestFamily);
    }
    let num = CMatrix::from_fn(m, m, |j, k| a[j].conj() * a[k]);
    // drop directions the form does not see
    let (vals, vecs) = linalg::hermitian_eigen(q)?;
    let keep: Vec<usize> = (0..m).filter(|&i| vals[i] > 1e-13 * scale).collect();
    if keep.is_empty() {
        return Err(FormError::DegenerateTestFamily);
    }
    let p = CMatrix::from_fn(m, keep.len(), |i, j| vecs[(i, keep[j])]);
    let qr = p.adjoint() * q * &p;
    let nr = p.adjoint() * num * &p;
    let eig = linalg::pencil_eigenvalues(&nr, &qr)?;
    Ok(eig.last().copied().unwrap_or(0.0).max(0.0))
}

/// Solution of `V_F u = ℓ` together with `⟨ℓ, u⟩ = ‖V_F^{-1/2} ℓ‖²`.
#[derive(Debug, Clone)]
pub struct VfSolution {
    pub u: GridFunction,
    pub inv_form: f64,
}

pub fn vf_solve(spec: &ImaginaryPartSpec, ell: &GridFunction) -> Result<VfSolution, FormError> {
    let grid = Arc::clone(&ell.grid);
    let zero = C64::new(0.0, 0.0);
    let values: Vec<C64> = match &spec.family {
        Family::DirichletLaplacianInterval { b } => {
            let b = *b;
            let y_ell: Vec<C64> = grid.nodes.iter().zip(&ell.values).map(|(&y, l)| l * y).collect();
            let r_ell: Vec<C64> = grid.nodes.iter().zip(&ell.values).map(|(&y, l)| l * (b - y)).collect();
            let a = grid.cumulative(&y_ell);
            let c = grid.cumulative(&r_ell);
            let total: C64 = grid.dot(&vec![C64::new(1.0, 0.0); grid.n()], &r_ell);
            grid.nodes
                .iter()
                .enumerate()
                .map(|(i, &x)| a[i] * ((b - x) / b) + (total - c[i]) * (x / b))
                .collect()
        }
        Family::DirichletLaplacianHalfline => {
            let y_ell: Vec<C64> = grid.nodes.iter().zip(&ell.values).map(|(&y, l)| l * y).collect();
            let a = grid.cumulative(&y_ell);
            let c = grid.cumulative(&ell.values);
            let total: C64 = ell.values.iter().zip(&grid.weights).map(|(l, w)| l * *w).sum();
            grid.nodes.iter().enumerate().map(|(i, &x)| a[i] + (total - c[i]) * x).collect()
        }
        Family::Multiplication { weight } => {
            if let Some(e) = &ell.source {
                if diverges_at_zero(|x| e.eval(x).norm_sqr() / weight.eval(x).re) {
                    return Err(FormError::NotInRange("|l|^2/w is not integrable at 0".into()));
                }
            }
            let mut out = Vec::with_capacity(grid.n());
            for (&x, l) in grid.nodes.iter().zip(&ell.values) {
                let w = weight.eval(x).re;
                if w <= 0.0 {
                    if l.norm() > 0.0 {
                        return Err(FormError::NotInRange(format!("l(x) != 0 where w vanishes (x = {x})")));
                    }
                    out.push(zero);
                } else {
                    out.push(l / w);
                }
            }
            out
        }
        Family::RankOne { alpha, phi } => {
            let p = grid.sample(phi);
            let c = p.inner(ell)?;
            let resid: f64 = ell
                .values
                .iter()
                .zip(&p.values)
                .map(|(l, q)| (l - c * q).norm_sqr())
                .zip(&grid.weights)
                .map(|(v, w)| v * w)
                .sum();
            if resid.sqrt() > 1e-8 * (1.0 + ell.norm_sq().sqrt()) {
                return Err(FormError::NotInRange("l is not a multiple of phi".into()));
            }
            p.values.iter().map(|q| q * (c / *alpha)).collect()
        }
        Family::BoundedMatrix { matrix } => {
            let pinv = linalg::hermitian_pinv(&weighted(matrix, &grid), 1e-12)?;
            let wl: Vec<C64> = ell.values.iter().zip(&grid.weights).map(|(l, w)| l * *w).collect();
            let u = pinv * nalgebra::DVector::from_column_slice(&wl);
            let back = matrix * &u;
            let resid: f64 = back.iter().zip(&ell.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            let norm: f64 = ell.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if resid > 1e-8 * (1.0 + norm) {
                return Err(FormError::NotInRange("l has a component in ker V".into()));
            }
            u.iter().copied().collect()
        }
    };
    let u = GridFunction { grid: Arc::clone(&grid), values, source: None, traces: None };
    if spec.family == Family::DirichletLaplacianHalfline {
        u.decay_certificate().map_err(|e| FormError::NotInRange(e.to_string()))?;
    }
    let inv = ell.inner(&u)?.re;
    if !inv.is_finite() || inv > DIVERGENCE_THRESHOLD {
        return Err(FormError::NotInRange(format!("<l, V_F^-1 l> = {inv:e} diverges")));
    }
    Ok(VfSolution { u, inv_form: inv.max(0.0) })
}

/// The projection onto `ker V*` along `D(V_F^{1/2})`.
pub fn projection_p(spec: &ImaginaryPartSpec, v: &GridFunction) -> Result<GridFunction, FormError> {
    if spec.strict_lower_bound.is_none_or(|e| e <= 0.0) {
        return Err(FormError::NoStrictBound);
    }
    match &spec.family {
        Family::DirichletLaplacianInterval { b } => {
            let t = v.boundary_data();
            let (fb, _) = t.right()?;
            let e = Expr::constant(t.f0) * (Expr::real(1.0) - Expr::x() / Expr::real(*b))
                + Expr::constant(fb) * Expr::x() / Expr::real(*b);
            Ok(v.grid.sample(&e))
        }
        Family::Multiplication { .. } | Family::BoundedMatrix { .. } => Ok(v.grid.sample(&Expr::zero())),
        _ => Err(FormError::NoClosedFormKernel),
    }
}

/// Finite basis for the discrete square-root pair.
#[derive(Debug, Clone, PartialEq)]
pub enum SqrtBasis {
    /// `sin(jπx/b)`, `j = 1..m`.
    IntervalSines { b: f64, m: usize },
    /// `sin((j-1/2)πx/R)`, `j = 1..m`.
    HalflineSines { r: f64, m: usize },
    /// Nodal indicators of the quadrature grid.
    Nodal,
    /// The single function `φ`.
    RankOneVector,
}

impl SqrtBasis {
    pub fn default_for(spec: &ImaginaryPartSpec, grid: &Grid) -> SqrtBasis {
        match &spec.family {
            Family::DirichletLaplacianInterval { b } => SqrtBasis::IntervalSines { b: *b, m: 64 },
            Family::DirichletLaplacianHalfline => SqrtBasis::HalflineSines { r: grid.kind.length(), m: 128 },
            Family::RankOne { .. } => SqrtBasis::RankOneVector,
            _ => SqrtBasis::Nodal,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SqrtBasis::IntervalSines { b, m } => format!("sin(j pi x / {b}), j = 1..{m}"),
            SqrtBasis::HalflineSines { r, m } => format!("sin((j - 1/2) pi x / {r}), j = 1..{m}"),
            SqrtBasis::Nodal => "nodal quadrature indicators".into(),
            SqrtBasis::RankOneVector => "span{phi}".into(),
        }
    }

    fn functions(&self, spec: &ImaginaryPartSpec) -> Vec<Expr> {
        let pi = std::f64::consts::PI;
        match self {
            SqrtBasis::IntervalSines { b, m } => {
                (1..=*m).map(|j| (Expr::x().scale(j as f64 * pi / b)).sin()).collect()
            }
            SqrtBasis::HalflineSines { r, m } => {
                (1..=*m).map(|j| (Expr::x().scale((j as f64 - 0.5) * pi / r)).sin()).collect()
            }
            SqrtBasis::RankOneVector => match &spec.family {
                Family::RankOne { phi, .. } => vec![phi.clone()],
                _ => Vec::new(),
            },
            SqrtBasis::Nodal => Vec::new(),
        }
    }
}

/// Form matrices of `V_F` and `V_K` on a finite basis in orthonormalized
/// coordinates, their square roots and `U = K^{1/2} (F^{1/2})^+`.
#[derive(Debug, Clone)]
pub struct DiscreteSqrtPair {
    pub basis: SqrtBasis,
    pub description: String,
    pub grid: Arc<Grid>,
    /// Basis functions sampled on the grid (empty for the nodal basis).
    pub functions: Vec<GridFunction>,
    /// Cholesky factor of the basis Gram matrix.
    pub gram_chol: CMatrix,
    pub f_sqrt: CMatrix,
    pub k_sqrt: CMatrix,
    pub u: CMatrix,
    f_sqrt_pinv: CMatrix,
    k_sqrt_pinv: CMatrix,
}

pub fn discrete_sqrt_pair(
    spec: &ImaginaryPartSpec,
    basis: SqrtBasis,
    grid: &Arc<Grid>,
) -> Result<DiscreteSqrtPair, FormError> {
    let (gram, fmat, kmat, functions) = match basis {
        SqrtBasis::Nodal => {
            let n = grid.n();
            let gram = weight_matrix(grid);
            let f = match &spec.family {
                Family::Multiplication { weight } => CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    n,
                    grid.nodes.iter().zip(&grid.weights).map(|(&x, &w)| weight.eval(x) * w),
                )),
                Family::BoundedMatrix { matrix } => weighted(matrix, grid),
                _ => return Err(FormError::InvalidSpec("nodal basis needs a bounded family".into())),
            };
            (gram, f.clone(), f, Vec::new())
        }
        _ => {
            let funcs: Vec<GridFunction> = basis.functions(spec).iter().map(|e| grid.sample(e)).collect();
            let m = funcs.len();
            if m == 0 {
                return Err(FormError::InvalidSpec("empty basis".into()));
            }
            let mut gram = CMatrix::zeros(m, m);
            let mut f = CMatrix::zeros(m, m);
            let mut k = CMatrix::zeros(m, m);
            for j in 0..m {
                for l in j..m {
                    let g = funcs[j].inner(&funcs[l])?;
                    let fv = friedrichs_sesq(spec, &funcs[j], &funcs[l])?;
                    let kv = krein_sesq(spec, &funcs[j], &funcs[l])?;
                    gram[(j, l)] = g;
                    gram[(l, j)] = g.conj();
                    f[(j, l)] = fv;
                    f[(l, j)] = fv.conj();
                    k[(j, l)] = kv;
                    k[(l, j)] = kv.conj();
                }
            }
            (gram, f, k, funcs)
        }
    };
    let l = linalg::cholesky(&gram).map_err(|_| FormError::RankDeficientBasis)?;
    let diag = is_diagonal(&gram) && is_diagonal(&fmat) && is_diagonal(&kmat);
    let reduce = |m: &CMatrix| linalg::reduce_pencil(m, &l);
    let (ft, kt) = (reduce(&fmat), reduce(&kmat));
    let (f_sqrt, f_sqrt_pinv, k_sqrt, k_sqrt_pinv) = if diag {
        let s = |m: &CMatrix, inv: bool| diag_map(m, |v| {
            let r = v.max(0.0).sqrt();
            if inv {
                if v > 0.0 { 1.0 / r } else { 0.0 }
            } else {
                r
            }
        });
        (s(&ft, false), s(&ft, true), s(&kt, false), s(&kt, true))
    } else {
        let fs = linalg::psd_sqrt(&ft)?;
        let ks = linalg::psd_sqrt(&kt)?;
        let fp = linalg::hermitian_pinv(&fs, 1e-10)?;
        let kp = linalg::hermitian_pinv(&ks, 1e-10)?;
        (fs, fp, ks, kp)
    };
    let u = &k_sqrt * &f_sqrt_pinv;
    Ok(DiscreteSqrtPair {
        description: basis.describe(),
        basis,
        grid: Arc::clone(grid),
        functions,
        gram_chol: l,
        f_sqrt,
        k_sqrt,
        u,
        f_sqrt_pinv,
        k_sqrt_pinv,
    })
}

fn is_diagonal(m: &CMatrix) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| i == j || m[(i, j)] == C64::new(0.0, 0.0)))
}

fn diag_map(m: &CMatrix, f: impl Fn(f64) -> f64) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(m.nrows(), (0..m.nrows()).map(|i| C64::new(f(m[(i, i)].re), 0.0))))
}

impl DiscreteSqrtPair {
    pub fn dim(&self) -> usize {
        self.gram_chol.nrows()
    }

    /// `(⟨b_j, g⟩)_j` for basis functions `b_j`, or nodal weights times values.
    fn moments(&self, g: &GridFunction) -> Result<Vec<C64>, FormError> {
        if self.functions.is_empty() {
            return Ok(g.values.iter().zip(&g.grid.weights).map(|(v, w)| v * *w).collect());
        }
        self.functions.iter().map(|b| Ok(b.inner(g)?)).collect()
    }

    fn orthonormal(&self, moments: Vec<C64>) -> CMatrix {
        let n = moments.len();
        linalg::forward_solve(&self.gram_chol, &CMatrix::from_column_slice(n, 1, &moments))
    }

    /// Discrete `V_F^{-1/2} ℓ`: solves `⟨V_F^{1/2} f, a⟩ = ⟨f, ℓ⟩` on the span.
    pub fn vf_inv_sqrt(&self, ell: &GridFunction) -> Result<CMatrix, FormError> {
        Ok(&self.f_sqrt_pinv * self.orthonormal(self.moments(ell)?))
    }

    /// Discrete `V_K^{1/2} v`: solves `⟨V_K^{1/2} f, b⟩ = v_K[f, v]` on the span.
    pub fn vk_sqrt(&self, spec: &ImaginaryPartSpec, v: &GridFunction) -> Result<CMatrix, FormError> {
        let kv: Vec<C64> = if self.functions.is_empty() {
            match &spec.family {
                Family::Multiplication { weight } => v
                    .values
                    .iter()
                    .zip(&self.grid.nodes)
                    .zip(&self.grid.weights)
                    .map(|((val, &x), w)| val * weight.eval(x) * *w)
                    .collect(),
                Family::BoundedMatrix { matrix } => {
                    let mv = matrix * nalgebra::DVector::from_column_slice(&v.values);
                    mv.iter().zip(&self.grid.weights).map(|(a, w)| a * *w).collect()
                }
                _ => return Err(FormError::InvalidSpec("nodal basis needs a bounded family".into())),
            }
        } else {
            self.functions.iter().map(|b| krein_sesq(spec, b, v)).collect::<Result<_, _>>()?
        };
        Ok(&self.k_sqrt_pinv * self.orthonormal(kv))
    }

    /// `‖h‖` pairs `(‖V_K^{1/2}h‖, ‖V_F^{1/2}h‖)` for `h = Σ c_j b_j`.
    pub fn norms_of(&self, coeffs: &[C64]) -> (f64, f64) {
        let c = CMatrix::from_column_slice(coeffs.len(), 1, coeffs);
        let y = self.gram_chol.adjoint() * c;
        ((&self.k_sqrt * &y).norm(), (&self.f_sqrt * &y).norm())
    }

    pub fn u_singular_values(&self) -> Result<Vec<f64>, FormError> {
        Ok(linalg::singular_values(&self.u)?)
    }
}
