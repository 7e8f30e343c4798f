//! Composite Gauss–Legendre grids on `(0, b)` and truncated half-lines,
//! complex grid functions, panel-spectral differentiation and boundary traces.

use std::sync::Arc;

use crate::expr::{Expr, C64};

/// Nodes per Gauss–Legendre panel.
pub const PANEL_ORDER: usize = 8;

/// Default half-line truncation.
pub const DEFAULT_HALFLINE_R: f64 = 40.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("domain length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("node count {0} too small (need at least {PANEL_ORDER} and a multiple of {PANEL_ORDER})")]
    TooFewNodes(usize),
    #[error("offset {offset} must be non-negative and smaller than the first panel width {width}")]
    BadOffset { offset: f64, width: f64 },
    #[error("grid functions live on different grids")]
    GridMismatch,
    #[error("value count {got} does not match node count {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("the half-line has no right endpoint trace")]
    NoRightEndpoint,
    #[error("function does not decay at the truncation point: |f(R)| = {tail:e}, max |f| = {max:e}")]
    NoDecay { tail: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    Interval { b: f64 },
    Halfline { r: f64 },
}

impl DomainKind {
    pub fn length(&self) -> f64 {
        match *self {
            DomainKind::Interval { b } => b,
            DomainKind::Halfline { r } => r,
        }
    }

    pub fn is_halfline(&self) -> bool {
        matches!(self, DomainKind::Halfline { .. })
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for k in 0..m {
        let mut t = -(std::f64::consts::PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * t * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 0 { 1.0 } else { p1 };
            dp = m as f64 * (t * p - p0) / (t * t - 1.0);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        nodes[k] = t;
        weights[k] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
    (nodes, weights)
}

/// Lagrange interpolation helpers on a fixed reference node set.
#[derive(Debug, Clone)]
pub struct LagrangeBasis {
    pub nodes: Vec<f64>,
    bary: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: Vec<f64>) -> Self {
        let bary = (0..nodes.len())
            .map(|j| {
                let p: f64 = (0..nodes.len()).filter(|&k| k != j).map(|k| nodes[j] - nodes[k]).product();
                1.0 / p
            })
            .collect();
        LagrangeBasis { nodes, bary }
    }

    /// Values `l_k(t)` of all basis polynomials.
    pub fn values(&self, t: f64) -> Vec<f64> {
        let m = self.nodes.len();
        if let Some(j) = self.nodes.iter().position(|&s| s == t) {
            let mut out = vec![0.0; m];
            out[j] = 1.0;
            return out;
        }
        let terms: Vec<f64> = (0..m).map(|k| self.bary[k] / (t - self.nodes[k])).collect();
        let s: f64 = terms.iter().sum();
        terms.iter().map(|v| v / s).collect()
    }

    /// Derivatives `l_k'(t)`.
    pub fn derivatives(&self, t: f64) -> Vec<f64> {
        let m = self.nodes.len();
        (0..m)
            .map(|k| {
                let mut total = 0.0;
                for i in 0..m {
                    if i == k {
                        continue;
                    }
                    let mut prod = self.bary[k];
                    for j in 0..m {
                        if j != k && j != i {
                            prod *= t - self.nodes[j];
                        }
                    }
                    total += prod;
                }
                total
            })
            .collect()
    }

    /// Differentiation matrix `D[j][k] = l_k'(t_j)`.
    pub fn diff_matrix(&self) -> Vec<Vec<f64>> {
        self.nodes.iter().map(|&t| self.derivatives(t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
}

/// Composite Gauss–Legendre rule. Construction goes through [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub kind: DomainKind,
    pub offset: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub panels: Vec<Panel>,
}

/// Grid recipe: uniform panels plus optional breakpoints and dyadic grading.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub kind: DomainKind,
    pub n: usize,
    pub offset: f64,
    pub breaks: Vec<f64>,
    pub grade_left: usize,
}

impl GridSpec {
    pub fn new(kind: DomainKind, n: usize, offset: f64) -> Self {
        GridSpec { kind, n, offset, breaks: Vec::new(), grade_left: 0 }
    }

    pub fn with_breaks(mut self, breaks: &[f64]) -> Self {
        self.breaks.extend_from_slice(breaks);
        self
    }

    /// Refine the panel touching the left end into `levels` dyadic panels.
    pub fn graded_left(mut self, levels: usize) -> Self {
        self.grade_left = levels;
        self
    }

    pub fn build(&self) -> Result<Arc<Grid>, GridError> {
        let len = self.kind.length();
        if !(len > 0.0) || !len.is_finite() {
            return Err(GridError::NonPositiveLength(len));
        }
        if self.n < PANEL_ORDER || self.n % PANEL_ORDER != 0 {
            return Err(GridError::TooFewNodes(self.n));
        }
        let count = self.n / PANEL_ORDER;
        let width = (len - self.offset) / count as f64;
        if !(self.offset >= 0.0) || self.offset >= len / count as f64 {
            return Err(GridError::BadOffset { offset: self.offset, width: len / count as f64 });
        }
        let a0 = self.offset;
        let mut edges: Vec<f64> = (0..=count).map(|k| a0 + width * k as f64).collect();
        edges[count] = len;
        if self.grade_left > 0 {
            let first = edges[1];
            let mut extra: Vec<f64> =
                (1..=self.grade_left).map(|k| a0 + (first - a0) / 2f64.powi(k as i32)).collect();
            edges.append(&mut extra);
        }
        for &br in &self.breaks {
            if br > a0 && br < len {
                edges.push(br);
            }
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * len);
        let panels: Vec<Panel> = edges.windows(2).map(|w| Panel { a: w[0], b: w[1] }).collect();
        Ok(Arc::new(Grid::from_panels(self.kind, self.offset, panels)))
    }
}

/// Convenience constructor: uniform panels, `n` nodes.
pub fn make_grid(kind: DomainKind, n: usize, offset: f64) -> Result<Arc<Grid>, GridError> {
    GridSpec::new(kind, n, offset).build()
}

thread_local! {
    static GL8: (Vec<f64>, Vec<f64>) = gauss_legendre(PANEL_ORDER);
    static BASIS8: (LagrangeBasis, Vec<Vec<f64>>) = {
        let b = LagrangeBasis::new(gauss_legendre(PANEL_ORDER).0);
        let d = b.diff_matrix();
        (b, d)
    };
}

impl Grid {
    fn from_panels(kind: DomainKind, offset: f64, panels: Vec<Panel>) -> Self {
        let (t, w) = GL8.with(|g| g.clone());
        let mut nodes = Vec::with_capacity(panels.len() * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels.len() * PANEL_ORDER);
        for p in &panels {
            let half = 0.5 * (p.b - p.a);
            let mid = 0.5 * (p.a + p.b);
            for k in 0..PANEL_ORDER {
                nodes.push(mid + half * t[k]);
                weights.push(half * w[k]);
            }
        }
        Grid { kind, offset, nodes, weights, panels }
    }

    pub fn n(&self) -> usize {
        self.nodes.len()
    }

    pub fn left(&self) -> f64 {
        self.panels[0].a
    }

    pub fn right(&self) -> f64 {
        self.panels[self.panels.len() - 1].b
    }

    pub fn measure(&self) -> f64 {
        self.right() - self.left()
    }

    pub fn sample(self: &Arc<Self>, e: &Expr) -> GridFunction {
        GridFunction {
            grid: Arc::clone(self),
            values: self.nodes.iter().map(|&x| e.eval(x)).collect(),
            source: Some(e.clone()),
            traces: None,
        }
    }

    pub fn from_values(self: &Arc<Self>, values: Vec<C64>) -> Result<GridFunction, GridError> {
        if values.len() != self.n() {
            return Err(GridError::LengthMismatch { got: values.len(), expected: self.n() });
        }
        Ok(GridFunction { grid: Arc::clone(self), values, source: None, traces: None })
    }

    /// `Σ w conj(f) g`.
    pub fn dot(&self, f: &[C64], g: &[C64]) -> C64 {
        self.weights.iter().zip(f.iter().zip(g)).map(|(w, (a, b))| a.conj() * b * *w).sum()
    }

    pub fn integrate_real(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn integrate_expr(&self, e: &Expr) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| e.eval(x) * w).sum()
    }

    /// Panel-local spectral derivative of nodal values.
    pub fn derivative_values(&self, values: &[C64]) -> Vec<C64> {
        BASIS8.with(|(_, d)| {
            let mut out = vec![C64::new(0.0, 0.0); values.len()];
            for (p, panel) in self.panels.iter().enumerate() {
                let scale = 2.0 / (panel.b - panel.a);
                let v = &values[p * PANEL_ORDER..(p + 1) * PANEL_ORDER];
                for j in 0..PANEL_ORDER {
                    let s: C64 = (0..PANEL_ORDER).map(|k| v[k] * d[j][k]).sum();
                    out[p * PANEL_ORDER + j] = s * scale;
                }
            }
            out
        })
    }

    /// `F(x_i) = ∫_{left}^{x_i} f`, exact for piecewise polynomials of degree < 8.
    pub fn cumulative(&self, values: &[C64]) -> Vec<C64> {
        let weights = cumulative_weights();
        let mut out = Vec::with_capacity(values.len());
        let mut base = C64::new(0.0, 0.0);
        for (p, panel) in self.panels.iter().enumerate() {
            let half = 0.5 * (panel.b - panel.a);
            let v = &values[p * PANEL_ORDER..(p + 1) * PANEL_ORDER];
            for row in weights.iter() {
                let s: C64 = row.iter().zip(v).map(|(w, f)| f * *w).sum();
                out.push(base + s * half);
            }
            let total: C64 = self.weights[p * PANEL_ORDER..(p + 1) * PANEL_ORDER]
                .iter()
                .zip(v)
                .map(|(w, f)| f * *w)
                .sum();
            base += total;
        }
        out
    }

    /// Value and derivative at `x` of the panel interpolant of `values`.
    pub fn interpolate(&self, values: &[C64], x: f64) -> (C64, C64) {
        let p = self
            .panels
            .iter()
            .position(|pn| x <= pn.b)
            .unwrap_or(self.panels.len() - 1);
        let panel = self.panels[p];
        let t = (2.0 * x - panel.a - panel.b) / (panel.b - panel.a);
        BASIS8.with(|(basis, _)| {
            let l = basis.values(t);
            let dl = basis.derivatives(t);
            let v = &values[p * PANEL_ORDER..(p + 1) * PANEL_ORDER];
            let f: C64 = l.iter().zip(v).map(|(a, b)| b * *a).sum();
            let df: C64 = dl.iter().zip(v).map(|(a, b)| b * *a).sum();
            (f, df * (2.0 / (panel.b - panel.a)))
        })
    }
}

fn cumulative_weights() -> Vec<Vec<f64>> {
    BASIS8.with(|(basis, _)| {
        let (t, w) = GL8.with(|g| g.clone());
        basis
            .nodes
            .iter()
            .map(|&upper| {
                // ∫_{-1}^{upper} l_k, mapped Gauss rule is exact for degree 7
                let half = 0.5 * (upper + 1.0);
                let mut row = vec![0.0; PANEL_ORDER];
                for q in 0..PANEL_ORDER {
                    let s = -1.0 + half * (t[q] + 1.0);
                    let l = basis.values(s);
                    for k in 0..PANEL_ORDER {
                        row[k] += half * w[q] * l[k];
                    }
                }
                row
            })
            .collect()
    })
}

/// Boundary values `f(0), f'(0)` and, on intervals, `f(b), f'(b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Traces {
    pub f0: C64,
    pub df0: C64,
    pub fb: Option<C64>,
    pub dfb: Option<C64>,
}

impl Traces {
    pub fn right(&self) -> Result<(C64, C64), GridError> {
        match (self.fb, self.dfb) {
            (Some(f), Some(df)) => Ok((f, df)),
            _ => Err(GridError::NoRightEndpoint),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Arc<Grid>,
    pub values: Vec<C64>,
    /// Closed form, when the samples came from one.
    pub source: Option<Expr>,
    /// Exact traces supplied by a constructor; take precedence over everything else.
    pub traces: Option<Traces>,
}

impl GridFunction {
    pub fn with_traces(mut self, traces: Traces) -> Self {
        self.traces = Some(traces);
        self
    }

    fn check_same(&self, other: &GridFunction) -> Result<(), GridError> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(GridError::GridMismatch)
        }
    }

    /// `⟨f, g⟩`, antilinear in `f`.
    pub fn inner(&self, g: &GridFunction) -> Result<C64, GridError> {
        self.check_same(g)?;
        Ok(self.grid.dot(&self.values, &g.values))
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.dot(&self.values, &self.values).re
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Derivative; analytic when a closed form is known.
    pub fn differentiate(&self) -> GridFunction {
        match &self.source {
            Some(e) => self.grid.sample(&e.derivative()),
            None => GridFunction {
                grid: Arc::clone(&self.grid),
                values: self.grid.derivative_values(&self.values),
                source: None,
                traces: None,
            },
        }
    }

    /// Boundary traces: supplied traces, then closed form, then panel extrapolation.
    pub fn boundary_data(&self) -> Traces {
        if let Some(t) = self.traces {
            return t;
        }
        let halfline = self.grid.kind.is_halfline();
        let b = self.grid.kind.length();
        if let Some(e) = &self.source {
            let d = e.derivative();
            return Traces {
                f0: e.eval(0.0),
                df0: d.eval(0.0),
                fb: (!halfline).then(|| e.eval(b)),
                dfb: (!halfline).then(|| d.eval(b)),
            };
        }
        let (f0, df0) = self.grid.interpolate(&self.values, 0.0);
        let right = (!halfline).then(|| self.grid.interpolate(&self.values, b));
        Traces { f0, df0, fb: right.map(|r| r.0), dfb: right.map(|r| r.1) }
    }

    /// `|f(R)| < 1e-10 max|f|` on half-line grids; trivially true on intervals.
    pub fn decay_certificate(&self) -> Result<(), GridError> {
        if !self.grid.kind.is_halfline() {
            return Ok(());
        }
        let r = self.grid.kind.length();
        let tail = match &self.source {
            Some(e) => e.eval(r).norm(),
            None => self.grid.interpolate(&self.values, r).0.norm(),
        };
        let max = self.max_abs().max(tail);
        if tail <= 1e-10 * max || max == 0.0 {
            Ok(())
        } else {
            Err(GridError::NoDecay { tail, max })
        }
    }
}

/// Local power-law exponent `s` of `|g(x)| ~ x^s` as `x → 0+`.
pub fn power_exponent_at_zero(g: impl Fn(f64) -> f64) -> Option<f64> {
    let xs = [1e-6, 1e-8, 1e-10];
    let vals: Vec<f64> = xs.iter().map(|&x| g(x).abs()).collect();
    if vals.iter().all(|&v| v == 0.0) {
        return None;
    }
    if vals.iter().any(|&v| v == 0.0 || !v.is_finite()) {
        return Some(f64::NEG_INFINITY);
    }
    let s1 = (vals[0] / vals[1]).ln() / (xs[0] / xs[1]).ln();
    let s2 = (vals[1] / vals[2]).ln() / (xs[1] / xs[2]).ln();
    Some(s1.min(s2))
}

/// Whether `∫_0 |g|` diverges at the left endpoint, judged from the local power law.
pub fn diverges_at_zero(g: impl Fn(f64) -> f64) -> bool {
    match power_exponent_at_zero(g) {
        None => false,
        Some(s) => s <= -1.0 + 1e-6,
    }
}
