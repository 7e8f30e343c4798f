//! Dense Hermitian eigensolvers: Householder tridiagonalization followed by
//! implicit QL, plus Cholesky reduction of Hermitian pencils.

use nalgebra::DMatrix;

use crate::expr::C64;

pub type CMatrix = DMatrix<C64>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("QL iteration did not converge")]
    NoConvergence,
    #[error("empty matrix")]
    Empty,
}

fn check_square(a: &CMatrix) -> Result<usize, LinalgError> {
    if a.nrows() != a.ncols() {
        return Err(LinalgError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    if a.nrows() == 0 {
        return Err(LinalgError::Empty);
    }
    Ok(a.nrows())
}

/// `(A + A^H)/2`.
pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// `(A - A^H)/(2i)`.
pub fn imaginary_part(a: &CMatrix) -> CMatrix {
    (a - a.adjoint()) * C64::new(0.0, -0.5)
}

pub fn hermitian_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

/// Lower-triangular `L` with `G = L L^H`.
pub fn cholesky(g: &CMatrix) -> Result<CMatrix, LinalgError> {
    let n = check_square(g)?;
    let scale = (0..n).map(|i| g[(i, i)].re.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = g[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 1e-15 * scale) {
            return Err(LinalgError::NotPositiveDefinite { index: j, pivot: d });
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let mut s = g[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solve `L X = B` for lower-triangular `L`.
pub fn forward_solve(l: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    x
}

/// Solve `L^H X = B` for lower-triangular `L`.
pub fn backward_solve_adjoint(l: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut x = b.clone();
    for c in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)].conj();
        }
    }
    x
}

/// Unitary `Q` and real tridiagonal `(d, e)` with `A = Q T Q^H`;
/// `e[k]` couples rows `k` and `k+1`.
pub struct Tridiagonal {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub q: Option<CMatrix>,
}

pub fn tridiagonalize(a: &CMatrix, want_q: bool) -> Result<Tridiagonal, LinalgError> {
    let n = check_square(a)?;
    let mut a = hermitian_part(a);
    let mut q = want_q.then(|| CMatrix::identity(n, n));
    let zero = C64::new(0.0, 0.0);
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    for k in 0..n.saturating_sub(2) {
        let m = k + 1;
        let norm: f64 = (m..n).map(|i| a[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a[(m, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        for i in 0..n {
            v[i] = zero;
        }
        for i in m..n {
            v[i] = a[(i, k)];
        }
        v[m] -= alpha;
        let vv: f64 = (m..n).map(|i| v[i].norm_sqr()).sum();
        if vv == 0.0 {
            continue;
        }
        let tau = 2.0 / vv;
        // p = tau A v (only rows/cols >= k matter; column k handled the same way)
        for i in k..n {
            let mut s = zero;
            for j in m..n {
                s += a[(i, j)] * v[j];
            }
            p[i] = s * tau;
        }
        let vp: C64 = (m..n).map(|i| v[i].conj() * p[i]).sum();
        let kk = vp * (0.5 * tau);
        for i in k..n {
            p[i] -= kk * v[i];
        }
        // A <- A - v p^H - p v^H on the trailing block (rows/cols >= k)
        for j in k..n {
            let pj = p[j].conj();
            let vj = v[j].conj();
            for i in k..n {
                let upd = v[i] * pj + p[i] * vj;
                if upd != zero {
                    a[(i, j)] -= upd;
                }
            }
        }
        if let Some(q) = q.as_mut() {
            for i in 0..n {
                let mut s = zero;
                for j in m..n {
                    s += q[(i, j)] * v[j];
                }
                let s = s * tau;
                for j in m..n {
                    q[(i, j)] -= s * v[j].conj();
                }
            }
        }
    }
    let d: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut e = vec![0.0; n.saturating_sub(1)];
    let mut phase = C64::new(1.0, 0.0);
    let mut phases = vec![phase; n];
    for k in 0..n.saturating_sub(1) {
        let s = a[(k + 1, k)];
        e[k] = s.norm();
        if e[k] > 0.0 {
            phase *= s / e[k];
        }
        phases[k + 1] = phase;
    }
    if let Some(q) = q.as_mut() {
        for (j, ph) in phases.iter().enumerate() {
            for i in 0..n {
                q[(i, j)] *= *ph;
            }
        }
    }
    Ok(Tridiagonal { d, e, q })
}

/// Implicit QL on a real symmetric tridiagonal matrix. Eigenvalues are returned
/// unsorted in `d`; `z` (row-major n×n, optional) accumulates the rotations.
fn tql(d: &mut [f64], e_in: &[f64], mut z: Option<&mut Vec<f64>>) -> Result<(), LinalgError> {
    let n = d.len();
    if n <= 1 {
        return Ok(());
    }
    if d.iter().chain(e_in).any(|x| !x.is_finite()) {
        return Err(LinalgError::NoConvergence);
    }
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(e_in);
    let anorm = (0..n).map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 }).fold(0.0, f64::max);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= f64::EPSILON * anorm {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(LinalgError::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..n {
                        let zk1 = z[k * n + i + 1];
                        let zk = z[k * n + i];
                        z[k * n + i + 1] = s * zk + c * zk1;
                        z[k * n + i] = c * zk - s * zk1;
                    }
                }
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues of a real symmetric tridiagonal matrix, ascending.
pub fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let mut d = d.to_vec();
    tql(&mut d, e, None)?;
    d.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(d)
}

/// Eigenvector of a symmetric tridiagonal matrix for a known eigenvalue,
/// by inverse iteration on a pivoted LU factorization.
fn tridiagonal_eigenvector(diag: &[f64], off: &[f64], lambda: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 1 {
        return vec![1.0];
    }
    let scale = diag.iter().chain(off).map(|v| v.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let tiny = f64::EPSILON * scale;
    let shift = lambda - 1e-12 * scale;
    let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let mut dl = off.to_vec();
    let mut du = off.to_vec();
    let mut du2 = vec![0.0; n];
    let mut piv = vec![false; n];
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            dl[i] = fact;
            d[i + 1] -= fact * du[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = fact;
            let temp = du[i];
            du[i] = d[i + 1];
            d[i + 1] = temp - fact * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -fact;
            }
            piv[i] = true;
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    let mut x = vec![1.0f64; n];
    for _ in 0..3 {
        for i in 0..n - 1 {
            if piv[i] {
                let t = x[i];
                x[i] = x[i + 1];
                x[i + 1] = t - dl[i] * x[i];
            } else {
                x[i + 1] -= dl[i] * x[i];
            }
        }
        x[n - 1] /= d[n - 1];
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
    }
    x
}

/// Eigen-decomposition of a Hermitian matrix: ascending eigenvalues and
/// orthonormal eigenvectors as columns.
pub fn hermitian_eigen(a: &CMatrix) -> Result<(Vec<f64>, CMatrix), LinalgError> {
    let n = check_square(a)?;
    let t = tridiagonalize(a, true)?;
    let mut d = t.d.clone();
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql(&mut d, &t.e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap());
    let q = t.q.unwrap();
    let zero = C64::new(0.0, 0.0);
    let mut vecs = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        for i in 0..n {
            let mut s = zero;
            for k in 0..n {
                s += q[(i, k)] * z[k * n + src];
            }
            vecs[(i, col)] = s;
        }
    }
    Ok((order.iter().map(|&i| d[i]).collect(), vecs))
}

pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    let t = tridiagonalize(a, false)?;
    tridiagonal_eigenvalues(&t.d, &t.e)
}

/// Smallest eigenvalue and a unit eigenvector.
pub fn hermitian_min_eig(a: &CMatrix) -> Result<(f64, Vec<C64>), LinalgError> {
    let n = check_square(a)?;
    let t = tridiagonalize(a, true)?;
    let vals = tridiagonal_eigenvalues(&t.d, &t.e)?;
    let lambda = vals[0];
    let y = tridiagonal_eigenvector(&t.d, &t.e, lambda);
    let q = t.q.unwrap();
    let x: Vec<C64> = (0..n).map(|i| (0..n).map(|k| q[(i, k)] * y[k]).sum()).collect();
    Ok((lambda, x))
}

#[derive(Debug, Clone)]
pub struct PencilMin {
    pub value: f64,
    pub vector: Vec<C64>,
    /// `‖Hx − λGx‖ / (‖H‖ ‖x‖)`
    pub relative_residual: f64,
}

/// `C = L^{-1} H L^{-H}` for `G = L L^H`.
pub fn reduce_pencil(h: &CMatrix, l: &CMatrix) -> CMatrix {
    let x = forward_solve(l, h);
    let c = forward_solve(l, &x.adjoint());
    hermitian_part(&c)
}

/// Minimal `λ` with `Hx = λGx`, by Cholesky reduction and a Hermitian eigensolve.
pub fn pencil_min_eig(h: &CMatrix, g: &CMatrix) -> Result<PencilMin, LinalgError> {
    let n = check_square(h)?;
    if g.nrows() != n {
        return Err(LinalgError::DimensionMismatch(n, g.nrows()));
    }
    let l = cholesky(g)?;
    let c = reduce_pencil(h, &l);
    let (value, y) = hermitian_min_eig(&c)?;
    let x = backward_solve_adjoint(&l, &CMatrix::from_column_slice(n, 1, &y));
    let hx = h * &x;
    let gx = g * &x;
    let res = (&hx - &gx * C64::new(value, 0.0)).norm();
    let denom = h.norm().max(f64::MIN_POSITIVE) * x.norm();
    Ok(PencilMin { value, vector: x.column(0).iter().copied().collect(), relative_residual: res / denom })
}

/// All eigenvalues of the pencil `(H, G)`, ascending.
pub fn pencil_eigenvalues(h: &CMatrix, g: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = check_square(h)?;
    if g.nrows() != n {
        return Err(LinalgError::DimensionMismatch(n, g.nrows()));
    }
    let l = cholesky(g)?;
    hermitian_eigenvalues(&reduce_pencil(h, &l))
}

/// `f(A)` for Hermitian `A` through its eigen-decomposition.
pub fn hermitian_function(a: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix, LinalgError> {
    let (vals, vecs) = hermitian_eigen(a)?;
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (j, &v) in vals.iter().enumerate() {
        let fv = f(v);
        for i in 0..n {
            scaled[(i, j)] *= fv;
        }
    }
    Ok(scaled * vecs.adjoint())
}

/// Square root of a positive semidefinite Hermitian matrix (negative round-off clipped).
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix, LinalgError> {
    hermitian_function(a, |v| v.max(0.0).sqrt())
}

/// Moore–Penrose pseudo-inverse of a Hermitian matrix with relative cutoff.
pub fn hermitian_pinv(a: &CMatrix, rel_cutoff: f64) -> Result<CMatrix, LinalgError> {
    let vals = hermitian_eigenvalues(a)?;
    let top = vals.iter().map(|v| v.abs()).fold(0.0, f64::max);
    hermitian_function(a, |v| if v.abs() > rel_cutoff * top { 1.0 / v } else { 0.0 })
}

/// Singular values of a general square matrix, ascending.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>, LinalgError> {
    let ata = a.adjoint() * a;
    Ok(hermitian_eigenvalues(&ata)?.into_iter().map(|v| v.max(0.0).sqrt()).collect())
}

/// Solve a small dense complex system by Gaussian elimination with partial pivoting.
pub fn solve_dense(a: &CMatrix, b: &[C64]) -> Option<Vec<C64>> {
    let n = a.nrows();
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[(i, k)].norm().partial_cmp(&m[(j, k)].norm()).unwrap())?;
        if m[(p, k)].norm() == 0.0 {
            return None;
        }
        m.swap_rows(k, p);
        x.swap(k, p);
        for i in k + 1..n {
            let f = m[(i, k)] / m[(k, k)];
            for j in k..n {
                let mkj = m[(k, j)];
                m[(i, j)] -= f * mkj;
            }
            let xk = x[k];
            x[i] -= f * xk;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in i + 1..n {
            s -= m[(i, j)] * x[j];
        }
        x[i] = s / m[(i, i)];
    }
    Some(x)
}
