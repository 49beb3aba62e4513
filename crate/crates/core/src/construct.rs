//! Measurement vectors that make a chosen sparse `x*` a stationary point.
//!
//! `x*` is stationary for weights `(alpha, gamma)` when some `w` in the
//! subdifferential `Sign(x*)` of `||.||_1` satisfies
//! `w - alpha*x*/||x*|| = A^T y`. Alternating projections (POCS) between
//! `Sign(x*)` and the affine set `alpha*x*/||x*|| + Range(A^T)` look for such a
//! `w`; then `b = gamma*y + A x*`.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dist2, dot, norm2, DenseMatrix};
use crate::{Error, Result};

/// Relative norm below which a Gram-Schmidt remainder counts as dependent.
pub const RANK_RTOL: f64 = 1e-10;
/// Default POCS step tolerance.
pub const POCS_TOL: f64 = 1e-10;
/// Largest range residual accepted as a converged construction.
pub const RANGE_TOL: f64 = 1e-8;

/// `A^T = Q R` with orthonormal columns `Q` (stored as rows of `q`) and an
/// upper-triangular `R`.
#[derive(Debug, Clone)]
struct RowQr {
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
}

fn qr_rows(a: &DenseMatrix) -> Result<RowQr> {
    let m = a.rows();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut r = vec![vec![0.0; m]; m];
    for i in 0..m {
        let mut v = a.row(i).to_vec();
        let original = norm2(&v);
        // Two passes keep the basis orthonormal to rounding.
        for _ in 0..2 {
            for (j, qj) in q.iter().enumerate() {
                let c = dot(qj, &v);
                r[j][i] += c;
                v.iter_mut().zip(qj).for_each(|(vk, qk)| *vk -= c * qk);
            }
        }
        let nv = norm2(&v);
        if !(nv > RANK_RTOL * original) || original == 0.0 {
            let rank = rank_of(a);
            return Err(Error::RankDeficient { rank, expected: m });
        }
        v.iter_mut().for_each(|x| *x /= nv);
        r[i][i] = nv;
        q.push(v);
    }
    Ok(RowQr { q, r })
}

/// Numerical rank by Gram-Schmidt with skipping.
fn rank_of(a: &DenseMatrix) -> usize {
    let mut q: Vec<Vec<f64>> = Vec::new();
    for i in 0..a.rows() {
        let mut v = a.row(i).to_vec();
        let original = norm2(&v);
        for _ in 0..2 {
            for qj in &q {
                let c = dot(qj, &v);
                v.iter_mut().zip(qj).for_each(|(vk, qk)| *vk -= c * qk);
            }
        }
        let nv = norm2(&v);
        if original > 0.0 && nv > RANK_RTOL * original {
            v.iter_mut().for_each(|x| *x /= nv);
            q.push(v);
        }
    }
    q.len()
}

/// `N x M` matrix `U` whose orthonormal columns span `Range(A^T)`.
///
/// Requires full row rank; otherwise returns [`Error::RankDeficient`].
pub fn orthonormal_range_basis(a: &DenseMatrix) -> Result<DenseMatrix> {
    let qr = qr_rows(a)?;
    let m = a.rows();
    let n = a.cols();
    let mut u = DenseMatrix::zeros(n, m);
    for (j, qj) in qr.q.iter().enumerate() {
        for (k, &v) in qj.iter().enumerate() {
            u.set(k, j, v);
        }
    }
    Ok(u)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PocsResult {
    pub w: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    /// `||(I - U U^T)(w - alpha*x*/||x*||)||`.
    pub range_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionResult {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
    pub converged: bool,
    pub pocs_iterations: usize,
}

/// Projection onto `Sign(x*)`: `sign(x*_i)` on the support, `[-1, 1]` off it.
fn project_sign(x_star: &[f64], v: &mut [f64]) {
    for (vi, &xi) in v.iter_mut().zip(x_star) {
        *vi = if xi != 0.0 {
            xi.signum()
        } else {
            vi.clamp(-1.0, 1.0)
        };
    }
}

/// `w <- P_Sign(U U^T (w - c) + c)` from `w0 = sign(x*)`, with `c = alpha*x*/||x*||`.
///
/// Stops once `||w^{k+1} - w^k|| < tol` or after `max_iter` steps. The run
/// counts as converged only if the range residual is also below [`RANGE_TOL`].
pub fn pocs_sign_vector(
    u: &DenseMatrix,
    x_star: &[f64],
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PocsResult> {
    let n = x_star.len();
    if u.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: u.rows(),
            got: n,
        });
    }
    let nx = norm2(x_star);
    if nx == 0.0 {
        return Err(Error::ZeroInitialPoint);
    }
    if !nx.is_finite() {
        return Err(Error::NonFinite("x_star"));
    }
    let c: Vec<f64> = x_star.iter().map(|v| alpha * v / nx).collect();
    let mut w: Vec<f64> = x_star.iter().map(|v| if *v != 0.0 { v.signum() } else { 0.0 }).collect();
    let mut next = vec![0.0; n];
    let mut coef = vec![0.0; u.cols()];
    let mut iterations = 0;
    let mut small_step = false;
    while iterations < max_iter {
        for i in 0..n {
            next[i] = w[i] - c[i];
        }
        u.matvec_t_into(&next, &mut coef);
        u.matvec_into(&coef, &mut next);
        next.iter_mut().zip(&c).for_each(|(v, ci)| *v += ci);
        project_sign(x_star, &mut next);
        iterations += 1;
        let step = dist2(&next, &w);
        core::mem::swap(&mut w, &mut next);
        if step < tol {
            small_step = true;
            break;
        }
    }
    let range_residual = range_residual(u, &w, &c);
    Ok(PocsResult {
        converged: small_step && range_residual <= RANGE_TOL,
        w,
        iterations,
        range_residual,
    })
}

fn range_residual(u: &DenseMatrix, w: &[f64], c: &[f64]) -> f64 {
    let d: Vec<f64> = w.iter().zip(c).map(|(a, b)| a - b).collect();
    let proj = u.matvec(&u.matvec_t(&d));
    dist2(&d, &proj)
}

/// `b = gamma*y + A x*` with `y` the minimum-norm solution of
/// `A^T y = w - alpha*x*/||x*||` (least squares if inconsistent).
pub fn construct_b(
    a: &DenseMatrix,
    x_star: &[f64],
    alpha: f64,
    gamma: f64,
    w: &[f64],
) -> Result<Vec<f64>> {
    let n = a.cols();
    if x_star.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if x_star.len() != n { x_star.len() } else { w.len() },
        });
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: "must be finite and > 0",
        });
    }
    let nx = norm2(x_star);
    if nx == 0.0 {
        return Err(Error::ZeroInitialPoint);
    }
    let qr = qr_rows(a)?;
    let m = a.rows();
    let d: Vec<f64> = w.iter().zip(x_star).map(|(wi, xi)| wi - alpha * xi / nx).collect();
    // A^T y = Q R y = d  =>  R y = Q^T d.
    let mut y: Vec<f64> = qr.q.iter().map(|qj| dot(qj, &d)).collect();
    for i in (0..m).rev() {
        let mut s = y[i];
        for j in i + 1..m {
            s -= qr.r[i][j] * y[j];
        }
        y[i] = s / qr.r[i][i];
    }
    let mut b = a.matvec(x_star);
    b.iter_mut().zip(&y).for_each(|(bi, yi)| *bi += gamma * yi);
    Ok(b)
}

/// Basis, POCS and `b` in one call, with the default tolerance and a `10N` cap.
pub fn construct_stationary(
    a: &DenseMatrix,
    x_star: &[f64],
    alpha: f64,
    gamma: f64,
) -> Result<ConstructionResult> {
    let u = orthonormal_range_basis(a)?;
    let pocs = pocs_sign_vector(&u, x_star, alpha, POCS_TOL, 10 * x_star.len())?;
    let b = construct_b(a, x_star, alpha, gamma, &pocs.w)?;
    Ok(ConstructionResult {
        w: pocs.w,
        b,
        converged: pocs.converged,
        pocs_iterations: pocs.iterations,
    })
}
