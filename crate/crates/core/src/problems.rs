//! Sensing matrices, sparse signals and assembled problem instances.

use alloc::vec;
use alloc::vec::Vec;
use core::cell::OnceCell;
use core::f64::consts::PI;

use rand::seq::index;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::linalg::{dot, norm2, Cholesky, DenseMatrix};
use crate::math::{cos, sqrt};
use crate::prox::PenaltySpec;
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Relative tolerance used when normalizing to unit spectral norm.
pub const SPECTRAL_TOL: f64 = 1e-12;
const SPECTRAL_MAX_ITER: usize = 200_000;

/// Sorted, duplicate-free set of indices into a vector of length `n`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter {
                name: "support",
                reason: "duplicate index",
            });
        }
        if indices.last().is_some_and(|&i| i >= n) {
            return Err(Error::InvalidParameter {
                name: "support",
                reason: "index out of range",
            });
        }
        Ok(Self { indices })
    }

    /// Indices of the nonzero entries of `x`.
    pub fn of(x: &[f64]) -> Self {
        Self {
            indices: x
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, _)| i)
                .collect(),
        }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// `min_x gamma*(||x||_1 - alpha*||x||_2) + 0.5*||A x - b||^2` plus, when
/// known, the vector that generated `b`.
///
/// The sensing matrix is immutable once wrapped so that its Lipschitz
/// constant can be computed once and cached.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    a: DenseMatrix,
    lipschitz: OnceCell<f64>,
    pub b: Vec<f64>,
    pub x_true: Option<Vec<f64>>,
    pub sigma: f64,
    pub penalty: PenaltySpec,
}

impl ProblemInstance {
    /// Wraps given data; checks shapes only.
    pub fn new(a: DenseMatrix, b: Vec<f64>, penalty: PenaltySpec) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                expected: a.rows(),
                got: b.len(),
            });
        }
        penalty.validate()?;
        Ok(Self {
            a,
            lipschitz: OnceCell::new(),
            b,
            x_true: None,
            sigma: 0.0,
            penalty,
        })
    }

    pub fn with_truth(mut self, x: Vec<f64>) -> Result<Self> {
        if x.len() != self.a.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.a.cols(),
                got: x.len(),
            });
        }
        self.x_true = Some(x);
        Ok(self)
    }

    /// Records a Lipschitz constant that is already known (e.g. 1 after
    /// spectral normalization), skipping the power iteration.
    pub fn with_lipschitz(self, l: f64) -> Self {
        let cell = OnceCell::new();
        let _ = cell.set(l);
        Self {
            lipschitz: cell,
            ..self
        }
    }

    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn into_parts(self) -> (DenseMatrix, Vec<f64>) {
        (self.a, self.b)
    }

    /// `sigma_max(A)^2`, computed on first use.
    pub fn lipschitz(&self) -> f64 {
        *self.lipschitz.get_or_init(|| lipschitz_constant(&self.a))
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn with_penalty(&self, penalty: PenaltySpec) -> Self {
        let mut p = self.clone();
        p.penalty = penalty;
        p
    }

    /// `0.5 * ||A x - b||^2`.
    pub fn data_fit(&self, x: &[f64]) -> f64 {
        let mut r = self.a.matvec(x);
        r.iter_mut().zip(&self.b).for_each(|(ri, bi)| *ri -= bi);
        0.5 * dot(&r, &r)
    }

    /// `E(x) = gamma*(||x||_1 - alpha*||x||_2) + 0.5*||A x - b||^2` with the
    /// instance's own penalty.
    pub fn objective(&self, x: &[f64]) -> f64 {
        crate::prox::eval_penalty(x, &self.penalty) + self.data_fit(x)
    }
}

fn check_dims(m: usize, n: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter {
            name: "shape",
            reason: "dimensions must be at least 1",
        });
    }
    Ok(())
}

/// `m x n` matrix of i.i.d. standard normal entries.
pub fn gen_gaussian(m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    check_dims(m, n)?;
    let mut rng = rng::from_seed(seed);
    let data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    DenseMatrix::from_row_major(m, n, data)
}

/// How [`normalize_columns`] scales each centered column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnScaling {
    /// `||a_j||_2 = 1`.
    UnitNorm,
    /// Sample standard deviation 1 (`||a_j||_2 = sqrt(m - 1)`).
    UnitVariance,
}

/// Centers every column to zero mean, then rescales it per `scaling`.
pub fn normalize_columns(a: &mut DenseMatrix, scaling: ColumnScaling) -> Result<()> {
    let (m, n) = a.shape();
    if m < 2 {
        return Err(Error::InvalidParameter {
            name: "rows",
            reason: "column centering needs at least two rows",
        });
    }
    for j in 0..n {
        let mean = (0..m).map(|i| a.get(i, j)).sum::<f64>() / m as f64;
        let ss: f64 = (0..m).map(|i| { let d = a.get(i, j) - mean; d * d }).sum();
        let target = match scaling {
            ColumnScaling::UnitNorm => 1.0,
            ColumnScaling::UnitVariance => sqrt((m - 1) as f64),
        };
        if ss == 0.0 {
            return Err(Error::InvalidParameter {
                name: "matrix",
                reason: "constant column cannot be normalized",
            });
        }
        let s = target / sqrt(ss);
        for i in 0..m {
            a.set(i, j, (a.get(i, j) - mean) * s);
        }
    }
    Ok(())
}

/// Entry `(k, j)` of the orthonormal `n x n` DCT-II matrix.
pub fn dct_entry(n: usize, k: usize, j: usize) -> f64 {
    let scale = if k == 0 {
        sqrt(1.0 / n as f64)
    } else {
        sqrt(2.0 / n as f64)
    };
    scale * cos(PI * (2 * j + 1) as f64 * k as f64 / (2 * n) as f64)
}

/// `m` distinct rows of the orthonormal DCT-II matrix, chosen uniformly at
/// random and kept in increasing order.
pub fn gen_partial_dct(m: usize, n: usize, seed: u64) -> Result<DenseMatrix> {
    check_dims(m, n)?;
    if m > n {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: "partial DCT needs m <= n",
        });
    }
    let mut rng = rng::from_seed(seed);
    let mut rows = index::sample(&mut rng, n, m).into_vec();
    rows.sort_unstable();
    let mut a = DenseMatrix::zeros(m, n);
    for (i, &k) in rows.iter().enumerate() {
        for (j, v) in a.row_mut(i).iter_mut().enumerate() {
            *v = dct_entry(n, k, j);
        }
    }
    Ok(a)
}

/// Over-sampled DCT: column `j` (1-based) is `cos(2*pi*w*j/F) / sqrt(n)` for a
/// random frequency vector `w` with i.i.d. uniform `[0, 1)` entries. Larger
/// `F` packs neighbouring columns closer together (higher coherence).
pub fn gen_oversampled_dct(m: usize, n: usize, f: f64, seed: u64) -> Result<DenseMatrix> {
    check_dims(m, n)?;
    if !(f > 0.0) || !f.is_finite() {
        return Err(Error::InvalidParameter {
            name: "F",
            reason: "refinement factor must be > 0",
        });
    }
    let mut rng = rng::from_seed(seed);
    let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
    let inv = 1.0 / sqrt(n as f64);
    let mut a = DenseMatrix::zeros(m, n);
    for (i, &wi) in w.iter().enumerate() {
        for (j, v) in a.row_mut(i).iter_mut().enumerate() {
            *v = inv * cos(2.0 * PI * wi * (j + 1) as f64 / f);
        }
    }
    Ok(a)
}

/// Largest singular value of `a` by power iteration on `A^T A`, stopped when
/// the estimate changes by less than `tol` relative.
pub fn power_iteration(a: &DenseMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let (m, n) = a.shape();
    if a.max_abs() == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    // Fixed pseudo-random start so the result is deterministic and the start
    // is not orthogonal to the top singular vector in structured cases.
    let mut rng = rng::from_seed(0x5eed_0f_5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let nv = norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut av = vec![0.0; m];
    let mut prev = 0.0;
    for it in 0..max_iter {
        a.matvec_into(&v, &mut av);
        let sigma = norm2(&av);
        if sigma == 0.0 {
            // start landed in the null space; restart from a new direction
            v.iter_mut().for_each(|x| *x = rng.sample(StandardNormal));
            let nv = norm2(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            continue;
        }
        if it > 0 && (sigma - prev).abs() <= tol * sigma {
            return Ok(sigma);
        }
        prev = sigma;
        a.matvec_t_into(&av, &mut v);
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
    }
    Err(Error::NoConvergence(max_iter))
}

/// Largest singular value to [`SPECTRAL_TOL`].
pub fn spectral_norm(a: &DenseMatrix) -> Result<f64> {
    power_iteration(a, SPECTRAL_TOL, SPECTRAL_MAX_ITER)
}

/// `A / sigma_max(A)`.
pub fn spectral_normalize(a: &DenseMatrix) -> Result<DenseMatrix> {
    let s = spectral_norm(a)?;
    Ok(a.scaled(1.0 / s))
}

/// Lipschitz constant of `x -> A^T (A x - b)`, i.e. `sigma_max(A)^2`
/// (zero for the zero matrix).
pub fn lipschitz_constant(a: &DenseMatrix) -> f64 {
    match spectral_norm(a) {
        Ok(s) => s * s,
        Err(Error::ZeroMatrix) => 0.0,
        // Slow convergence only happens with nearly tied top singular
        // values; fall back to the loose estimate.
        Err(_) => power_iteration(a, 1e-9, SPECTRAL_MAX_ITER)
            .map(|s| s * s)
            .unwrap_or(f64::NAN),
    }
}

/// `k`-sparse vector of length `n`: uniformly random support, standard
/// normal values.
pub fn gen_sparse_signal(n: usize, k: usize, seed: u64) -> Result<(Vec<f64>, SupportSet)> {
    if k > n {
        return Err(Error::InvalidParameter {
            name: "k",
            reason: "sparsity cannot exceed the signal length",
        });
    }
    let mut rng = rng::from_seed(seed);
    let mut support = index::sample(&mut rng, n, k).into_vec();
    support.sort_unstable();
    let mut x = vec![0.0; n];
    for &i in &support {
        let mut v: f64 = rng.sample(StandardNormal);
        // a draw of exactly zero would shrink the support
        while v == 0.0 {
            v = rng.sample(StandardNormal);
        }
        x[i] = v;
    }
    Ok((x, SupportSet { indices: support }))
}

/// `b = A x + sigma * e`, `e` i.i.d. standard normal drawn from `seed`.
pub fn make_instance(
    a: DenseMatrix,
    x: Vec<f64>,
    sigma: f64,
    penalty: PenaltySpec,
    seed: u64,
) -> Result<ProblemInstance> {
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: x.len(),
        });
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: "noise level must be finite and >= 0",
        });
    }
    penalty.validate()?;
    let mut b = a.matvec(&x);
    if sigma > 0.0 {
        let mut rng = rng::stream(seed, Stream::Noise);
        for bi in b.iter_mut() {
            *bi += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(ProblemInstance {
        a,
        lipschitz: OnceCell::new(),
        b,
        x_true: Some(x),
        sigma,
        penalty,
    })
}

/// Mean-square error of least squares restricted to the true support:
/// `sigma^2 * trace((A_S^T A_S)^{-1})`.
pub fn oracle_mse(a: &DenseMatrix, support: &SupportSet, sigma: f64) -> Result<f64> {
    if support.is_empty() {
        return Ok(0.0);
    }
    let sub = a.select_columns(support.indices());
    let gram = sub.gram_cols();
    let ch = Cholesky::factor(&gram).map_err(|_| Error::RankDeficient {
        rank: 0,
        expected: support.len(),
    })?;
    Ok(sigma * sigma * ch.trace_of_inverse())
}

/// Largest `|a_i^T a_j| / (||a_i|| ||a_j||)` over distinct columns.
pub fn coherence(a: &DenseMatrix) -> f64 {
    let t = a.transpose();
    let norms: Vec<f64> = (0..t.rows()).map(|j| norm2(t.row(j))).collect();
    let mut mu: f64 = 0.0;
    for i in 0..t.rows() {
        for j in 0..i {
            let d = norms[i] * norms[j];
            if d > 0.0 {
                mu = mu.max(dot(t.row(i), t.row(j)).abs() / d);
            }
        }
    }
    mu
}

/// Coherence between columns `i` and `j` only.
pub fn column_coherence(a: &DenseMatrix, i: usize, j: usize) -> f64 {
    let ci = a.column(i);
    let cj = a.column(j);
    dot(&ci, &cj).abs() / (norm2(&ci) * norm2(&cj))
}
