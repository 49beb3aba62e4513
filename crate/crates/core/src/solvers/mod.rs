//! Solvers for
//!
//! ```text
//! min_x  gamma * (||x||_1 - alpha*||x||_2) + 0.5 * ||A x - b||^2
//! ```
//!
//! | method                     | one iteration                                          | A/A^T products |
//! |----------------------------|--------------------------------------------------------|----------------|
//! | [`Method::Fbs`]            | `x <- prox(x - lambda*grad l(x))`                      | 2              |
//! | [`Method::FbsAccelerated`] | extrapolated and plain prox steps, keep the better one | 4              |
//! | [`Method::Admm`]           | prox step, ridge solve, dual update                    | 2 (when M < N) |
//! | [`Method::Dca`]            | linearize `-alpha*||x||_2`, solve an L1 problem        | inner solver's |
//!
//! All methods stop when `||x^{k+1} - x^k|| / ||x^k|| < tol` or after
//! `max_iter_factor * N` iterations. Weights `alpha` and `gamma` may follow a
//! [`ScheduleSpec`] evaluated once per (outer) iteration `k = 1, 2, ...`.

mod accelerated;
mod admm;
mod dca;
mod fbs;
mod schedule;
mod stationarity;
mod trace;

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{axpy, norm1, norm2, rel_err, DenseMatrix};
use crate::problems::ProblemInstance;
use crate::prox::{prox_kernel, soft_shrink_into};
use crate::{Error, Result};

pub use accelerated::{fbs_accelerated, FbsAccelerated};
pub use admm::{admm_solve, admm_solve_from, l1_init, Admm, AdmmState};
pub use dca::dca_solve;
pub use fbs::{fbs_solve, Fbs};
pub use schedule::{schedule_value, ScheduleSpec};
pub use stationarity::{check_stationarity, eq12_residual, Lemma3Flags, StationarityReport};
pub use trace::{IterRecord, SolverTrace, Warning};

/// Default relative-step tolerance.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default iteration cap, as a multiple of the signal length `N`.
pub const DEFAULT_MAX_ITER_FACTOR: usize = 10;
/// Default FBS stepsize as a fraction of `1/L`.
pub const DEFAULT_STEP_FRACTION: f64 = 0.99;
/// Relative slack on `lambda * L < 1`, matching the accuracy of the spectral
/// normalization (so `lambda = 1` is accepted on a normalized matrix).
pub const STEPSIZE_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Fbs,
    FbsAccelerated,
    Admm,
    Dca,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fbs => "fbs",
            Method::FbsAccelerated => "fbs-acc",
            Method::Admm => "admm",
            Method::Dca => "dca",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// FBS stepsize; `None` means `0.99 / L`.
    pub lambda: Option<f64>,
    /// ADMM penalty; `None` means `10 * gamma` (with `gamma` at `k = 1`).
    pub delta: Option<f64>,
    /// `None` keeps the instance's `alpha`.
    pub alpha_schedule: Option<ScheduleSpec>,
    /// `None` keeps the instance's `gamma`.
    pub gamma_schedule: Option<ScheduleSpec>,
    pub tol: f64,
    pub max_iter_factor: usize,
    /// Absolute iteration cap overriding `max_iter_factor * N`.
    pub max_iter: Option<usize>,
    /// DCA subproblem solver; `None` means ADMM with `tol / 100` and a `5N` cap.
    pub inner: Option<Box<SolverConfig>>,
    /// Record `E(x^k)` each iteration. ADMM spends one uncounted product on it.
    pub track_objective: bool,
}

impl SolverConfig {
    pub fn new(method: Method) -> Self {
        Self {
            method,
            lambda: None,
            delta: None,
            alpha_schedule: None,
            gamma_schedule: None,
            tol: DEFAULT_TOL,
            max_iter_factor: DEFAULT_MAX_ITER_FACTOR,
            max_iter: None,
            inner: None,
            track_objective: true,
        }
    }

    pub fn fbs() -> Self {
        Self::new(Method::Fbs)
    }

    pub fn fbs_accelerated() -> Self {
        Self::new(Method::FbsAccelerated)
    }

    pub fn admm() -> Self {
        Self::new(Method::Admm)
    }

    pub fn dca() -> Self {
        Self::new(Method::Dca)
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = Some(lambda);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = Some(max_iter);
        self
    }

    pub fn with_alpha_schedule(mut self, s: ScheduleSpec) -> Self {
        self.alpha_schedule = Some(s);
        self
    }

    pub fn with_gamma_schedule(mut self, s: ScheduleSpec) -> Self {
        self.gamma_schedule = Some(s);
        self
    }

    pub fn with_inner(mut self, inner: SolverConfig) -> Self {
        self.inner = Some(Box::new(inner));
        self
    }

    pub fn without_objective(mut self) -> Self {
        self.track_objective = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(l) = self.lambda {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "lambda",
                    reason: "stepsize must be finite and > 0",
                });
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::InvalidParameter {
                    name: "delta",
                    reason: "ADMM penalty must be finite and > 0",
                });
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol",
                reason: "tolerance must be > 0",
            });
        }
        if self.max_iter_factor == 0 && self.max_iter.is_none() {
            return Err(Error::InvalidParameter {
                name: "max_iter_factor",
                reason: "iteration cap must be >= 1",
            });
        }
        for s in [&self.alpha_schedule, &self.gamma_schedule].into_iter().flatten() {
            s.validate()?;
        }
        if let Some(inner) = &self.inner {
            if matches!(inner.method, Method::Dca | Method::FbsAccelerated) {
                return Err(Error::InvalidParameter {
                    name: "inner",
                    reason: "DCA subproblems are solved with ADMM or FBS",
                });
            }
            inner.validate()?;
        }
        Ok(())
    }

    pub(crate) fn iteration_cap(&self, n: usize) -> usize {
        self.max_iter.unwrap_or(self.max_iter_factor * n).max(1)
    }

    /// `(alpha, gamma)` in effect at iteration `k >= 1`.
    pub(crate) fn weights(&self, p: &ProblemInstance, k: usize) -> Result<(f64, f64)> {
        let alpha = match &self.alpha_schedule {
            Some(s) => schedule_value(s, k)?,
            None => p.penalty.alpha,
        };
        let gamma = match &self.gamma_schedule {
            Some(s) => schedule_value(s, k)?,
            None => p.penalty.gamma,
        };
        if !(alpha >= 0.0) || !(gamma > 0.0) || !alpha.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "schedule",
                reason: "scheduled weights must satisfy alpha >= 0, gamma > 0",
            });
        }
        Ok((alpha, gamma))
    }

    pub(crate) fn resolve_lambda(&self, l: f64) -> f64 {
        self.lambda.unwrap_or(DEFAULT_STEP_FRACTION / l)
    }

    pub(crate) fn resolve_delta(&self, p: &ProblemInstance) -> Result<f64> {
        match self.delta {
            Some(d) => Ok(d),
            None => Ok(10.0 * self.weights(p, 1)?.1),
        }
    }
}

/// Runs `cfg.method` from `x0`.
pub fn solve(p: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    match cfg.method {
        Method::Fbs => fbs_solve(p, cfg, x0),
        Method::FbsAccelerated => fbs_accelerated(p, cfg, x0),
        Method::Admm => admm_solve(p, cfg, x0),
        Method::Dca => dca_solve(p, cfg, x0),
    }
}

/// `A^T (A x - b)`, the gradient of `0.5*||A x - b||^2` (two products).
pub fn gradient(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            got: x.len(),
        });
    }
    if b.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.rows(),
            got: b.len(),
        });
    }
    let mut op = CountedMatrix::new(a);
    let mut ax = vec![0.0; a.rows()];
    let mut g = vec![0.0; a.cols()];
    op.gradient_into(x, b, &mut ax, &mut g);
    Ok(g)
}

/// Rejects `lambda * L >= 1` (beyond [`STEPSIZE_RTOL`]); flags the boundary.
pub fn check_stepsize(lambda: f64, lipschitz: f64) -> Result<Option<Warning>> {
    let prod = lambda * lipschitz;
    if prod > 1.0 + STEPSIZE_RTOL {
        return Err(Error::StepsizeTooLarge {
            lambda,
            bound: 1.0 / lipschitz,
        });
    }
    if prod >= 1.0 {
        return Ok(Some(Warning::StepsizeAtBound { lambda, lipschitz }));
    }
    Ok(None)
}

/// A sensing matrix that counts its applications (`A` or `A^T` count one each).
#[derive(Debug, Clone)]
pub struct CountedMatrix<'a> {
    a: &'a DenseMatrix,
    count: u64,
}

impl<'a> CountedMatrix<'a> {
    pub fn new(a: &'a DenseMatrix) -> Self {
        Self { a, count: 0 }
    }

    pub fn matrix(&self) -> &'a DenseMatrix {
        self.a
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn apply(&mut self, x: &[f64], out: &mut [f64]) {
        self.count += 1;
        self.a.matvec_into(x, out);
    }

    pub fn apply_t(&mut self, y: &[f64], out: &mut [f64]) {
        self.count += 1;
        self.a.matvec_t_into(y, out);
    }

    /// `out = A^T (A x - b)`; leaves `A x - b` in `resid`.
    pub fn gradient_into(&mut self, x: &[f64], b: &[f64], resid: &mut [f64], out: &mut [f64]) {
        self.apply(x, resid);
        resid.iter_mut().zip(b).for_each(|(r, bi)| *r -= bi);
        self.apply_t(resid, out);
    }

    /// `out = A^T (ax - b)` for a cached `ax = A x`.
    pub fn gradient_from_cached(&mut self, ax: &[f64], b: &[f64], resid: &mut [f64], out: &mut [f64]) {
        for ((r, a), bi) in resid.iter_mut().zip(ax).zip(b) {
            *r = a - bi;
        }
        self.apply_t(resid, out);
    }
}

/// One solver as seen by [`drive`].
pub(crate) trait Iteration {
    /// Advances one iteration; returns `(||x^{k+1} - x^k||, ||x^k||)`.
    fn advance(&mut self, alpha: f64, gamma: f64) -> (f64, f64);
    /// `E(x)` at the current iterate.
    fn objective(&self, alpha: f64, gamma: f64) -> f64;
    fn x(&self) -> &[f64];
    fn matvecs(&self) -> u64;
    fn primal_residual(&self) -> Option<f64> {
        None
    }
}

/// Runs `it` until the relative step drops below `cfg.tol` or the cap is hit.
pub(crate) fn drive<I: Iteration>(
    p: &ProblemInstance,
    cfg: &SolverConfig,
    it: &mut I,
    mut trace: SolverTrace,
) -> Result<SolverTrace> {
    let cap = cfg.iteration_cap(p.n());
    for k in 1..=cap {
        let (alpha, gamma) = cfg.weights(p, k)?;
        let (step, prev_norm) = it.advance(alpha, gamma);
        if !step.is_finite() {
            return Err(Error::NonFinite("iterate"));
        }
        let objective = if cfg.track_objective {
            it.objective(alpha, gamma)
        } else {
            f64::NAN
        };
        trace.records.push(IterRecord {
            iter: k,
            objective,
            step,
            matvecs: it.matvecs(),
            alpha,
            gamma,
            primal_residual: it.primal_residual(),
            rel_err: p.x_true.as_deref().map(|t| rel_err(it.x(), t)),
        });
        trace.iterations = k;
        if relative_step(step, prev_norm) < cfg.tol {
            trace.converged = true;
            break;
        }
    }
    trace.x.copy_from_slice(it.x());
    trace.matvecs = it.matvecs();
    Ok(trace)
}

/// `gamma * (||x||_1 - alpha*||x||_2) + 0.5*||r||^2` for a residual `r = A x - b`.
#[inline]
pub(crate) fn energy(x: &[f64], resid_sq: f64, alpha: f64, gamma: f64) -> f64 {
    gamma * (norm1(x) - alpha * norm2(x)) + 0.5 * resid_sq
}

/// `||ax - b||^2`.
#[inline]
pub(crate) fn residual_sq(ax: &[f64], b: &[f64]) -> f64 {
    ax.iter().zip(b).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// The nonsmooth term handled by the proximal step.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Regularizer<'q> {
    /// `||x||_1 - alpha*||x||_2`.
    L1AlphaL2 { alpha: f64 },
    /// `||x||_1 - alpha*<d, x>`: the DCA subproblem with `-alpha*||x||_2`
    /// linearized at a point with unit direction `d`.
    Linearized { alpha: f64, direction: &'q [f64] },
}

impl Regularizer<'_> {
    /// `out = argmin_x t*R(x) + 0.5*||x - v||^2`.
    pub(crate) fn prox_into(&self, v: &[f64], t: f64, out: &mut [f64]) {
        match *self {
            Regularizer::L1AlphaL2 { alpha } => {
                prox_kernel(v, t, alpha, out);
            }
            Regularizer::Linearized { alpha, direction } => {
                out.copy_from_slice(v);
                axpy(t * alpha, direction, out);
                let shifted = out.to_vec();
                soft_shrink_into(&shifted, t, out);
            }
        }
    }

    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        use crate::linalg::dot;
        match *self {
            Regularizer::L1AlphaL2 { alpha } => norm1(x) - alpha * norm2(x),
            Regularizer::Linearized { alpha, direction } => norm1(x) - alpha * dot(direction, x),
        }
    }
}

pub(crate) fn check_x0(p: &ProblemInstance, x0: &[f64]) -> Result<()> {
    if x0.len() != p.n() {
        return Err(Error::DimensionMismatch {
            expected: p.n(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial point"));
    }
    Ok(())
}

/// `||x^{k+1} - x^k|| / ||x^k||`, with `0/0 = 0` and `s/0 = inf`.
#[inline]
pub(crate) fn relative_step(step: f64, prev_norm: f64) -> f64 {
    if prev_norm > 0.0 {
        step / prev_norm
    } else if step == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gradient_examples() {
        let i2 = DenseMatrix::identity(2);
        assert_eq!(gradient(&i2, &[0.0, 0.0], &[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]).unwrap();
        let x = [0.5, -1.0];
        let b = a.matvec(&x);
        assert_eq!(gradient(&a, &b, &x).unwrap(), vec![0.0, 0.0]);
        let d = DenseMatrix::from_diag(&[2.0, 1.0]);
        assert_eq!(gradient(&d, &[0.0, 0.0], &[1.0, 1.0]).unwrap(), vec![4.0, 1.0]);
        assert!(gradient(&d, &[0.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn counted_matrix_counts() {
        let d = DenseMatrix::from_diag(&[2.0, 1.0]);
        let mut op = CountedMatrix::new(&d);
        let mut r = [0.0; 2];
        let mut g = [0.0; 2];
        op.gradient_into(&[1.0, 1.0], &[0.0, 0.0], &mut r, &mut g);
        assert_eq!(op.count(), 2);
        assert_eq!(g, [4.0, 1.0]);
    }

    #[test]
    fn stepsize_validator() {
        assert!(check_stepsize(0.5, 1.0).unwrap().is_none());
        assert!(check_stepsize(1.0, 1.0).unwrap().is_some());
        assert!(matches!(
            check_stepsize(2.0, 1.0),
            Err(Error::StepsizeTooLarge { .. })
        ));
    }

    #[test]
    fn linearized_prox_is_shifted_shrinkage() {
        let d = [1.0, 0.0];
        let reg = Regularizer::Linearized {
            alpha: 0.5,
            direction: &d,
        };
        let mut out = [0.0; 2];
        reg.prox_into(&[0.2, -2.0], 1.0, &mut out);
        // shift by t*alpha*d = (0.5, 0) then shrink by 1
        assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::fbs().with_lambda(-1.0).validate().is_err());
        assert!(SolverConfig::admm().with_delta(0.0).validate().is_err());
        assert!(SolverConfig::fbs().with_tol(0.0).validate().is_err());
        assert!(SolverConfig::dca()
            .with_inner(SolverConfig::dca())
            .validate()
            .is_err());
        assert!(SolverConfig::fbs()
            .with_alpha_schedule(ScheduleSpec::Sigmoid { a: 1.0, r: 0.0 })
            .validate()
            .is_err());
    }
}
