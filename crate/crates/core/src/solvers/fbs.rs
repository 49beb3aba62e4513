use alloc::vec;
use alloc::vec::Vec;

use super::{
    check_stepsize, check_x0, drive, energy, residual_sq, CountedMatrix, Iteration, Method,
    Regularizer, SolverConfig, SolverTrace,
};
use crate::linalg::{dist2, norm2};
use crate::problems::ProblemInstance;
use crate::Result;

/// Forward-backward splitting `x <- prox_{lambda*gamma*r}(x - lambda*grad l(x))`.
///
/// Keeps `A x` cached, so each step costs one `A^T` and one `A` product.
#[derive(Debug, Clone)]
pub struct Fbs<'a> {
    op: CountedMatrix<'a>,
    b: &'a [f64],
    lambda: f64,
    x: Vec<f64>,
    ax: Vec<f64>,
    resid: Vec<f64>,
    grad: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> Fbs<'a> {
    /// No stepsize check; see [`fbs_solve`] for the validated entry point.
    pub fn new(p: &'a ProblemInstance, lambda: f64, x0: &[f64]) -> Result<Self> {
        check_x0(p, x0)?;
        let (m, n) = p.a().shape();
        let mut op = CountedMatrix::new(p.a());
        let mut ax = vec![0.0; m];
        op.apply(x0, &mut ax);
        Ok(Self {
            op,
            b: &p.b,
            lambda,
            x: x0.to_vec(),
            ax,
            resid: vec![0.0; m],
            grad: vec![0.0; n],
            next: vec![0.0; n],
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn matvecs(&self) -> u64 {
        self.op.count()
    }

    /// One step with weights `(alpha, gamma)`; returns `||x^{k+1} - x^k||`.
    pub fn step(&mut self, alpha: f64, gamma: f64) -> f64 {
        self.step_with(Regularizer::L1AlphaL2 { alpha }, gamma).0
    }

    /// `E(x)` at the current iterate (no products; uses the cached `A x`).
    pub fn objective(&self, alpha: f64, gamma: f64) -> f64 {
        energy(&self.x, residual_sq(&self.ax, self.b), alpha, gamma)
    }

    pub(crate) fn step_with(&mut self, reg: Regularizer<'_>, gamma: f64) -> (f64, f64) {
        self.op
            .gradient_from_cached(&self.ax, self.b, &mut self.resid, &mut self.grad);
        for (g, x) in self.grad.iter_mut().zip(&self.x) {
            *g = x - self.lambda * *g;
        }
        reg.prox_into(&self.grad, self.lambda * gamma, &mut self.next);
        let step = dist2(&self.next, &self.x);
        let prev_norm = norm2(&self.x);
        core::mem::swap(&mut self.x, &mut self.next);
        self.op.apply(&self.x, &mut self.ax);
        (step, prev_norm)
    }
}

impl Iteration for Fbs<'_> {
    fn advance(&mut self, alpha: f64, gamma: f64) -> (f64, f64) {
        self.step_with(Regularizer::L1AlphaL2 { alpha }, gamma)
    }

    fn objective(&self, alpha: f64, gamma: f64) -> f64 {
        Fbs::objective(self, alpha, gamma)
    }

    fn x(&self) -> &[f64] {
        &self.x
    }

    fn matvecs(&self) -> u64 {
        self.op.count()
    }
}

pub fn fbs_solve(p: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    cfg.validate()?;
    check_x0(p, x0)?;
    let l = p.lipschitz();
    let lambda = cfg.resolve_lambda(l);
    let warning = check_stepsize(lambda, l)?;
    let mut fbs = Fbs::new(p, lambda, x0)?;
    let (alpha, gamma) = cfg.weights(p, 1)?;
    let mut trace = SolverTrace::new(Method::Fbs, x0, fbs.objective(alpha, gamma));
    trace.warnings.extend(warning);
    drive(p, cfg, &mut fbs, trace)
}
