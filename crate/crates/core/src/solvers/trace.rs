use alloc::vec::Vec;

use super::Method;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterRecord {
    /// Iteration index `k >= 1`; the record describes `x^k`.
    pub iter: usize,
    /// `E(x^k)` with the weights in effect at iteration `k`.
    pub objective: f64,
    /// `||x^k - x^{k-1}||_2`.
    pub step: f64,
    /// Cumulative applications of `A` or `A^T`.
    pub matvecs: u64,
    pub alpha: f64,
    pub gamma: f64,
    /// `||x^k - y^k||_2` for ADMM.
    pub primal_residual: Option<f64>,
    /// `||x^k - x_true|| / ||x_true||` when the instance carries a ground truth.
    pub rel_err: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Warning {
    /// `lambda * L` sits at 1 within rounding.
    StepsizeAtBound { lambda: f64, lipschitz: f64 },
    /// `delta <= sqrt(2) * L`: ADMM convergence is not guaranteed.
    AdmmDeltaBelowConvex { delta: f64, bound: f64 },
    /// `delta <= (3 + sqrt(17)) * L / 2`, the threshold for a nonconvex `l`.
    AdmmDeltaBelowNonconvex { delta: f64, bound: f64 },
    /// A DCA outer iterate was exactly zero; its linearization was dropped.
    DcaZeroIterate { outer: usize },
}

impl core::fmt::Display for Warning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match *self {
            Warning::StepsizeAtBound { lambda, lipschitz } => {
                write!(f, "stepsize lambda = {lambda} is at the bound 1/L = {}", 1.0 / lipschitz)
            }
            Warning::AdmmDeltaBelowConvex { delta, bound } => write!(
                f,
                "ADMM delta = {delta} <= sqrt(2)*L = {bound}; convergence is not guaranteed"
            ),
            Warning::AdmmDeltaBelowNonconvex { delta, bound } => write!(
                f,
                "ADMM delta = {delta} <= (3+sqrt(17))*L/2 = {bound}; convergence is not guaranteed"
            ),
            Warning::DcaZeroIterate { outer } => {
                write!(f, "DCA iterate {outer} is zero; linearization dropped")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace {
    pub method: Method,
    pub records: Vec<IterRecord>,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `E(x^0)` with the weights of iteration 1.
    pub initial_objective: f64,
    pub matvecs: u64,
    pub warnings: Vec<Warning>,
}

impl SolverTrace {
    pub(crate) fn new(method: Method, x0: &[f64], initial_objective: f64) -> Self {
        Self {
            method,
            records: Vec::new(),
            x: x0.to_vec(),
            iterations: 0,
            converged: false,
            initial_objective,
            matvecs: 0,
            warnings: Vec::new(),
        }
    }

    pub fn final_objective(&self) -> f64 {
        self.records
            .last()
            .map_or(self.initial_objective, |r| r.objective)
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }
}
