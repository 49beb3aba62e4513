use alloc::vec;
use alloc::vec::Vec;

use super::{
    check_stepsize, check_x0, drive, energy, residual_sq, CountedMatrix, Iteration, Method,
    Regularizer, SolverConfig, SolverTrace,
};
use crate::linalg::{dist2, norm2};
use crate::math::sqrt;
use crate::problems::ProblemInstance;
use crate::Result;

/// Monitored accelerated FBS.
///
/// Each step forms the extrapolated point
/// `y = x + (t'/t)(z - x) + ((t' - 1)/t)(x - x')`, takes a prox step from both
/// `y` (giving `z`) and `x` (giving `v`), and keeps whichever of `z`, `v` has
/// the lower objective. Four products per step.
#[derive(Debug, Clone)]
pub struct FbsAccelerated<'a> {
    op: CountedMatrix<'a>,
    b: &'a [f64],
    lambda: f64,
    t: f64,
    t_prev: f64,
    x: Vec<f64>,
    ax: Vec<f64>,
    x_prev: Vec<f64>,
    ax_prev: Vec<f64>,
    z: Vec<f64>,
    az: Vec<f64>,
    v: Vec<f64>,
    av: Vec<f64>,
    y: Vec<f64>,
    ay: Vec<f64>,
    resid: Vec<f64>,
    grad: Vec<f64>,
    last: (f64, f64),
}

impl<'a> FbsAccelerated<'a> {
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
            t: 1.0,
            t_prev: 0.0,
            x: x0.to_vec(),
            x_prev: x0.to_vec(),
            z: x0.to_vec(),
            ax_prev: ax.clone(),
            az: ax.clone(),
            ax,
            v: vec![0.0; n],
            av: vec![0.0; m],
            y: vec![0.0; n],
            ay: vec![0.0; m],
            resid: vec![0.0; m],
            grad: vec![0.0; n],
            last: (f64::NAN, f64::NAN),
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Current momentum parameter `t^k` (`t^0 = 1`).
    pub fn t(&self) -> f64 {
        self.t
    }

    /// `(E(z^{k+1}), E(v^{k+1}))` from the latest step.
    pub fn candidate_objectives(&self) -> (f64, f64) {
        self.last
    }

    pub fn objective(&self, alpha: f64, gamma: f64) -> f64 {
        energy(&self.x, residual_sq(&self.ax, self.b), alpha, gamma)
    }

    pub fn step(&mut self, alpha: f64, gamma: f64) -> f64 {
        self.advance(alpha, gamma).0
    }

    fn prox_step(&mut self, from_y: bool, alpha: f64, gamma: f64) {
        let reg = Regularizer::L1AlphaL2 { alpha };
        let (base, abase) = if from_y {
            (&self.y, &self.ay)
        } else {
            (&self.x, &self.ax)
        };
        self.op
            .gradient_from_cached(abase, self.b, &mut self.resid, &mut self.grad);
        for (g, xi) in self.grad.iter_mut().zip(base) {
            *g = xi - self.lambda * *g;
        }
        let out = if from_y { &mut self.z } else { &mut self.v };
        reg.prox_into(&self.grad, self.lambda * gamma, out);
        let aout = if from_y { &mut self.az } else { &mut self.av };
        self.op.apply(out, aout);
    }
}

impl Iteration for FbsAccelerated<'_> {
    fn advance(&mut self, alpha: f64, gamma: f64) -> (f64, f64) {
        let c1 = self.t_prev / self.t;
        let c2 = (self.t_prev - 1.0) / self.t;
        for i in 0..self.x.len() {
            self.y[i] = self.x[i] + c1 * (self.z[i] - self.x[i]) + c2 * (self.x[i] - self.x_prev[i]);
        }
        // A y by linearity from cached products.
        for i in 0..self.ay.len() {
            self.ay[i] =
                self.ax[i] + c1 * (self.az[i] - self.ax[i]) + c2 * (self.ax[i] - self.ax_prev[i]);
        }
        self.prox_step(true, alpha, gamma);
        self.prox_step(false, alpha, gamma);
        let ez = energy(&self.z, residual_sq(&self.az, self.b), alpha, gamma);
        let ev = energy(&self.v, residual_sq(&self.av, self.b), alpha, gamma);
        self.last = (ez, ev);

        let t_next = (sqrt(4.0 * self.t * self.t + 1.0) + 1.0) / 2.0;
        self.t_prev = self.t;
        self.t = t_next;

        let prev_norm = norm2(&self.x);
        core::mem::swap(&mut self.x_prev, &mut self.x);
        core::mem::swap(&mut self.ax_prev, &mut self.ax);
        if ez < ev {
            self.x.copy_from_slice(&self.z);
            self.ax.copy_from_slice(&self.az);
        } else {
            self.x.copy_from_slice(&self.v);
            self.ax.copy_from_slice(&self.av);
        }
        (dist2(&self.x, &self.x_prev), prev_norm)
    }

    fn objective(&self, alpha: f64, gamma: f64) -> f64 {
        FbsAccelerated::objective(self, alpha, gamma)
    }

    fn x(&self) -> &[f64] {
        &self.x
    }

    fn matvecs(&self) -> u64 {
        self.op.count()
    }
}

pub fn fbs_accelerated(p: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    cfg.validate()?;
    check_x0(p, x0)?;
    let l = p.lipschitz();
    let lambda = cfg.resolve_lambda(l);
    let warning = check_stepsize(lambda, l)?;
    let mut acc = FbsAccelerated::new(p, lambda, x0)?;
    let (alpha, gamma) = cfg.weights(p, 1)?;
    let mut trace = SolverTrace::new(Method::FbsAccelerated, x0, acc.objective(alpha, gamma));
    trace.warnings.extend(warning);
    drive(p, cfg, &mut acc, trace)
}
