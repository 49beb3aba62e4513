use alloc::vec;
use alloc::vec::Vec;

use super::{
    check_x0, drive, energy, residual_sq, CountedMatrix, Iteration, Method, Regularizer,
    SolverConfig, SolverTrace, Warning,
};
use crate::linalg::{dist2, norm2, Cholesky, DenseMatrix};
use crate::math::sqrt;
use crate::problems::ProblemInstance;
use crate::{Error, Result};

/// ADMM iterate `(x, y, u)` for the split `x = y`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Scaled dual variable.
    pub u: Vec<f64>,
}

#[derive(Debug, Clone)]
enum RidgeSolver {
    /// `(A^T A + delta I)^{-1} r = (r - A^T (A A^T + delta I)^{-1} A r) / delta`.
    PushThrough(Cholesky),
    Direct(Cholesky),
}

/// ADMM for `gamma*r(x) + l(y)` subject to `x = y`:
///
/// ```text
/// x <- prox_{(gamma/delta) r}(y - u)
/// y <- (A^T A + delta I)^{-1} (A^T b + delta (x + u))
/// u <- u + x - y
/// ```
///
/// The ridge system is factored once. Each step counts two products.
#[derive(Debug, Clone)]
pub struct Admm<'a> {
    op: CountedMatrix<'a>,
    b: &'a [f64],
    delta: f64,
    solver: RidgeSolver,
    atb: Vec<f64>,
    state: AdmmState,
    rhs: Vec<f64>,
    small: Vec<f64>,
    next: Vec<f64>,
}

impl<'a> Admm<'a> {
    /// Starts from `y = x0`, `u = grad l(x0) / delta`.
    pub fn new(p: &'a ProblemInstance, delta: f64, x0: &[f64]) -> Result<Self> {
        check_x0(p, x0)?;
        let mut op = CountedMatrix::new(p.a());
        let mut resid = vec![0.0; p.m()];
        let mut g = vec![0.0; p.n()];
        op.gradient_into(x0, &p.b, &mut resid, &mut g);
        g.iter_mut().for_each(|v| *v /= delta);
        let state = AdmmState {
            x: x0.to_vec(),
            y: x0.to_vec(),
            u: g,
        };
        Self::build(p, op, delta, state)
    }

    pub fn with_state(p: &'a ProblemInstance, delta: f64, state: AdmmState) -> Result<Self> {
        check_x0(p, &state.x)?;
        check_x0(p, &state.y)?;
        check_x0(p, &state.u)?;
        Self::build(p, CountedMatrix::new(p.a()), delta, state)
    }

    fn build(
        p: &'a ProblemInstance,
        mut op: CountedMatrix<'a>,
        delta: f64,
        state: AdmmState,
    ) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: "ADMM penalty must be finite and > 0",
            });
        }
        let a = p.a();
        let (m, n) = a.shape();
        let solver = if m < n {
            let mut g = a.gram_rows();
            g.add_to_diagonal(delta);
            RidgeSolver::PushThrough(Cholesky::factor(&g)?)
        } else {
            let mut g = a.gram_cols();
            g.add_to_diagonal(delta);
            RidgeSolver::Direct(Cholesky::factor(&g)?)
        };
        let mut atb = vec![0.0; n];
        op.apply_t(&p.b, &mut atb);
        Ok(Self {
            op,
            b: &p.b,
            delta,
            solver,
            atb,
            state,
            rhs: vec![0.0; n],
            small: vec![0.0; m],
            next: vec![0.0; n],
        })
    }

    pub fn state(&self) -> &AdmmState {
        &self.state
    }

    pub fn into_state(self) -> AdmmState {
        self.state
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn matvecs(&self) -> u64 {
        self.op.count()
    }

    fn matrix(&self) -> &DenseMatrix {
        self.op.matrix()
    }

    /// One step; returns `||x^{k+1} - x^k||`.
    pub fn step(&mut self, alpha: f64, gamma: f64) -> f64 {
        self.step_with(Regularizer::L1AlphaL2 { alpha }, gamma).0
    }

    pub(crate) fn step_with(&mut self, reg: Regularizer<'_>, gamma: f64) -> (f64, f64) {
        let AdmmState { x, y, u } = &mut self.state;
        for ((r, yi), ui) in self.rhs.iter_mut().zip(y.iter()).zip(u.iter()) {
            *r = yi - ui;
        }
        reg.prox_into(&self.rhs, gamma / self.delta, &mut self.next);
        let step = dist2(&self.next, x);
        let prev_norm = norm2(x);
        core::mem::swap(x, &mut self.next);

        for (((r, atb), xi), ui) in self.rhs.iter_mut().zip(&self.atb).zip(x.iter()).zip(u.iter()) {
            *r = atb + self.delta * (xi + ui);
        }
        match &self.solver {
            RidgeSolver::PushThrough(chol) => {
                self.op.apply(&self.rhs, &mut self.small);
                chol.solve_in_place(&mut self.small);
                self.op.apply_t(&self.small, y);
                for (yi, r) in y.iter_mut().zip(&self.rhs) {
                    *yi = (r - *yi) / self.delta;
                }
            }
            RidgeSolver::Direct(chol) => {
                y.copy_from_slice(&self.rhs);
                chol.solve_in_place(y);
                // Same cost as the two products it replaces.
                self.op.count += 2;
            }
        }
        for ((ui, xi), yi) in u.iter_mut().zip(x.iter()).zip(y.iter()) {
            *ui += xi - yi;
        }
        (step, prev_norm)
    }

    /// `E(x)` at the current `x` (one uncounted product).
    pub fn objective(&self, alpha: f64, gamma: f64) -> f64 {
        let ax = self.matrix().matvec(&self.state.x);
        energy(&self.state.x, residual_sq(&ax, self.b), alpha, gamma)
    }

    /// `gamma*r(x) + l(y) + delta*<u, x - y> + (delta/2)*||x - y||^2` (uncounted).
    pub fn augmented_lagrangian(&self, alpha: f64, gamma: f64) -> f64 {
        let AdmmState { x, y, u } = &self.state;
        let ay = self.matrix().matvec(y);
        let reg = Regularizer::L1AlphaL2 { alpha };
        let mut coupling = 0.0;
        let mut gap = 0.0;
        for i in 0..x.len() {
            let d = x[i] - y[i];
            coupling += u[i] * d;
            gap += d * d;
        }
        gamma * reg.value(x) + 0.5 * residual_sq(&ay, self.b) + self.delta * coupling
            + 0.5 * self.delta * gap
    }

    /// `||delta*u - grad l(y)||_inf` (uncounted); zero after every step in exact arithmetic.
    pub fn dual_identity_error(&self) -> f64 {
        let a = self.matrix();
        let mut r = a.matvec(&self.state.y);
        r.iter_mut().zip(self.b).for_each(|(ri, bi)| *ri -= bi);
        let g = a.matvec_t(&r);
        g.iter()
            .zip(&self.state.u)
            .map(|(gi, ui)| (self.delta * ui - gi).abs())
            .fold(0.0, f64::max)
    }
}

impl Iteration for Admm<'_> {
    fn advance(&mut self, alpha: f64, gamma: f64) -> (f64, f64) {
        self.step_with(Regularizer::L1AlphaL2 { alpha }, gamma)
    }

    fn objective(&self, alpha: f64, gamma: f64) -> f64 {
        Admm::objective(self, alpha, gamma)
    }

    fn x(&self) -> &[f64] {
        &self.state.x
    }

    fn matvecs(&self) -> u64 {
        self.op.count()
    }

    fn primal_residual(&self) -> Option<f64> {
        Some(dist2(&self.state.x, &self.state.y))
    }
}

pub(crate) fn delta_warnings(delta: f64, lipschitz: f64) -> Vec<Warning> {
    let convex = sqrt(2.0) * lipschitz;
    let nonconvex = (3.0 + sqrt(17.0)) * lipschitz / 2.0;
    let mut w = Vec::new();
    if delta <= convex {
        w.push(Warning::AdmmDeltaBelowConvex {
            delta,
            bound: convex,
        });
    }
    if delta <= nonconvex {
        w.push(Warning::AdmmDeltaBelowNonconvex {
            delta,
            bound: nonconvex,
        });
    }
    w
}

pub fn admm_solve(p: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    cfg.validate()?;
    check_x0(p, x0)?;
    let delta = cfg.resolve_delta(p)?;
    let admm = Admm::new(p, delta, x0)?;
    run(p, cfg, admm, x0)
}

/// [`admm_solve`] from an explicit `(x, y, u)`.
pub fn admm_solve_from(
    p: &ProblemInstance,
    cfg: &SolverConfig,
    state: AdmmState,
) -> Result<SolverTrace> {
    cfg.validate()?;
    let delta = cfg.resolve_delta(p)?;
    let x0 = state.x.clone();
    let admm = Admm::with_state(p, delta, state)?;
    run(p, cfg, admm, &x0)
}

fn run(p: &ProblemInstance, cfg: &SolverConfig, mut admm: Admm<'_>, x0: &[f64]) -> Result<SolverTrace> {
    let (alpha, gamma) = cfg.weights(p, 1)?;
    let e0 = if cfg.track_objective {
        admm.objective(alpha, gamma)
    } else {
        f64::NAN
    };
    let mut trace = SolverTrace::new(Method::Admm, x0, e0);
    trace.warnings = delta_warnings(admm.delta(), p.lipschitz());
    drive(p, cfg, &mut admm, trace)
}

/// L1 warm start: exactly `2N` ADMM steps on `gamma*||x||_1 + l(x)` from zero,
/// with `delta = 10*gamma`.
pub fn l1_init(p: &ProblemInstance, gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter {
            name: "gamma",
            reason: "must be finite and > 0",
        });
    }
    let zero = vec![0.0; p.n()];
    let mut admm = Admm::new(p, 10.0 * gamma, &zero)?;
    for _ in 0..2 * p.n() {
        admm.step(0.0, gamma);
    }
    Ok(admm.into_state().x)
}
