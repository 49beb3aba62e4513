use alloc::vec;
use alloc::vec::Vec;

use super::admm::delta_warnings;
use super::{
    check_stepsize, check_x0, energy, relative_step, residual_sq, Admm, Fbs, IterRecord, Method,
    Regularizer, SolverConfig, SolverTrace, Warning,
};
use crate::linalg::{dist2, norm2, rel_err};
use crate::problems::ProblemInstance;
use crate::{Error, Result};

/// Default inner tolerance relative to the outer one.
pub const INNER_TOL_FACTOR: f64 = 1e-2;
/// Default inner iteration cap as a multiple of `N`.
pub const INNER_MAX_ITER_FACTOR: usize = 5;

enum Inner<'a> {
    Admm(Admm<'a>),
    Fbs(Fbs<'a>),
}

impl Inner<'_> {
    fn step(&mut self, reg: Regularizer<'_>, gamma: f64) -> (f64, f64) {
        match self {
            Inner::Admm(s) => s.step_with(reg, gamma),
            Inner::Fbs(s) => s.step_with(reg, gamma),
        }
    }

    fn x(&self) -> &[f64] {
        match self {
            Inner::Admm(s) => &s.state().x,
            Inner::Fbs(s) => s.x(),
        }
    }

    fn matvecs(&self) -> u64 {
        match self {
            Inner::Admm(s) => s.matvecs(),
            Inner::Fbs(s) => s.matvecs(),
        }
    }
}

/// Difference-of-convex iteration
/// `x^{n+1} = argmin l(x) + gamma*(||x||_1 - alpha*<x, x^n/||x^n||>)`.
///
/// The inner solver state carries over between outer steps. The recorded
/// iteration count and tolerance refer to outer steps; `matvecs` includes
/// all inner work.
pub fn dca_solve(p: &ProblemInstance, cfg: &SolverConfig, x0: &[f64]) -> Result<SolverTrace> {
    cfg.validate()?;
    check_x0(p, x0)?;
    if x0.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroInitialPoint);
    }
    let inner_cfg = match &cfg.inner {
        Some(c) => (**c).clone(),
        None => {
            let mut c = SolverConfig::admm().with_tol(INNER_TOL_FACTOR * cfg.tol);
            c.max_iter_factor = INNER_MAX_ITER_FACTOR;
            c.delta = cfg.delta;
            c
        }
    };
    let (alpha1, gamma1) = cfg.weights(p, 1)?;
    let mut warnings: Vec<Warning> = Vec::new();
    let mut inner = match inner_cfg.method {
        Method::Fbs => {
            let l = p.lipschitz();
            let lambda = inner_cfg.lambda.or(cfg.lambda).unwrap_or(super::DEFAULT_STEP_FRACTION / l);
            warnings.extend(check_stepsize(lambda, l)?);
            Inner::Fbs(Fbs::new(p, lambda, x0)?)
        }
        _ => {
            let delta = match inner_cfg.delta.or(cfg.delta) {
                Some(d) => d,
                None => 10.0 * gamma1,
            };
            warnings.extend(delta_warnings(delta, p.lipschitz()));
            Inner::Admm(Admm::new(p, delta, x0)?)
        }
    };

    let energy_at = |x: &[f64], alpha: f64, gamma: f64| {
        let ax = p.a().matvec(x);
        energy(x, residual_sq(&ax, &p.b), alpha, gamma)
    };
    let e0 = if cfg.track_objective {
        energy_at(x0, alpha1, gamma1)
    } else {
        f64::NAN
    };
    let mut trace = SolverTrace::new(Method::Dca, x0, e0);
    trace.warnings = warnings;

    let inner_cap = inner_cfg.iteration_cap(p.n());
    let cap = cfg.iteration_cap(p.n());
    let mut xn = x0.to_vec();
    let mut direction = vec![0.0; p.n()];
    for k in 1..=cap {
        let (alpha, gamma) = cfg.weights(p, k)?;
        let nrm = norm2(&xn);
        if nrm > 0.0 {
            direction.iter_mut().zip(&xn).for_each(|(d, x)| *d = x / nrm);
        } else {
            direction.iter_mut().for_each(|d| *d = 0.0);
            trace.warnings.push(Warning::DcaZeroIterate { outer: k });
        }
        let reg = Regularizer::Linearized {
            alpha,
            direction: &direction,
        };
        for _ in 0..inner_cap {
            let (step, prev) = inner.step(reg, gamma);
            if !step.is_finite() {
                return Err(Error::NonFinite("iterate"));
            }
            if relative_step(step, prev) < inner_cfg.tol {
                break;
            }
        }
        let x = inner.x();
        let step = dist2(x, &xn);
        let objective = if cfg.track_objective {
            energy_at(x, alpha, gamma)
        } else {
            f64::NAN
        };
        trace.records.push(IterRecord {
            iter: k,
            objective,
            step,
            matvecs: inner.matvecs(),
            alpha,
            gamma,
            primal_residual: match &inner {
                Inner::Admm(s) => Some(dist2(&s.state().x, &s.state().y)),
                Inner::Fbs(_) => None,
            },
            rel_err: p.x_true.as_deref().map(|t| rel_err(x, t)),
        });
        trace.iterations = k;
        let rel = relative_step(step, nrm);
        xn.copy_from_slice(x);
        if rel < cfg.tol {
            trace.converged = true;
            break;
        }
    }
    trace.x = xn;
    trace.matvecs = inner.matvecs();
    Ok(trace)
}
