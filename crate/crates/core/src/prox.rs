//! Proximal operators of `||x||_1` and `||x||_1 - alpha*||x||_2`.
//!
//! For `lambda > 0` and `alpha >= 0`,
//!
//! ```text
//! prox(y) = argmin_x ||x||_1 - alpha*||x||_2 + 1/(2*lambda) * ||x - y||_2^2
//! ```
//!
//! has a closed form that depends only on how `||y||_inf` compares with
//! `lambda` and `(1 - alpha)*lambda`:
//!
//! | case | condition                                   | minimizer                                    |
//! |------|---------------------------------------------|----------------------------------------------|
//! | 1    | `||y||_inf > lambda`                        | `z * (||z|| + alpha*lambda)/||z||`, `z = S(y, lambda)` |
//! | 2    | `||y||_inf == lambda`                       | on the maximal entries, `||x|| = alpha*lambda` |
//! | 3    | `(1-alpha)*lambda < ||y||_inf < lambda`     | 1-sparse, `||x|| = ||y||_inf + (alpha-1)*lambda` |
//! | 4    | `||y||_inf <= (1-alpha)*lambda`             | `0`                                          |
//!
//! Cases 2 and 3 have several minimizers when more than one entry of `y`
//! attains `||y||_inf`; [`TieRule`] picks the index that carries the mass.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{dist2, norm1, norm2, norm_inf};
use crate::{Error, Result};

/// Relative tolerance used to classify `||y||_inf` against the case boundaries.
pub const CASE_BOUNDARY_RTOL: f64 = 1e-12;

/// Weights of the regularizer `gamma * (||x||_1 - alpha*||x||_2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySpec {
    pub alpha: f64,
    pub gamma: f64,
}

impl PenaltySpec {
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        let spec = Self { alpha, gamma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: "must be finite and >= 0",
            });
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: "must be finite and > 0",
            });
        }
        Ok(())
    }
}

/// Which branch of the closed form produced a [`ProxResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProxCase {
    /// `||y||_inf > lambda`: rescaled soft shrinkage.
    Shrink = 1,
    /// `||y||_inf == lambda`: norm pinned to `alpha*lambda`.
    Boundary = 2,
    /// `(1-alpha)*lambda < ||y||_inf < lambda`: a single spike.
    Spike = 3,
    /// `||y||_inf <= (1-alpha)*lambda`: zero.
    Zero = 4,
}

impl ProxCase {
    pub fn number(self) -> u8 {
        self as u8
    }
}

/// Selection among the entries of `y` that attain `||y||_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    #[default]
    LowestIndex,
    HighestIndex,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    pub x: Vec<f64>,
    pub is_unique: bool,
    pub case: ProxCase,
    /// Indices attaining `||y||_inf` (cases 2 and 3 only, empty otherwise).
    /// Every one of them can carry the mass in some minimizer.
    pub maximizers: Vec<usize>,
}

/// Soft shrinkage `S(y, lambda)`, the proximal operator of `lambda*||x||_1`.
pub fn soft_shrink(y: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; y.len()];
    soft_shrink_into(y, lambda, &mut out);
    out
}

pub fn soft_shrink_into(y: &[f64], lambda: f64, out: &mut [f64]) {
    for (o, &v) in out.iter_mut().zip(y) {
        *o = shrink_scalar(v, lambda);
    }
}

#[inline]
fn shrink_scalar(v: f64, lambda: f64) -> f64 {
    if v > lambda {
        v - lambda
    } else if v < -lambda {
        v + lambda
    } else {
        0.0
    }
}

fn check_params(lambda: f64, alpha: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter {
            name: "lambda",
            reason: "must be finite and > 0",
        });
    }
    if !(alpha >= 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: "must be finite and >= 0",
        });
    }
    Ok(())
}

fn classify(ymax: f64, lambda: f64, alpha: f64) -> ProxCase {
    let tol = CASE_BOUNDARY_RTOL * lambda;
    if ymax > lambda + tol {
        ProxCase::Shrink
    } else if ymax >= lambda - tol {
        ProxCase::Boundary
    } else if ymax > (1.0 - alpha) * lambda + tol {
        ProxCase::Spike
    } else {
        ProxCase::Zero
    }
}

/// A minimizer of `||x||_1 - alpha*||x||_2 + ||x - y||^2 / (2*lambda)`.
pub fn prox_l1_al2(y: &[f64], lambda: f64, alpha: f64, tie: TieRule) -> Result<ProxResult> {
    check_params(lambda, alpha)?;
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("prox input"));
    }
    let mut x = vec![0.0; y.len()];
    let (case, is_unique, maximizers) = prox_into(y, lambda, alpha, tie, &mut x);
    Ok(ProxResult {
        x,
        is_unique,
        case,
        maximizers,
    })
}

/// Allocation-light kernel behind [`prox_l1_al2`], used inside the solvers.
/// Parameters are assumed valid. Returns the case taken.
pub(crate) fn prox_kernel(y: &[f64], lambda: f64, alpha: f64, out: &mut [f64]) -> ProxCase {
    debug_assert_eq!(y.len(), out.len());
    let ymax = norm_inf(y);
    let case = classify(ymax, lambda, alpha);
    if alpha == 0.0 {
        // plain soft shrinkage, bit for bit, whatever the boundary tolerance says
        soft_shrink_into(y, lambda, out);
        return case;
    }
    match case {
        ProxCase::Shrink => {
            soft_shrink_into(y, lambda, out);
            let nz = norm2(out);
            if nz > 0.0 {
                let s = (nz + alpha * lambda) / nz;
                out.iter_mut().for_each(|v| *v *= s);
            }
        }
        ProxCase::Boundary | ProxCase::Spike => {
            out.iter_mut().for_each(|v| *v = 0.0);
            let mag = if case == ProxCase::Boundary {
                alpha * lambda
            } else {
                ymax + (alpha - 1.0) * lambda
            };
            if mag > 0.0 {
                let i = y
                    .iter()
                    .position(|v| v.abs() == ymax)
                    .unwrap_or(0);
                out[i] = signed(mag, y[i]);
            }
        }
        ProxCase::Zero => out.iter_mut().for_each(|v| *v = 0.0),
    }
    case
}

fn prox_into(
    y: &[f64],
    lambda: f64,
    alpha: f64,
    tie: TieRule,
    out: &mut [f64],
) -> (ProxCase, bool, Vec<usize>) {
    let case = prox_kernel(y, lambda, alpha, out);
    match case {
        ProxCase::Boundary | ProxCase::Spike if alpha > 0.0 => {
            let ymax = norm_inf(y);
            let maximizers: Vec<usize> = y
                .iter()
                .enumerate()
                .filter(|(_, v)| v.abs() == ymax)
                .map(|(i, _)| i)
                .collect();
            let mag = norm2(out);
            if tie == TieRule::HighestIndex && mag > 0.0 {
                out.iter_mut().for_each(|v| *v = 0.0);
                let i = *maximizers.last().unwrap_or(&0);
                out[i] = signed(mag, y[i]);
            }
            let is_unique = maximizers.len() <= 1 || mag == 0.0;
            (case, is_unique, maximizers)
        }
        _ => (case, true, Vec::new()),
    }
}

#[inline]
fn signed(mag: f64, reference: f64) -> f64 {
    // Zero entries of y carry no sign; the spike then points in +e_i.
    if reference < 0.0 {
        -mag
    } else {
        mag
    }
}

/// Whether `x` belongs to the set of minimizers of the prox problem at `y`,
/// up to an absolute tolerance `tol`. Used for fixed-point tests where the
/// minimizer is not unique.
pub fn prox_set_contains(y: &[f64], lambda: f64, alpha: f64, x: &[f64], tol: f64) -> Result<bool> {
    check_params(lambda, alpha)?;
    let ymax = norm_inf(y);
    let case = classify(ymax, lambda, alpha);
    match case {
        ProxCase::Shrink | ProxCase::Zero => {
            let mut p = vec![0.0; y.len()];
            prox_kernel(y, lambda, alpha, &mut p);
            Ok(dist2(&p, x) <= tol)
        }
        ProxCase::Boundary | ProxCase::Spike => {
            let btol = CASE_BOUNDARY_RTOL * lambda;
            let target = if case == ProxCase::Boundary {
                alpha * lambda
            } else {
                ymax + (alpha - 1.0) * lambda
            };
            if (norm2(x) - target).abs() > tol {
                return Ok(false);
            }
            let mut mass_indices = 0usize;
            for (&xi, &yi) in x.iter().zip(y) {
                if xi.abs() <= tol {
                    continue;
                }
                // support restricted to maximal entries of y, with matching sign
                if yi.abs() < ymax - btol || xi * yi < 0.0 {
                    return Ok(false);
                }
                mass_indices += 1;
            }
            if case == ProxCase::Spike && mass_indices > 1 {
                return Ok(false);
            }
            Ok(true)
        }
    }
}

/// `gamma * (||x||_1 - alpha*||x||_2)`.
pub fn eval_penalty(x: &[f64], spec: &PenaltySpec) -> f64 {
    spec.gamma * (norm1(x) - spec.alpha * norm2(x))
}

/// `||x||_1 - alpha*||x||_2 + ||x - y||^2 / (2*lambda)`.
pub fn eval_moreau_objective(x: &[f64], y: &[f64], lambda: f64, alpha: f64) -> f64 {
    let d = dist2(x, y);
    norm1(x) - alpha * norm2(x) + d * d / (2.0 * lambda)
}
