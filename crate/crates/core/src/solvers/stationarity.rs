use alloc::vec::Vec;

use crate::linalg::{norm2, norm_inf};
use crate::math::sqrt;
use crate::problems::ProblemInstance;
use crate::prox::prox_set_contains;

/// Stepsizes, as fractions of `1/L`, at which the fixed-point property is tested.
pub const FIXED_POINT_FRACTIONS: [f64; 4] = [0.25, 0.5, 0.75, 0.99];

/// Necessary conditions for a global minimizer, each `None` when it does not apply.
///
/// With weights `(alpha, gamma)` and `g = grad l(x)`:
/// - `zero`: at `x = 0`, `||g||_inf <= gamma*(1 - alpha)`.
/// - `large`: when `||x|| >= alpha*gamma/L`, `g_S + gamma*sign(x_S)` equals
///   `alpha*gamma*x_S/||x||` on the support `S` (norm `alpha*gamma`, same direction).
/// - `small`: when `0 < ||x|| < alpha*gamma/L`, `x` is 1-sparse,
///   `g_i = gamma*(alpha - 1)*sign(x_i)` on the support and
///   `|g_i| <= max(0, gamma*(1 - alpha) + L*||x||_inf)` off it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Lemma3Flags {
    pub zero: Option<bool>,
    pub large: Option<bool>,
    pub small: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    /// `min_p ||gamma*(p - alpha*x/||x||) + grad l(x)||` over subgradients `p` of `||.||_1`.
    pub residual_eq12: f64,
    pub lemma3: Lemma3Flags,
    /// `x` lies in the prox-gradient set of itself for every sampled stepsize.
    pub is_fixed_point: bool,
}

impl StationarityReport {
    pub fn is_stationary(&self, tol: f64) -> bool {
        self.residual_eq12 <= tol
    }
}

/// Smallest first-order residual of `x`. At `x = 0` the `||.||_2` subgradient is taken as 0.
pub fn eq12_residual(x: &[f64], grad: &[f64], alpha: f64, gamma: f64) -> f64 {
    let nrm = norm2(x);
    let scale = if nrm > 0.0 { alpha / nrm } else { 0.0 };
    let mut sq = 0.0;
    for (&xi, &gi) in x.iter().zip(grad) {
        let r = if xi != 0.0 {
            gamma * (xi.signum() - scale * xi) + gi
        } else {
            (gi.abs() - gamma).max(0.0)
        };
        sq += r * r;
    }
    sqrt(sq)
}

/// Reports how close `x` is to stationarity and whether it passes the
/// global-minimizer checks, with tolerance `tol` throughout.
pub fn check_stationarity(p: &ProblemInstance, x: &[f64], tol: f64) -> StationarityReport {
    let a = p.a();
    let alpha = p.penalty.alpha;
    let gamma = p.penalty.gamma;
    let l = p.lipschitz();
    let mut r = a.matvec(x);
    r.iter_mut().zip(&p.b).for_each(|(ri, bi)| *ri -= bi);
    let g = a.matvec_t(&r);

    let residual_eq12 = eq12_residual(x, &g, alpha, gamma);
    let nrm = norm2(x);
    let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] != 0.0).collect();
    let threshold = alpha * gamma / l;

    let mut flags = Lemma3Flags::default();
    if nrm == 0.0 {
        flags.zero = Some(norm_inf(&g) <= gamma * (1.0 - alpha) + tol);
    } else if nrm >= threshold {
        let mut dev = 0.0;
        for &i in &support {
            let d = g[i] + gamma * x[i].signum() - alpha * gamma * x[i] / nrm;
            dev += d * d;
        }
        flags.large = Some(sqrt(dev) <= tol);
    } else {
        let mut ok = support.len() == 1;
        if ok {
            let i = support[0];
            ok &= (g[i] - gamma * (alpha - 1.0) * x[i].signum()).abs() <= tol;
            let bound = (gamma * (1.0 - alpha) + l * norm_inf(x)).max(0.0);
            ok &= (0..x.len())
                .filter(|&j| j != i)
                .all(|j| g[j].abs() <= bound + tol);
        }
        flags.small = Some(ok);
    }

    let mut y = alloc::vec![0.0; x.len()];
    let is_fixed_point = l > 0.0
        && FIXED_POINT_FRACTIONS.iter().all(|&f| {
            let lambda = f / l;
            for i in 0..x.len() {
                y[i] = x[i] - lambda * g[i];
            }
            prox_set_contains(&y, lambda * gamma, alpha, x, tol).unwrap_or(false)
        });

    StationarityReport {
        residual_eq12,
        lemma3: flags,
        is_fixed_point,
    }
}
