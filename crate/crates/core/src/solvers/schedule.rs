use crate::math::exp;
use crate::{Error, Result};

/// Per-iteration weight for `alpha` or `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleSpec {
    Constant(f64),
    /// `min(cap, slope * k)`.
    LinearCapped { slope: f64, cap: f64 },
    /// `1 / (1 + a * exp(-r * k))`.
    Sigmoid { a: f64, r: f64 },
}

impl ScheduleSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            ScheduleSpec::Constant(v) => v.is_finite(),
            ScheduleSpec::LinearCapped { slope, cap } => slope.is_finite() && cap.is_finite(),
            ScheduleSpec::Sigmoid { a, r } => a.is_finite() && r.is_finite(),
        };
        if !finite {
            return Err(Error::NonFinite("schedule parameter"));
        }
        if let ScheduleSpec::Sigmoid { r, .. } = *self {
            if !(r > 0.0) {
                return Err(Error::InvalidParameter {
                    name: "r",
                    reason: "sigmoid rate must be > 0",
                });
            }
        }
        Ok(())
    }
}

pub fn schedule_value(s: &ScheduleSpec, k: usize) -> Result<f64> {
    match *s {
        ScheduleSpec::Constant(v) => Ok(v),
        ScheduleSpec::LinearCapped { slope, cap } => Ok(cap.min(slope * k as f64)),
        ScheduleSpec::Sigmoid { a, r } => {
            let denom = 1.0 + a * exp(-r * k as f64);
            if denom == 0.0 {
                return Err(Error::ScheduleSingular(k));
            }
            Ok(1.0 / denom)
        }
    }
}
