use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Shape of a limiting extinction-time distribution, as a function of the
/// normalized time `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawShape {
    /// `(1 + 1/w)^(-i0)` for `w > 0`.
    Case11Finite { i0: u64 },
    /// `exp(-1/w)` for `w > 0`.
    Case11Growing,
    /// `(1 + a/(e^(aw) - 1))^(-i0)` for `w > 0`.
    Case12Finite { a: f64, i0: u64 },
    /// `exp(-a/(e^(aw) - 1))` for `w > 0`.
    Case12Growing { a: f64 },
    /// `exp(-e^(-w))` on the whole line.
    Gumbel,
}

impl LawShape {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Case11Finite { i0 } | Self::Case12Finite { i0, .. } if i0 == 0 => {
                Err(invalid("i0", "finite-I0 laws need I0 >= 1"))
            }
            Self::Case12Finite { a, .. } | Self::Case12Growing { a } if !(a > 0.0 && a.is_finite()) => {
                Err(invalid("a", format!("must be finite and > 0, got {a}")))
            }
            _ => Ok(()),
        }
    }

    /// CDF in normalized time. Outside the support (`w <= 0` for every shape
    /// except Gumbel) the value is 0.
    pub fn cdf(&self, w: f64) -> f64 {
        if w.is_nan() {
            return f64::NAN;
        }
        match *self {
            Self::Gumbel => (-(-w).exp()).exp(),
            _ if w <= 0.0 => 0.0,
            Self::Case11Finite { i0 } => (-(i0 as f64) * (1.0 / w).ln_1p()).exp(),
            Self::Case11Growing => (-1.0 / w).exp(),
            Self::Case12Finite { a, i0 } => (-(i0 as f64) * (a / (a * w).exp_m1()).ln_1p()).exp(),
            Self::Case12Growing { a } => (-a / (a * w).exp_m1()).exp(),
        }
    }

    /// Inverse of [`LawShape::cdf`] on `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        if !(p > 0.0 && p < 1.0) {
            return if p <= 0.0 {
                match self {
                    Self::Gumbel => f64::NEG_INFINITY,
                    _ => 0.0,
                }
            } else {
                f64::INFINITY
            };
        }
        match *self {
            Self::Gumbel => -(-p.ln()).ln(),
            Self::Case11Growing => -1.0 / p.ln(),
            Self::Case11Finite { i0 } => {
                // (1 + 1/w) = p^(-1/i0)
                1.0 / (-p.ln() / i0 as f64).exp_m1()
            }
            Self::Case12Growing { a } => (a / (-p.ln())).ln_1p() / a,
            Self::Case12Finite { a, i0 } => {
                let x = (-p.ln() / i0 as f64).exp_m1();
                (a / x).ln_1p() / a
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Case11Finite { .. } => "case_1_1_finite",
            Self::Case11Growing => "case_1_1_growing",
            Self::Case12Finite { .. } => "case_1_2_finite",
            Self::Case12Growing { .. } => "case_1_2_growing",
            Self::Gumbel => "gumbel",
        }
    }
}

/// A limit law together with the affine map from raw time `t` to the
/// normalized time `w = t / time_scale - time_shift`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLaw {
    pub shape: LawShape,
    pub time_scale: f64,
    pub time_shift: f64,
}

impl AsymptoticLaw {
    pub fn new(shape: LawShape, time_scale: f64, time_shift: f64) -> Result<Self> {
        shape.validate()?;
        if !(time_scale > 0.0 && time_scale.is_finite()) {
            return Err(invalid("time_scale", format!("must be finite and > 0, got {time_scale}")));
        }
        if !time_shift.is_finite() {
            return Err(invalid("time_shift", "must be finite"));
        }
        Ok(Self {
            shape,
            time_scale,
            time_shift,
        })
    }

    /// Law evaluated directly in `w` (unit scale, no shift).
    pub fn unscaled(shape: LawShape) -> Result<Self> {
        Self::new(shape, 1.0, 0.0)
    }

    pub fn normalize(&self, t: f64) -> f64 {
        t / self.time_scale - self.time_shift
    }

    pub fn denormalize(&self, w: f64) -> f64 {
        (w + self.time_shift) * self.time_scale
    }

    /// `P(T <= t)` under the limit law.
    pub fn cdf(&self, t: f64) -> f64 {
        self.shape.cdf(self.normalize(t))
    }

    /// Raw-time quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        self.denormalize(self.shape.quantile(p))
    }
}

/// `P(T <= t)` under `law`; `t` is raw time.
pub fn asymptotic_cdf(law: &AsymptoticLaw, t: f64) -> f64 {
    law.cdf(t)
}
