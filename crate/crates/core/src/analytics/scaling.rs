use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::model::{SirsParams, SirsState};

/// Absorbs floating-point noise such as `0.3 * 1000 = 300.00000000000006`
/// before rounding population sizes up.
const CEIL_TOLERANCE: f64 = 1e-9;

/// A power-law exponent. Accepts a number or a rational string `"p/q"`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(pub f64);

impl Exponent {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let value = match s.split_once('/') {
            Some((p, q)) => {
                let p: f64 = p.trim().parse().map_err(|_| Error::Config(format!("bad exponent {s:?}")))?;
                let q: f64 = q.trim().parse().map_err(|_| Error::Config(format!("bad exponent {s:?}")))?;
                if q == 0.0 {
                    return Err(Error::Config(format!("zero denominator in exponent {s:?}")));
                }
                p / q
            }
            None => s.parse().map_err(|_| Error::Config(format!("bad exponent {s:?}")))?,
        };
        if !value.is_finite() {
            return Err(Error::Config(format!("exponent {s:?} is not finite")));
        }
        Ok(Self(value))
    }
}

impl From<f64> for Exponent {
    fn from(v: f64) -> Self {
        Self(v)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Exponent;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or a rational string like \"1/3\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Exponent, E> {
                Ok(Exponent(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Exponent, E> {
                Exponent::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

/// `coeff * N^sign_exponent`, with the sign convention fixed by the field
/// that holds it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLaw {
    pub coeff: f64,
    pub exponent: Exponent,
}

impl PowerLaw {
    pub fn new(coeff: f64, exponent: f64) -> Self {
        Self {
            coeff,
            exponent: Exponent(exponent),
        }
    }
}

/// `1 - λ = offset + sign * coeff * N^(-exponent)`.
///
/// `offset` extends the pure power law so that sequences converging to a
/// subcritical constant at a polynomial rate (for example
/// `λ = 0.8 - N^(-1/2)`) can be represented.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGap {
    pub sign: i8,
    pub coeff: f64,
    pub exponent: Exponent,
    #[serde(default)]
    pub offset: f64,
}

impl LambdaGap {
    pub fn power(sign: i8, coeff: f64, exponent: f64) -> Self {
        Self {
            sign,
            coeff,
            exponent: Exponent(exponent),
            offset: 0.0,
        }
    }

    pub fn value(&self, n: f64) -> f64 {
        self.offset + f64::from(self.sign) * self.coeff * n.powf(-self.exponent.0)
    }

    /// `lim (1 - λ)` as N grows.
    pub fn limit(&self) -> f64 {
        if self.exponent.0 > 0.0 {
            self.offset
        } else {
            self.offset + f64::from(self.sign) * self.coeff
        }
    }

    /// Polynomial order of `|1 - λ|`; `-inf` when `λ = 1` identically.
    pub fn order(&self) -> f64 {
        let lim = self.limit();
        if lim != 0.0 {
            0.0
        } else if self.exponent.0 > 0.0 && self.offset == 0.0 {
            -self.exponent.0
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Whether `λ(N) < 1` for every N, i.e. the gap is positive throughout.
    pub fn strictly_subcritical(&self) -> bool {
        if self.sign > 0 {
            self.offset >= 0.0 && (self.offset > 0.0 || self.coeff > 0.0)
        } else {
            let worst = if self.exponent.0 > 0.0 {
                self.offset - self.coeff
            } else {
                self.limit()
            };
            worst > 0.0
        }
    }

    /// Whether `λ(N) > 1` eventually.
    pub fn supercritical(&self) -> bool {
        self.limit() < 0.0 || (self.limit() == 0.0 && self.sign < 0 && self.order() > f64::NEG_INFINITY)
    }

    /// Whether `λ(N) <= 1` for every N.
    pub fn at_most_critical(&self) -> bool {
        self.strictly_subcritical() || (self.limit() == 0.0 && self.order() == f64::NEG_INFINITY)
    }
}

/// Initial immune population: a power law `coeff * N^exponent`, or a fixed
/// fraction of N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum R0Scaling {
    Power { coeff: f64, exponent: Exponent },
    Fraction { fraction: f64 },
}

/// Polynomial scaling of a sequence of SIRS models indexed by N.
///
/// * `1 - λ` per [`LambdaGap`]
/// * `γ = gamma.coeff * N^(-gamma.exponent)`
/// * `I₀ = ⌈i0.coeff * N^i0.exponent⌉`
/// * `R₀ = ⌈r0.coeff * N^r0.exponent⌉` or `⌈fraction * N⌉`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    pub lambda_gap: LambdaGap,
    pub gamma: PowerLaw,
    pub i0: PowerLaw,
    pub r0: R0Scaling,
}

fn tolerant_ceil(x: f64) -> u64 {
    (x - CEIL_TOLERANCE).ceil().max(0.0) as u64
}

impl ScalingSpec {
    pub fn validate(&self) -> Result<()> {
        let g = &self.lambda_gap;
        if g.sign != 1 && g.sign != -1 {
            return Err(invalid("lambda_gap.sign", "must be +1 or -1"));
        }
        if !(g.coeff > 0.0 && g.coeff.is_finite()) {
            return Err(invalid("lambda_gap.coeff", "must be finite and > 0"));
        }
        if !(g.exponent.0 >= 0.0 && g.exponent.0.is_finite()) {
            return Err(invalid("lambda_gap.exponent", "must be finite and >= 0"));
        }
        if !g.offset.is_finite() || g.offset >= 1.0 {
            return Err(invalid("lambda_gap.offset", "must be finite and < 1"));
        }
        if !(self.gamma.coeff > 0.0 && self.gamma.coeff.is_finite()) {
            return Err(invalid("gamma.coeff", "must be finite and > 0"));
        }
        if !(self.gamma.exponent.0 >= 0.0 && self.gamma.exponent.0.is_finite()) {
            return Err(invalid("gamma.exponent", "must be finite and >= 0"));
        }
        if !(self.i0.coeff > 0.0 && self.i0.coeff.is_finite()) {
            return Err(invalid("i0.coeff", "must be finite and > 0"));
        }
        if !(self.i0.exponent.0 >= 0.0 && self.i0.exponent.0 < 1.0) {
            return Err(invalid("i0.exponent", "must lie in [0, 1)"));
        }
        match self.r0 {
            R0Scaling::Power { coeff, exponent } => {
                if !(coeff >= 0.0 && coeff.is_finite()) {
                    return Err(invalid("r0.coeff", "must be finite and >= 0"));
                }
                if !(exponent.0 >= 0.0 && exponent.0 < 1.0) {
                    return Err(invalid("r0.exponent", "must lie in [0, 1)"));
                }
            }
            R0Scaling::Fraction { fraction } => {
                if !(fraction > 0.0 && fraction < 1.0) {
                    return Err(invalid("r0.fraction", "must lie in (0, 1)"));
                }
            }
        }
        Ok(())
    }

    pub fn lambda(&self, n: u64) -> f64 {
        1.0 - self.lambda_gap.value(n as f64)
    }

    pub fn gamma(&self, n: u64) -> f64 {
        self.gamma.coeff * (n as f64).powf(-self.gamma.exponent.0)
    }

    pub fn i0(&self, n: u64) -> u64 {
        tolerant_ceil(self.i0.coeff * (n as f64).powf(self.i0.exponent.0)).max(1)
    }

    pub fn r0(&self, n: u64) -> u64 {
        match self.r0 {
            R0Scaling::Power { coeff, exponent } => tolerant_ceil(coeff * (n as f64).powf(exponent.0)),
            R0Scaling::Fraction { fraction } => tolerant_ceil(fraction * n as f64),
        }
    }

    /// Limit fraction `R₀/N`: the macroscopic fraction, or 0.
    pub fn r0_fraction_limit(&self) -> f64 {
        match self.r0 {
            R0Scaling::Fraction { fraction } => fraction,
            R0Scaling::Power { .. } => 0.0,
        }
    }

    /// Concrete model and initial state at population `n`.
    pub fn instantiate(&self, n: u64) -> Result<(SirsParams, SirsState)> {
        self.validate()?;
        let lambda = self.lambda(n);
        if lambda <= 0.0 {
            return Err(invalid("lambda", format!("scaling gives λ = {lambda} <= 0 at N = {n}")));
        }
        let params = SirsParams::new(n, lambda, self.gamma(n))?;
        let state = SirsState::new(&params, self.i0(n), self.r0(n))?;
        Ok((params, state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_strings() {
        assert_eq!(Exponent::parse("1/4").unwrap().0, 0.25);
        assert_eq!(Exponent::parse(" 5 / 12 ").unwrap().0, 5.0 / 12.0);
        assert_eq!(Exponent::parse("0.5").unwrap().0, 0.5);
        assert!(Exponent::parse("1/0").is_err());
        assert!(Exponent::parse("x").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            lambda_gap = { sign = 1, coeff = 1, exponent = "1/2", offset = 0.2 }
            gamma = { coeff = 1.0, exponent = "5/12" }
            i0 = { coeff = 30, exponent = 0 }
            r0 = { kind = "fraction", fraction = 0.3 }
        "#;
        let spec: ScalingSpec = toml::from_str(text).unwrap();
        assert_eq!(spec.gamma.exponent.0, 5.0 / 12.0);
        assert_eq!(spec.i0(1000), 30);
        assert_eq!(spec.r0(1000), 300);
        assert!((spec.lambda(10_000) - 0.79).abs() < 1e-12);
        let back: ScalingSpec = toml::from_str(&toml::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }

    #[test]
    fn tolerant_ceiling() {
        let spec = ScalingSpec {
            lambda_gap: LambdaGap::power(1, 1.0, 0.5),
            gamma: PowerLaw::new(1.0, 1.0 / 6.0),
            i0: PowerLaw::new(1.0, 0.25),
            r0: R0Scaling::Power {
                coeff: 1.0,
                exponent: Exponent(0.5),
            },
        };
        assert_eq!(spec.i0(10_000), 10);
        assert_eq!(spec.r0(10_000), 100);
        assert_eq!(spec.i0(1000), 6);
        assert_eq!(spec.i0(1_000_000), 32);
        let (p, s) = spec.instantiate(1_000_000).unwrap();
        assert!((p.lambda() - 0.999).abs() < 1e-12);
        assert_eq!((s.i, s.r), (32, 1000));
    }

    #[test]
    fn gap_limits_and_orders() {
        let sub = LambdaGap::power(1, 1.0, 0.5);
        assert_eq!(sub.limit(), 0.0);
        assert_eq!(sub.order(), -0.5);
        assert!(sub.strictly_subcritical() && !sub.supercritical());
        let sup = LambdaGap::power(-1, 1.0, 0.5);
        assert!(sup.supercritical() && !sup.at_most_critical());
        let shifted = LambdaGap {
            offset: 0.2,
            ..LambdaGap::power(1, 1.0, 0.5)
        };
        assert_eq!(shifted.limit(), 0.2);
        assert_eq!(shifted.order(), 0.0);
        let constant = LambdaGap::power(1, 0.3, 0.0);
        assert!((constant.limit() - 0.3).abs() < 1e-15);
    }
}
