use super::laws::{AsymptoticLaw, LawShape};
use crate::error::{invalid, Error, Result};

/// Exact `P(T <= t)` for the linear birth-death chain (birth `beta`, death
/// `mu`, per capita) started at `l0`:
/// `(μ(e^{δt}−1)/(μe^{δt}−β))^{l0}` with `δ = μ−β`, and `(μt/(1+μt))^{l0}` at
/// `β = μ`.
pub fn bdp_extinction_cdf_exact(beta: f64, mu: f64, l0: u64, t: f64) -> Result<f64> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("must be finite and >= 0, got {beta}")));
    }
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid("mu", format!("must be finite and > 0, got {mu}")));
    }
    if !(t >= 0.0) {
        return Err(invalid("t", format!("must be >= 0, got {t}")));
    }
    if l0 == 0 {
        return Ok(1.0);
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let delta = mu - beta;
    let p = if delta == 0.0 {
        mu * t / (1.0 + mu * t)
    } else {
        // μE/(μE + δ) with E = e^{δt} − 1, rearranged so that E = ∞ is safe.
        let e = (delta * t).exp_m1();
        mu / (mu + delta / e)
    };
    Ok((l0 as f64 * p.ln()).exp())
}

/// Parameters of a linear birth-death chain at one index of a sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdpSequencePoint {
    pub beta: f64,
    pub mu: f64,
    pub l0: u64,
}

impl BdpSequencePoint {
    fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.mu > 0.0 && self.beta.is_finite() && self.mu.is_finite()) {
            return Err(invalid("beta/mu", "rates must be finite and > 0"));
        }
        if self.l0 == 0 {
            return Err(invalid("l0", "must be >= 1"));
        }
        Ok(())
    }
}

/// The five limit laws for sequences of linear birth-death chains.
///
/// 1. `L₀` fixed, `μ−β → 0`: `(1+1/w)^{−L₀}` in `w = T`.
/// 2. `L₀` fixed, `μ−β → a > 0`: Case 1.2 shape with `a = μ−β`.
/// 3. `L₀ → ∞`, `L₀(μ−β) → 0`: `e^{−1/w}` in `w = T/L₀`.
/// 4. `L₀ → ∞`, `L₀(μ−β) → a > 0`: Case 1.2 growing shape in `w = T/L₀`
///    with `a = L₀(μ−β)`.
/// 5. `L₀(μ−β) → ∞`: Gumbel in `w = (μ−β)T − log(L₀(1−β/μ))`.
///
/// The limit constant `a` is taken at the given point of the sequence.
pub fn bdp_limit_law(case: u8, point: BdpSequencePoint) -> Result<AsymptoticLaw> {
    point.validate()?;
    let BdpSequencePoint { beta, mu, l0 } = point;
    let delta = mu - beta;
    let l = l0 as f64;
    let need_positive = |a: f64| {
        if a > 0.0 {
            Ok(a)
        } else {
            Err(Error::Hypothesis(format!("case {case} needs mu > beta, got mu − beta = {delta}")))
        }
    };
    match case {
        1 => AsymptoticLaw::unscaled(LawShape::Case11Finite { i0: l0 }),
        2 => AsymptoticLaw::unscaled(LawShape::Case12Finite {
            a: need_positive(delta)?,
            i0: l0,
        }),
        3 => AsymptoticLaw::new(LawShape::Case11Growing, l, 0.0),
        4 => AsymptoticLaw::new(
            LawShape::Case12Growing {
                a: need_positive(l * delta)?,
            },
            l,
            0.0,
        ),
        5 => {
            let d = need_positive(delta)?;
            AsymptoticLaw::new(LawShape::Gumbel, 1.0 / d, (l * (1.0 - beta / mu)).ln())
        }
        _ => Err(invalid("case", format!("must be 1..=5, got {case}"))),
    }
}

/// Alternative case-5 normalization `a(N)·T/L₀ − log(a(N)/μ)` for a
/// sequence `a(N) ~ L₀(μ−β)`.
pub fn bdp_case5_alternative(a_n: f64, mu: f64, l0: u64) -> Result<AsymptoticLaw> {
    if !(a_n > 0.0 && mu > 0.0) {
        return Err(invalid("a_n/mu", "must be > 0"));
    }
    if l0 == 0 {
        return Err(invalid("l0", "must be >= 1"));
    }
    AsymptoticLaw::new(LawShape::Gumbel, l0 as f64 / a_n, (a_n / mu).ln())
}
