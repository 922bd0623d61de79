use crate::error::{invalid, Error, Result};
use crate::model::SirsParams;
use crate::special::log_add_exp;

fn check_positive(name: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {x}")))
    }
}

/// Probability that a linear birth-death chain with birth rate `beta` and
/// unit death rate, started at `i`, reaches `k` before 0.
///
/// `h_i = (β^{-i} − 1)/(β^{-k} − 1)`, with the removable singularity at
/// `β = 1` (value `i/k`) handled by a series in `log β`.
pub fn hit_prob_linear_bdp(beta: f64, i: u64, k: u64) -> Result<f64> {
    check_positive("beta", beta)?;
    if k == 0 {
        return Err(invalid("k", "barrier must be >= 1"));
    }
    if i > k {
        return Err(invalid("i", format!("start {i} lies above the barrier {k}")));
    }
    if i == 0 {
        return Ok(0.0);
    }
    if i == k {
        return Ok(1.0);
    }
    let (fi, fk) = (i as f64, k as f64);
    let x = -beta.ln();
    if (1.0 - beta).abs() < 1e-6 && fk * x.abs() < 1e-2 {
        // expm1(n x) / x = n (1 + nx/2 + (nx)²/6 + (nx)³/24 + ...)
        let f = |n: f64| {
            let y = n * x;
            n * (1.0 + y / 2.0 + y * y / 6.0 + y * y * y / 24.0)
        };
        return Ok(f(fi) / f(fk));
    }
    if x > 0.0 {
        // β < 1: factor out β^{-k} to avoid overflow
        Ok(((fi - fk) * x).exp() * (-(-fi * x).exp_m1()) / (-(-fk * x).exp_m1()))
    } else {
        Ok((fi * x).exp_m1() / (fk * x).exp_m1())
    }
}

/// `log Σ_{k<m} ρ^k k!` for `m >= 1`.
fn log_factorial_power_sum(log_rho: f64, m: u64) -> f64 {
    let mut acc = f64::NEG_INFINITY;
    let mut log_term = 0.0;
    for k in 0..m {
        if k > 0 {
            log_term += log_rho + (k as f64).ln();
        }
        acc = log_add_exp(acc, log_term);
    }
    acc
}

/// Probability that the immigration-death chain (immigration `alpha`,
/// per-capita death `mu`, absorbing at 0) started at `l` reaches `2l`
/// before 0:
/// `Σ_{k<l} ρ^k k! / Σ_{k<2l} ρ^k k!` with `ρ = μ/α`.
pub fn hit_prob_immig_death(alpha: f64, mu: f64, l: u64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("mu", mu)?;
    if l == 0 {
        return Err(invalid("l", "must be >= 1"));
    }
    let log_rho = (mu / alpha).ln();
    let num = log_factorial_power_sum(log_rho, l);
    let den = log_factorial_power_sum(log_rho, 2 * l);
    Ok((num - den).exp())
}

/// Upper bound on the probability that the non-absorbed immigration-death
/// chain started at `l` reaches `2l` by time `t0`:
/// `(⌈t0⌉+1) h_l + (eαt0/(l⌈t0⌉))^{l⌈t0⌉} e^{−αt0}`.
///
/// The Poisson tail term is only a bound when `l⌈t0⌉ > αt0`; otherwise it is
/// replaced by the trivial bound 1. The result may exceed 1.
pub fn hit_prob_id_time_bound(alpha: f64, mu: f64, l: u64, t0: f64) -> Result<f64> {
    check_positive("alpha", alpha)?;
    check_positive("mu", mu)?;
    check_positive("t0", t0)?;
    if l == 0 {
        return Err(invalid("l", "must be >= 1"));
    }
    let ratio = l as f64 * mu / alpha;
    if ratio <= std::f64::consts::E {
        return Err(Error::Hypothesis(format!(
            "the bound needs l·mu/alpha > e, got {ratio}"
        )));
    }
    let c = t0.ceil();
    let h = hit_prob_immig_death(alpha, mu, l)?;
    let m = l as f64 * c;
    let mean = alpha * t0;
    let tail = if m > mean {
        (m * (1.0 + mean.ln() - m.ln()) - mean).exp()
    } else {
        1.0
    };
    Ok((c + 1.0) * h + tail)
}

fn check_subcritical(beta: f64, mu: f64) -> Result<()> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(invalid("beta", format!("must be finite and >= 0, got {beta}")));
    }
    check_positive("mu", mu)?;
    if mu <= beta {
        return Err(Error::Hypothesis(format!(
            "the occupation integral needs mu > beta, got mu = {mu}, beta = {beta}"
        )));
    }
    Ok(())
}

/// `E ∫₀^T L_s ds = l/(μ−β)` for the linear birth-death chain started at `l`.
pub fn integral_mean(beta: f64, mu: f64, l: u64) -> Result<f64> {
    check_subcritical(beta, mu)?;
    Ok(l as f64 / (mu - beta))
}

/// Laplace transform `E exp(−a ∫₀^T L_s ds)`.
///
/// Evaluated as `(2μ / (s + √(s² − 4βμ)))^l` with `s = β + μ + a`, which is
/// the usual root form multiplied through by its conjugate; it stays finite
/// as `β → 0`, where it reduces to `(μ/(μ+a))^l`.
pub fn integral_laplace(beta: f64, mu: f64, l: u64, a: f64) -> Result<f64> {
    check_subcritical(beta, mu)?;
    if !(a >= 0.0 && a.is_finite()) {
        return Err(invalid("a", format!("must be finite and >= 0, got {a}")));
    }
    let s = beta + mu + a;
    // s² − 4βμ expanded to avoid cancellation near a = 0
    let root = ((mu - beta) * (mu - beta) + a * (a + 2.0 * (beta + mu))).sqrt();
    let base = 2.0 * mu / (s + root);
    Ok((l as f64 * base.ln()).exp())
}

/// Markov bound `P(∫₀^T L_s ds > δ) <= l/((μ−β)δ)`; may exceed 1.
pub fn integral_tail_bound(beta: f64, mu: f64, l: u64, delta: f64) -> Result<f64> {
    check_positive("delta", delta)?;
    Ok(integral_mean(beta, mu, l)? / delta)
}

/// Bound on `P(sup_{t<=t1} |R_t − R₀|/N > 4δ)` for the SIRS chain:
/// `2 exp(−δ²N/(4(γ+1)t1)) + I₀/((1−λ+λr₀/2)δN)`.
pub fn excursion_bound(params: &SirsParams, i0: u64, r0_frac: f64, delta: f64, t1: f64) -> Result<f64> {
    check_positive("delta", delta)?;
    check_positive("t1", t1)?;
    if !(0.0..=1.0).contains(&r0_frac) {
        return Err(invalid("r0_frac", format!("must lie in [0, 1], got {r0_frac}")));
    }
    let (n, lambda, gamma) = (params.n_pop() as f64, params.lambda(), params.gamma());
    if gamma > 0.0 && t1 >= delta / gamma {
        return Err(Error::Hypothesis(format!(
            "the excursion bound needs t1 < delta/gamma = {}, got t1 = {t1}",
            delta / gamma
        )));
    }
    let drift = 1.0 - lambda + lambda * r0_frac / 2.0;
    if drift <= 0.0 {
        return Err(Error::Hypothesis(format!(
            "the excursion bound needs 1 − λ + λr₀/2 > 0, got {drift}"
        )));
    }
    let concentration = 2.0 * (-delta * delta * n / (4.0 * (gamma + 1.0) * t1)).exp();
    Ok(concentration + i0 as f64 / (drift * delta * n))
}
