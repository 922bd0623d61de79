//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

/// `P(X_t = 0 | X_0 = l0)` for the linear birth-death chain, by
/// uniformization of the generator truncated to `{0, ..., cap}` (births
/// switched off at `cap`). Poisson weights are accumulated in log space and
/// the series stops once the remaining mass is below `tol`.
pub fn bdp_extinction_uniformized(beta: f64, mu: f64, l0: usize, t: f64, cap: usize, tol: f64) -> f64 {
    let up = |x: usize| if x < cap { beta * x as f64 } else { 0.0 };
    let down = |x: usize| mu * x as f64;
    let rate = (0..=cap).map(|x| up(x) + down(x)).fold(0.0, f64::max);
    if rate == 0.0 || t == 0.0 {
        return if l0 == 0 { 1.0 } else { 0.0 };
    }
    let lt = rate * t;
    let mut p = vec![0.0; cap + 1];
    p[l0] = 1.0;
    let mut next = vec![0.0; cap + 1];
    let (mut acc, mut mass) = (0.0, 0.0);
    let (mut k, mut log_w) = (0u64, -lt);
    loop {
        let w = log_w.exp();
        acc += w * p[0];
        mass += w;
        if 1.0 - mass < tol && k as f64 > lt {
            break;
        }
        // one step of the uniformized chain: p <- p (I + Q / rate)
        next.iter_mut().for_each(|v| *v = 0.0);
        for x in 0..=cap {
            if p[x] == 0.0 {
                continue;
            }
            let (u, d) = (up(x) / rate, down(x) / rate);
            next[x] += p[x] * (1.0 - u - d);
            if u > 0.0 {
                next[x + 1] += p[x] * u;
            }
            if d > 0.0 {
                next[x - 1] += p[x] * d;
            }
        }
        std::mem::swap(&mut p, &mut next);
        k += 1;
        log_w += lt.ln() - (k as f64).ln();
    }
    acc
}

/// Probability of reaching `top` before 0 from each state of a birth-death
/// chain with rates `b(x)`, `d(x)`, from the first-step equations
/// `(b + d) h_x = b h_{x+1} + d h_{x-1}`, `h_0 = 0`, `h_top = 1`, solved by
/// Gaussian elimination on the tridiagonal system.
pub fn hitting_first_step(top: usize, b: impl Fn(usize) -> f64, d: impl Fn(usize) -> f64) -> Vec<f64> {
    assert!(top >= 1);
    let m = top - 1;
    let mut h = vec![0.0; top + 1];
    h[top] = 1.0;
    if m == 0 {
        return h;
    }
    // row x - 1 for interior state x: -d h_{x-1} + (b + d) h_x - b h_{x+1} = 0
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for row in 0..m {
        let x = row + 1;
        lower[row] = -d(x);
        diag[row] = b(x) + d(x);
        upper[row] = -b(x);
        if x + 1 == top {
            rhs[row] = b(x);
        }
    }
    for row in 1..m {
        let f = lower[row] / diag[row - 1];
        diag[row] -= f * upper[row - 1];
        rhs[row] -= f * rhs[row - 1];
    }
    h[m] = rhs[m - 1] / diag[m - 1];
    for row in (0..m - 1).rev() {
        h[row + 1] = (rhs[row] - upper[row] * h[row + 2]) / diag[row];
    }
    h
}

/// Inverse-CDF draw by bisection on a nondecreasing `cdf`, over the bracket
/// `[lo, hi]` (widened until it contains `u`).
pub fn inverse_cdf(cdf: impl Fn(f64) -> f64, u: f64, mut lo: f64, mut hi: f64) -> f64 {
    while cdf(lo) > u {
        lo -= 2.0 * (hi - lo).abs().max(1.0);
    }
    while cdf(hi) < u {
        hi += 2.0 * (hi - lo).abs().max(1.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Standard error of a binomial frequency.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}
