//! Order-preserving couplings of birth-death chains.
//!
//! Two chains sitting at the same level share their common birth and death
//! mass, so they can only separate by one chain moving alone in the
//! direction that keeps the order; chains at different levels move
//! independently. Both constructions run on a single exponential clock.

use crate::error::{invalid, Error, Result};
use crate::model::{BdiParams, SirsParams, SirsState};
use crate::rng::RngStream;
use crate::ssa::{StopCondition, TerminalReason, Trajectory};

/// Level-dependent birth and death rates of a chain on the nonnegative
/// integers.
pub trait BirthDeathRates: Send + Sync {
    fn birth(&self, z: i64) -> f64;
    fn death(&self, z: i64) -> f64;
}

impl BirthDeathRates for BdiParams {
    fn birth(&self, z: i64) -> f64 {
        self.up_rate(z)
    }
    fn death(&self, z: i64) -> f64 {
        self.down_rate(z)
    }
}

impl<F: Fn(i64) -> (f64, f64) + Send + Sync> BirthDeathRates for F {
    fn birth(&self, z: i64) -> f64 {
        self(z).0
    }
    fn death(&self, z: i64) -> f64 {
        self(z).1
    }
}

/// Two chains to be coupled so that `upper` stays above `lower`.
pub struct CoupledPair<U, L> {
    pub upper: U,
    pub lower: L,
    pub upper_start: i64,
    pub lower_start: i64,
}

#[derive(Debug, Clone)]
pub struct CoupledPath {
    pub upper: Trajectory,
    pub lower: Trajectory,
    pub upper_extinction: Option<f64>,
    pub lower_extinction: Option<f64>,
    /// Event epochs at which `upper < lower`.
    pub ordering_violations: u64,
    pub events: u64,
    pub reason: TerminalReason,
}

fn check_dominance<U: BirthDeathRates, L: BirthDeathRates>(upper: &U, lower: &L, z: i64, z1: i64, z2: i64) -> Result<()> {
    let (b1, b2, d1, d2) = (upper.birth(z), lower.birth(z), upper.death(z), lower.death(z));
    if b1 < b2 || d1 > d2 {
        return Err(Error::DominanceViolation {
            state: vec![z1, z2],
            detail: format!("at level {z}: upper (b, d) = ({b1}, {d1}), lower (b, d) = ({b2}, {d2})"),
        });
    }
    Ok(())
}

fn pick(rates: &[f64], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &a) in rates.iter().enumerate() {
        if a > 0.0 {
            acc += a;
            last = j;
            if target < acc {
                return j;
            }
        }
    }
    last
}

/// Simulates the order-preserving coupling of two birth-death chains.
///
/// `stop` is evaluated on the joint state `[upper, lower]`; with
/// `component_zero(0)` the run ends when the upper (hence also the lower)
/// chain is extinct. Dominance `b_upper >= b_lower`, `d_upper <= d_lower` is
/// checked at every level the pair visits.
pub fn simulate_coupled_pair<U: BirthDeathRates, L: BirthDeathRates>(
    pair: &CoupledPair<U, L>,
    stop: &StopCondition,
    rng: &mut RngStream,
) -> Result<CoupledPath> {
    let (mut z1, mut z2) = (pair.upper_start, pair.lower_start);
    if z2 < 0 || z1 < z2 {
        return Err(Error::InfeasibleState { state: vec![z1, z2] });
    }
    if let crate::ssa::StopMode::ComponentZero(c) = stop.mode() {
        if *c > 1 {
            return Err(invalid("stop", "joint state has two components"));
        }
    }
    let horizon = stop.horizon();
    let mut upper = Trajectory::start(1, 0.0, &[z1]);
    let mut lower = Trajectory::start(1, 0.0, &[z2]);
    let mut upper_ext = (z1 == 0).then_some(0.0);
    let mut lower_ext = (z2 == 0).then_some(0.0);
    let (mut t, mut events, mut violations) = (0.0, 0u64, 0u64);

    // channel effects on (z1, z2)
    const DIAGONAL: [(i64, i64); 4] = [(1, 0), (1, 1), (-1, -1), (0, -1)];
    const APART: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

    let reason = loop {
        if stop.holds(&[z1, z2]) {
            break TerminalReason::Stopped;
        }
        check_dominance(&pair.upper, &pair.lower, z1, z1, z2)?;
        if z2 != z1 {
            check_dominance(&pair.upper, &pair.lower, z2, z1, z2)?;
        }
        let (rates, effects) = if z1 == z2 {
            let z = z1;
            let (b1, b2, d1, d2) = (pair.upper.birth(z), pair.lower.birth(z), pair.upper.death(z), pair.lower.death(z));
            ([b1 - b2, b2, d1, d2 - d1], &DIAGONAL)
        } else {
            (
                [pair.upper.birth(z1), pair.upper.death(z1), pair.lower.birth(z2), pair.lower.death(z2)],
                &APART,
            )
        };
        let total: f64 = rates.iter().sum();
        if total <= 0.0 {
            if let Some(h) = horizon {
                t = h.max(t);
                break TerminalReason::Stopped;
            }
            break TerminalReason::Absorbed;
        }
        if stop.capped(events) {
            break TerminalReason::Capped;
        }
        let dt = rng.exponential(total);
        let target = rng.uniform() * total;
        if let Some(h) = horizon {
            if t + dt > h {
                t = h;
                break TerminalReason::Stopped;
            }
        }
        let (dz1, dz2) = effects[pick(&rates, target)];
        t += dt;
        events += 1;
        z1 += dz1;
        z2 += dz2;
        if dz1 != 0 {
            upper.push(t, &[z1]);
            if z1 == 0 && upper_ext.is_none() {
                upper_ext = Some(t);
            }
        }
        if dz2 != 0 {
            lower.push(t, &[z2]);
            if z2 == 0 && lower_ext.is_none() {
                lower_ext = Some(t);
            }
        }
        if z1 < z2 {
            violations += 1;
        }
    };
    for traj in [&mut upper, &mut lower] {
        if t > traj.final_time() {
            let last = traj.final_state().to_vec();
            traj.push(t, &last);
        }
        traj.terminal_reason = reason;
    }
    Ok(CoupledPath {
        upper,
        lower,
        upper_extinction: upper_ext,
        lower_extinction: lower_ext,
        ordering_violations: violations,
        events,
        reason,
    })
}

/// Barrier events of the sandwich argument to monitor along each path.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SandwichMonitor {
    pub i_max: Option<u64>,
    pub r_max: Option<u64>,
    /// Keep full trajectories; otherwise only the start and end points.
    pub record: bool,
}

#[derive(Debug, Clone)]
pub struct SandwichPath {
    pub lower: Trajectory,
    /// `(i, r)` of the SIRS chain.
    pub mid: Trajectory,
    pub upper: Trajectory,
    pub lower_extinction: Option<f64>,
    pub mid_extinction: Option<f64>,
    pub upper_extinction: Option<f64>,
    /// First time `λ(1−(i+r)/N)` left `[lower_beta, upper_beta]` while
    /// `i > 0`.
    pub domination_failure: Option<f64>,
    /// First time `i > i_max` or `r > r_max`.
    pub barrier_breach: Option<f64>,
    /// Event epochs with `lower <= i <= upper` broken before any domination
    /// failure.
    pub ordering_violations: u64,
    pub events: u64,
    pub reason: TerminalReason,
}

impl SandwichPath {
    /// `T(lower) <= T(SIRS) <= T(upper)`, when all three are extinct.
    pub fn extinction_ordered(&self) -> Option<bool> {
        match (self.lower_extinction, self.mid_extinction, self.upper_extinction) {
            (Some(l), Some(m), Some(u)) => Some(l <= m && m <= u),
            _ => None,
        }
    }
}

/// Joint stop condition for the sandwich state `[lower, i, r, upper]`: all
/// three infected counts are zero.
pub fn sandwich_all_extinct() -> StopCondition {
    StopCondition::predicate(|s: &[i64]| s[0] == 0 && s[1] == 0 && s[3] == 0)
}

const LOWER: usize = 0;
const MID: usize = 1;
const UPPER: usize = 2;

/// Couples the SIRS infected count between a lower and an upper linear
/// birth-death chain (unit death rate, birth rates `lower_beta` and
/// `upper_beta`), both started at `I₀`.
///
/// Chains that share a level are grouped; within a group, births are split
/// into nested channels by increasing birth rate and deaths by increasing
/// death rate, so each chain keeps its own marginal law and a chain with a
/// smaller birth rate and larger death rate can never overtake one above it.
/// A SIRS death is a recovery and also increments `r`. Immunity loss runs
/// on its own channel.
///
/// `stop` is evaluated on `[lower, i, r, upper]`; see
/// [`sandwich_all_extinct`].
pub fn simulate_sirs_sandwich(
    params: &SirsParams,
    state0: SirsState,
    upper_beta: f64,
    lower_beta: f64,
    monitor: SandwichMonitor,
    stop: &StopCondition,
    rng: &mut RngStream,
) -> Result<SandwichPath> {
    if !(lower_beta >= 0.0 && lower_beta <= upper_beta && upper_beta.is_finite()) {
        return Err(invalid(
            "lower_beta",
            format!("need 0 <= lower_beta <= upper_beta, got {lower_beta} and {upper_beta}"),
        ));
    }
    SirsState::new(params, state0.i, state0.r)?;
    let n = params.n_pop() as i64;
    let nf = params.n_pop() as f64;
    let (lambda, gamma) = (params.lambda(), params.gamma());
    let mut z = [state0.i as i64; 3];
    let mut r = state0.r as i64;
    let horizon = stop.horizon();

    let mut lower = Trajectory::start(1, 0.0, &[z[LOWER]]);
    let mut mid = Trajectory::start(2, 0.0, &[z[MID], r]);
    let mut upper = Trajectory::start(1, 0.0, &[z[UPPER]]);
    let mut ext = [None; 3];
    for c in 0..3 {
        if z[c] == 0 {
            ext[c] = Some(0.0);
        }
    }
    let mut domination_failure = None;
    let mut barrier_breach = None;
    let (mut t, mut events, mut violations) = (0.0, 0u64, 0u64);

    // Up to 3 birth + 3 death channels per level group, plus immunity loss.
    let mut rates = [0.0f64; 7];
    let mut effects = [[0i64; 3]; 7];

    let check_barriers = |i: i64, r: i64| {
        monitor.i_max.is_some_and(|m| i > m as i64) || monitor.r_max.is_some_and(|m| r > m as i64)
    };
    if check_barriers(z[MID], r) {
        barrier_breach = Some(0.0);
    }

    let reason = loop {
        if stop.holds(&[z[LOWER], z[MID], r, z[UPPER]]) {
            break TerminalReason::Stopped;
        }
        let (i, s) = (z[MID], n - z[MID] - r);
        if i > 0 && domination_failure.is_none() {
            let per_capita = lambda * s as f64 / nf;
            if per_capita < lower_beta || per_capita > upper_beta {
                domination_failure = Some(t);
            }
        }
        let birth = [
            lower_beta * z[LOWER] as f64,
            lambda * s as f64 * i as f64 / nf,
            upper_beta * z[UPPER] as f64,
        ];
        let death = [z[LOWER] as f64, i as f64, z[UPPER] as f64];

        let mut m = 0;
        let mut done = [false; 3];
        for c in 0..3 {
            if done[c] {
                continue;
            }
            let mut group = [0usize; 3];
            let mut g = 0;
            for d in c..3 {
                if z[d] == z[c] {
                    group[g] = d;
                    g += 1;
                    done[d] = true;
                }
            }
            let group = &mut group[..g];
            for (values, sign) in [(&birth, 1i64), (&death, -1i64)] {
                group.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
                let mut prev = 0.0;
                for (k, &c_k) in group.iter().enumerate() {
                    let rate = values[c_k] - prev;
                    prev = values[c_k];
                    if rate <= 0.0 {
                        continue;
                    }
                    let mut effect = [0i64; 3];
                    for &member in &group[k..] {
                        effect[member] = sign;
                    }
                    rates[m] = rate;
                    effects[m] = effect;
                    m += 1;
                }
            }
        }
        // immunity loss moves only r
        let loss = gamma * r as f64;
        let loss_index = m;
        rates[m] = loss;
        effects[m] = [0; 3];
        m += 1;

        let total: f64 = rates[..m].iter().sum();
        if total <= 0.0 {
            if let Some(h) = horizon {
                t = h.max(t);
                break TerminalReason::Stopped;
            }
            break TerminalReason::Absorbed;
        }
        if stop.capped(events) {
            break TerminalReason::Capped;
        }
        let dt = rng.exponential(total);
        let target = rng.uniform() * total;
        if let Some(h) = horizon {
            if t + dt > h {
                t = h;
                break TerminalReason::Stopped;
            }
        }
        let j = pick(&rates[..m], target);
        t += dt;
        events += 1;
        if j == loss_index {
            r -= 1;
        } else {
            let e = effects[j];
            for c in 0..3 {
                z[c] += e[c];
            }
            if e[MID] < 0 {
                r += 1;
            }
        }
        if monitor.record {
            if effects[j][LOWER] != 0 {
                lower.push(t, &[z[LOWER]]);
            }
            if j == loss_index || effects[j][MID] != 0 {
                mid.push(t, &[z[MID], r]);
            }
            if effects[j][UPPER] != 0 {
                upper.push(t, &[z[UPPER]]);
            }
        }
        for c in 0..3 {
            if z[c] == 0 && ext[c].is_none() {
                ext[c] = Some(t);
            }
        }
        if barrier_breach.is_none() && check_barriers(z[MID], r) {
            barrier_breach = Some(t);
        }
        if domination_failure.is_none() && !(z[LOWER] <= z[MID] && z[MID] <= z[UPPER]) {
            violations += 1;
        }
    };

    for (traj, state) in [
        (&mut lower, vec![z[LOWER]]),
        (&mut mid, vec![z[MID], r]),
        (&mut upper, vec![z[UPPER]]),
    ] {
        if t > traj.final_time() || traj.final_state() != state.as_slice() {
            traj.push(t, &state);
        }
        traj.terminal_reason = reason;
    }
    Ok(SandwichPath {
        lower,
        mid,
        upper,
        lower_extinction: ext[LOWER],
        mid_extinction: ext[MID],
        upper_extinction: ext[UPPER],
        domination_failure,
        barrier_breach,
        ordering_violations: violations,
        events,
        reason,
    })
}
