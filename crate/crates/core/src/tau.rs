//! Modified (Cao-Gillespie-Petzold) explicit Poisson τ-leaping.
//!
//! A channel is critical when fewer than `n_c` firings would exhaust one of
//! its reactants. Critical channels fire one at a time on an exact
//! exponential clock; the rest leap by Poisson counts over a step chosen so
//! that the expected relative change of every propensity stays below `ε`.
//! Steps too short to be worth leaping are replaced by a burst of exact SSA
//! steps, and leaps that would leave the state space are retried at half the
//! step.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::ReactionSystem;
use crate::rng::RngStream;
use crate::ssa::{check_initial, run_direct, Extinction, NoObserver, StopCondition, TerminalReason};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TauConfig {
    /// Critical-reaction threshold.
    pub n_c: u64,
    /// Leap-condition error bound.
    pub epsilon: f64,
    /// Exact steps executed when a leap would be too short.
    pub ssa_fallback_steps: u32,
    /// Leap only if the step exceeds this multiple of the mean SSA step.
    pub ssa_switch_multiple: f64,
}

impl Default for TauConfig {
    fn default() -> Self {
        Self {
            n_c: 200,
            epsilon: 0.02,
            ssa_fallback_steps: 100,
            ssa_switch_multiple: 10.0,
        }
    }
}

impl TauConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_c == 0 {
            return Err(invalid("n_c", "must be a positive integer"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(invalid("epsilon", format!("must lie in (0, 1), got {}", self.epsilon)));
        }
        if self.ssa_fallback_steps == 0 {
            return Err(invalid("ssa_fallback_steps", "must be a positive integer"));
        }
        if !(self.ssa_switch_multiple.is_finite() && self.ssa_switch_multiple >= 0.0) {
            return Err(invalid("ssa_switch_multiple", "must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!(
            "tau(n_c={},epsilon={},fallback={},switch={})",
            self.n_c, self.epsilon, self.ssa_fallback_steps, self.ssa_switch_multiple
        )
    }
}

/// How the state last changed before a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepKind {
    None,
    Exact,
    /// Poisson leap that also fired one critical channel.
    LeapWithCritical,
    Leap,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauRun {
    pub extinction: Extinction,
    pub leaps: u64,
    pub exact_steps: u64,
    pub rejected_leaps: u64,
    pub last_step: StepKind,
}

struct Workspace {
    propensities: Vec<f64>,
    critical: Vec<bool>,
    /// Channels with positive propensity that are not critical.
    leaping: Vec<bool>,
    candidate: Vec<i64>,
    /// Species levels at the current state.
    levels: Vec<i64>,
    /// `(species, n_c * per_firing)` for the reactants of each channel: the
    /// channel is critical when a reactant level falls below the second entry.
    thresholds: Vec<Vec<(usize, i64)>>,
    /// Per channel: `(species, change per firing)` for every species it
    /// changes.
    changes: Vec<Vec<(usize, f64)>>,
    order_factor: Vec<f64>,
    /// Per species scratch: drift, variance, consumed by a leaping channel.
    drift: Vec<f64>,
    variance: Vec<f64>,
    consumed: Vec<bool>,
}

impl Workspace {
    fn new<S: ReactionSystem + ?Sized>(system: &S, n_c: u64) -> Self {
        let m = system.reaction_count();
        let species = system.species();
        // floor(level / per) < n_c  <=>  level < n_c * per
        let thresholds: Vec<Vec<(usize, i64)>> = (0..m)
            .map(|j| {
                system
                    .reactants(j)
                    .iter()
                    .map(|r| {
                        let t = n_c.saturating_mul(u64::from(r.per_firing)).min(i64::MAX as u64);
                        (r.species, t as i64)
                    })
                    .collect()
            })
            .collect();
        let changes = (0..m)
            .map(|j| {
                species
                    .iter()
                    .enumerate()
                    .map(|(k, s)| (k, s.level.change(system.stoichiometry(j)) as f64))
                    .filter(|&(_, v)| v != 0.0)
                    .collect()
            })
            .collect();
        Self {
            propensities: vec![0.0; m],
            critical: vec![false; m],
            leaping: vec![false; m],
            candidate: vec![0; system.dimension()],
            levels: vec![0; species.len()],
            thresholds,
            changes,
            order_factor: species.iter().map(|s| s.order_factor).collect(),
            drift: vec![0.0; species.len()],
            variance: vec![0.0; species.len()],
            consumed: vec![false; species.len()],
        }
    }

    /// Refreshes the species levels and marks the critical channels, i.e.
    /// those fewer than `n_c` firings away from exhausting a reactant.
    /// Returns whether any channel leaps.
    fn mark_critical<S: ReactionSystem + ?Sized>(&mut self, system: &S, state: &[i64]) -> bool {
        for (level, s) in self.levels.iter_mut().zip(system.species()) {
            *level = s.level.eval(state);
        }
        let mut any = false;
        for (j, rs) in self.thresholds.iter().enumerate() {
            let active = self.propensities[j] > 0.0;
            let critical = active && rs.iter().any(|&(sp, t)| self.levels[sp] < t);
            self.critical[j] = critical;
            self.leaping[j] = active && !critical;
            any |= self.leaping[j];
        }
        any
    }

    /// Leap size bound τ' from the leaping channels; infinite when no
    /// species is consumed by one.
    fn noncritical_tau(&mut self, epsilon: f64) -> f64 {
        self.drift.fill(0.0);
        self.variance.fill(0.0);
        self.consumed.fill(false);
        for (j, &aj) in self.propensities.iter().enumerate() {
            if !self.leaping[j] {
                continue;
            }
            for &(k, v) in &self.changes[j] {
                self.drift[k] += v * aj;
                self.variance[k] += v * v * aj;
            }
            for &(k, _) in &self.thresholds[j] {
                self.consumed[k] = true;
            }
        }
        let mut tau = f64::INFINITY;
        for k in 0..self.levels.len() {
            if !self.consumed[k] {
                continue;
            }
            let bound = (epsilon * self.levels[k] as f64 / self.order_factor[k]).max(1.0);
            if self.drift[k] != 0.0 {
                tau = tau.min(bound / self.drift[k].abs());
            }
            if self.variance[k] > 0.0 {
                tau = tau.min(bound * bound / self.variance[k]);
            }
        }
        tau
    }
}

fn select_critical(propensities: &[f64], critical: &[bool], target: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (j, (&a, &c)) in propensities.iter().zip(critical).enumerate() {
        if !c || a <= 0.0 {
            continue;
        }
        acc += a;
        last = j;
        if target < acc {
            return j;
        }
    }
    last
}

/// Approximate extinction-time sample by modified τ-leaping.
pub fn simulate_extinction_tau<S: ReactionSystem + ?Sized>(
    system: &S,
    state0: &[i64],
    stop: &StopCondition,
    cfg: &TauConfig,
    rng: &mut RngStream,
) -> Result<Extinction> {
    simulate_tau_detailed(system, state0, stop, cfg, rng).map(|run| run.extinction)
}

/// [`simulate_extinction_tau`] with step statistics.
pub fn simulate_tau_detailed<S: ReactionSystem + ?Sized>(
    system: &S,
    state0: &[i64],
    stop: &StopCondition,
    cfg: &TauConfig,
    rng: &mut RngStream,
) -> Result<TauRun> {
    let (run, _) = simulate_tau_to_stop(system, state0, stop, cfg, rng)?;
    Ok(run)
}

/// τ-leaping run that also returns the final state.
pub fn simulate_tau_to_stop<S: ReactionSystem + ?Sized>(
    system: &S,
    state0: &[i64],
    stop: &StopCondition,
    cfg: &TauConfig,
    rng: &mut RngStream,
) -> Result<(TauRun, Vec<i64>)> {
    check_initial(system, state0, stop)?;
    cfg.validate()?;
    let m = system.reaction_count();
    let horizon = stop.horizon();
    let mut ws = Workspace::new(system, cfg.n_c);
    let mut state = state0.to_vec();
    let (mut t, mut steps) = (0.0, 0u64);
    let (mut leaps, mut exact_steps, mut rejected) = (0u64, 0u64, 0u64);
    let mut last_step = StepKind::None;

    let reason = 'outer: loop {
        if stop.holds(&state) {
            break TerminalReason::Stopped;
        }
        system.propensities(&state, &mut ws.propensities);
        let a0: f64 = ws.propensities.iter().sum();
        if a0 <= 0.0 {
            if let Some(h) = horizon {
                t = h.max(t);
                break TerminalReason::Stopped;
            }
            break TerminalReason::Absorbed;
        }
        if stop.capped(steps) {
            break TerminalReason::Capped;
        }
        let any_noncritical = ws.mark_critical(system, &state);
        let mut tau_noncritical = if any_noncritical {
            ws.noncritical_tau(cfg.epsilon)
        } else {
            f64::INFINITY
        };

        loop {
            if tau_noncritical < cfg.ssa_switch_multiple / a0 {
                let before = steps;
                let outcome = run_direct(
                    system,
                    &mut state,
                    &mut t,
                    &mut steps,
                    stop,
                    rng,
                    &mut ws.propensities,
                    Some(u64::from(cfg.ssa_fallback_steps)),
                    &mut NoObserver,
                );
                exact_steps += steps - before;
                if steps > before {
                    last_step = StepKind::Exact;
                }
                match outcome {
                    Some(reason) => break 'outer reason,
                    None => continue 'outer,
                }
            }

            let critical_total: f64 = (0..m)
                .filter(|&j| ws.critical[j])
                .map(|j| ws.propensities[j])
                .sum();
            let tau_critical = if critical_total > 0.0 {
                rng.exponential(critical_total)
            } else {
                f64::INFINITY
            };
            let (mut tau, mut fire_critical) = if tau_noncritical < tau_critical {
                (tau_noncritical, false)
            } else {
                (tau_critical, true)
            };
            let mut reaches_horizon = false;
            if let Some(h) = horizon {
                if t + tau >= h {
                    tau = h - t;
                    fire_critical = false;
                    reaches_horizon = true;
                }
            }
            if !tau.is_finite() {
                // No channel bounds the leap; take the exact route.
                tau_noncritical = 0.0;
                continue;
            }

            ws.candidate.copy_from_slice(&state);
            for j in (0..m).filter(|&j| any_noncritical && ws.leaping[j]) {
                let aj = ws.propensities[j];
                let count = rng.poisson(aj * tau) as i64;
                if count > 0 {
                    for (x, d) in ws.candidate.iter_mut().zip(system.stoichiometry(j)) {
                        *x += count * d;
                    }
                }
            }
            if fire_critical {
                let jc = select_critical(&ws.propensities, &ws.critical, rng.uniform() * critical_total);
                for (x, d) in ws.candidate.iter_mut().zip(system.stoichiometry(jc)) {
                    *x += d;
                }
            }

            if system.is_feasible(&ws.candidate) {
                state.copy_from_slice(&ws.candidate);
                t += tau;
                steps += 1;
                last_step = if !any_noncritical {
                    // one critical firing and nothing else: an exact step
                    exact_steps += 1;
                    StepKind::Exact
                } else if fire_critical {
                    leaps += 1;
                    StepKind::LeapWithCritical
                } else {
                    leaps += 1;
                    StepKind::Leap
                };
                if reaches_horizon && !stop.holds(&state) {
                    break 'outer TerminalReason::Stopped;
                }
                continue 'outer;
            }
            rejected += 1;
            tau_noncritical = tau / 2.0;
        }
    };

    Ok((
        TauRun {
            extinction: Extinction {
                time: t,
                reason,
                steps,
            },
            leaps,
            exact_steps,
            rejected_leaps: rejected,
            last_step,
        },
        state,
    ))
}
