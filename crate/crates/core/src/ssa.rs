//! Exact simulation by Gillespie's direct method.
//!
//! Each event draws two uniforms: one for the exponential sojourn with the
//! total propensity as rate, one for the channel, which is picked by a
//! cumulative-sum scan in the system's fixed channel order.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::ReactionSystem;
use crate::rng::RngStream;

pub const DEFAULT_EVENT_CAP: u64 = 1_000_000_000;

pub type StatePredicate = Arc<dyn Fn(&[i64]) -> bool + Send + Sync>;

#[derive(Clone)]
pub enum StopMode {
    /// Stop the first time the given state coordinate is zero.
    ComponentZero(usize),
    /// Run until the given model time.
    TimeHorizon(f64),
    Predicate(StatePredicate),
}

impl fmt::Debug for StopMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ComponentZero(i) => write!(f, "ComponentZero({i})"),
            Self::TimeHorizon(t) => write!(f, "TimeHorizon({t})"),
            Self::Predicate(_) => f.write_str("Predicate(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StopCondition {
    mode: StopMode,
    event_cap: Option<u64>,
}

impl StopCondition {
    pub fn component_zero(index: usize) -> Self {
        Self {
            mode: StopMode::ComponentZero(index),
            event_cap: Some(DEFAULT_EVENT_CAP),
        }
    }

    pub fn time_horizon(t_max: f64) -> Result<Self> {
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(invalid("t_max", format!("must be finite and >= 0, got {t_max}")));
        }
        Ok(Self {
            mode: StopMode::TimeHorizon(t_max),
            event_cap: Some(DEFAULT_EVENT_CAP),
        })
    }

    pub fn predicate(f: impl Fn(&[i64]) -> bool + Send + Sync + 'static) -> Self {
        Self {
            mode: StopMode::Predicate(Arc::new(f)),
            event_cap: Some(DEFAULT_EVENT_CAP),
        }
    }

    pub fn with_event_cap(mut self, cap: Option<u64>) -> Result<Self> {
        if cap == Some(0) {
            return Err(invalid("event_cap", "must be > 0 when present"));
        }
        self.event_cap = cap;
        Ok(self)
    }

    pub fn mode(&self) -> &StopMode {
        &self.mode
    }

    pub fn event_cap(&self) -> Option<u64> {
        self.event_cap
    }

    pub(crate) fn horizon(&self) -> Option<f64> {
        match self.mode {
            StopMode::TimeHorizon(t) => Some(t),
            _ => None,
        }
    }

    /// Whether the state-based part of the condition holds.
    pub(crate) fn holds(&self, state: &[i64]) -> bool {
        match &self.mode {
            StopMode::ComponentZero(i) => state[*i] == 0,
            StopMode::TimeHorizon(_) => false,
            StopMode::Predicate(f) => f(state),
        }
    }

    pub(crate) fn validate_for(&self, dimension: usize) -> Result<()> {
        if let StopMode::ComponentZero(i) = self.mode {
            if i >= dimension {
                return Err(invalid(
                    "stop",
                    format!("component {i} out of range for a {dimension}-dimensional state"),
                ));
            }
        }
        Ok(())
    }

    pub(crate) fn capped(&self, events: u64) -> bool {
        self.event_cap.is_some_and(|cap| events >= cap)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    /// The stop condition was met.
    Stopped,
    /// Every propensity vanished before the stop condition was met.
    Absorbed,
    /// The event cap was exhausted first; the sample is censored.
    Capped,
}

impl TerminalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Stopped => "stopped",
            Self::Absorbed => "absorbed",
            Self::Capped => "capped",
        }
    }

    pub fn is_censored(self) -> bool {
        self == Self::Capped
    }
}

impl fmt::Display for TerminalReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TerminalReason {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stopped" => Ok(Self::Stopped),
            "absorbed" => Ok(Self::Absorbed),
            "capped" => Ok(Self::Capped),
            other => Err(format!("unknown terminal reason `{other}`")),
        }
    }
}

/// Outcome of one run: the time the run ended, why, and how many simulation
/// steps it took (events for SSA; leaps plus exact steps for τ-leaping).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extinction {
    pub time: f64,
    pub reason: TerminalReason,
    pub steps: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recording {
    AllEvents,
    /// Right-continuous state sampled at multiples of `dt`, plus the
    /// terminal state.
    Grid(f64),
}

/// A recorded sample path. States are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub dimension: usize,
    pub states: Vec<i64>,
    pub terminal_reason: TerminalReason,
}

impl Trajectory {
    pub(crate) fn start(dimension: usize, t0: f64, state: &[i64]) -> Self {
        Self {
            times: vec![t0],
            dimension,
            states: state.to_vec(),
            terminal_reason: TerminalReason::Stopped,
        }
    }

    pub(crate) fn push(&mut self, t: f64, state: &[i64]) {
        self.times.push(t);
        self.states.extend_from_slice(state);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, k: usize) -> &[i64] {
        &self.states[k * self.dimension..(k + 1) * self.dimension]
    }

    pub fn states(&self) -> impl Iterator<Item = &[i64]> {
        self.states.chunks_exact(self.dimension)
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds at least one point")
    }

    pub fn final_state(&self) -> &[i64] {
        self.state(self.len() - 1)
    }

    pub fn event_count(&self) -> usize {
        self.len().saturating_sub(1)
    }

    /// `∫ x_component(s) ds` over the recorded span for a piecewise-constant
    /// path recorded at every event.
    pub fn area(&self, component: usize) -> f64 {
        self.times
            .windows(2)
            .enumerate()
            .map(|(k, w)| self.state(k)[component] as f64 * (w[1] - w[0]))
            .sum()
    }

    /// Largest `|x_component(t) − x_component(0)|` over the recorded points.
    pub fn max_deviation(&self, component: usize) -> i64 {
        let x0 = self.state(0)[component];
        self.states().map(|s| (s[component] - x0).abs()).max().unwrap_or(0)
    }
}

/// Receives the path as it is generated.
pub(crate) trait PathObserver {
    fn on_event(&mut self, t: f64, state: &[i64]);
    fn on_end(&mut self, t: f64, state: &[i64]);
}

pub(crate) struct NoObserver;

impl PathObserver for NoObserver {
    fn on_event(&mut self, _: f64, _: &[i64]) {}
    fn on_end(&mut self, _: f64, _: &[i64]) {}
}

struct EventRecorder(Trajectory);

impl PathObserver for EventRecorder {
    fn on_event(&mut self, t: f64, state: &[i64]) {
        self.0.push(t, state);
    }
    fn on_end(&mut self, _: f64, _: &[i64]) {}
}

struct GridRecorder {
    traj: Trajectory,
    dt: f64,
    next_index: u64,
    current: Vec<i64>,
}

impl GridRecorder {
    fn fill_until(&mut self, t: f64) {
        loop {
            let grid_t = self.next_index as f64 * self.dt;
            if grid_t >= t {
                break;
            }
            self.traj.push(grid_t, &self.current);
            self.next_index += 1;
        }
    }
}

impl PathObserver for GridRecorder {
    fn on_event(&mut self, t: f64, state: &[i64]) {
        self.fill_until(t);
        self.current.copy_from_slice(state);
    }

    fn on_end(&mut self, t: f64, state: &[i64]) {
        self.fill_until(t);
        if t > self.traj.final_time() {
            self.traj.push(t, state);
        } else {
            let n = self.traj.len() - 1;
            let d = self.traj.dimension;
            self.traj.states[n * d..].copy_from_slice(state);
        }
    }
}

pub(crate) fn check_initial<S: ReactionSystem + ?Sized>(
    system: &S,
    state0: &[i64],
    stop: &StopCondition,
) -> Result<()> {
    if state0.len() != system.dimension() || !system.is_feasible(state0) {
        return Err(Error::InfeasibleState {
            state: state0.to_vec(),
        });
    }
    stop.validate_for(system.dimension())
}

/// Picks the channel whose cumulative propensity first exceeds `target`.
#[inline]
pub(crate) fn select_channel(propensities: &[f64], target: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (j, &a) in propensities.iter().enumerate() {
        if a > 0.0 {
            cumulative += a;
            last_positive = j;
            if target < cumulative {
                return j;
            }
        }
    }
    last_positive
}

/// Core direct-method loop shared by the public entry points and by the
/// τ-leaping fallback. Advances `state`/`t` in place and returns the
/// terminal reason when the run ends, or `None` if `max_steps` ran out first.
pub(crate) fn run_direct<S, O>(
    system: &S,
    state: &mut [i64],
    t: &mut f64,
    steps: &mut u64,
    stop: &StopCondition,
    rng: &mut RngStream,
    propensities: &mut [f64],
    max_steps: Option<u64>,
    observer: &mut O,
) -> Option<TerminalReason>
where
    S: ReactionSystem + ?Sized,
    O: PathObserver,
{
    let horizon = stop.horizon();
    let mut taken = 0u64;
    loop {
        if stop.holds(state) {
            return Some(TerminalReason::Stopped);
        }
        if max_steps.is_some_and(|m| taken >= m) {
            return None;
        }
        system.propensities(state, propensities);
        let a0: f64 = propensities.iter().sum();
        if a0 <= 0.0 {
            if let Some(h) = horizon {
                *t = h.max(*t);
                return Some(TerminalReason::Stopped);
            }
            return Some(TerminalReason::Absorbed);
        }
        if stop.capped(*steps) {
            return Some(TerminalReason::Capped);
        }
        let dt = rng.exponential(a0);
        let target = rng.uniform() * a0;
        if let Some(h) = horizon {
            if *t + dt > h {
                *t = h;
                return Some(TerminalReason::Stopped);
            }
        }
        let j = select_channel(propensities, target);
        for (x, d) in state.iter_mut().zip(system.stoichiometry(j)) {
            *x += d;
        }
        *t += dt;
        *steps += 1;
        taken += 1;
        observer.on_event(*t, state);
    }
}

fn simulate_observed<S, O>(
    system: &S,
    state0: &[i64],
    stop: &StopCondition,
    rng: &mut RngStream,
    observer: &mut O,
) -> Result<(Extinction, Vec<i64>)>
where
    S: ReactionSystem + ?Sized,
    O: PathObserver,
{
    check_initial(system, state0, stop)?;
    let mut state = state0.to_vec();
    let mut propensities = vec![0.0; system.reaction_count()];
    let (mut t, mut steps) = (0.0, 0u64);
    let reason = run_direct(
        system,
        &mut state,
        &mut t,
        &mut steps,
        stop,
        rng,
        &mut propensities,
        None,
        observer,
    )
    .expect("unbounded run always terminates with a reason");
    observer.on_end(t, &state);
    Ok((
        Extinction {
            time: t,
            reason,
            steps,
        },
        state,
    ))
}

/// Samples the time at which `stop` first holds.
///
/// With `stop = component_zero(infected)` on the SIRS system this is a draw
/// of the extinction time. A run that exhausts the event cap returns
/// [`TerminalReason::Capped`] with the time reached.
pub fn simulate_extinction<S: ReactionSystem + ?Sized>(
    system: &S,
    state0: &[i64],
    stop: &StopCondition,
    rng: &mut RngStream,
) -> Result<Extinction> {
    simulate_observed(system, state0, stop, rng, &mut NoObserver).map(|(e, _)| e)
}

/// Like [`simulate_extinction`] but also returns the final state.
pub fn simulate_to_stop<S: ReactionSystem + ?Sized>(
    system: &S,
    state0: &[i64],
    stop: &StopCondition,
    rng: &mut RngStream,
) -> Result<(Extinction, Vec<i64>)> {
    simulate_observed(system, state0, stop, rng, &mut NoObserver)
}

pub fn simulate_trajectory<S: ReactionSystem + ?Sized>(
    system: &S,
    state0: &[i64],
    stop: &StopCondition,
    rng: &mut RngStream,
    recording: Recording,
) -> Result<Trajectory> {
    let dim = system.dimension();
    match recording {
        Recording::AllEvents => {
            let mut rec = EventRecorder(Trajectory::start(dim, 0.0, state0));
            let (ext, _) = simulate_observed(system, state0, stop, rng, &mut rec)?;
            let mut traj = rec.0;
            if ext.time > traj.final_time() {
                // horizon reached between events
                let last = traj.final_state().to_vec();
                traj.push(ext.time, &last);
            }
            traj.terminal_reason = ext.reason;
            Ok(traj)
        }
        Recording::Grid(dt) => {
            if !(dt.is_finite() && dt > 0.0) {
                return Err(invalid("dt", format!("grid spacing must be > 0, got {dt}")));
            }
            let mut rec = GridRecorder {
                traj: Trajectory::start(dim, 0.0, state0),
                dt,
                next_index: 1,
                current: state0.to_vec(),
            };
            let (ext, _) = simulate_observed(system, state0, stop, rng, &mut rec)?;
            let mut traj = rec.traj;
            traj.terminal_reason = ext.reason;
            Ok(traj)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{bdi_system, sirs_system, BdiParams, SirsParams, SirsSystem};

    fn pure_death() -> crate::model::BdiSystem {
        bdi_system(BdiParams::birth_death(0.0, 1.0).unwrap())
    }

    #[test]
    fn pure_death_extinction_is_exponential() {
        let sys = pure_death();
        let stop = StopCondition::component_zero(0);
        let mut rng = RngStream::from_seed(1);
        let reps = 100_000;
        let mean: f64 = (0..reps)
            .map(|_| simulate_extinction(&sys, &[1], &stop, &mut rng).unwrap().time)
            .sum::<f64>()
            / reps as f64;
        // sd of the mean is 1/sqrt(reps) ≈ 0.0032
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn already_extinct_sirs_stops_at_zero() {
        let sys = sirs_system(SirsParams::new(100, 1.5, 0.2).unwrap());
        let stop = StopCondition::component_zero(SirsSystem::INFECTED);
        let ext = simulate_extinction(&sys, &[0, 40], &stop, &mut RngStream::from_seed(3)).unwrap();
        assert_eq!(ext.time, 0.0);
        assert_eq!(ext.reason, TerminalReason::Stopped);
        assert_eq!(ext.steps, 0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let sys = sirs_system(SirsParams::new(1000, 0.95, 0.3).unwrap());
        let stop = StopCondition::component_zero(0);
        let a = simulate_extinction(&sys, &[20, 10], &stop, &mut RngStream::derive(5, 0, 9)).unwrap();
        let b = simulate_extinction(&sys, &[20, 10], &stop, &mut RngStream::derive(5, 0, 9)).unwrap();
        assert_eq!(a.time.to_bits(), b.time.to_bits());
        assert_eq!(a.steps, b.steps);
    }

    #[test]
    fn trajectory_jumps_are_valid() {
        let sys = sirs_system(SirsParams::new(500, 1.1, 0.4).unwrap());
        let stop = StopCondition::component_zero(0);
        for seed in 0..20 {
            let traj = simulate_trajectory(&sys, &[15, 30], &stop, &mut RngStream::from_seed(seed), Recording::AllEvents)
                .unwrap();
            assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
            let nus: Vec<&[i64]> = (0..3).map(|j| sys.stoichiometry(j)).collect();
            for k in 1..traj.len() {
                let d: Vec<i64> = traj.state(k).iter().zip(traj.state(k - 1)).map(|(a, b)| a - b).collect();
                assert!(nus.iter().any(|nu| *nu == d.as_slice()), "{d:?}");
                assert!(sys.is_feasible(traj.state(k)));
            }
            assert_eq!(traj.final_state()[0], 0);
        }
    }

    #[test]
    fn pure_death_from_three_has_three_events() {
        let traj = simulate_trajectory(
            &pure_death(),
            &[3],
            &StopCondition::component_zero(0),
            &mut RngStream::from_seed(8),
            Recording::AllEvents,
        )
        .unwrap();
        assert_eq!(traj.event_count(), 3);
        assert_eq!(traj.states, vec![3, 2, 1, 0]);
    }

    #[test]
    fn coarse_grid_keeps_initial_and_terminal() {
        let sys = pure_death();
        let traj = simulate_trajectory(
            &sys,
            &[3],
            &StopCondition::component_zero(0),
            &mut RngStream::from_seed(8),
            Recording::Grid(1e6),
        )
        .unwrap();
        assert_eq!(traj.len(), 2);
        assert_eq!(traj.states, vec![3, 0]);
        // same seed with full recording ends at the same time
        let full = simulate_trajectory(
            &sys,
            &[3],
            &StopCondition::component_zero(0),
            &mut RngStream::from_seed(8),
            Recording::AllEvents,
        )
        .unwrap();
        assert_eq!(traj.final_time(), full.final_time());
    }

    #[test]
    fn grid_samples_right_continuous_state() {
        let sys = sirs_system(SirsParams::new(200, 0.9, 0.5).unwrap());
        let stop = StopCondition::component_zero(0);
        let full = simulate_trajectory(&sys, &[10, 5], &stop, &mut RngStream::from_seed(4), Recording::AllEvents).unwrap();
        let grid = simulate_trajectory(&sys, &[10, 5], &stop, &mut RngStream::from_seed(4), Recording::Grid(0.25)).unwrap();
        for k in 0..grid.len() - 1 {
            let t = grid.times[k];
            assert!((t - 0.25 * k as f64).abs() < 1e-12);
            let idx = full.times.partition_point(|&s| s <= t) - 1;
            assert_eq!(grid.state(k), full.state(idx));
        }
        assert_eq!(grid.final_time(), full.final_time());
        assert_eq!(grid.final_state(), full.final_state());
    }

    #[test]
    fn horizon_and_cap() {
        let sys = bdi_system(BdiParams::new(0.0, 1.0, 5.0, false).unwrap());
        let stop = StopCondition::time_horizon(3.0).unwrap();
        let ext = simulate_extinction(&sys, &[2], &stop, &mut RngStream::from_seed(1)).unwrap();
        assert_eq!(ext.time, 3.0);
        assert_eq!(ext.reason, TerminalReason::Stopped);

        let stop = StopCondition::component_zero(0).with_event_cap(Some(10)).unwrap();
        let sys = bdi_system(BdiParams::birth_death(5.0, 1.0).unwrap());
        let ext = simulate_extinction(&sys, &[50], &stop, &mut RngStream::from_seed(1)).unwrap();
        assert_eq!(ext.reason, TerminalReason::Capped);
        assert_eq!(ext.steps, 10);
        assert!(ext.time > 0.0);

        assert!(StopCondition::component_zero(0).with_event_cap(Some(0)).is_err());
    }

    #[test]
    fn absorbed_before_predicate() {
        let sys = bdi_system(BdiParams::birth_death(0.5, 1.0).unwrap());
        let stop = StopCondition::predicate(|s| s[0] >= 1000);
        let ext = simulate_extinction(&sys, &[2], &stop, &mut RngStream::from_seed(2)).unwrap();
        assert_eq!(ext.reason, TerminalReason::Absorbed);
    }

    #[test]
    fn rejects_infeasible_start() {
        let sys = sirs_system(SirsParams::new(10, 1.0, 1.0).unwrap());
        let stop = StopCondition::component_zero(0);
        assert!(simulate_extinction(&sys, &[6, 6], &stop, &mut RngStream::from_seed(0)).is_err());
        assert!(simulate_extinction(&sys, &[6], &stop, &mut RngStream::from_seed(0)).is_err());
        let bad = StopCondition::component_zero(4);
        assert!(simulate_extinction(&sys, &[1, 1], &bad, &mut RngStream::from_seed(0)).is_err());
    }

    #[test]
    fn channel_selection_skips_zero_channels() {
        assert_eq!(select_channel(&[0.0, 2.0, 0.0, 1.0], 0.0), 1);
        assert_eq!(select_channel(&[0.0, 2.0, 0.0, 1.0], 2.5), 3);
        // rounding at the top end falls back to the last live channel
        assert_eq!(select_channel(&[0.0, 2.0, 0.0, 1.0], 3.0), 3);
    }
}
