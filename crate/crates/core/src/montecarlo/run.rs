use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{EngineKind, ExperimentConfig, ModelInstance};
use crate::error::{Error, Result};
use crate::model::{bdi_system, sirs_system, ReactionSystem};
use crate::rng::RngStream;
use crate::ssa::{simulate_extinction, Extinction, StopCondition, TerminalReason};
use crate::tau::{simulate_extinction_tau, TauConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub replication: u32,
    pub time: f64,
    pub reason: TerminalReason,
}

/// Extinction-time samples for one population size, sorted by time (ties
/// by replication index).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub n_pop: u64,
    pub population_index: u32,
    pub engine: EngineKind,
    pub fingerprint: String,
    pub seed: u64,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn new(
        n_pop: u64,
        population_index: u32,
        engine: EngineKind,
        fingerprint: String,
        seed: u64,
        mut samples: Vec<Sample>,
    ) -> Self {
        samples.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.replication.cmp(&b.replication)));
        Self {
            n_pop,
            population_index,
            engine,
            fingerprint,
            seed,
            samples,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sorted times of the samples that reached the stop condition.
    pub fn uncensored_times(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| !s.reason.is_censored())
            .map(|s| s.time)
            .collect()
    }

    pub fn censored_count(&self) -> usize {
        self.samples.iter().filter(|s| s.reason.is_censored()).count()
    }
}

/// One extinction-time draw of `model` with the given engine.
pub fn simulate_instance(
    model: &ModelInstance,
    engine: EngineKind,
    tau: &TauConfig,
    event_cap: u64,
    rng: &mut RngStream,
) -> Result<Extinction> {
    fn run<S: ReactionSystem>(
        system: &S,
        state: &[i64],
        engine: EngineKind,
        tau: &TauConfig,
        stop: &StopCondition,
        rng: &mut RngStream,
    ) -> Result<Extinction> {
        match engine {
            EngineKind::Ssa => simulate_extinction(system, state, stop, rng),
            EngineKind::Tau => simulate_extinction_tau(system, state, stop, tau, rng),
        }
    }
    let stop = StopCondition::component_zero(0).with_event_cap(Some(event_cap))?;
    match model {
        ModelInstance::Sirs { params, state } => {
            run(&sirs_system(*params), &state.to_vec(), engine, tau, &stop, rng)
        }
        ModelInstance::Bdp { params, l0 } => run(&bdi_system(*params), &[*l0 as i64], engine, tau, &stop, rng),
    }
}

fn build_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Unsupported(format!("cannot start worker pool: {e}")))
}

/// Runs every replication at every population size.
///
/// Replication `j` at population index `k` draws from
/// `RngStream::derive(seed, k, j)`, so the output does not depend on the
/// number of workers or on scheduling. The first failing replication aborts
/// the experiment.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SampleSet>> {
    cfg.validate()?;
    let pool = build_pool(cfg.workers)?;
    let fingerprint = cfg.fingerprint();
    let mut out = Vec::with_capacity(cfg.populations.len());
    for (k, &n) in cfg.populations.iter().enumerate() {
        let model = cfg.model.instantiate(n)?;
        let engine = cfg.engine.kind_for(n);
        let k = k as u32;
        let samples: Result<Vec<Sample>> = pool.install(|| {
            (0..cfg.replications)
                .into_par_iter()
                .map(|j| {
                    let mut rng = RngStream::derive(cfg.seed, k, j);
                    let ext = simulate_instance(&model, engine, &cfg.engine.tau, cfg.stop.event_cap, &mut rng)?;
                    Ok(Sample {
                        replication: j,
                        time: ext.time,
                        reason: ext.reason,
                    })
                })
                .collect()
        });
        out.push(SampleSet::new(n, k, engine, fingerprint.clone(), cfg.seed, samples?));
    }
    Ok(out)
}

/// Per-replication wall-clock timings of one engine.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineTiming {
    pub engine: EngineKind,
    pub samples: SampleSet,
    pub seconds: Vec<f64>,
}

impl EngineTiming {
    pub fn median_seconds(&self) -> f64 {
        let mut s = self.seconds.clone();
        s.sort_by(f64::total_cmp);
        match s.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => s[n / 2],
            n => 0.5 * (s[n / 2 - 1] + s[n / 2]),
        }
    }
}

/// Runs `reps` replications of population `cfg.populations[k]` with each
/// engine, timing every replication separately.
///
/// Both engines use the same substreams as [`run_experiment`] would at index
/// `k`. Replications run on the configured worker pool; pass `workers = 1`
/// for contention-free timings.
pub fn bench_engines(cfg: &ExperimentConfig, k: usize, reps: u32) -> Result<[EngineTiming; 2]> {
    cfg.validate()?;
    let n = *cfg
        .populations
        .get(k)
        .ok_or_else(|| Error::Config(format!("population index {k} out of range")))?;
    let model = cfg.model.instantiate(n)?;
    let pool = build_pool(cfg.workers)?;
    let fingerprint = cfg.fingerprint();
    let time_engine = |engine: EngineKind| -> Result<EngineTiming> {
        let runs: Result<Vec<(Sample, f64)>> = pool.install(|| {
            (0..reps)
                .into_par_iter()
                .map(|j| {
                    let mut rng = RngStream::derive(cfg.seed, k as u32, j);
                    let start = Instant::now();
                    let ext = simulate_instance(&model, engine, &cfg.engine.tau, cfg.stop.event_cap, &mut rng)?;
                    let secs = start.elapsed().as_secs_f64();
                    let sample = Sample {
                        replication: j,
                        time: ext.time,
                        reason: ext.reason,
                    };
                    Ok((sample, secs))
                })
                .collect()
        });
        let (samples, seconds): (Vec<Sample>, Vec<f64>) = runs?.into_iter().unzip();
        Ok(EngineTiming {
            engine,
            samples: SampleSet::new(n, k as u32, engine, fingerprint.clone(), cfg.seed, samples),
            seconds,
        })
    };
    Ok([time_engine(EngineKind::Ssa)?, time_engine(EngineKind::Tau)?])
}
