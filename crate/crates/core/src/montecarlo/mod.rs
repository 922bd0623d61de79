//! Seeded replication experiments and their statistical summaries.

mod config;
mod io;
mod run;
mod stats;

pub use config::{
    EngineKind, EngineSpec, ExperimentConfig, ModelInstance, ModelSpec, OutputSpec, StopSpec, DEFAULT_REPLICATIONS,
};
pub use io::{
    read_samples, read_summary, replay_warning, write_results, write_samples, ResultPaths, CSV_HEADER, SAMPLES_FILE,
    SUMMARY_FILE,
};
pub use run::{bench_engines, run_experiment, simulate_instance, EngineTiming, Sample, SampleSet};
pub use stats::{
    compare, ecdf_sorted, empirical_cdf, empirical_quantile, histograms, ks_distance, ks_statistic, ks_two_sample,
    ComparisonReport, Histogram, PerNReport, HISTOGRAM_BINS, MIN_KS_SAMPLES,
};
