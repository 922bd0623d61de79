use serde::{Deserialize, Serialize};

use super::run::SampleSet;
use crate::analytics::AsymptoticLaw;
use crate::error::{Error, Result};

pub const MIN_KS_SAMPLES: usize = 30;
pub const HISTOGRAM_BINS: usize = 40;

/// Right-continuous empirical CDF of the uncensored samples at `t`.
pub fn empirical_cdf(samples: &SampleSet, t: f64) -> Result<f64> {
    let times = samples.uncensored_times();
    if times.is_empty() {
        return Err(Error::InsufficientSamples { needed: 1, available: 0 });
    }
    Ok(ecdf_sorted(&times, t))
}

/// `#{x <= t} / n` for sorted `times`.
pub fn ecdf_sorted(times: &[f64], t: f64) -> f64 {
    times.partition_point(|&x| x <= t) as f64 / times.len() as f64
}

/// Kolmogorov-Smirnov distance between the sorted sample and a continuous
/// CDF, taken over both sides of every step.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// KS distance between the uncensored samples and `law`, in raw time.
pub fn ks_distance(samples: &SampleSet, law: &AsymptoticLaw) -> Result<f64> {
    let times = samples.uncensored_times();
    if times.len() < MIN_KS_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_KS_SAMPLES,
            available: times.len(),
        });
    }
    Ok(ks_statistic(&times, |t| law.cdf(t)))
}

/// Two-sample KS distance between sorted samples.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Smallest sample `x` with `F̂(x) >= p`.
pub fn empirical_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let k = ((p * n as f64).ceil() as usize).clamp(1, n);
    sorted[k - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub values: Vec<f64>,
}

/// Density-normalized and CDF-normalized histograms over
/// [`HISTOGRAM_BINS`] equal-width bins spanning the 0.5% to 99.5% sample
/// quantiles.
///
/// Density bars are `count / (n · width)`, so their total area is the
/// fraction of samples inside the range and never exceeds 1. CDF bars are
/// the empirical CDF at each bin's right edge.
pub fn histograms(sorted: &[f64]) -> Option<(Histogram, Histogram)> {
    if sorted.is_empty() {
        return None;
    }
    let lo = empirical_quantile(sorted, 0.005);
    let mut hi = empirical_quantile(sorted, 0.995);
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / HISTOGRAM_BINS as f64;
    let edges: Vec<f64> = (0..=HISTOGRAM_BINS).map(|b| lo + b as f64 * width).collect();
    let n = sorted.len() as f64;
    let mut counts = vec![0u64; HISTOGRAM_BINS];
    for &x in sorted {
        if x < lo || x > hi {
            continue;
        }
        let b = (((x - lo) / width) as usize).min(HISTOGRAM_BINS - 1);
        counts[b] += 1;
    }
    let density = counts.iter().map(|&c| c as f64 / (n * width)).collect();
    let cdf = edges[1..].iter().map(|&e| ecdf_sorted(sorted, e)).collect();
    Some((
        Histogram {
            edges: edges.clone(),
            values: density,
        },
        Histogram { edges, values: cdf },
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerNReport {
    pub n: u64,
    pub engine: String,
    pub sample_size: usize,
    pub censored: usize,
    /// KS distance to `law`, when a law applies and enough samples exist.
    pub ks: Option<f64>,
    pub law: Option<AsymptoticLaw>,
    /// `(p, t)` for p = 1%, ..., 99%, raw time.
    pub quantiles: Vec<(f64, f64)>,
    /// Histograms of the normalized time `w` when a law applies, raw time
    /// otherwise.
    pub histogram_density: Option<Histogram>,
    pub histogram_cdf: Option<Histogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config_fingerprint: String,
    pub seed: u64,
    pub per_n: Vec<PerNReport>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Builds the comparison for each sample set; `laws[k]` is the law for
/// `sets[k]`, if any.
pub fn compare(sets: &[SampleSet], laws: &[Option<AsymptoticLaw>]) -> Result<ComparisonReport> {
    let mut per_n = Vec::with_capacity(sets.len());
    let mut warnings = Vec::new();
    for (set, law) in sets.iter().zip(laws.iter().chain(std::iter::repeat(&None))) {
        let times = set.uncensored_times();
        let ks = match law {
            Some(l) if times.len() >= MIN_KS_SAMPLES => Some(ks_statistic(&times, |t| l.cdf(t))),
            Some(_) => {
                warnings.push(format!(
                    "N = {}: only {} uncensored samples, KS needs {MIN_KS_SAMPLES}",
                    set.n_pop,
                    times.len()
                ));
                None
            }
            None => None,
        };
        if set.censored_count() > 0 {
            warnings.push(format!(
                "N = {}: {} capped runs excluded from the comparison",
                set.n_pop,
                set.censored_count()
            ));
        }
        let quantiles = if times.is_empty() {
            Vec::new()
        } else {
            (1..=99)
                .map(|k| {
                    let p = k as f64 / 100.0;
                    (p, empirical_quantile(&times, p))
                })
                .collect()
        };
        let scaled: Vec<f64> = match law {
            Some(l) => times.iter().map(|&t| l.normalize(t)).collect(),
            None => times.clone(),
        };
        let (hd, hc) = match histograms(&scaled) {
            Some((d, c)) => (Some(d), Some(c)),
            None => (None, None),
        };
        per_n.push(PerNReport {
            n: set.n_pop,
            engine: set.engine.as_str().to_string(),
            sample_size: times.len(),
            censored: set.censored_count(),
            ks,
            law: *law,
            quantiles,
            histogram_density: hd,
            histogram_cdf: hc,
        });
    }
    let (config_fingerprint, seed) = sets
        .first()
        .map(|s| (s.fingerprint.clone(), s.seed))
        .unwrap_or_default();
    Ok(ComparisonReport {
        config_fingerprint,
        seed,
        per_n,
        warnings,
    })
}
