use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::config::{EngineKind, ExperimentConfig};
use super::run::{Sample, SampleSet};
use super::stats::ComparisonReport;
use crate::error::{Error, Result};
use crate::ssa::TerminalReason;

pub const SAMPLES_FILE: &str = "samples.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CSV_HEADER: [&str; 5] = ["replication_index", "n_pop", "extinction_time", "terminal_reason", "engine"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultPaths {
    pub samples: PathBuf,
    pub summary: PathBuf,
}

impl ResultPaths {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            samples: dir.join(SAMPLES_FILE),
            summary: dir.join(SUMMARY_FILE),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, detail: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Writes `samples.csv` (full-precision raw times) and `summary.json` into
/// `dir`, creating it if needed.
///
/// The CSV starts with `# config_fingerprint=` and `# seed=` comment lines,
/// followed by a header row with the columns of [`CSV_HEADER`].
pub fn write_results(sets: &[SampleSet], report: &ComparisonReport, dir: &Path) -> Result<ResultPaths> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let paths = ResultPaths::in_dir(dir);
    write_samples(sets, &paths.samples)?;
    let json = serde_json::to_string_pretty(report).map_err(|e| format_err(&paths.summary, e.to_string()))?;
    fs::write(&paths.summary, json + "\n").map_err(io_err(&paths.summary))?;
    Ok(paths)
}

pub fn write_samples(sets: &[SampleSet], path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    let (fingerprint, seed) = sets.first().map(|s| (s.fingerprint.as_str(), s.seed)).unwrap_or(("", 0));
    writeln!(file, "# config_fingerprint={fingerprint}").map_err(io_err(path))?;
    writeln!(file, "# seed={seed}").map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| format_err(path, e.to_string());
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for set in sets {
        for s in &set.samples {
            w.write_record([
                s.replication.to_string(),
                set.n_pop.to_string(),
                s.time.to_string(),
                s.reason.as_str().to_string(),
                set.engine.as_str().to_string(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

fn read_header_comments(text: &str, path: &Path) -> Result<(String, u64)> {
    let mut fingerprint = None;
    let mut seed = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        if let Some(v) = body.strip_prefix("config_fingerprint=") {
            fingerprint = Some(v.to_string());
        } else if let Some(v) = body.strip_prefix("seed=") {
            seed = Some(v.parse().map_err(|_| format_err(path, format!("bad seed {v:?}")))?);
        }
    }
    match (fingerprint, seed) {
        (Some(f), Some(s)) => Ok((f, s)),
        _ => Err(format_err(path, "missing config_fingerprint/seed header lines")),
    }
}

/// Reads a `samples.csv` written by [`write_samples`].
pub fn read_samples(path: &Path) -> Result<Vec<SampleSet>> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let (fingerprint, seed) = read_header_comments(&text, path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| format_err(path, e.to_string()))?;
    if headers.iter().ne(CSV_HEADER) {
        return Err(format_err(path, format!("unexpected header {headers:?}")));
    }
    let mut groups: Vec<(u64, EngineKind, Vec<Sample>)> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| format_err(path, e.to_string()))?;
        let bad = |what: &str| format_err(path, format!("row {}: bad {what}", line + 1));
        let replication: u32 = record[0].parse().map_err(|_| bad("replication_index"))?;
        let n_pop: u64 = record[1].parse().map_err(|_| bad("n_pop"))?;
        let time: f64 = record[2].parse().map_err(|_| bad("extinction_time"))?;
        let reason: TerminalReason = record[3].parse().map_err(|_| bad("terminal_reason"))?;
        let engine: EngineKind = record[4].parse().map_err(|_| bad("engine"))?;
        let sample = Sample {
            replication,
            time,
            reason,
        };
        match groups.iter_mut().find(|g| g.0 == n_pop) {
            Some(g) if g.1 != engine => return Err(bad("engine (mixed within one N)")),
            Some(g) => g.2.push(sample),
            None => groups.push((n_pop, engine, vec![sample])),
        }
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(k, (n, engine, samples))| SampleSet::new(n, k as u32, engine, fingerprint.clone(), seed, samples))
        .collect())
}

pub fn read_summary(path: &Path) -> Result<ComparisonReport> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| format_err(path, e.to_string()))
}

/// Warning to record when results stored under `stored_fingerprint` are
/// replayed against `cfg`.
pub fn replay_warning(stored_fingerprint: &str, cfg: &ExperimentConfig) -> Option<String> {
    let current = cfg.fingerprint();
    (stored_fingerprint != current).then(|| {
        format!("config fingerprint mismatch on replay: stored {stored_fingerprint}, current {current}")
    })
}
