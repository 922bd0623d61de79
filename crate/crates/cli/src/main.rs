use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sirsim::analytics::{
    classify_detailed, hit_prob_id_time_bound, hit_prob_immig_death, hit_prob_linear_bdp, law_for_case,
    AsymptoticLaw, Exponent, LambdaGap, LawShape, PowerLaw, R0Scaling, ScalingSpec,
};
use sirsim::montecarlo::{
    bench_engines, compare, ks_statistic, ks_two_sample, read_samples, replay_warning, run_experiment,
    write_results, ComparisonReport, EngineKind, ExperimentConfig, SampleSet, SAMPLES_FILE,
};
use sirsim::Error;

/// `println!` that ignores a closed stdout (e.g. piped into `head`).
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

mod format;
use format::g6;

#[derive(Parser)]
#[command(name = "sirsim", version, about = "Extinction times of SIRS epidemics near criticality")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a replication experiment and write samples.csv and summary.json
    Simulate(RunArgs),
    /// Assign a parameter scaling to its asymptotic case
    Classify(ClassifyArgs),
    /// Evaluate a limit-law CDF on a grid of normalized times
    Law(LawArgs),
    /// Hitting probabilities of birth-death chains
    Hitprob {
        #[command(subcommand)]
        kind: HitKind,
    },
    /// Simulate (or replay stored samples) and report KS distances to the limit law
    Compare(CompareArgs),
    /// Time SSA against tau-leaping at one population size
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EngineArg {
    Ssa,
    Tau,
}

impl From<EngineArg> for EngineKind {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Ssa => EngineKind::Ssa,
            EngineArg::Tau => EngineKind::Tau,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long)]
    workers: Option<usize>,
    /// Use one engine for every N
    #[arg(long, value_enum)]
    engine: Option<EngineArg>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Compare the samples stored in this directory instead of simulating
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Population size; must be one of the config's populations (default: the largest)
    #[arg(long)]
    n: Option<u64>,
    /// Replications per engine
    #[arg(long, default_value_t = 50)]
    reps: u32,
}

#[derive(Args)]
struct ScaleArgs {
    /// Sign s in 1 - λ = offset + s·c·N^(-e)
    #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
    gap_sign: i8,
    #[arg(long, default_value_t = 1.0)]
    gap_coeff: f64,
    /// Exponent e, as a decimal or a fraction such as 1/4
    #[arg(long)]
    gap_exp: Option<String>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    gap_offset: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma_coeff: f64,
    /// γ = c·N^(-e)
    #[arg(long)]
    gamma_exp: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    i0_coeff: f64,
    /// I₀ = ⌈c·N^e⌉
    #[arg(long)]
    i0_exp: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    r0_coeff: f64,
    /// R₀ = ⌈c·N^e⌉
    #[arg(long, conflicts_with = "r0_fraction")]
    r0_exp: Option<String>,
    /// R₀ = ⌈f·N⌉
    #[arg(long)]
    r0_fraction: Option<f64>,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Take the scaling from an experiment config instead of flags
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    scale: ScaleArgs,
    /// Also print the parameters and limit law at this N
    #[arg(long)]
    n: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ShapeArg {
    Case11Finite,
    Case11Growing,
    Case12Finite,
    Case12Growing,
    Gumbel,
}

#[derive(Args)]
struct LawArgs {
    /// Limit shape evaluated in normalized time
    #[arg(value_enum, required_unless_present = "config")]
    shape: Option<ShapeArg>,
    #[arg(long)]
    i0: Option<u64>,
    #[arg(long)]
    a: Option<f64>,
    /// Use the law of the config's classified case instead of a shape
    #[arg(long, conflicts_with = "shape")]
    config: Option<PathBuf>,
    /// Population size for --config (default: the largest)
    #[arg(long, requires = "config")]
    n: Option<u64>,
    /// Normalized times, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true,
          default_value = "-2,-1,0,0.5,1,2,3,5,10")]
    w: Vec<f64>,
}

#[derive(Subcommand)]
enum HitKind {
    /// P(linear BDP with birth rate β, death rate 1 hits k before 0 | start i)
    LinearBdp { beta: f64, i: u64, k: u64 },
    /// P(immigration-death chain started at 0 reaches l before leaving 0 again)
    ImmigDeath { alpha: f64, mu: f64, l: u64 },
    /// Upper bound on P(immigration-death chain reaches l by time t0)
    TimeBound { alpha: f64, mu: f64, l: u64, t0: f64 },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn config(e: impl fmt::Display) -> Self {
        Self::Config(e.to_string())
    }

    /// Bad user input maps to a config failure, anything else to runtime.
    fn from_lib(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidParameter { .. } | Error::Hypothesis(_) => Self::config(e),
            other => Self::Runtime(other.to_string()),
        }
    }
}

type CliResult<T = ()> = std::result::Result<T, Failure>;

fn parse_exponent(flag: &str, value: Option<&str>) -> CliResult<Exponent> {
    let value = value.ok_or_else(|| Failure::Config(format!("--{flag} is required without --config")))?;
    Exponent::parse(value).map_err(|e| Failure::Config(format!("--{flag}: {e}")))
}

impl ScaleArgs {
    fn to_spec(&self) -> CliResult<ScalingSpec> {
        let r0 = match (&self.r0_exp, self.r0_fraction) {
            (_, Some(fraction)) => R0Scaling::Fraction { fraction },
            (Some(e), None) => R0Scaling::Power {
                coeff: self.r0_coeff,
                exponent: parse_exponent("r0-exp", Some(e))?,
            },
            (None, None) => return Err(Failure::config("one of --r0-exp or --r0-fraction is required")),
        };
        let spec = ScalingSpec {
            lambda_gap: LambdaGap {
                sign: self.gap_sign,
                coeff: self.gap_coeff,
                exponent: parse_exponent("gap-exp", self.gap_exp.as_deref())?,
                offset: self.gap_offset,
            },
            gamma: PowerLaw {
                coeff: self.gamma_coeff,
                exponent: parse_exponent("gamma-exp", self.gamma_exp.as_deref())?,
            },
            i0: PowerLaw {
                coeff: self.i0_coeff,
                exponent: parse_exponent("i0-exp", self.i0_exp.as_deref())?,
            },
            r0,
        };
        spec.validate().map_err(Failure::config)?;
        Ok(spec)
    }
}

fn load_config(path: &Path) -> CliResult<ExperimentConfig> {
    ExperimentConfig::from_file(path).map_err(Failure::config)
}

fn scaling_of(cfg: &ExperimentConfig, path: &Path) -> CliResult<ScalingSpec> {
    cfg.model
        .scaling()
        .copied()
        .ok_or_else(|| Failure::Config(format!("{}: model: only kind = \"sirs\" has a scaling", path.display())))
}

fn apply_overrides(cfg: &mut ExperimentConfig, args: &RunArgs) -> CliResult {
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if let Some(e) = args.engine {
        cfg.engine.force(e.into());
    }
    cfg.validate().map_err(Failure::config)
}

fn out_dir(cfg: &ExperimentConfig, flag: Option<&PathBuf>) -> PathBuf {
    flag.cloned().or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| {
        let name = if cfg.name.is_empty() { "experiment" } else { cfg.name.as_str() };
        PathBuf::from("results").join(name)
    })
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:<w$}"))
            .collect();
        out!("{}", padded.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
}

fn print_report(report: &ComparisonReport) {
    let rows: Vec<Vec<String>> = report
        .per_n
        .iter()
        .map(|p| {
            let median = p
                .quantiles
                .iter()
                .find(|(q, _)| (q - 0.5).abs() < 1e-12)
                .map_or("-".into(), |&(_, t)| g6(t));
            let crit = if p.sample_size > 0 {
                g6(1.63 / (p.sample_size as f64).sqrt())
            } else {
                "-".into()
            };
            vec![
                p.n.to_string(),
                p.engine.clone(),
                p.sample_size.to_string(),
                p.censored.to_string(),
                median,
                p.ks.map_or("-".into(), g6),
                crit,
                p.law.map_or("-".into(), |l| l.shape.name().to_string()),
            ]
        })
        .collect();
    print_table(
        &["N", "engine", "samples", "censored", "median_t", "ks", "ks_crit99", "law"],
        &rows,
    );
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
}

fn simulate(args: &RunArgs) -> CliResult {
    let mut cfg = load_config(&args.config)?;
    apply_overrides(&mut cfg, args)?;
    let sets = run_experiment(&cfg).map_err(Failure::from_lib)?;
    let laws = cfg.asymptotic_laws().map_err(Failure::from_lib)?;
    let report = compare(&sets, &laws).map_err(Failure::from_lib)?;
    let paths = write_results(&sets, &report, &out_dir(&cfg, args.out.as_ref())).map_err(Failure::from_lib)?;
    print_report(&report);
    out!("wrote {} and {}", paths.samples.display(), paths.summary.display());
    Ok(())
}

/// Laws aligned with stored sets by population size rather than position.
fn laws_by_n(cfg: &ExperimentConfig, sets: &[SampleSet], warnings: &mut Vec<String>) -> CliResult<Vec<Option<AsymptoticLaw>>> {
    let laws = cfg.asymptotic_laws().map_err(Failure::from_lib)?;
    Ok(sets
        .iter()
        .map(|s| match cfg.populations.iter().position(|&n| n == s.n_pop) {
            Some(k) => laws[k],
            None => {
                warnings.push(format!("N = {}: not among the config's populations, no law assigned", s.n_pop));
                None
            }
        })
        .collect())
}

fn compare_cmd(args: &CompareArgs) -> CliResult {
    let mut cfg = load_config(&args.run.config)?;
    apply_overrides(&mut cfg, &args.run)?;
    let label = cfg.case_label();
    if let Some(label) = &label {
        out!("case: {label}");
    }
    let mut warnings = Vec::new();
    let sets = match &args.replay {
        Some(dir) => {
            let sets = read_samples(&dir.join(SAMPLES_FILE)).map_err(Failure::from_lib)?;
            if let Some(first) = sets.first() {
                warnings.extend(replay_warning(&first.fingerprint, &cfg));
                if first.seed != cfg.seed {
                    warnings.push(format!("seed mismatch on replay: stored {}, current {}", first.seed, cfg.seed));
                }
            }
            sets
        }
        None => run_experiment(&cfg).map_err(Failure::from_lib)?,
    };
    let laws = laws_by_n(&cfg, &sets, &mut warnings)?;
    let mut report = compare(&sets, &laws).map_err(Failure::from_lib)?;
    report.warnings.extend(warnings);
    print_report(&report);
    // a replay only writes when asked to
    let target = match (&args.replay, &args.run.out) {
        (Some(_), None) => cfg.output.dir.clone(),
        (_, flag) => Some(out_dir(&cfg, flag.as_ref())),
    };
    if let Some(dir) = target {
        let paths = write_results(&sets, &report, &dir).map_err(Failure::from_lib)?;
        out!("wrote {} and {}", paths.samples.display(), paths.summary.display());
    }
    Ok(())
}

fn bench(args: &BenchArgs) -> CliResult {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    if args.reps == 0 {
        return Err(Failure::config("--reps: must be >= 1"));
    }
    let k = match args.n {
        Some(n) => cfg
            .populations
            .iter()
            .position(|&m| m == n)
            .ok_or_else(|| Failure::Config(format!("--n: {n} is not among the config's populations")))?,
        None => cfg.populations.len() - 1,
    };
    let laws = cfg.asymptotic_laws().map_err(Failure::from_lib)?;
    let timings = bench_engines(&cfg, k, args.reps).map_err(Failure::from_lib)?;
    out!("N = {}, {} replications per engine", cfg.populations[k], args.reps);
    let rows: Vec<Vec<String>> = timings
        .iter()
        .map(|t| {
            let times = t.samples.uncensored_times();
            let ks = match laws[k] {
                Some(law) if !times.is_empty() => g6(ks_statistic(&times, |x| law.cdf(x))),
                _ => "-".into(),
            };
            let mean = t.seconds.iter().sum::<f64>() / t.seconds.len() as f64;
            vec![
                t.engine.as_str().to_string(),
                g6(t.median_seconds()),
                g6(mean),
                t.samples.censored_count().to_string(),
                ks,
            ]
        })
        .collect();
    print_table(&["engine", "median_s", "mean_s", "censored", "ks_law"], &rows);
    let [ssa, tau] = &timings;
    out!(
        "cross-engine ks: {}",
        g6(ks_two_sample(&ssa.samples.uncensored_times(), &tau.samples.uncensored_times()))
    );
    out!("speedup (median): {}", g6(ssa.median_seconds() / tau.median_seconds()));
    Ok(())
}

fn classify(args: &ClassifyArgs) -> CliResult {
    let spec = match &args.config {
        Some(path) => scaling_of(&load_config(path)?, path)?,
        None => args.scale.to_spec()?,
    };
    let c = classify_detailed(&spec);
    out!("{}", c.label);
    let rows: Vec<Vec<String>> = c
        .checks
        .iter()
        .map(|chk| {
            let status = if chk.holds() {
                "holds"
            } else if chk.tied() {
                "boundary"
            } else {
                "fails"
            };
            vec![chk.condition.to_string(), g6(chk.margin), status.to_string()]
        })
        .collect();
    if !rows.is_empty() {
        print_table(&["condition", "margin", "status"], &rows);
    }
    if let Some(n) = args.n {
        let (params, state) = spec.instantiate(n).map_err(Failure::from_lib)?;
        out!(
            "N = {n}: lambda = {}, gamma = {}, I0 = {}, R0 = {}",
            g6(params.lambda()),
            g6(params.gamma()),
            state.i,
            state.r
        );
        if c.label.is_case() {
            let law = law_for_case(&c.label, &spec, n).map_err(Failure::from_lib)?;
            print_law(&law);
        }
    }
    Ok(())
}

fn print_law(law: &AsymptoticLaw) {
    let params = match law.shape {
        LawShape::Case11Finite { i0 } => format!(" (i0 = {i0})"),
        LawShape::Case12Finite { a, i0 } => format!(" (a = {}, i0 = {i0})", g6(a)),
        LawShape::Case12Growing { a } => format!(" (a = {})", g6(a)),
        LawShape::Case11Growing | LawShape::Gumbel => String::new(),
    };
    out!(
        "law: {}{params}, w = t / {} - {}",
        law.shape.name(),
        g6(law.time_scale),
        g6(law.time_shift)
    );
}

fn law(args: &LawArgs) -> CliResult {
    let (law, raw) = match (&args.config, args.shape) {
        (Some(path), _) => {
            let cfg = load_config(path)?;
            let spec = scaling_of(&cfg, path)?;
            let n = args.n.unwrap_or(*cfg.populations.last().expect("validated"));
            let c = classify_detailed(&spec);
            if !c.label.is_case() {
                return Err(Failure::Config(format!("{}: scaling classifies as {}", path.display(), c.label)));
            }
            let law = law_for_case(&c.label, &spec, n).map_err(Failure::from_lib)?;
            out!("case: {}, N = {n}", c.label);
            print_law(&law);
            (law, true)
        }
        (None, Some(shape)) => {
            let need_i0 = || args.i0.ok_or_else(|| Failure::config("--i0 is required for this shape"));
            let need_a = || args.a.ok_or_else(|| Failure::config("--a is required for this shape"));
            let shape = match shape {
                ShapeArg::Case11Finite => LawShape::Case11Finite { i0: need_i0()? },
                ShapeArg::Case11Growing => LawShape::Case11Growing,
                ShapeArg::Case12Finite => LawShape::Case12Finite { a: need_a()?, i0: need_i0()? },
                ShapeArg::Case12Growing => LawShape::Case12Growing { a: need_a()? },
                ShapeArg::Gumbel => LawShape::Gumbel,
            };
            (AsymptoticLaw::unscaled(shape).map_err(Failure::from_lib)?, false)
        }
        (None, None) => return Err(Failure::config("a shape or --config is required")),
    };
    let rows: Vec<Vec<String>> = args
        .w
        .iter()
        .map(|&w| {
            let mut row = vec![g6(w), g6(law.shape.cdf(w))];
            if raw {
                row.push(g6(law.denormalize(w)));
            }
            row
        })
        .collect();
    if raw {
        print_table(&["w", "F(w)", "t"], &rows);
    } else {
        print_table(&["w", "F(w)"], &rows);
    }
    Ok(())
}

fn hitprob(kind: &HitKind) -> CliResult {
    let p = match *kind {
        HitKind::LinearBdp { beta, i, k } => hit_prob_linear_bdp(beta, i, k),
        HitKind::ImmigDeath { alpha, mu, l } => hit_prob_immig_death(alpha, mu, l),
        HitKind::TimeBound { alpha, mu, l, t0 } => hit_prob_id_time_bound(alpha, mu, l, t0),
    }
    .map_err(Failure::from_lib)?;
    out!("{}", g6(p));
    Ok(())
}

fn run(cli: &Cli) -> CliResult {
    match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Classify(a) => classify(a),
        Command::Law(a) => law(a),
        Command::Hitprob { kind } => hitprob(kind),
        Command::Compare(a) => compare_cmd(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
