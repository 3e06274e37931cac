//! Command-line front end. `main.rs` only forwards to [`run`].

use crate::bounds::{bayes_lower_bound, corollary_condition, optimize_a, BoundReport, CorollaryCheck};
use crate::classes::{MgfMode, SetFamily};
use crate::detectors::{Decision, Detector, DetectorConfig, DetectorName, ThresholdContext, ThresholdRule};
use crate::error::{Error, Result};
use crate::harness::recipes::{run_recipe, Recipe};
use crate::harness::sweep::{sweep, write_csv, SweepConfig};
use crate::harness::{
    calibrate, default_null_trials, estimate_risk, Experiment, ExperimentConfig, FamilyConfig, ModelConfig, DEFAULT_SEED,
};
use crate::model::{io, sample_alternative, sample_null, CorrelationModel, Hypothesis};
use crate::rng::{phase, stream};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(name = "corrdetect", version, about = "Detection of sparse structured correlations: tests, bounds and Monte Carlo harness")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads (default: available parallelism). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Output format (default: json for single reports, csv for tables).
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Where to write the resolved config (default: `<output>.config.json`,
    /// or `corrdetect-<subcommand>.config.json` when writing to stdout).
    #[arg(long, global = true)]
    pub sidecar: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyArg {
    Intervals,
    LinearIntervals,
    Ksets,
    Hypercubes,
    Matchings,
    Trees,
    Explicit,
}

/// Family given on the command line instead of a config file.
#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Hypercube grid side.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Hypercube side lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sides: Option<Vec<usize>>,
    /// Explicit family file (one member per line, 1-based indices).
    #[arg(long)]
    pub members: Option<PathBuf>,
}

impl FamilyArgs {
    fn config(&self) -> Result<Option<FamilyConfig>> {
        let Some(kind) = self.family else { return Ok(None) };
        let need = |v: Option<usize>, name: &str| {
            v.ok_or_else(|| Error::InvalidParameter(format!("--family {kind:?} needs --{name}")))
        };
        Ok(Some(match kind {
            FamilyArg::Intervals => FamilyConfig::Intervals { n: need(self.n, "n")?, k: need(self.k, "k")?, circular: true },
            FamilyArg::LinearIntervals => {
                FamilyConfig::Intervals { n: need(self.n, "n")?, k: need(self.k, "k")?, circular: false }
            }
            FamilyArg::Ksets => FamilyConfig::Ksets { n: need(self.n, "n")?, k: need(self.k, "k")? },
            FamilyArg::Hypercubes => FamilyConfig::Hypercubes {
                m: need(self.grid, "grid")?,
                sides: self.sides.clone().ok_or_else(|| Error::InvalidParameter("hypercubes need --sides".into()))?,
            },
            FamilyArg::Matchings => FamilyConfig::Matchings { k: need(self.k, "k")? },
            FamilyArg::Trees => FamilyConfig::Trees { k: need(self.k, "k")? },
            FamilyArg::Explicit => FamilyConfig::Explicit {
                n: self.n,
                members: None,
                path: Some(self.members.clone().ok_or_else(|| Error::InvalidParameter("explicit needs --members".into()))?),
            },
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HypothesisArg {
    Null,
    Alternative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Exact,
    CorollaryBound,
    MonteCarlo,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw one observation and write it in the binary format.
    Sample {
        /// Experiment config supplying family and model.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long, value_enum, default_value = "null")]
        hypothesis: HypothesisArg,
        /// Anomalous set (1-based, comma separated); uniform member if absent.
        #[arg(long, value_delimiter = ',')]
        set: Option<Vec<usize>>,
    },
    /// Apply a detector to a saved observation.
    Test {
        /// Observation file.
        #[arg(long)]
        input: PathBuf,
        /// Detector config (JSON); overrides --detector.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        detector: Option<DetectorArg>,
        /// Gof bin count.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        rho: Option<f64>,
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Null calibration of an experiment's detector.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Monte Carlo risk of an experiment.
    Risk {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Bayes-risk lower bound and the corollary condition.
    Bound {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long)]
        rho: f64,
        #[arg(long, default_value_t = 1.0)]
        a: f64,
        /// Maximise over a log grid of `a`.
        #[arg(long)]
        optimize_a: bool,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ModeArg,
        /// Pairs for the Monte Carlo overlap mode.
        #[arg(long, default_value_t = 100_000)]
        pairs: u64,
    },
    /// Grid of risk estimates as CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Named reproduction recipe.
    Reproduce {
        /// One of prop2.1, prop3.1, prop3.2, prop3.4, prop3.5, thm3.1, cor2.1 .. cor2.5.
        recipe: String,
        #[arg(long)]
        trials: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorArg {
    SquaredSum,
    Glrt,
    LocalSquaredSum,
    DyadicScan,
    Gof,
    NpSingleton,
    BayesLr,
}

impl From<DetectorArg> for DetectorName {
    fn from(d: DetectorArg) -> Self {
        match d {
            DetectorArg::SquaredSum => DetectorName::SquaredSum,
            DetectorArg::Glrt => DetectorName::Glrt,
            DetectorArg::LocalSquaredSum => DetectorName::LocalSquaredSum,
            DetectorArg::DyadicScan => DetectorName::DyadicScan,
            DetectorArg::Gof => DetectorName::Gof,
            DetectorArg::NpSingleton => DetectorName::NpSingleton,
            DetectorArg::BayesLr => DetectorName::BayesLr,
        }
    }
}

/// Output of one subcommand: the payload and the resolved configuration.
struct Outcome {
    body: Vec<u8>,
    resolved: serde_json::Value,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

fn csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(buf)
}

fn apply_overrides(cfg: &mut ExperimentConfig, seed: u64, trials: Option<u64>, alpha: Option<f64>) {
    cfg.seed = seed;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(a) = alpha {
        if let Some(ThresholdRule::CalibratedQuantile { alpha, .. }) = &mut cfg.detector.threshold_rule {
            *alpha = a;
        } else if cfg.detector.threshold_rule.is_none() {
            cfg.detector.threshold_rule = Some(ThresholdRule::calibrated(a));
        }
    }
}

#[derive(Serialize)]
struct SampleMeta {
    n: usize,
    hypothesis: Hypothesis,
    set: Option<Vec<usize>>,
    seed: u64,
}

#[derive(Serialize)]
struct BoundOutput {
    #[serde(flatten)]
    report: BoundReport,
    condition: Option<CorollaryCheck>,
}

#[derive(Serialize)]
struct BoundRow<'a> {
    family: &'a str,
    rho: f64,
    mode: &'a str,
    a: f64,
    bound: f64,
    condition: String,
    citation: &'a str,
}

fn family_from(args: &FamilyArgs) -> Result<FamilyConfig> {
    args.config()?.ok_or_else(|| Error::InvalidParameter("a family is required (--family or --config)".into()))
}

fn cmd_sample(
    cli: &Cli,
    config: &Option<PathBuf>,
    fam: &FamilyArgs,
    rho: Option<f64>,
    hyp: HypothesisArg,
    set: &Option<Vec<usize>>,
) -> Result<Outcome> {
    let (family_cfg, model_cfg) = match config {
        Some(p) => {
            let e: ExperimentConfig = read_json(p)?;
            (e.family, ModelConfig { rho: rho.unwrap_or(e.model.rho), block: e.model.block })
        }
        None => {
            let family_cfg = match (fam.config()?, fam.n) {
                (Some(f), _) => f,
                (None, Some(n)) => FamilyConfig::Ksets { n, k: fam.k.unwrap_or(n).min(n) },
                (None, None) => family_from(fam)?,
            };
            (family_cfg, ModelConfig { rho: rho.unwrap_or(0.0), block: None })
        }
    };
    let family = family_cfg.build()?;
    let mut rng = stream(cli.seed, phase::SAMPLE, 0);
    let (obs, hypothesis, chosen) = match hyp {
        HypothesisArg::Null => (sample_null(family.n(), &mut rng), Hypothesis::Null, None),
        HypothesisArg::Alternative => {
            let model: CorrelationModel = model_cfg.build(&family)?;
            let s: Vec<usize> = match set {
                Some(s) => {
                    if s.contains(&0) {
                        return Err(Error::InvalidSet("--set uses 1-based indices".into()));
                    }
                    s.iter().map(|i| i - 1).collect()
                }
                None => family.sample_member(&mut rng),
            };
            let x = sample_alternative(&model, &s, &mut rng)?;
            (x, Hypothesis::Alternative, Some(s.iter().map(|i| i + 1).collect()))
        }
    };
    let meta = SampleMeta { n: obs.len(), hypothesis, set: chosen, seed: cli.seed };
    let resolved = json!({"family": family_cfg, "model": model_cfg, "hypothesis": hypothesis, "meta": meta});
    let body = io::to_bytes(&obs);
    Ok(Outcome { body, resolved })
}

#[allow(clippy::too_many_arguments)]
fn cmd_test(
    cli: &Cli,
    input: &Path,
    config: &Option<PathBuf>,
    detector: Option<DetectorArg>,
    m: Option<usize>,
    rho: Option<f64>,
    fam: &FamilyArgs,
    trials: Option<u64>,
    alpha: Option<f64>,
) -> Result<Outcome> {
    let obs = io::load(input)?;
    let n = obs.len();
    let mut det_cfg: DetectorConfig = match (config, detector) {
        (Some(p), _) => read_json(p)?,
        (None, Some(d)) => DetectorConfig::new(d.into()),
        (None, None) => return Err(Error::InvalidParameter("test needs --detector or --config".into())),
    };
    if m.is_some() {
        det_cfg.params.m = m;
    }
    if rho.is_some() {
        det_cfg.params.rho = rho;
    }
    let family_cfg = fam.config()?.unwrap_or(FamilyConfig::Ksets { n, k: fam.k.unwrap_or(n).min(n) });
    let family: SetFamily = family_cfg.build()?;
    let mut det = Detector::from_config(&det_cfg, None)?;
    if let (Some(a), ThresholdRule::CalibratedQuantile { null_trials, .. }) = (alpha, *det.rule()) {
        det = det.with_rule(ThresholdRule::CalibratedQuantile { alpha: a, null_trials });
    }
    let prepared = det.prepare(&family)?;
    let threshold = match *det.rule() {
        ThresholdRule::CalibratedQuantile { alpha, null_trials } => {
            let t = trials.or(null_trials).unwrap_or_else(|| default_null_trials(alpha));
            calibrate(&prepared, alpha, t, cli.seed)?.threshold
        }
        _ => det.formula_threshold(&ThresholdContext::new(&family, det.rho().unwrap_or(0.0)))?,
    };
    let decision: Decision = prepared.decide(obs.values(), threshold)?;
    let resolved = json!({"input": input, "family": family_cfg, "detector": det.to_config()});
    let body = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&json!({"decision": decision, "detector": det.name(), "citation": det.citation()}))?,
        Format::Csv => csv_bytes(&[decision])?,
    };
    Ok(Outcome { body, resolved })
}

fn cmd_calibrate(cli: &Cli, config: &Path, trials: Option<u64>, alpha: Option<f64>) -> Result<Outcome> {
    let mut cfg: ExperimentConfig = read_json(config)?;
    apply_overrides(&mut cfg, cli.seed, None, alpha);
    let exp = Experiment::from_config(&cfg)?;
    let ThresholdRule::CalibratedQuantile { alpha, null_trials } = *exp.detector.rule() else {
        return Err(Error::Precondition("calibrate needs a calibrated_quantile threshold rule".into()));
    };
    let t = trials.or(null_trials).unwrap_or_else(|| default_null_trials(alpha));
    let c = calibrate(&exp.detector.prepare(&exp.family)?, alpha, t, exp.seed)?;
    let body = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&c)?,
        Format::Csv => csv_bytes(&[c])?,
    };
    Ok(Outcome { body, resolved: serde_json::to_value(exp.resolved_config())? })
}

fn cmd_risk(cli: &Cli, config: &Path, trials: Option<u64>, alpha: Option<f64>) -> Result<Outcome> {
    let mut cfg: ExperimentConfig = read_json(config)?;
    apply_overrides(&mut cfg, cli.seed, trials, alpha);
    let exp = Experiment::from_config(&cfg)?;
    let r = estimate_risk(&exp)?;
    let body = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&r)?,
        Format::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                type1: f64,
                type2: f64,
                total: f64,
                ci1: f64,
                ci2: f64,
                trials: u64,
                seed: u64,
                threshold: f64,
                citation_of_threshold: &'a str,
                config_digest: &'a str,
            }
            csv_bytes(&[Row {
                type1: r.type1,
                type2: r.type2,
                total: r.total,
                ci1: r.ci1,
                ci2: r.ci2,
                trials: r.trials,
                seed: r.seed,
                threshold: r.threshold,
                citation_of_threshold: r.citation_of_threshold,
                config_digest: &r.config_digest,
            }])?
        }
    };
    Ok(Outcome { body, resolved: serde_json::to_value(exp.resolved_config())? })
}

fn cmd_bound(cli: &Cli, fam: &FamilyArgs, rho: f64, a: f64, opt: bool, mode: ModeArg, pairs: u64) -> Result<Outcome> {
    let family_cfg = family_from(fam)?;
    let family = family_cfg.build()?;
    let mode = match mode {
        ModeArg::Exact => MgfMode::Exact,
        ModeArg::CorollaryBound => MgfMode::CorollaryBound,
        ModeArg::MonteCarlo => MgfMode::MonteCarlo { pairs, seed: cli.seed },
    };
    let report = if opt { optimize_a(&family, rho, mode)? } else { bayes_lower_bound(&family, rho, a, mode)? };
    let condition = match corollary_condition(&family, rho) {
        Ok(c) => Some(c),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let resolved = json!({"family": family_cfg, "rho": rho, "a": a, "optimize_a": opt, "mode": mode});
    let body = match cli.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&BoundOutput { report, condition })?,
        Format::Csv => csv_bytes(&[BoundRow {
            family: family.name(),
            rho,
            mode: mode.label(),
            a: report.a,
            bound: report.lower_bound,
            condition: condition.as_ref().map_or("n/a".into(), |c| c.condition_holds.to_string()),
            citation: report.citation,
        }])?,
    };
    Ok(Outcome { body, resolved })
}

fn cmd_sweep(cli: &Cli, config: &Path, trials: Option<u64>) -> Result<Outcome> {
    let mut cfg: SweepConfig = read_json(config)?;
    cfg.seed = cli.seed;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    let rows = sweep(&cfg)?;
    let body = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_bytes(&rows)?,
        Format::Json => to_json(&rows)?,
    };
    Ok(Outcome { body, resolved: serde_json::to_value(&cfg)? })
}

fn cmd_reproduce(cli: &Cli, recipe: &str, trials: Option<u64>) -> Result<Outcome> {
    let recipe = Recipe::parse(recipe)?;
    let rows = run_recipe(recipe, cli.seed, trials)?;
    let body = match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_bytes(&rows)?,
        Format::Json => to_json(&rows)?,
    };
    let resolved = json!({"recipe": recipe.name(), "trials": trials.unwrap_or(recipe.default_trials())});
    Ok(Outcome { body, resolved })
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Sample { .. } => "sample",
        Command::Test { .. } => "test",
        Command::Calibrate { .. } => "calibrate",
        Command::Risk { .. } => "risk",
        Command::Bound { .. } => "bound",
        Command::Sweep { .. } => "sweep",
        Command::Reproduce { .. } => "reproduce",
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Sample { config, family, rho, hypothesis, set } => cmd_sample(cli, config, family, *rho, *hypothesis, set),
        Command::Test { input, config, detector, m, rho, family, trials, alpha } => {
            cmd_test(cli, input, config, *detector, *m, *rho, family, *trials, *alpha)
        }
        Command::Calibrate { config, trials, alpha } => cmd_calibrate(cli, config, *trials, *alpha),
        Command::Risk { config, trials, alpha } => cmd_risk(cli, config, *trials, *alpha),
        Command::Bound { family, rho, a, optimize_a, mode, pairs } => {
            cmd_bound(cli, family, *rho, *a, *optimize_a, *mode, *pairs)
        }
        Command::Sweep { config, trials } => cmd_sweep(cli, config, *trials),
        Command::Reproduce { recipe, trials } => cmd_reproduce(cli, recipe, *trials),
    }
}

fn sidecar_path(cli: &Cli) -> PathBuf {
    if let Some(p) = &cli.sidecar {
        return p.clone();
    }
    match &cli.output {
        Some(out) => {
            let mut s = out.clone().into_os_string();
            s.push(".config.json");
            PathBuf::from(s)
        }
        None => PathBuf::from(format!("corrdetect-{}.config.json", subcommand_name(&cli.command))),
    }
}

fn emit(cli: &Cli, outcome: Outcome, stdout: &mut dyn Write) -> Result<()> {
    let sidecar = json!({
        "subcommand": subcommand_name(&cli.command),
        "seed": cli.seed,
        "threads": cli.threads,
        "format": cli.format,
        "output": cli.output,
        "config": outcome.resolved,
    });
    std::fs::write(sidecar_path(cli), to_json(&sidecar)?)?;
    match &cli.output {
        Some(p) => std::fs::write(p, &outcome.body)?,
        None => stdout.write_all(&outcome.body)?,
    }
    Ok(())
}

/// Machine-readable error record written to stderr.
pub fn error_json(e: &Error) -> String {
    json!({"error": {"kind": e.kind(), "message": e.to_string()}}).to_string()
}

/// Parses `args` and runs; returns the process exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() { write!(stderr, "{e}") } else { write!(stdout, "{e}") };
            return code;
        }
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.unwrap_or(0)).build();
    let result = match pool {
        Ok(pool) => pool.install(|| dispatch(&cli)).and_then(|o| emit(&cli, o, stdout)),
        Err(e) => Err(Error::InvalidParameter(format!("thread pool: {e}"))),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            if matches!(e, Error::Parse(_)) {
                let _ = writeln!(stderr, "usage: corrdetect {} --help", subcommand_name(&cli.command));
            }
            let _ = writeln!(stderr, "{}", error_json(&e));
            1
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
