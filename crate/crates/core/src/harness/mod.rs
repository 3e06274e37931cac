//! Deterministic Monte Carlo experiments.
//!
//! Trial `t` of phase `p` always draws from `stream(seed, p, t)`, and results
//! are reduced from integer counts, so estimates do not depend on the number
//! of worker threads.

pub mod recipes;
pub mod sweep;

use crate::classes::{FamilyKind, SetFamily};
use crate::detectors::scan::{check_kset_sorted_window, KSetEngine};
use crate::detectors::{Detector, DetectorConfig, DetectorName, PreparedDetector, ThresholdContext, ThresholdRule};
use crate::error::{Error, Result};
use crate::model::{sample_alternative, sample_null, CorrelationModel, IndexSet};
use crate::rng::{phase, stream};
use crate::special::{wilson_interval, Z95};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_100_817;

/// Brute-force verification draws for the sorted-window `k`-set engine.
pub const KSET_VERIFY_INSTANCES: u64 = 200;
/// Largest `C(n, k)` for which the sorted-window engine is verified.
pub const KSET_VERIFY_CAP: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    Intervals {
        n: usize,
        k: usize,
        #[serde(default = "yes")]
        circular: bool,
    },
    Ksets { n: usize, k: usize },
    Hypercubes { m: usize, sides: Vec<usize> },
    Matchings { k: usize },
    Trees { k: usize },
    /// Members as 1-based index lists, inline or from a file in the text format.
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        members: Option<Vec<Vec<usize>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
}

fn yes() -> bool {
    true
}

impl FamilyConfig {
    pub fn build(&self) -> Result<SetFamily> {
        match self {
            FamilyConfig::Intervals { n, k, circular: true } => SetFamily::intervals(*n, *k),
            FamilyConfig::Intervals { n, k, circular: false } => SetFamily::linear_intervals(*n, *k),
            FamilyConfig::Ksets { n, k } => SetFamily::k_sets(*n, *k),
            FamilyConfig::Hypercubes { m, sides } => SetFamily::hypercubes(*m, sides.clone()),
            FamilyConfig::Matchings { k } => SetFamily::perfect_matchings(*k),
            FamilyConfig::Trees { k } => SetFamily::spanning_trees(*k),
            FamilyConfig::Explicit { n, members, path } => match (members, path) {
                (Some(ms), None) => {
                    let mut zero = Vec::with_capacity(ms.len());
                    for m in ms {
                        if m.contains(&0) {
                            return Err(Error::InvalidSet("explicit members use 1-based indices".into()));
                        }
                        zero.push(m.iter().map(|i| i - 1).collect());
                    }
                    let n = n.unwrap_or_else(|| ms.iter().flatten().copied().max().unwrap_or(0));
                    SetFamily::explicit(n, zero)
                }
                (None, Some(p)) => SetFamily::parse_explicit(&std::fs::read_to_string(p)?, *n),
                _ => Err(Error::InvalidParameter("explicit family needs exactly one of members or path".into())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub rho: f64,
    /// `k x k` block for the general floor-ρ model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<Vec<Vec<f64>>>,
}

impl ModelConfig {
    pub fn build(&self, family: &SetFamily) -> Result<CorrelationModel> {
        match &self.block {
            None => CorrelationModel::new(family.n(), family.k(), self.rho),
            Some(b) => CorrelationModel::general_floor(family.n(), family.k(), self.rho, b.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum RiskMode {
    /// `S` drawn uniformly from the family in every alternative trial.
    #[default]
    AverageUniformS,
    /// `S` held fixed (1-based indices).
    FixedS { set: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub family: FamilyConfig,
    pub model: ModelConfig,
    pub detector: DetectorConfig,
    pub trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub risk_mode: RiskMode,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub model: CorrelationModel,
    pub family: SetFamily,
    pub detector: Detector,
    pub trials: u64,
    pub seed: u64,
    pub fixed_set: Option<IndexSet>,
    config: ExperimentConfig,
}

impl Experiment {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        if cfg.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        let family = cfg.family.build()?;
        let model = cfg.model.build(&family)?;
        let detector = Detector::from_config(&cfg.detector, Some(model.rho()).filter(|r| *r > 0.0))?;
        let fixed_set = match &cfg.risk_mode {
            RiskMode::AverageUniformS => None,
            RiskMode::FixedS { set } => {
                if set.contains(&0) {
                    return Err(Error::InvalidSet("fixed set uses 1-based indices".into()));
                }
                let s: IndexSet = set.iter().map(|i| i - 1).collect();
                crate::model::validate_set(&s, family.n(), family.k())?;
                if !family.contains(&s) {
                    return Err(Error::InvalidSet("fixed set is not a member of the family".into()));
                }
                let mut s = s;
                s.sort_unstable();
                Some(s)
            }
        };
        let mut config = cfg.clone();
        config.detector = detector.to_config();
        Ok(Self { model, family, detector, trials: cfg.trials, seed: cfg.seed, fixed_set, config })
    }

    /// Config with every default filled in.
    pub fn resolved_config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// Hex SHA-256 of the canonical JSON of [`Experiment::resolved_config`].
    pub fn config_digest(&self) -> String {
        digest_json(&self.config)
    }
}

pub fn digest_json<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serialisable");
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Calibration {
    pub threshold: f64,
    pub alpha: f64,
    pub null_trials: u64,
    pub analytic: bool,
}

/// Default null sample size for a calibrated rule at level `alpha`.
pub fn default_null_trials(alpha: f64) -> u64 {
    crate::detectors::min_null_trials(alpha).max(2000)
}

/// Null statistics for trials `0..trials`, in trial order.
pub fn null_statistics(detector: &PreparedDetector, trials: u64, seed: u64, phase_id: u64) -> Result<Vec<f64>> {
    let n = detector.family().n();
    (0..trials)
        .into_par_iter()
        .map(|t| detector.statistic(sample_null(n, &mut stream(seed, phase_id, t)).values()))
        .collect()
}

/// `(1-α)` null quantile: the `⌈(1-α) T⌉`-th smallest of `T` null
/// statistics, or the closed form where the null law is known.
pub fn calibrate(detector: &PreparedDetector, alpha: f64, trials: u64, seed: u64) -> Result<Calibration> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if let Some(t) = detector.detector().analytic_null_quantile(detector.family().n(), alpha) {
        return Ok(Calibration { threshold: t, alpha, null_trials: 0, analytic: true });
    }
    calibrate_empirical(detector, alpha, trials, seed)
}

/// Empirical calibration, even where a closed form exists.
pub fn calibrate_empirical(detector: &PreparedDetector, alpha: f64, trials: u64, seed: u64) -> Result<Calibration> {
    let min = crate::detectors::min_null_trials(alpha);
    if trials < min {
        return Err(Error::Precondition(format!(
            "calibration with alpha = {alpha} needs at least 100/alpha = {min} null trials, got {trials}"
        )));
    }
    let mut stats = null_statistics(detector, trials, seed, phase::CALIBRATION)?;
    stats.sort_by(f64::total_cmp);
    let rank = (((1.0 - alpha) * trials as f64).ceil() as u64).clamp(1, trials);
    Ok(Calibration { threshold: stats[(rank - 1) as usize], alpha, null_trials: trials, analytic: false })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskEstimate {
    pub type1: f64,
    pub type2: f64,
    pub total: f64,
    /// Half-widths of the 95% Wilson intervals.
    pub ci1: f64,
    pub ci2: f64,
    pub ci_type1: (f64, f64),
    pub ci_type2: (f64, f64),
    pub trials: u64,
    pub seed: u64,
    pub config_digest: String,
    pub threshold: f64,
    pub calibration: Option<Calibration>,
    pub citation_of_threshold: &'static str,
    /// Sorted-window mismatches found before the run (brute force used if > 0).
    pub kset_window_mismatches: Option<u64>,
}

fn wilson(successes: u64, trials: u64) -> (f64, (f64, f64)) {
    let ci = wilson_interval(successes, trials, Z95);
    (0.5 * (ci.1 - ci.0), ci)
}

/// Switches a `k`-set GLRT to brute force if the sorted-window engine
/// disagrees with brute force on verification draws.
fn verify_kset_engine(exp: &Experiment, detector: Detector) -> Result<(Detector, Option<u64>)> {
    let is_kset_glrt = detector.name() == DetectorName::Glrt
        && detector.engine() == KSetEngine::SortedWindow
        && matches!(exp.family.kind(), FamilyKind::KSets { .. });
    if !is_kset_glrt || exp.family.size_u64().is_none_or(|s| s > KSET_VERIFY_CAP) {
        return Ok((detector, None));
    }
    let rho = detector.rho().expect("validated");
    let report = check_kset_sorted_window(&exp.family, rho, KSET_VERIFY_INSTANCES, exp.seed, KSET_VERIFY_CAP)?;
    if report.mismatches > 0 {
        log::warn!("falling back to brute-force k-set GLRT after {} mismatches", report.mismatches);
        Ok((detector.with_engine(KSetEngine::BruteForce), Some(report.mismatches)))
    } else {
        Ok((detector, Some(0)))
    }
}

/// Threshold for the experiment's rule, fixed before any alternative draw.
pub fn resolve_threshold(exp: &Experiment, prepared: &PreparedDetector) -> Result<(f64, Option<Calibration>)> {
    match *prepared.detector().rule() {
        ThresholdRule::CalibratedQuantile { alpha, null_trials } => {
            let c = calibrate(prepared, alpha, null_trials.unwrap_or_else(|| default_null_trials(alpha)), exp.seed)?;
            Ok((c.threshold, Some(c)))
        }
        _ => Ok((prepared.detector().formula_threshold(&ThresholdContext::new(&exp.family, exp.model.rho()))?, None)),
    }
}

/// Type I, Type II and total risk with 95% Wilson intervals.
pub fn estimate_risk(exp: &Experiment) -> Result<RiskEstimate> {
    let (detector, mismatches) = verify_kset_engine(exp, exp.detector.clone())?;
    let prepared = detector.prepare(&exp.family)?;
    let (threshold, calibration) = resolve_threshold(exp, &prepared)?;
    let trials = exp.trials;
    let false_alarms: u64 = null_statistics(&prepared, trials, exp.seed, phase::NULL)?
        .into_iter()
        .filter(|&s| s > threshold)
        .count() as u64;
    let misses: u64 = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<bool> {
            let mut rng = stream(exp.seed, phase::ALTERNATIVE, t);
            let set = match &exp.fixed_set {
                Some(s) => s.clone(),
                None => exp.family.sample_member(&mut rng),
            };
            let x = sample_alternative(&exp.model, &set, &mut rng)?;
            Ok(prepared.statistic(x.values())? <= threshold)
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&m| m)
        .count() as u64;
    let type1 = false_alarms as f64 / trials as f64;
    let type2 = misses as f64 / trials as f64;
    let (ci1, ci_type1) = wilson(false_alarms, trials);
    let (ci2, ci_type2) = wilson(misses, trials);
    Ok(RiskEstimate {
        type1,
        type2,
        total: type1 + type2,
        ci1,
        ci2,
        ci_type1,
        ci_type2,
        trials,
        seed: exp.seed,
        config_digest: exp.config_digest(),
        threshold,
        calibration,
        citation_of_threshold: detector.citation(),
        kset_window_mismatches: mismatches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuboptimalityReport {
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub glrt_rho: f64,
    pub glrt: RiskEstimate,
    pub squared_sum: RiskEstimate,
    pub notes: Vec<String>,
}

/// GLRT against the squared-sum test over `k`-sets, both calibrated at
/// `α = 0.05`. At `rho = 0` the GLRT is tuned to `glrt_rho` instead.
pub fn reproduce_glrt_suboptimality(
    family: &FamilyConfig,
    rho: f64,
    glrt_rho: Option<f64>,
    trials: u64,
    seed: u64,
) -> Result<SuboptimalityReport> {
    let FamilyConfig::Ksets { n, k } = *family else {
        return Err(Error::Unsupported("the GLRT suboptimality comparison is specific to k-sets".into()));
    };
    let mut notes = Vec::new();
    if rho >= 0.6 {
        return Err(Error::Precondition(format!("needs rho < 0.6, got {rho}")));
    }
    if (k as f64) > (n as f64).powf(0.7) {
        return Err(Error::Precondition(format!("needs k <= n^0.7 = {:.1}, got k = {k}", (n as f64).powf(0.7))));
    }
    let power = rho * (k * k) as f64 / n as f64;
    if rho > 0.0 && power < 2.0 {
        return Err(Error::Precondition(format!("needs rho k^2 / n >= 2 so the squared sum has power, got {power}")));
    }
    if rho == 0.0 {
        notes.push("rho = 0: hypotheses coincide, degenerate control".into());
    }
    let glrt_rho = match (glrt_rho, rho) {
        (Some(r), _) => r,
        (None, r) if r > 0.0 => r,
        _ => return Err(Error::InvalidParameter("rho = 0 needs an explicit GLRT tuning rho".into())),
    };
    let alpha = crate::detectors::DEFAULT_ALPHA;
    let run = |det: DetectorConfig| {
        let cfg = ExperimentConfig {
            family: family.clone(),
            model: ModelConfig { rho, block: None },
            detector: det.with_rule(ThresholdRule::calibrated(alpha)),
            trials,
            seed,
            risk_mode: RiskMode::AverageUniformS,
        };
        estimate_risk(&Experiment::from_config(&cfg)?)
    };
    let glrt = run(DetectorConfig::new(DetectorName::Glrt).with_rho(glrt_rho))?;
    let squared_sum = run(DetectorConfig::new(DetectorName::SquaredSum))?;
    Ok(SuboptimalityReport { n, k, rho, glrt_rho, glrt, squared_sum, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(json: &str) -> ExperimentConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn always_accept_has_unit_risk() {
        let c = cfg(r#"{"family":{"kind":"intervals","n":20,"k":3},"model":{"rho":0.5},
            "detector":{"name":"squared_sum","threshold_rule":{"kind":"fixed_value","t":1e300}},"trials":50}"#);
        let r = estimate_risk(&Experiment::from_config(&c).unwrap()).unwrap();
        assert_eq!((r.type1, r.type2, r.total), (0.0, 1.0, 1.0));
        assert!(r.ci_type1.0 <= r.type1 && r.type1 <= r.ci_type1.1);
    }

    #[test]
    fn unknown_experiment_key() {
        let e = serde_json::from_str::<ExperimentConfig>(
            r#"{"family":{"kind":"ksets","n":5,"k":2,"q":1},"model":{"rho":0.5},"detector":{"name":"squared_sum"},"trials":5}"#,
        )
        .unwrap_err();
        assert!(e.to_string().contains('q'), "{e}");
    }

    #[test]
    fn calibration_rank_and_refusal() {
        let f = SetFamily::intervals(10, 2).unwrap();
        let d = Detector::from_config(&DetectorConfig::new(DetectorName::DyadicScan), None).unwrap();
        let p = d.prepare(&f).unwrap();
        assert!(matches!(calibrate(&p, 0.05, 1999, 1), Err(Error::Precondition(_))));
        let c = calibrate(&p, 0.05, 2000, 1).unwrap();
        let mut s = null_statistics(&p, 2000, 1, phase::CALIBRATION).unwrap();
        s.sort_by(f64::total_cmp);
        assert_eq!(c.threshold, s[1899]);
        assert_eq!(calibrate(&p, 0.05, 2000, 1).unwrap(), c);
    }

    #[test]
    fn analytic_squared_sum() {
        let f = SetFamily::intervals(50, 2).unwrap();
        let d = Detector::from_config(&DetectorConfig::new(DetectorName::SquaredSum), None).unwrap();
        let c = calibrate(&d.prepare(&f).unwrap(), 0.05, 0, 0).unwrap();
        assert!(c.analytic);
        assert!((c.threshold / 50.0 - 3.841_458_820_694_124).abs() < 1e-9);
    }

    #[test]
    fn suboptimality_scope() {
        let f = FamilyConfig::Intervals { n: 100, k: 10, circular: true };
        assert!(matches!(reproduce_glrt_suboptimality(&f, 0.5, None, 10, 1), Err(Error::Unsupported(_))));
        let f = FamilyConfig::Ksets { n: 100, k: 10 };
        assert!(matches!(reproduce_glrt_suboptimality(&f, 0.7, None, 10, 1), Err(Error::Precondition(_))));
    }
}
