//! Test statistics paired with threshold rules.
//!
//! A [`Detector`] is built from a JSON [`DetectorConfig`]:
//!
//! ```json
//! {"name": "glrt",
//!  "params": {"rho": 0.4},
//!  "threshold_rule": {"kind": "paper_formula", "formula": {"name": "glrt_small_class"}}}
//! ```
//!
//! `params` may carry `rho`, `m` (gof bins), `set` (1-based indices for
//! `np_singleton`) and `engine` (`sorted_window` or `brute_force`). Unknown
//! keys are rejected. Missing `rho` is filled from the experiment model.
//! Threshold rules are `paper_formula`, `calibrated_quantile {alpha, null_trials}`
//! and `fixed_value {t}`. Every decision rejects iff `statistic > threshold`.

pub mod dyadic;
pub mod gof;
pub mod lr;
pub mod scan;

use crate::classes::{SetFamily, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::model::{IndexSet, QuadForm};
use crate::special::chi2_1_quantile;
use scan::{KSetEngine, Objective};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub use dyadic::{dyadic_scan, DyadicScan};
pub use gof::{gof_counts, gof_small_k_threshold, gof_stat, gof_threshold};
pub use lr::{bayes_lr_stat, half_deviation_check, log_bayes_lr, np_singleton_stat, np_tau};
pub use scan::{glrt_stat, local_sq_stat, ScanResult};

pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorName {
    SquaredSum,
    Glrt,
    LocalSquaredSum,
    DyadicScan,
    Gof,
    NpSingleton,
    BayesLr,
}

impl DetectorName {
    pub fn as_str(&self) -> &'static str {
        match self {
            DetectorName::SquaredSum => "squared_sum",
            DetectorName::Glrt => "glrt",
            DetectorName::LocalSquaredSum => "local_squared_sum",
            DetectorName::DyadicScan => "dyadic_scan",
            DetectorName::Gof => "gof",
            DetectorName::NpSingleton => "np_singleton",
            DetectorName::BayesLr => "bayes_lr",
        }
    }

    pub fn requires_rho(&self) -> bool {
        matches!(self, DetectorName::Glrt | DetectorName::NpSingleton | DetectorName::BayesLr)
    }

    pub fn requires_k(&self) -> bool {
        matches!(
            self,
            DetectorName::Glrt | DetectorName::LocalSquaredSum | DetectorName::NpSingleton | DetectorName::BayesLr
        )
    }
}

/// Closed-form thresholds; each carries the result it comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PaperFormula {
    /// `n t_n`; `t_n` defaults to `sqrt(ρ k^2 / n)`.
    SquaredSumTn {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_n: Option<f64>,
    },
    /// `-ρk + ρ sqrt(5 k ln N) + 2 ln N`.
    GlrtSmallClass,
    /// `-ln N / sqrt(η)`, `η = (1-ρ) N^{2/k} ln(N) / k`.
    GlrtLargeClass,
    /// `2 k ln N`.
    LocalSum,
    /// `n/m + sqrt(3 n ln(m) / m)`.
    Gof,
    /// Reject when the largest bin holds at least the binomial-tail count.
    GofSmallK { alpha: f64 },
    /// `log det A_S`.
    NpLogDet,
    /// `τ_k = -ρk + ρ ln(k) sqrt(k) + ln(k)`.
    NpTau,
    /// `ln L > 0`.
    LrUnit,
}

impl PaperFormula {
    pub fn citation(&self) -> &'static str {
        use crate::citations as c;
        match self {
            PaperFormula::SquaredSumTn { .. } => c::SQUARED_SUM,
            PaperFormula::GlrtSmallClass => c::GLRT_SMALL,
            PaperFormula::GlrtLargeClass => c::GLRT_LARGE,
            PaperFormula::LocalSum => c::LOCAL_SUM,
            PaperFormula::Gof => c::GOF,
            PaperFormula::GofSmallK { .. } => c::GOF_SMALL_K,
            PaperFormula::NpLogDet | PaperFormula::NpTau => c::NP_SINGLETON,
            PaperFormula::LrUnit => c::BAYES_LR,
        }
    }

    fn detector(&self) -> DetectorName {
        match self {
            PaperFormula::SquaredSumTn { .. } => DetectorName::SquaredSum,
            PaperFormula::GlrtSmallClass | PaperFormula::GlrtLargeClass => DetectorName::Glrt,
            PaperFormula::LocalSum => DetectorName::LocalSquaredSum,
            PaperFormula::Gof | PaperFormula::GofSmallK { .. } => DetectorName::Gof,
            PaperFormula::NpLogDet | PaperFormula::NpTau => DetectorName::NpSingleton,
            PaperFormula::LrUnit => DetectorName::BayesLr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdRule {
    PaperFormula { formula: PaperFormula },
    CalibratedQuantile {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        null_trials: Option<u64>,
    },
    FixedValue { t: f64 },
}

impl ThresholdRule {
    pub fn calibrated(alpha: f64) -> Self {
        ThresholdRule::CalibratedQuantile { alpha, null_trials: None }
    }

    pub fn paper(formula: PaperFormula) -> Self {
        ThresholdRule::PaperFormula { formula }
    }

    pub fn citation(&self) -> &'static str {
        match self {
            ThresholdRule::PaperFormula { formula } => formula.citation(),
            ThresholdRule::CalibratedQuantile { .. } => "calibrated",
            ThresholdRule::FixedValue { .. } => "fixed",
        }
    }
}

/// Smallest null sample accepted for an empirical `(1-α)` quantile.
pub fn min_null_trials(alpha: f64) -> u64 {
    (100.0 / alpha).ceil() as u64
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub set: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub engine: Option<KSetEngine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub name: DetectorName,
    #[serde(default)]
    pub params: DetectorParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_rule: Option<ThresholdRule>,
}

impl DetectorConfig {
    pub fn new(name: DetectorName) -> Self {
        Self { name, params: DetectorParams::default(), threshold_rule: None }
    }

    pub fn with_rule(mut self, rule: ThresholdRule) -> Self {
        self.threshold_rule = Some(rule);
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.params.rho = Some(rho);
        self
    }
}

/// Quantities a threshold may depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdContext {
    pub n: usize,
    pub k: usize,
    pub log_family_size: f64,
    pub rho: f64,
}

impl ThresholdContext {
    pub fn new(family: &SetFamily, rho: f64) -> Self {
        Self { n: family.n(), k: family.k(), log_family_size: family.log_size(), rho }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub reject: bool,
    pub statistic_value: f64,
    pub threshold: f64,
}

impl Decision {
    pub fn new(statistic_value: f64, threshold: f64) -> Self {
        Self { reject: statistic_value > threshold, statistic_value, threshold }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    name: DetectorName,
    rho: Option<f64>,
    m: Option<usize>,
    set: Option<IndexSet>,
    engine: KSetEngine,
    rule: ThresholdRule,
}

fn default_rule(name: DetectorName) -> ThresholdRule {
    match name {
        DetectorName::LocalSquaredSum => ThresholdRule::paper(PaperFormula::LocalSum),
        DetectorName::Gof => ThresholdRule::paper(PaperFormula::Gof),
        DetectorName::NpSingleton => ThresholdRule::paper(PaperFormula::NpLogDet),
        DetectorName::BayesLr => ThresholdRule::paper(PaperFormula::LrUnit),
        _ => ThresholdRule::calibrated(DEFAULT_ALPHA),
    }
}

impl Detector {
    /// Builds a detector; `model_rho` fills a missing `rho` parameter.
    pub fn from_config(cfg: &DetectorConfig, model_rho: Option<f64>) -> Result<Self> {
        let name = cfg.name;
        let rule = cfg.threshold_rule.unwrap_or_else(|| default_rule(name));
        let rho = cfg.params.rho.or(model_rho);
        if name.requires_rho() {
            match rho {
                Some(r) if r > 0.0 && r < 1.0 => {}
                Some(r) => return Err(Error::InvalidParameter(format!("{} needs rho in (0,1), got {r}", name.as_str()))),
                None => return Err(Error::InvalidParameter(format!("{} needs params.rho", name.as_str()))),
            }
        }
        let m = match name {
            DetectorName::Gof => match cfg.params.m {
                Some(m) if m >= 2 => Some(m),
                Some(m) => return Err(Error::InvalidParameter(format!("gof needs m >= 2, got {m}"))),
                None => return Err(Error::InvalidParameter("gof needs params.m".into())),
            },
            _ => cfg.params.m,
        };
        let set = match &cfg.params.set {
            Some(s) => {
                if s.contains(&0) {
                    return Err(Error::InvalidSet("set indices are 1-based".into()));
                }
                let mut s: IndexSet = s.iter().map(|i| i - 1).collect();
                s.sort_unstable();
                Some(s)
            }
            None => None,
        };
        match rule {
            ThresholdRule::PaperFormula { formula } if formula.detector() != name => {
                return Err(Error::InvalidParameter(format!(
                    "threshold formula {formula:?} does not apply to detector {}",
                    name.as_str()
                )));
            }
            ThresholdRule::CalibratedQuantile { alpha, null_trials } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::InvalidParameter(format!("alpha must lie in (0,1), got {alpha}")));
                }
                if let Some(t) = null_trials {
                    if t < min_null_trials(alpha) {
                        return Err(Error::Precondition(format!(
                            "null_trials = {t} is below 100/alpha = {}",
                            min_null_trials(alpha)
                        )));
                    }
                }
            }
            ThresholdRule::FixedValue { t } if t.is_nan() => {
                return Err(Error::InvalidParameter("fixed threshold is NaN".into()));
            }
            _ => {}
        }
        Ok(Self { name, rho, m, set, engine: cfg.params.engine.unwrap_or_default(), rule })
    }

    /// Config with every default filled in.
    pub fn to_config(&self) -> DetectorConfig {
        DetectorConfig {
            name: self.name,
            params: DetectorParams {
                rho: self.rho,
                m: self.m,
                set: self.set.as_ref().map(|s| s.iter().map(|i| i + 1).collect()),
                engine: matches!(self.name, DetectorName::Glrt).then_some(self.engine),
            },
            threshold_rule: Some(self.rule),
        }
    }

    pub fn name(&self) -> DetectorName {
        self.name
    }

    pub fn rule(&self) -> &ThresholdRule {
        &self.rule
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn engine(&self) -> KSetEngine {
        self.engine
    }

    pub fn with_engine(mut self, engine: KSetEngine) -> Self {
        self.engine = engine;
        self
    }

    pub fn with_rule(mut self, rule: ThresholdRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn citation(&self) -> &'static str {
        self.rule.citation()
    }

    /// Threshold for paper-formula and fixed rules.
    pub fn formula_threshold(&self, ctx: &ThresholdContext) -> Result<f64> {
        match self.rule {
            ThresholdRule::FixedValue { t } => Ok(t),
            ThresholdRule::CalibratedQuantile { .. } => {
                Err(Error::Precondition("calibrated thresholds come from the harness calibrate step".into()))
            }
            ThresholdRule::PaperFormula { formula } => self.paper_value(formula, ctx),
        }
    }

    fn paper_value(&self, formula: PaperFormula, ctx: &ThresholdContext) -> Result<f64> {
        let rho = self.rho.unwrap_or(ctx.rho);
        let (n, k, ln_n) = (ctx.n as f64, ctx.k as f64, ctx.log_family_size);
        Ok(match formula {
            PaperFormula::SquaredSumTn { t_n } => n * t_n.unwrap_or_else(|| (rho * k * k / n).sqrt()),
            PaperFormula::GlrtSmallClass => -rho * k + rho * (5.0 * k * ln_n).sqrt() + 2.0 * ln_n,
            PaperFormula::GlrtLargeClass => {
                let eta = (1.0 - rho) * (2.0 * ln_n / k).exp() * ln_n / k;
                -ln_n / eta.sqrt()
            }
            PaperFormula::LocalSum => 2.0 * k * ln_n,
            PaperFormula::Gof => gof_threshold(ctx.n, self.m.expect("validated")),
            PaperFormula::GofSmallK { alpha } => {
                gof_small_k_threshold(ctx.n, self.m.expect("validated"), alpha)? as f64 - 1.0
            }
            PaperFormula::NpLogDet => lr::np_log_det_threshold(self.singleton_k(ctx), rho),
            PaperFormula::NpTau => np_tau(self.singleton_k(ctx), rho),
            PaperFormula::LrUnit => 0.0,
        })
    }

    fn singleton_k(&self, ctx: &ThresholdContext) -> usize {
        self.set.as_ref().map_or(ctx.k, |s| s.len())
    }

    /// Closed-form null quantile where the null law is known.
    pub fn analytic_null_quantile(&self, n: usize, alpha: f64) -> Option<f64> {
        match self.name {
            DetectorName::SquaredSum => Some(n as f64 * chi2_1_quantile(1.0 - alpha)),
            _ => None,
        }
    }

    /// Precomputes member lists so repeated statistics are cheap.
    pub fn prepare(&self, family: &SetFamily) -> Result<PreparedDetector> {
        PreparedDetector::new(self.clone(), family.clone())
    }

    /// One-off statistic; builds a [`PreparedDetector`] internally.
    pub fn statistic(&self, x: &[f64], family: &SetFamily) -> Result<f64> {
        self.prepare(family)?.statistic(x)
    }
}

/// A detector bound to one family.
#[derive(Debug, Clone)]
pub struct PreparedDetector {
    detector: Detector,
    family: SetFamily,
    objective: Option<Objective>,
    flat_members: Option<Arc<Vec<usize>>>,
    singleton: Option<IndexSet>,
}

impl PreparedDetector {
    fn new(detector: Detector, family: SetFamily) -> Result<Self> {
        let objective = match detector.name {
            DetectorName::Glrt => Some(Objective::Glrt(QuadForm::new(family.k(), detector.rho.expect("validated"))?)),
            DetectorName::LocalSquaredSum => Some(Objective::LocalSquaredSum),
            _ => None,
        };
        let enumerate = match (detector.name, objective) {
            (DetectorName::BayesLr, _) => true,
            (_, Some(obj)) => scan::needs_enumeration(&family, obj, detector.engine),
            _ => false,
        };
        let flat_members = if enumerate {
            Some(Arc::new(family.enumerate_members(DEFAULT_ENUMERATION_CAP)?.flatten().collect()))
        } else {
            None
        };
        let singleton = if detector.name == DetectorName::NpSingleton {
            let s = match &detector.set {
                Some(s) => s.clone(),
                None if family.size_u64() == Some(1) => family.members(1)?.remove(0),
                None => {
                    return Err(Error::InvalidParameter(
                        "np_singleton needs params.set unless the family has a single member".into(),
                    ))
                }
            };
            crate::model::validate_set(&s, family.n(), s.len())?;
            Some(s)
        } else {
            None
        };
        if detector.name == DetectorName::BayesLr {
            QuadForm::new(family.k(), detector.rho.expect("validated"))?;
        }
        Ok(Self { detector, family, objective, flat_members, singleton })
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub fn family(&self) -> &SetFamily {
        &self.family
    }

    pub fn statistic(&self, x: &[f64]) -> Result<f64> {
        let n = self.family.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        let k = self.family.k();
        Ok(match self.detector.name {
            DetectorName::SquaredSum => {
                let s: f64 = x.iter().sum();
                s * s
            }
            DetectorName::Glrt | DetectorName::LocalSquaredSum => {
                let obj = self.objective.expect("scan objective");
                match &self.flat_members {
                    Some(flat) => scan::scan_members(x, flat.chunks_exact(k), obj).expect("non-empty").value,
                    None => scan::scan(x, &self.family, obj, self.detector.engine)?.value,
                }
            }
            DetectorName::DyadicScan => dyadic_scan(x).value,
            DetectorName::Gof => gof_stat(x, self.detector.m.expect("validated"))?,
            DetectorName::NpSingleton => {
                let s = self.singleton.as_ref().expect("validated");
                crate::model::quad_form(x, s, self.detector.rho.expect("validated"))?
            }
            DetectorName::BayesLr => {
                let form = QuadForm::new(k, self.detector.rho.expect("validated"))?;
                lr::log_bayes_lr_flat(x, self.flat_members.as_ref().expect("members"), form)
            }
        })
    }

    pub fn decide(&self, x: &[f64], threshold: f64) -> Result<Decision> {
        Ok(Decision::new(self.statistic(x)?, threshold))
    }

    /// Decision for paper-formula and fixed rules.
    pub fn decide_formula(&self, x: &[f64], model_rho: f64) -> Result<Decision> {
        let t = self.detector.formula_threshold(&ThresholdContext::new(&self.family, model_rho))?;
        self.decide(x, t)
    }
}
