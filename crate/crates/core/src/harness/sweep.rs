//! Grids of experiments written as one CSV row per cell.

use super::{estimate_risk, Experiment, ExperimentConfig, FamilyConfig, ModelConfig, RiskMode};
use crate::detectors::DetectorConfig;
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Intervals,
    LinearIntervals,
    Ksets,
    /// Square two-dimensional hypercubes: `n = m^2`, `k = s^2`.
    Hypercubes,
    /// `n = k^2`.
    Matchings,
    /// `n = k (k+1) / 2`.
    Trees,
}

impl FamilyName {
    pub fn as_str(&self) -> &'static str {
        match self {
            FamilyName::Intervals => "intervals",
            FamilyName::LinearIntervals => "linear_intervals",
            FamilyName::Ksets => "ksets",
            FamilyName::Hypercubes => "hypercubes",
            FamilyName::Matchings => "matchings",
            FamilyName::Trees => "trees",
        }
    }

    /// Family config for a grid point, or why the point is not realisable.
    pub fn config(&self, n: usize, k: usize) -> Result<FamilyConfig> {
        let exact_sqrt = |v: usize| {
            let r = (v as f64).sqrt().round() as usize;
            (r * r == v).then_some(r)
        };
        Ok(match self {
            FamilyName::Intervals => FamilyConfig::Intervals { n, k, circular: true },
            FamilyName::LinearIntervals => FamilyConfig::Intervals { n, k, circular: false },
            FamilyName::Ksets => FamilyConfig::Ksets { n, k },
            FamilyName::Hypercubes => match (exact_sqrt(n), exact_sqrt(k)) {
                (Some(m), Some(s)) => FamilyConfig::Hypercubes { m, sides: vec![s, s] },
                _ => return Err(Error::InvalidParameter(format!("hypercube grid points need square n and k, got n={n}, k={k}"))),
            },
            FamilyName::Matchings if n == k * k => FamilyConfig::Matchings { k },
            FamilyName::Trees if 2 * n == k * (k + 1) => FamilyConfig::Trees { k },
            _ => return Err(Error::InvalidParameter(format!("{} has no member set with n={n}, k={k}", self.as_str()))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub rho: Vec<f64>,
    pub family: Vec<FamilyName>,
    pub detector: Vec<DetectorConfig>,
    pub trials: u64,
    #[serde(default = "super::default_seed")]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub rho: f64,
    pub family: String,
    pub detector: String,
    pub type1: Option<f64>,
    pub type2: Option<f64>,
    pub total: Option<f64>,
    pub ci1: Option<f64>,
    pub ci2: Option<f64>,
    pub seed: u64,
    pub citation_of_threshold: String,
    pub error: String,
}

#[derive(Serialize)]
struct CellKey<'a> {
    n: usize,
    k: usize,
    rho: f64,
    family: &'a str,
    detector: &'a DetectorConfig,
}

/// Seed of one cell, a function of the master seed and the cell content only.
pub fn cell_seed(master: u64, n: usize, k: usize, rho: f64, family: FamilyName, detector: &DetectorConfig) -> u64 {
    let key = CellKey { n, k, rho, family: family.as_str(), detector };
    derive_seed(master, &serde_json::to_vec(&key).expect("serialisable"))
}

fn run_cell(n: usize, k: usize, rho: f64, family: FamilyName, detector: &DetectorConfig, trials: u64, seed: u64) -> SweepRow {
    let mut row = SweepRow {
        n,
        k,
        rho,
        family: family.as_str().to_string(),
        detector: detector.name.as_str().to_string(),
        type1: None,
        type2: None,
        total: None,
        ci1: None,
        ci2: None,
        seed,
        citation_of_threshold: String::new(),
        error: String::new(),
    };
    let outcome = family.config(n, k).and_then(|fc| {
        let cfg = ExperimentConfig {
            family: fc,
            model: ModelConfig { rho, block: None },
            detector: detector.clone(),
            trials,
            seed,
            risk_mode: RiskMode::AverageUniformS,
        };
        estimate_risk(&Experiment::from_config(&cfg)?)
    });
    match outcome {
        Ok(r) => {
            row.type1 = Some(r.type1);
            row.type2 = Some(r.type2);
            row.total = Some(r.total);
            row.ci1 = Some(r.ci1);
            row.ci2 = Some(r.ci2);
            row.citation_of_threshold = r.citation_of_threshold.to_string();
        }
        Err(e) => row.error = format!("{}: {e}", e.kind()),
    }
    row
}

/// One row per grid cell in declaration order (n, k, rho, family, detector
/// nested outermost first). Failed cells carry the error text.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.n.is_empty() || cfg.k.is_empty() || cfg.rho.is_empty() || cfg.family.is_empty() || cfg.detector.is_empty() {
        return Err(Error::InvalidParameter("every sweep axis needs at least one value".into()));
    }
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &k in &cfg.k {
            for &rho in &cfg.rho {
                for &family in &cfg.family {
                    for det in &cfg.detector {
                        let seed = cell_seed(cfg.seed, n, k, rho, family, det);
                        rows.push(run_cell(n, k, rho, family, det, cfg.trials, seed));
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// RFC 4180 CSV with a header row.
pub fn write_csv<W: Write, T: Serialize>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::DetectorName;

    #[test]
    fn bad_cells_become_error_rows() {
        let cfg = SweepConfig {
            n: vec![10],
            k: vec![3],
            rho: vec![0.5],
            family: vec![FamilyName::Matchings, FamilyName::Intervals],
            detector: vec![DetectorConfig::new(DetectorName::SquaredSum)],
            trials: 20,
            seed: 3,
        };
        let rows = sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(!rows[0].error.is_empty() && rows[0].total.is_none());
        assert!(rows[1].error.is_empty() && rows[1].total.is_some());
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("n,k,rho,family,detector,type1,type2,total,ci1,ci2,seed,citation_of_threshold,error\n"));
    }
}
