//! Likelihood-ratio tests: the Neyman–Pearson test for a single known set
//! and the Bayes likelihood ratio under the uniform prior on a family.

use crate::classes::SetFamily;
use crate::error::{Error, Result};
use crate::model::{log_det_as, quad_form, validate_set, CorrelationModel, QuadForm};
use crate::rng::{phase, stream};

/// `log det A_S`, the optimal cut-off for a single known set.
pub fn np_log_det_threshold(k: usize, rho: f64) -> f64 {
    log_det_as(k, rho)
}

/// `-ρk + ρ ln(k) sqrt(k) + ln(k)`.
pub fn np_tau(k: usize, rho: f64) -> f64 {
    let kf = k as f64;
    let t = kf.ln();
    -rho * kf + rho * t * kf.sqrt() + t
}

/// Quadratic form on the known set, after validating the set against `n`.
pub fn np_singleton_stat(x: &[f64], set: &[usize], rho: f64) -> Result<f64> {
    validate_set(set, x.len(), set.len())?;
    quad_form(x, set, rho)
}

/// Streaming `ln(L(X))` over a flat member list (`k` indices per member).
pub fn log_bayes_lr_flat(x: &[f64], flat_members: &[usize], form: QuadForm) -> f64 {
    let k = form.k;
    let count = flat_members.len() / k;
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0;
    for m in flat_members.chunks_exact(k) {
        let v = 0.5 * form.eval(x, m);
        if v > max {
            acc = acc * (max - v).exp() + 1.0;
            max = v;
        } else {
            acc += (v - max).exp();
        }
    }
    max + acc.ln() - (count as f64).ln() - 0.5 * log_det_as(k, form.rho)
}

/// `ln L(X)` with `L = (1/N) Σ_S Z_S / E_0 Z_S`.
pub fn log_bayes_lr(x: &[f64], family: &SetFamily, rho: f64, cap: u64) -> Result<f64> {
    if x.len() != family.n() {
        return Err(Error::DimensionMismatch { expected: family.n(), got: x.len() });
    }
    let form = QuadForm::new(family.k(), rho)?;
    let flat: Vec<usize> = family.enumerate_members(cap)?.flatten().collect();
    Ok(log_bayes_lr_flat(x, &flat, form))
}

/// `L(X)` itself; may overflow to `+inf` for strong signals.
pub fn bayes_lr_stat(x: &[f64], family: &SetFamily, rho: f64, cap: u64) -> Result<f64> {
    Ok(log_bayes_lr(x, family, rho, cap)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct HalfDeviationCheck {
    pub k: usize,
    pub rho: f64,
    pub t: f64,
    pub trials: u64,
    pub frequency: f64,
    pub standard_error: f64,
    pub bound: f64,
}

impl HalfDeviationCheck {
    /// Frequency within `bound + sigmas` standard errors.
    pub fn holds(&self, sigmas: f64) -> bool {
        self.frequency <= self.bound + sigmas * self.standard_error
    }
}

/// Frequency of `#{i in S : |X_i - mean_S| > t} >= k/2` for equicorrelated
/// samples on `S`, against the Chebyshev-type bound `2(1-ρ)/t^2`.
pub fn half_deviation_check(k: usize, rho: f64, t: f64, trials: u64, seed: u64) -> Result<HalfDeviationCheck> {
    if !(t > 0.0) || trials == 0 {
        return Err(Error::InvalidParameter("t must be positive and trials >= 1".into()));
    }
    let model = CorrelationModel::new(k, k, rho)?;
    let set: Vec<usize> = (0..k).collect();
    let mut hits = 0u64;
    for trial in 0..trials {
        let x = crate::model::sample_alternative(&model, &set, &mut stream(seed, phase::AUX, trial))?;
        let x = x.values();
        let mean = x.iter().sum::<f64>() / k as f64;
        let far = x.iter().filter(|v| (*v - mean).abs() > t).count();
        if 2 * far >= k {
            hits += 1;
        }
    }
    let freq = hits as f64 / trials as f64;
    Ok(HalfDeviationCheck {
        k,
        rho,
        t,
        trials,
        frequency: freq,
        standard_error: (freq * (1.0 - freq) / trials as f64).sqrt(),
        bound: 2.0 * (1.0 - rho) / (t * t),
    })
}
