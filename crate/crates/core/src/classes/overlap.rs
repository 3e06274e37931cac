//! Law of the overlap `Z = |S ∩ S'|` of two independent uniform members and
//! its moment generating function `E exp(nu Z)`, exact or bounded.

use super::{biguint_binomial, interval_positions, ln_biguint, overlap_size, FamilyKind, SetFamily, DEFAULT_ENUMERATION_CAP};
use crate::error::{invalid, Error, Result};
use crate::rng::{phase, stream};
use crate::special::{log_add_exp, log_sum_exp};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Exact overlap law as integer counts: `P(Z = l) = counts[l] / total`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactOverlap {
    pub counts: Vec<BigUint>,
    pub total: BigUint,
}

impl ExactOverlap {
    pub fn pmf(&self) -> Vec<f64> {
        let lt = ln_biguint(&self.total);
        self.counts
            .iter()
            .map(|c| if c.is_zero() { 0.0 } else { (ln_biguint(c) - lt).exp() })
            .collect()
    }

    /// `ln E exp(nu Z)`.
    pub fn log_mgf(&self, nu: f64) -> f64 {
        let lt = ln_biguint(&self.total);
        log_sum_exp(
            self.counts
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(l, c)| ln_biguint(c) - lt + nu * l as f64),
        )
    }

    /// Normalised form with the fraction reduced to lowest terms is not
    /// needed; two laws are equal when cross products agree.
    pub fn same_law(&self, other: &ExactOverlap) -> bool {
        let len = self.counts.len().max(other.counts.len());
        (0..len).all(|l| {
            let a = self.counts.get(l).cloned().unwrap_or_default();
            let b = other.counts.get(l).cloned().unwrap_or_default();
            a * &other.total == b * &self.total
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PmfMode {
    Exact,
    MonteCarlo { pairs: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum MgfMode {
    Exact,
    CorollaryBound,
    MonteCarlo { pairs: u64, seed: u64 },
}

impl MgfMode {
    pub fn label(&self) -> &'static str {
        match self {
            MgfMode::Exact => "exact",
            MgfMode::CorollaryBound => "corollary_bound",
            MgfMode::MonteCarlo { .. } => "monte_carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapDistribution {
    /// `pmf[l] = P(Z = l)`, `l = 0..=k`.
    pub pmf: Vec<f64>,
    pub mode: PmfMode,
}

/// Offsets `d` of a circular interval of length `k` on `Z_m` relative to
/// one at the origin, tallied by overlap size. `counts` sums to `positions`.
fn circular_axis_law(m: usize, k: usize) -> ExactOverlap {
    let pos = interval_positions(m, k);
    let mut counts = vec![BigUint::zero(); k + 1];
    if pos == 1 {
        counts[k] = BigUint::one();
        return ExactOverlap { counts, total: BigUint::one() };
    }
    if m >= 2 * k {
        counts[0] = BigUint::from(m - 2 * k + 1);
        for c in counts.iter_mut().take(k).skip(1) {
            *c = BigUint::from(2u32);
        }
        counts[k] = BigUint::one();
    } else {
        let mut marks = vec![false; m];
        for j in 0..k {
            marks[j] = true;
        }
        for d in 0..m {
            let l = (0..k).filter(|&j| marks[(d + j) % m]).count();
            counts[l] += 1u32;
        }
    }
    ExactOverlap { counts, total: BigUint::from(pos) }
}

impl SetFamily {
    /// Exact overlap law, where a closed form or cheap exact route exists:
    /// intervals, `k`-sets, hypercubes and explicit lists.
    pub fn exact_overlap(&self) -> Result<ExactOverlap> {
        let k = self.k;
        match &self.kind {
            FamilyKind::KIntervalsCircular { n, k } => Ok(circular_axis_law(*n, *k)),
            FamilyKind::KIntervalsLinear { n, k } => {
                let pos = n - k + 1;
                let mut counts = vec![BigUint::zero(); k + 1];
                for i in 0..pos {
                    for j in 0..pos {
                        counts[k.saturating_sub(i.abs_diff(j))] += 1u32;
                    }
                }
                Ok(ExactOverlap { counts, total: BigUint::from(pos * pos) })
            }
            FamilyKind::KSets { n, .. } => {
                let (n, kk) = (*n as u64, k as u64);
                let counts = (0..=kk)
                    .map(|l| biguint_binomial(kk, l) * biguint_binomial(n - kk, kk - l))
                    .collect();
                Ok(ExactOverlap { counts, total: biguint_binomial(n, kk) })
            }
            FamilyKind::KHypercubes { m, sides } => {
                // Z is the product of the independent per-axis overlaps.
                let mut law = ExactOverlap { counts: vec![BigUint::zero(), BigUint::one()], total: BigUint::one() };
                for &s in sides {
                    let axis = circular_axis_law(*m, s);
                    let mut next = vec![BigUint::zero(); law.counts.len() * (s + 1)];
                    for (a, ca) in law.counts.iter().enumerate() {
                        if ca.is_zero() {
                            continue;
                        }
                        for (b, cb) in axis.counts.iter().enumerate() {
                            if !cb.is_zero() {
                                next[a * b] += ca * cb;
                            }
                        }
                    }
                    law = ExactOverlap { counts: next, total: law.total * axis.total };
                }
                law.counts.resize(k + 1, BigUint::zero());
                Ok(law)
            }
            FamilyKind::Explicit { .. } => self.brute_force_overlap(DEFAULT_ENUMERATION_CAP),
            FamilyKind::PerfectMatchings { .. } => Err(Error::ExactUnavailable("perfect matchings")),
            FamilyKind::SpanningTrees { .. } => Err(Error::ExactUnavailable("spanning trees")),
        }
    }

    /// Overlap law by enumerating all ordered pairs of members. Refuses
    /// when `N^2` exceeds `pair_cap`.
    pub fn brute_force_overlap(&self, pair_cap: u64) -> Result<ExactOverlap> {
        let n_members = self.size_u64().filter(|&s| s.checked_mul(s).is_some_and(|p| p <= pair_cap));
        if n_members.is_none() {
            return Err(Error::EnumerationCap { size: format!("{}^2 pairs", self.size()), cap: pair_cap });
        }
        let members = self.members(pair_cap)?;
        let k = self.k;
        let marks: Vec<Vec<bool>> = members
            .iter()
            .map(|m| {
                let mut v = vec![false; self.n];
                for &i in m {
                    v[i] = true;
                }
                v
            })
            .collect();
        let tallies: Vec<u64> = members
            .par_iter()
            .map(|a| {
                let mut t = vec![0u64; k + 1];
                for mb in &marks {
                    t[a.iter().filter(|&&i| mb[i]).count()] += 1;
                }
                t
            })
            .reduce(|| vec![0u64; k + 1], |mut x, y| {
                x.iter_mut().zip(y).for_each(|(a, b)| *a += b);
                x
            });
        let total = BigUint::from(members.len() as u64) * BigUint::from(members.len() as u64);
        Ok(ExactOverlap { counts: tallies.into_iter().map(BigUint::from).collect(), total })
    }

    /// Overlaps of `pairs` independent uniform pairs; pair `t` uses its own
    /// stream so the result does not depend on scheduling.
    pub fn sample_overlaps(&self, pairs: u64, seed: u64) -> Vec<usize> {
        (0..pairs)
            .into_par_iter()
            .map(|t| {
                let mut rng = stream(seed, phase::OVERLAP, t);
                let a = self.sample_member(&mut rng);
                let b = self.sample_member(&mut rng);
                overlap_size(&a, &b)
            })
            .collect()
    }

    pub fn overlap_pmf(&self, mode: PmfMode) -> Result<OverlapDistribution> {
        let pmf = match mode {
            PmfMode::Exact => self.exact_overlap()?.pmf(),
            PmfMode::MonteCarlo { pairs, seed } => {
                if pairs == 0 {
                    return Err(invalid("Monte Carlo overlap needs at least one pair"));
                }
                let mut counts = vec![0u64; self.k + 1];
                for z in self.sample_overlaps(pairs, seed) {
                    counts[z] += 1;
                }
                counts.into_iter().map(|c| c as f64 / pairs as f64).collect()
            }
        };
        Ok(OverlapDistribution { pmf, mode })
    }

    /// `ln E exp(nu Z)` in the requested mode.
    pub fn overlap_log_mgf(&self, nu: f64, mode: MgfMode) -> Result<f64> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(invalid(format!("nu must be finite and >= 0, got {nu}")));
        }
        if nu == 0.0 {
            return Ok(0.0);
        }
        match mode {
            MgfMode::Exact => Ok(self.exact_overlap()?.log_mgf(nu)),
            MgfMode::CorollaryBound => Ok(self.corollary_log_mgf_bound(nu)),
            MgfMode::MonteCarlo { pairs, seed } => {
                if pairs == 0 {
                    return Err(invalid("Monte Carlo overlap needs at least one pair"));
                }
                let mut counts = vec![0u64; self.k + 1];
                for z in self.sample_overlaps(pairs, seed) {
                    counts[z] += 1;
                }
                let ln_pairs = (pairs as f64).ln();
                Ok(log_sum_exp(
                    counts
                        .iter()
                        .enumerate()
                        .filter(|(_, &c)| c > 0)
                        .map(|(l, &c)| (c as f64).ln() - ln_pairs + nu * l as f64),
                ))
            }
        }
    }

    /// Closed-form upper bounds on `ln E exp(nu Z)`.
    ///
    /// * `k`-sets: `k ln(1 + (e^nu - 1) k / n)` (negative association);
    /// * matchings: `k ln(1 + (e^nu - 1) / k)`;
    /// * trees: `k ln(1 + 2 (e^nu - 1) / (k + 1))`;
    /// * intervals: `ln(1 + (2k / N) e^{nu k})`;
    /// * hypercubes: `ln(1 + Π_s min(1, 2 k_s / N_s) e^{nu k})`, using
    ///   `P(Z >= 1) = Π_s P(Z_s >= 1)`;
    /// * disjoint explicit: `ln(1 + e^{nu k} / N)`; any other explicit list
    ///   gets the trivial `nu k`.
    pub fn corollary_log_mgf_bound(&self, nu: f64) -> f64 {
        let k = self.k as f64;
        let em1 = nu.exp_m1();
        match &self.kind {
            FamilyKind::KSets { n, .. } => k * (em1 * k / *n as f64).ln_1p(),
            FamilyKind::PerfectMatchings { .. } => k * (em1 / k).ln_1p(),
            FamilyKind::SpanningTrees { .. } => k * (em1 * 2.0 / (k + 1.0)).ln_1p(),
            FamilyKind::KIntervalsCircular { .. } | FamilyKind::KIntervalsLinear { .. } => {
                log_add_exp(0.0, (2.0 * k).ln() - self.log_size + nu * k)
            }
            FamilyKind::KHypercubes { m, sides } => {
                let ln_hit: f64 = sides
                    .iter()
                    .map(|&s| (2.0 * s as f64 / interval_positions(*m, s) as f64).min(1.0).ln())
                    .sum();
                log_add_exp(0.0, ln_hit + nu * k)
            }
            FamilyKind::Explicit { .. } => {
                if self.is_disjoint_explicit() {
                    log_add_exp(0.0, nu * k - self.log_size)
                } else {
                    nu * k
                }
            }
        }
    }

    /// MGF of the interval law with `P(Z = l) = 2/N` for every `l = 1..=k`,
    /// the simplified (over-counting) form used to bound interval families:
    /// `ln(1 + (2/N)(Σ_l e^{nu l} - k))`.
    pub fn interval_simplified_log_mgf(&self, nu: f64) -> Result<f64> {
        match self.kind {
            FamilyKind::KIntervalsCircular { k, .. } => {
                let s: f64 = (1..=k).map(|l| (nu * l as f64).exp_m1()).sum();
                Ok((2.0 * s / self.size_u64().unwrap_or(u64::MAX) as f64).ln_1p())
            }
            _ => Err(Error::Unsupported("simplified interval law applies to circular intervals only".into())),
        }
    }
}
