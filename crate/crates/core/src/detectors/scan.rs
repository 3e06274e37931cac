//! Maximum over a family of a per-set objective built from the set sum
//! `s` and set sum of squares `q`:
//!
//! * GLRT: `x^T (I - A_S^{-1}) x = scale (s^2 - c q)`;
//! * localized squared sum: `s^2`.
//!
//! Fast engines (prefix sums on circles and tori, sorted windows for
//! `k`-sets) first compute approximate values for every candidate, then
//! re-evaluate every candidate within a rounding-error bound of the best
//! one by direct summation in member order. The returned value is thus the
//! exact same floating-point number the generic enumeration produces.

use crate::classes::{FamilyKind, SetFamily, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::model::{set_sums, IndexSet, QuadForm};
use crate::rng::{phase, stream, Stream};
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicU64, Ordering};

/// Sorted-window mismatches seen by [`check_kset_sorted_window`] since
/// process start.
pub static KSET_WINDOW_MISMATCHES: AtomicU64 = AtomicU64::new(0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KSetEngine {
    /// Windows of consecutive order statistics; verified against brute force.
    #[default]
    SortedWindow,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Glrt(QuadForm),
    LocalSquaredSum,
}

impl Objective {
    #[inline]
    fn from_sums(&self, s: f64, q: f64) -> f64 {
        match self {
            Objective::Glrt(f) => f.from_sums(s, q),
            Objective::LocalSquaredSum => s * s,
        }
    }

    #[inline]
    pub fn eval(&self, x: &[f64], set: &[usize]) -> f64 {
        let (s, q) = set_sums(x, set);
        self.from_sums(s, q)
    }

    /// Bound on `|approx - direct|`, doubled so that equal direct values are
    /// never dropped. `ops` bounds the length of any summation chain.
    fn tolerance(&self, x: &[f64], ops: usize) -> f64 {
        let a: f64 = x.iter().map(|v| v.abs()).sum();
        let q: f64 = x.iter().map(|v| v * v).sum();
        let (scale, c) = match self {
            Objective::Glrt(f) => (f.scale, f.c),
            Objective::LocalSquaredSum => (1.0, 0.0),
        };
        2.0 * 8.0 * (ops as f64 + 2.0) * f64::EPSILON * scale * (a * a + c * q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub value: f64,
    pub argmax: IndexSet,
}

/// Keeps the first maximum in candidate order, matching the enumeration.
fn refine(approx: &[f64], tol: f64, mut member: impl FnMut(usize) -> IndexSet, eval: impl Fn(&[usize]) -> f64) -> ScanResult {
    let amax = approx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<ScanResult> = None;
    for (j, &a) in approx.iter().enumerate() {
        if a >= amax - tol {
            let m = member(j);
            let v = eval(&m);
            if best.as_ref().is_none_or(|b| v > b.value) {
                best = Some(ScanResult { value: v, argmax: m });
            }
        }
    }
    best.expect("at least one candidate")
}

fn check_dim(x: &[f64], family: &SetFamily) -> Result<()> {
    if x.len() != family.n() {
        return Err(Error::DimensionMismatch { expected: family.n(), got: x.len() });
    }
    Ok(())
}

/// Generic maximum over an explicit member list, in list order.
pub fn scan_members<'a, I>(x: &[f64], members: I, objective: Objective) -> Option<ScanResult>
where
    I: IntoIterator<Item = &'a [usize]>,
{
    let mut best: Option<(f64, &[usize])> = None;
    for m in members {
        let v = objective.eval(x, m);
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, m));
        }
    }
    best.map(|(value, m)| ScanResult { value, argmax: m.to_vec() })
}

/// Generic maximum by enumerating the family.
pub fn scan_enumerate(x: &[f64], family: &SetFamily, objective: Objective, cap: u64) -> Result<ScanResult> {
    check_dim(x, family)?;
    let mut best: Option<ScanResult> = None;
    for m in family.enumerate_members(cap)? {
        let v = objective.eval(x, &m);
        if best.as_ref().is_none_or(|b| v > b.value) {
            best = Some(ScanResult { value: v, argmax: m });
        }
    }
    Ok(best.expect("families are non-empty"))
}

fn prefix(values: impl Iterator<Item = f64>) -> (Vec<f64>, Vec<f64>) {
    let mut ps = vec![0.0];
    let mut pq = vec![0.0];
    let (mut s, mut q) = (0.0, 0.0);
    for v in values {
        s += v;
        q += v * v;
        ps.push(s);
        pq.push(q);
    }
    (ps, pq)
}

fn scan_circular_intervals(x: &[f64], n: usize, k: usize, objective: Objective) -> ScanResult {
    let pos = if k < n { n } else { 1 };
    let (ps, pq) = prefix((0..n + k).map(|t| x[t % n]));
    let approx: Vec<f64> = (0..pos).map(|i| objective.from_sums(ps[i + k] - ps[i], pq[i + k] - pq[i])).collect();
    let tol = objective.tolerance(x, 2 * n + k);
    refine(&approx, tol, |i| SetFamily::interval_member(n, k, i), |m| objective.eval(x, m))
}

fn scan_linear_intervals(x: &[f64], n: usize, k: usize, objective: Objective) -> ScanResult {
    let (ps, pq) = prefix(x.iter().copied());
    let approx: Vec<f64> = (0..=n - k).map(|i| objective.from_sums(ps[i + k] - ps[i], pq[i + k] - pq[i])).collect();
    let tol = objective.tolerance(x, n + k);
    refine(&approx, tol, |i| (i..i + k).collect(), |m| objective.eval(x, m))
}

/// Circular window sums of length `w` along `axis` of a row-major `m^d` array.
fn axis_window_sums(a: &[f64], m: usize, d: usize, axis: usize, w: usize) -> Vec<f64> {
    let stride = m.pow((d - 1 - axis) as u32);
    let mut out = vec![0.0; a.len()];
    let mut line = vec![0.0; m + w + 1];
    for base in 0..a.len() {
        if (base / stride) % m != 0 {
            continue;
        }
        line[0] = 0.0;
        for t in 0..m + w {
            line[t + 1] = line[t] + a[base + (t % m) * stride];
        }
        for c in 0..m {
            out[base + c * stride] = line[c + w] - line[c];
        }
    }
    out
}

fn scan_hypercubes(x: &[f64], m: usize, sides: &[usize], objective: Objective) -> ScanResult {
    let d = sides.len();
    let mut s: Vec<f64> = x.to_vec();
    let mut q: Vec<f64> = x.iter().map(|v| v * v).collect();
    for (axis, &w) in sides.iter().enumerate() {
        s = axis_window_sums(&s, m, d, axis, w);
        q = axis_window_sums(&q, m, d, axis, w);
    }
    let positions: Vec<usize> = sides.iter().map(|&w| if w < m { m } else { 1 }).collect();
    let total: usize = positions.iter().product();
    let corner_of = |mut j: usize| {
        let mut c = vec![0usize; d];
        for axis in (0..d).rev() {
            c[axis] = j % positions[axis];
            j /= positions[axis];
        }
        c
    };
    let cell = |c: &[usize]| c.iter().fold(0usize, |acc, &ci| acc * m + ci);
    let approx: Vec<f64> = (0..total)
        .map(|j| {
            let i = cell(&corner_of(j));
            objective.from_sums(s[i], q[i])
        })
        .collect();
    let ops = x.len() + sides.iter().map(|&w| 2 * m + w).sum::<usize>() * d.max(1);
    let tol = objective.tolerance(x, ops);
    refine(&approx, tol, |j| SetFamily::hypercube_member(m, sides, &corner_of(j)), |mem| objective.eval(x, mem))
}

/// Order of coordinates by value (ties by index).
fn value_order(x: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(a.cmp(&b)));
    order
}

fn sorted_member(order: &[usize], w: usize, k: usize) -> IndexSet {
    let mut m = order[w..w + k].to_vec();
    m.sort_unstable();
    m
}

/// GLRT over `k`-sets restricted to windows of consecutive order
/// statistics (this includes the `k` largest and `k` smallest coordinates).
pub fn kset_glrt_sorted_window(x: &[f64], k: usize, form: QuadForm) -> ScanResult {
    let n = x.len();
    let objective = Objective::Glrt(form);
    let order = value_order(x);
    let (ps, pq) = prefix(order.iter().map(|&i| x[i]));
    let approx: Vec<f64> = (0..=n - k).map(|w| objective.from_sums(ps[w + k] - ps[w], pq[w + k] - pq[w])).collect();
    let tol = objective.tolerance(x, n + k);
    refine(&approx, tol, |w| sorted_member(&order, w, k), |m| objective.eval(x, m))
}

/// Exact localized squared sum over `k`-sets: the optimum is the set of the
/// `k` largest or of the `k` smallest coordinates.
fn kset_local_sq(x: &[f64], k: usize) -> ScanResult {
    let n = x.len();
    let order = value_order(x);
    let objective = Objective::LocalSquaredSum;
    let low = sorted_member(&order, 0, k);
    let high = sorted_member(&order, n - k, k);
    let (vl, vh) = (objective.eval(x, &low), objective.eval(x, &high));
    // the enumeration keeps the lexicographically first maximiser
    if vh > vl || (vh == vl && high < low) {
        ScanResult { value: vh, argmax: high }
    } else {
        ScanResult { value: vl, argmax: low }
    }
}

/// Maximum of `objective` over `family`, fast engine where one exists.
pub fn scan(x: &[f64], family: &SetFamily, objective: Objective, engine: KSetEngine) -> Result<ScanResult> {
    check_dim(x, family)?;
    Ok(match (family.kind(), objective) {
        (FamilyKind::KIntervalsCircular { n, k }, _) => scan_circular_intervals(x, *n, *k, objective),
        (FamilyKind::KIntervalsLinear { n, k }, _) => scan_linear_intervals(x, *n, *k, objective),
        (FamilyKind::KHypercubes { m, sides }, _) => scan_hypercubes(x, *m, sides, objective),
        (FamilyKind::KSets { k, .. }, Objective::LocalSquaredSum) => kset_local_sq(x, *k),
        (FamilyKind::KSets { k, .. }, Objective::Glrt(form)) if engine == KSetEngine::SortedWindow => {
            kset_glrt_sorted_window(x, *k, form)
        }
        _ => return scan_enumerate(x, family, objective, DEFAULT_ENUMERATION_CAP),
    })
}

/// True when `scan` would fall back to enumeration for this family.
pub fn needs_enumeration(family: &SetFamily, objective: Objective, engine: KSetEngine) -> bool {
    match family.kind() {
        FamilyKind::KIntervalsCircular { .. } | FamilyKind::KIntervalsLinear { .. } | FamilyKind::KHypercubes { .. } => false,
        FamilyKind::KSets { .. } => matches!(objective, Objective::Glrt(_)) && engine == KSetEngine::BruteForce,
        _ => true,
    }
}

/// `max_S x^T (I - A_S^{-1}) x`.
pub fn glrt_stat(x: &[f64], family: &SetFamily, rho: f64) -> Result<f64> {
    let form = QuadForm::new(family.k(), rho)?;
    Ok(scan(x, family, Objective::Glrt(form), KSetEngine::SortedWindow)?.value)
}

/// `max_S (Σ_{i in S} x_i)^2`.
pub fn local_sq_stat(x: &[f64], family: &SetFamily) -> Result<f64> {
    Ok(scan(x, family, Objective::LocalSquaredSum, KSetEngine::SortedWindow)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct VerificationReport {
    pub instances: u64,
    pub mismatches: u64,
}

/// Compares the sorted-window `k`-set GLRT against brute force on
/// `instances` draws (alternating null and alternative), recording any
/// mismatch in [`KSET_WINDOW_MISMATCHES`].
pub fn check_kset_sorted_window(family: &SetFamily, rho: f64, instances: u64, seed: u64, cap: u64) -> Result<VerificationReport> {
    let FamilyKind::KSets { n, k } = *family.kind() else {
        return Err(Error::Unsupported("sorted-window check applies to k-sets only".into()));
    };
    let form = QuadForm::new(k, rho)?;
    let model = crate::model::CorrelationModel::new(n, k, rho)?;
    let members = family.members(cap)?;
    let mut mismatches = 0;
    for t in 0..instances {
        let mut rng: Stream = stream(seed, phase::VERIFY, t);
        let x = if t % 2 == 0 {
            crate::model::sample_null(n, &mut rng)
        } else {
            let s = family.sample_member(&mut rng);
            crate::model::sample_alternative(&model, &s, &mut rng)?
        };
        let x = x.values();
        let fast = kset_glrt_sorted_window(x, k, form).value;
        let brute = scan_members(x, members.iter().map(|m| m.as_slice()), Objective::Glrt(form))
            .expect("non-empty")
            .value;
        if fast != brute {
            mismatches += 1;
            KSET_WINDOW_MISMATCHES.fetch_add(1, Ordering::Relaxed);
            log::warn!("sorted-window GLRT mismatch on k-sets(n={n}, k={k}), rho={rho}: {fast} vs {brute}");
        }
    }
    Ok(VerificationReport { instances, mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_null;

    #[test]
    fn interval_engine_matches_enumeration() {
        let f = SetFamily::intervals(13, 4).unwrap();
        let obj = Objective::Glrt(QuadForm::new(4, 0.3).unwrap());
        for t in 0..50 {
            let x = sample_null(13, &mut stream(1, 0, t)).into_values();
            let fast = scan(&x, &f, obj, KSetEngine::SortedWindow).unwrap();
            let slow = scan_enumerate(&x, &f, obj, 1000).unwrap();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn one_hot_interval_local_sum() {
        let mut x = vec![0.0; 10];
        x[0] = 1.0;
        let f = SetFamily::intervals(10, 2).unwrap();
        assert_eq!(local_sq_stat(&x, &f).unwrap(), 1.0);
    }

    #[test]
    fn constant_kset_glrt() {
        let (n, k, c, rho) = (9, 3, 0.7, 0.4);
        let x = vec![c; n];
        let f = SetFamily::k_sets(n, k).unwrap();
        let form = QuadForm::new(k, rho).unwrap();
        let got = glrt_stat(&x, &f, rho).unwrap();
        let kf = k as f64;
        let want = form.scale * (kf * (kf - 1.0) * c * c - rho * (kf - 1.0) * kf * c * c);
        assert!((got - want).abs() < 1e-12 * want.abs());
        assert_eq!(got, form.eval(&x, &[0, 1, 2]));
    }

    #[test]
    fn dimension_mismatch() {
        let f = SetFamily::intervals(10, 2).unwrap();
        assert!(matches!(local_sq_stat(&[0.0; 9], &f), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn sorted_window_check_runs() {
        let f = SetFamily::k_sets(10, 3).unwrap();
        let r = check_kset_sorted_window(&f, 0.4, 50, 9, 1000).unwrap();
        assert_eq!(r.instances, 50);
        assert_eq!(r.mismatches, 0);
    }
}
