//! Candidate-set families: circular (and linear) `k`-intervals, `k`-sets,
//! `k`-hypercubes on a torus, perfect matchings of `K_{k,k}`, spanning
//! trees of `K_{k+1}`, and explicit lists.
//!
//! Members are index sets into `0..n`. Matchings use edge `(r, c)` ↦
//! `r * k + c`; trees use the lexicographic edge order of
//! [`prufer::edge_index`]; hypercube cells use row-major order with axis 0
//! most significant.

pub mod overlap;
pub mod prufer;

use crate::error::{invalid, Error, Result};
use crate::model::IndexSet;
use crate::rng::Stream;
use crate::special::{ln_binomial, ln_factorial};
use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::HashSet;

pub use overlap::{ExactOverlap, MgfMode, OverlapDistribution, PmfMode};

/// Default bound on the number of members any enumeration may visit.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FamilyKind {
    /// `{i, ..., i+k-1} mod n`.
    KIntervalsCircular { n: usize, k: usize },
    /// `{i, ..., i+k-1}` with `0 <= i <= n-k`; not used by the reproductions.
    KIntervalsLinear { n: usize, k: usize },
    KSets { n: usize, k: usize },
    /// Products of circular intervals of lengths `sides` on `{0..m}^d`.
    KHypercubes { m: usize, sides: Vec<usize> },
    /// Perfect matchings of `K_{k,k}`; `n = k^2`.
    PerfectMatchings { k: usize },
    /// Spanning trees of `K_{k+1}`; `n = k (k+1) / 2`.
    SpanningTrees { k: usize },
    /// Explicit members, each stored sorted.
    Explicit { n: usize, members: Vec<IndexSet> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetFamily {
    kind: FamilyKind,
    n: usize,
    k: usize,
    size: BigUint,
    log_size: f64,
}

fn interval_positions(n: usize, k: usize) -> usize {
    if k < n {
        n
    } else {
        1
    }
}

pub(crate) fn biguint_binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::ZERO;
    }
    let k = k.min(n - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c *= n - i;
        c /= i + 1;
    }
    c
}

/// Natural log of a big integer (`-inf` for zero).
pub(crate) fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

impl SetFamily {
    pub fn intervals(n: usize, k: usize) -> Result<Self> {
        check_nk(n, k)?;
        let pos = interval_positions(n, k);
        Ok(Self::build(FamilyKind::KIntervalsCircular { n, k }, n, k, BigUint::from(pos), (pos as f64).ln()))
    }

    pub fn linear_intervals(n: usize, k: usize) -> Result<Self> {
        check_nk(n, k)?;
        let pos = n - k + 1;
        Ok(Self::build(FamilyKind::KIntervalsLinear { n, k }, n, k, BigUint::from(pos), (pos as f64).ln()))
    }

    pub fn k_sets(n: usize, k: usize) -> Result<Self> {
        check_nk(n, k)?;
        let size = biguint_binomial(n as u64, k as u64);
        Ok(Self::build(FamilyKind::KSets { n, k }, n, k, size, ln_binomial(n as u64, k as u64)))
    }

    pub fn hypercubes(m: usize, sides: Vec<usize>) -> Result<Self> {
        if sides.is_empty() {
            return Err(invalid("hypercube family needs at least one axis"));
        }
        if m == 0 || sides.iter().any(|&s| s == 0 || s > m) {
            return Err(invalid(format!("hypercube sides must lie in 1..={m}")));
        }
        let d = u32::try_from(sides.len()).map_err(|_| invalid("too many axes"))?;
        let n = m.checked_pow(d).ok_or_else(|| invalid("m^d overflows"))?;
        let k: usize = sides.iter().product();
        let mut size = BigUint::one();
        let mut log_size = 0.0;
        for &s in &sides {
            let p = interval_positions(m, s);
            size *= p;
            log_size += (p as f64).ln();
        }
        Ok(Self::build(FamilyKind::KHypercubes { m, sides }, n, k, size, log_size))
    }

    pub fn perfect_matchings(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("matchings need k >= 1"));
        }
        let size: BigUint = (1..=k as u64).map(BigUint::from).product();
        Ok(Self::build(FamilyKind::PerfectMatchings { k }, k * k, k, size, ln_factorial(k as u64)))
    }

    pub fn spanning_trees(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("spanning trees need k >= 1"));
        }
        // Cayley: (k+1)^(k-1) labelled trees on k+1 vertices.
        let size = BigUint::from(k as u64 + 1).pow(k as u32 - 1);
        let log_size = (k as f64 - 1.0) * ((k + 1) as f64).ln();
        Ok(Self::build(FamilyKind::SpanningTrees { k }, k * (k + 1) / 2, k, size, log_size))
    }

    /// Explicit family; members are canonicalised to sorted order.
    pub fn explicit(n: usize, members: Vec<IndexSet>) -> Result<Self> {
        if members.is_empty() {
            return Err(invalid("explicit family must contain at least one member"));
        }
        let k = members[0].len();
        check_nk(n, k)?;
        let mut seen = HashSet::with_capacity(members.len());
        let mut canon = Vec::with_capacity(members.len());
        for m in members {
            crate::model::validate_set(&m, n, k)?;
            let mut m = m;
            m.sort_unstable();
            if !seen.insert(m.clone()) {
                let shown: Vec<String> = m.iter().map(|i| (i + 1).to_string()).collect();
                return Err(Error::DuplicateMember(shown.join(" ")));
            }
            canon.push(m);
        }
        let len = canon.len();
        Ok(Self::build(FamilyKind::Explicit { n, members: canon }, n, k, BigUint::from(len), (len as f64).ln()))
    }

    /// Parses the text format: one member per line, space-separated 1-based
    /// indices. Blank lines and `#` comments are skipped. When `n` is `None`
    /// the largest index seen is used.
    pub fn parse_explicit(text: &str, n: Option<usize>) -> Result<Self> {
        let mut members = Vec::new();
        let mut max_idx = 0;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut set = Vec::new();
            for tok in line.split_whitespace() {
                let v: usize = tok
                    .parse()
                    .map_err(|_| Error::Parse(format!("line {}: bad index {tok:?}", lineno + 1)))?;
                if v == 0 {
                    return Err(Error::Parse(format!("line {}: indices are 1-based", lineno + 1)));
                }
                max_idx = max_idx.max(v);
                set.push(v - 1);
            }
            members.push(set);
        }
        let n = n.unwrap_or(max_idx);
        Self::explicit(n, members)
    }

    /// Inverse of [`SetFamily::parse_explicit`].
    pub fn to_explicit_text(&self) -> Result<String> {
        let mut out = String::new();
        for m in self.members(DEFAULT_ENUMERATION_CAP)? {
            let line: Vec<String> = m.iter().map(|i| (i + 1).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        Ok(out)
    }

    /// Materialises the family as an explicit list (same members).
    pub fn to_explicit(&self, cap: u64) -> Result<Self> {
        Self::explicit(self.n, self.members(cap)?)
    }

    fn build(kind: FamilyKind, n: usize, k: usize, size: BigUint, log_size: f64) -> Self {
        Self { kind, n, k, size, log_size }
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Member size.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Exact cardinality `N`.
    pub fn size(&self) -> &BigUint {
        &self.size
    }

    /// `ln N`.
    pub fn log_size(&self) -> f64 {
        self.log_size
    }

    /// `N` when it fits in a `u64`.
    pub fn size_u64(&self) -> Option<u64> {
        self.size.to_u64()
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            FamilyKind::KIntervalsCircular { .. } => "intervals",
            FamilyKind::KIntervalsLinear { .. } => "linear_intervals",
            FamilyKind::KSets { .. } => "ksets",
            FamilyKind::KHypercubes { .. } => "hypercubes",
            FamilyKind::PerfectMatchings { .. } => "matchings",
            FamilyKind::SpanningTrees { .. } => "trees",
            FamilyKind::Explicit { .. } => "explicit",
        }
    }

    /// Explicit family whose members are pairwise disjoint.
    pub fn is_disjoint_explicit(&self) -> bool {
        match &self.kind {
            FamilyKind::Explicit { n, members } => {
                let mut used = vec![false; *n];
                members.iter().flatten().all(|&i| !std::mem::replace(&mut used[i], true))
            }
            _ => false,
        }
    }

    /// Circular interval starting at `start`.
    pub fn interval_member(n: usize, k: usize, start: usize) -> IndexSet {
        let mut s: IndexSet = (0..k).map(|j| (start + j) % n).collect();
        s.sort_unstable();
        s
    }

    /// Hypercube cells with the given corner, sorted.
    pub fn hypercube_member(m: usize, sides: &[usize], corner: &[usize]) -> IndexSet {
        let d = sides.len();
        let k: usize = sides.iter().product();
        let mut out = Vec::with_capacity(k);
        let mut offs = vec![0usize; d];
        loop {
            let mut idx = 0;
            for s in 0..d {
                idx = idx * m + (corner[s] + offs[s]) % m;
            }
            out.push(idx);
            let mut axis = d;
            loop {
                if axis == 0 {
                    out.sort_unstable();
                    return out;
                }
                axis -= 1;
                offs[axis] += 1;
                if offs[axis] < sides[axis] {
                    break;
                }
                offs[axis] = 0;
            }
        }
    }

    /// Matching `{(r, perm[r])}` as edge indices (ascending).
    pub fn matching_member(k: usize, perm: &[usize]) -> IndexSet {
        perm.iter().enumerate().map(|(r, &c)| r * k + c).collect()
    }

    fn tree_member(k: usize, seq: &[usize]) -> IndexSet {
        prufer::decode(seq, k + 1)
    }

    /// Uniform draw from the family.
    pub fn sample_member(&self, rng: &mut Stream) -> IndexSet {
        match &self.kind {
            FamilyKind::KIntervalsCircular { n, k } => {
                let start = rng.random_range(0..interval_positions(*n, *k));
                Self::interval_member(*n, *k, start)
            }
            FamilyKind::KIntervalsLinear { n, k } => {
                let start = rng.random_range(0..=n - k);
                (start..start + k).collect()
            }
            FamilyKind::KSets { n, k } => {
                let mut s = rand::seq::index::sample(rng, *n, *k).into_vec();
                s.sort_unstable();
                s
            }
            FamilyKind::KHypercubes { m, sides } => {
                let corner: Vec<usize> =
                    sides.iter().map(|&s| rng.random_range(0..interval_positions(*m, s))).collect();
                Self::hypercube_member(*m, sides, &corner)
            }
            FamilyKind::PerfectMatchings { k } => {
                let mut perm: Vec<usize> = (0..*k).collect();
                perm.shuffle(rng);
                Self::matching_member(*k, &perm)
            }
            FamilyKind::SpanningTrees { k } => {
                let seq: Vec<usize> = (0..k - 1).map(|_| rng.random_range(0..=*k)).collect();
                Self::tree_member(*k, &seq)
            }
            FamilyKind::Explicit { members, .. } => members[rng.random_range(0..members.len())].clone(),
        }
    }

    fn check_cap(&self, cap: u64) -> Result<()> {
        match self.size.to_u64() {
            Some(s) if s <= cap => Ok(()),
            _ => Err(Error::EnumerationCap { size: self.size.to_string(), cap }),
        }
    }

    /// Every member exactly once. Refuses when `N > cap`.
    ///
    /// Orders: intervals by start, `k`-sets lexicographically, hypercubes by
    /// corner in row-major order, matchings by permutation in lexicographic
    /// order, trees by Prüfer sequence in lexicographic order.
    pub fn enumerate_members(&self, cap: u64) -> Result<Box<dyn Iterator<Item = IndexSet> + '_>> {
        self.check_cap(cap)?;
        Ok(match &self.kind {
            FamilyKind::KIntervalsCircular { n, k } => {
                let (n, k) = (*n, *k);
                Box::new((0..interval_positions(n, k)).map(move |s| Self::interval_member(n, k, s)))
            }
            FamilyKind::KIntervalsLinear { n, k } => {
                let k = *k;
                Box::new((0..=n - k).map(move |s| (s..s + k).collect()))
            }
            FamilyKind::KSets { n, k } => Box::new((0..*n).combinations(*k)),
            FamilyKind::KHypercubes { m, sides } => {
                let m = *m;
                let corners = sides
                    .iter()
                    .map(|&s| 0..interval_positions(m, s))
                    .multi_cartesian_product();
                Box::new(corners.map(move |c| Self::hypercube_member(m, sides, &c)))
            }
            FamilyKind::PerfectMatchings { k } => {
                let k = *k;
                Box::new((0..k).permutations(k).map(move |p| Self::matching_member(k, &p)))
            }
            FamilyKind::SpanningTrees { k } => {
                let k = *k;
                if k == 1 {
                    Box::new(std::iter::once(vec![0]))
                } else {
                    Box::new(
                        (0..k - 1)
                            .map(|_| 0..=k)
                            .multi_cartesian_product()
                            .map(move |s| Self::tree_member(k, &s)),
                    )
                }
            }
            FamilyKind::Explicit { members, .. } => Box::new(members.iter().cloned()),
        })
    }

    pub fn members(&self, cap: u64) -> Result<Vec<IndexSet>> {
        Ok(self.enumerate_members(cap)?.collect())
    }

    /// Structural validity of an index set as a member of this family.
    pub fn contains(&self, set: &[usize]) -> bool {
        if crate::model::validate_set(set, self.n, self.k).is_err() {
            return false;
        }
        let mut sorted = set.to_vec();
        sorted.sort_unstable();
        match &self.kind {
            FamilyKind::KSets { .. } => true,
            FamilyKind::KIntervalsCircular { n, k } => (0..interval_positions(*n, *k)).any(|s| {
                let mut m = Self::interval_member(*n, *k, s);
                m.sort_unstable();
                m == sorted
            }),
            FamilyKind::KIntervalsLinear { k, .. } => sorted[k - 1] - sorted[0] == k - 1,
            FamilyKind::KHypercubes { m, sides } => sides
                .iter()
                .map(|&s| 0..interval_positions(*m, s))
                .multi_cartesian_product()
                .any(|c| {
                    let mut mem = Self::hypercube_member(*m, sides, &c);
                    mem.sort_unstable();
                    mem == sorted
                }),
            FamilyKind::PerfectMatchings { k } => {
                let mut rows = vec![false; *k];
                let mut cols = vec![false; *k];
                sorted.iter().all(|&e| {
                    !std::mem::replace(&mut rows[e / k], true) && !std::mem::replace(&mut cols[e % k], true)
                })
            }
            FamilyKind::SpanningTrees { k } => prufer::is_spanning_tree(&sorted, k + 1),
            FamilyKind::Explicit { members, .. } => members.contains(&sorted),
        }
    }
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    if n == 0 || k == 0 || k > n {
        return Err(invalid(format!("family needs 1 <= k <= n (k={k}, n={n})")));
    }
    Ok(())
}

/// `|a ∩ b|` for two index sets.
pub fn overlap_size(a: &[usize], b: &[usize]) -> usize {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}
