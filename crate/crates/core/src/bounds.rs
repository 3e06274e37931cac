//! Lower bounds on the Bayes risk from the overlap moment generating function.
//!
//! For a uniform prior on a family with overlap `Z = |S ∩ S'|`,
//! `R* >= P(|N(0,1)| <= a) (1 - ½ sqrt(E exp(ν_a Z) - 1))` for every `a > 0`,
//! where `ν_a = ρ a^2 / (1+ρ) - ½ ln(1 - ρ^2)`. At `a = 1` the constants are
//! rounded down to `0.6 - 0.3 sqrt(...)`.

use crate::citations as c;
use crate::classes::{FamilyKind, MgfMode, SetFamily};
use crate::error::{Error, Result};
use crate::special::normal_two_sided_mass;
use serde::Serialize;

/// `ρ a^2 / (1+ρ) - ½ ln(1 - ρ^2)`.
pub fn nu(rho: f64, a: f64) -> f64 {
    rho * a * a / (1.0 + rho) - 0.5 * (-rho * rho).ln_1p()
}

/// `ν_1`.
pub fn nu_rho(rho: f64) -> f64 {
    nu(rho, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub family: String,
    pub rho: f64,
    pub a: f64,
    pub nu_a: f64,
    /// `E exp(ν_a Z)`; serialised as `null` when infinite.
    pub mgf_value: f64,
    pub raw_bound: f64,
    pub lower_bound: f64,
    pub mode: MgfMode,
    pub regime_notes: Vec<String>,
    pub citation: &'static str,
}

fn citation_for(family: &SetFamily) -> &'static str {
    match family.kind() {
        FamilyKind::Explicit { .. } if family.is_disjoint_explicit() => c::COR_DISJOINT,
        FamilyKind::KIntervalsCircular { .. } => c::COR_INTERVALS,
        FamilyKind::KSets { .. } => c::COR_KSETS,
        FamilyKind::PerfectMatchings { .. } => c::COR_MATCHINGS,
        FamilyKind::SpanningTrees { .. } => c::COR_TREES,
        _ => c::BAYES_LR,
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidParameter(format!("rho must lie in [0,1), got {rho}")));
    }
    Ok(())
}

/// Evaluates the lower bound at a fixed `a`.
pub fn bayes_lower_bound(family: &SetFamily, rho: f64, a: f64, mode: MgfMode) -> Result<BoundReport> {
    check_rho(rho)?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    let nu_a = nu(rho, a);
    let log_mgf = family.overlap_log_mgf(nu_a, mode)?;
    let excess = log_mgf.exp_m1().max(0.0);
    let (mass, half) = if a == 1.0 { (0.6, 0.3) } else {
        let p = normal_two_sided_mass(a);
        (p, 0.5 * p)
    };
    let raw = mass - half * excess.sqrt();
    let mut notes = Vec::new();
    let lower = if raw.is_finite() { raw.clamp(0.0, 1.0) } else { 0.0 };
    if !log_mgf.is_finite() {
        notes.push("overlap MGF is infinite; bound is vacuous".to_string());
    } else if raw < 0.0 {
        notes.push(format!("raw bound {raw} is negative; clipped to 0"));
    }
    if matches!(family.kind(), FamilyKind::SpanningTrees { .. }) {
        notes.push("spanning trees are not symmetric enough for the minimax and Bayes risks to coincide".into());
    }
    if matches!(family.kind(), FamilyKind::KIntervalsLinear { .. }) {
        notes.push("non-circular intervals are outside the reproduced setting".into());
    }
    Ok(BoundReport {
        family: family.name().to_string(),
        rho,
        a,
        nu_a,
        mgf_value: log_mgf.exp(),
        raw_bound: raw,
        lower_bound: lower,
        mode,
        regime_notes: notes,
        citation: citation_for(family),
    })
}

/// Log grid of `a` values used by [`optimize_a`]; contains 1 exactly.
pub fn a_grid() -> Vec<f64> {
    (-40..=40).map(|i| 10f64.powf(i as f64 / 40.0)).map(|a| if (a - 1.0).abs() < 1e-12 { 1.0 } else { a }).collect()
}

/// Best bound over [`a_grid`]; the earliest grid point wins ties.
pub fn optimize_a(family: &SetFamily, rho: f64, mode: MgfMode) -> Result<BoundReport> {
    let mut best: Option<BoundReport> = None;
    for a in a_grid() {
        let r = bayes_lower_bound(family, rho, a, mode)?;
        if best.as_ref().is_none_or(|b| r.lower_bound > b.lower_bound) {
            best = Some(r);
        }
    }
    let mut best = best.expect("non-empty grid");
    best.regime_notes.push("a maximised over a log grid on [0.1, 10]".into());
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryCheck {
    pub condition_holds: bool,
    pub guaranteed_bound: f64,
    pub citation: &'static str,
    pub lhs: f64,
    pub rhs: f64,
}

fn le_rel(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-12 * rhs.abs().max(lhs.abs())
}

/// Evaluates the family's printed sufficient condition for a constant floor
/// on the Bayes risk.
pub fn corollary_condition(family: &SetFamily, rho: f64) -> Result<CorollaryCheck> {
    check_rho(rho)?;
    let k = family.k() as f64;
    let n = family.n() as f64;
    let v = nu_rho(rho);
    let (lhs, rhs, floor, citation) = match family.kind() {
        FamilyKind::Explicit { .. } if family.is_disjoint_explicit() => (v, family.log_size() / k, 0.3, c::COR_DISJOINT),
        FamilyKind::KIntervalsCircular { .. } => (v, (n / (2.0 * k)).ln() / k, 0.3, c::COR_INTERVALS),
        FamilyKind::KSets { .. } => (k * k / n, std::f64::consts::LN_2 / v.exp_m1(), 0.3, c::COR_KSETS),
        FamilyKind::PerfectMatchings { .. } => (rho, 0.5, 0.3, c::COR_MATCHINGS),
        FamilyKind::SpanningTrees { .. } => (rho, 0.4, 0.15, c::COR_TREES),
        _ => {
            return Err(Error::Unsupported(format!(
                "no closed-form corollary condition for family {}",
                family.name()
            )))
        }
    };
    let holds = le_rel(lhs, rhs);
    Ok(CorollaryCheck { condition_holds: holds, guaranteed_bound: if holds { floor } else { 0.0 }, citation, lhs, rhs })
}

/// Inverts a continuous increasing function of `ρ` on `[0, 1)` by bisection.
fn bisect(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0 - 1e-15);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The `ρ` with `ν(ρ) = target`.
pub fn rho_for_nu(target: f64) -> Result<f64> {
    if !(target >= 0.0 && target.is_finite()) {
        return Err(Error::InvalidParameter(format!("target ν must be finite and >= 0, got {target}")));
    }
    Ok(bisect(nu_rho, target))
}

/// The `ρ` at which the bound (at `a`, in `mode`) falls to `target`.
pub fn rho_for_bound(family: &SetFamily, a: f64, mode: MgfMode, target: f64) -> Result<f64> {
    bayes_lower_bound(family, 0.0, a, mode)?;
    Ok(bisect(|r| -bayes_lower_bound(family, r, a, mode).map_or(f64::NEG_INFINITY, |b| b.lower_bound), -target))
}
