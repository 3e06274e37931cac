//! Histogram goodness-of-fit test on `H_i = Φ(X_i)`.

use crate::error::{Error, Result};
use crate::special::{ln_factorial, normal_cdf};

/// Bin counts over `m` equal-width bins of `[0, 1]`; left-closed, last bin closed.
pub fn gof_counts(x: &[f64], m: usize) -> Result<Vec<u64>> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!("bin count m must be >= 2, got {m}")));
    }
    let mut counts = vec![0u64; m];
    for &v in x {
        if !v.is_finite() {
            return Err(Error::InvalidParameter("observation contains non-finite entries".into()));
        }
        let h = normal_cdf(v);
        let b = ((h * m as f64) as usize).min(m - 1);
        counts[b] += 1;
    }
    Ok(counts)
}

/// Largest bin count.
pub fn gof_stat(x: &[f64], m: usize) -> Result<f64> {
    Ok(gof_counts(x, m)?.into_iter().max().unwrap_or(0) as f64)
}

/// `n/m + sqrt(3 n ln(m) / m)`.
pub fn gof_threshold(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    n / m + (3.0 * n * m.ln() / m).sqrt()
}

/// Smallest `l >= 1` with `m * 2 (n/m)^l / l! <= alpha`. Needs `m >= 2n`.
pub fn gof_small_k_threshold(n: usize, m: usize, alpha: f64) -> Result<u64> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    if m < 2 || 2 * n > m {
        return Err(Error::Precondition(format!(
            "binomial tail rule needs n/m <= 1/2 (n = {n}, m = {m}); use the Bernstein-based gof formula n/m + sqrt(3 n ln(m)/m) instead"
        )));
    }
    let p = n as f64 / m as f64;
    if p == 0.0 {
        return Ok(1);
    }
    let target = alpha.ln();
    let base = (m as f64).ln() + std::f64::consts::LN_2;
    let mut l = 1u64;
    while base + l as f64 * p.ln() - ln_factorial(l) > target {
        l += 1;
    }
    Ok(l)
}
