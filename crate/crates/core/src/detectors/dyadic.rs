//! Multiscale scan over dyadic intervals `[i 2^j, (i+1) 2^j)`, `j >= 1`.
//!
//! The tree is built on the next power of two with zero padding. Each
//! interval is truncated to `[0, n)` and normalised by its real length;
//! intervals with fewer than two real coordinates are skipped.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DyadicScan {
    pub value: f64,
    /// 0-based first coordinate of the maximising interval.
    pub start: usize,
    /// Number of real coordinates in the maximising interval.
    pub len: usize,
    /// Whether the maximising interval reaches into the zero padding.
    pub padded: bool,
}

/// `max_I (Σ_{i in I} x_i)^2 / |I|` with pairwise level sums.
pub fn dyadic_scan(x: &[f64]) -> DyadicScan {
    let n = x.len();
    let size = n.next_power_of_two().max(2);
    let mut level: Vec<f64> = x.iter().copied().chain(std::iter::repeat(0.0)).take(size).collect();
    let mut width = 1;
    let mut best = DyadicScan { value: f64::NEG_INFINITY, start: 0, len: 0, padded: false };
    while level.len() > 1 {
        level = level.chunks_exact(2).map(|p| p[0] + p[1]).collect();
        width *= 2;
        for (i, &s) in level.iter().enumerate() {
            let start = i * width;
            if start + 1 >= n {
                break;
            }
            let len = width.min(n - start);
            let v = s * s / len as f64;
            if v > best.value {
                best = DyadicScan { value: v, start, len, padded: len < width };
            }
        }
    }
    if best.len == 0 {
        // n < 2: no admissible interval
        best.value = 0.0;
    }
    best
}

/// All admissible dyadic intervals as `(start, real_len)`, coarse levels last.
pub fn dyadic_intervals(n: usize) -> Vec<(usize, usize)> {
    let size = n.next_power_of_two().max(2);
    let mut out = Vec::new();
    let mut width = 2;
    while width <= size {
        let mut start = 0;
        while start + 1 < n {
            out.push((start, width.min(n - start)));
            start += width;
        }
        width *= 2;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_signal_peaks_at_root() {
        let c = 1.5;
        let r = dyadic_scan(&[c; 64]);
        assert!((r.value - c * c * 64.0).abs() < 1e-9);
        assert_eq!((r.start, r.len, r.padded), (0, 64, false));
    }

    #[test]
    fn padding_is_flagged() {
        let mut x = vec![0.0; 6];
        x[4] = 3.0;
        x[5] = 3.0;
        let r = dyadic_scan(&x);
        assert_eq!((r.start, r.len), (4, 2));
        assert!(!r.padded);
        let r = dyadic_scan(&[1.0; 6]);
        assert_eq!((r.start, r.len, r.padded), (0, 6, true));
        assert!((r.value - 6.0).abs() < 1e-12);
    }

    #[test]
    fn interval_listing() {
        assert_eq!(dyadic_intervals(4), vec![(0, 2), (2, 2), (0, 4)]);
        assert_eq!(dyadic_intervals(5), vec![(0, 2), (2, 2), (0, 4), (0, 5)]);
    }
}
