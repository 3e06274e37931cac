//! Null and alternative Gaussian models.
//!
//! Under the null the observation is `N(0, I_n)`. Under the alternative a
//! size-`k` index set `S` has pairwise correlation `rho` (exact model) or at
//! least `rho` with a caller-supplied block (general floor model); every
//! coordinate outside `S` stays independent standard normal.

pub mod io;

use crate::error::{invalid, Error, Result};
use crate::rng::Stream;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Largest correlation accepted; larger inputs (up to 1) are clamped here.
pub const RHO_MAX: f64 = 1.0 - 1e-12;

/// Index set into `0..n`. Externally (files, JSON, CLI) indices are 1-based.
pub type IndexSet = Vec<usize>;

/// Correlation structure inside the anomalous set.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrelationVariant {
    ExactEquicorrelated,
    /// `block` is `k x k`, unit diagonal, off-diagonals `>= rho`. `factor`
    /// is its lower Cholesky factor, row-major.
    GeneralFloor { block: Vec<Vec<f64>>, factor: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationModel {
    n: usize,
    k: usize,
    rho: f64,
    variant: CorrelationVariant,
}

/// Validates `rho` and applies the `RHO_MAX` clamp.
pub fn validate_rho(rho: f64) -> Result<f64> {
    if !rho.is_finite() || !(0.0..=1.0).contains(&rho) {
        return Err(invalid(format!("rho must lie in [0, 1], got {rho}")));
    }
    Ok(rho.min(RHO_MAX))
}

fn validate_dims(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if k == 0 || k > n {
        return Err(invalid(format!("k must satisfy 1 <= k <= n (k={k}, n={n})")));
    }
    Ok(())
}

impl CorrelationModel {
    /// Exact equicorrelated model `(n, k, rho)`.
    pub fn new(n: usize, k: usize, rho: f64) -> Result<Self> {
        validate_dims(n, k)?;
        let rho = validate_rho(rho)?;
        Ok(Self { n, k, rho, variant: CorrelationVariant::ExactEquicorrelated })
    }

    /// General floor model with an explicit `k x k` correlation block.
    pub fn general_floor(n: usize, k: usize, rho: f64, block: Vec<Vec<f64>>) -> Result<Self> {
        validate_dims(n, k)?;
        let rho = validate_rho(rho)?;
        if block.len() != k || block.iter().any(|r| r.len() != k) {
            return Err(invalid(format!("correlation block must be {k} x {k}")));
        }
        for (i, row) in block.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(invalid("correlation block has a non-finite entry"));
                }
                if i == j && v != 1.0 {
                    return Err(invalid(format!("block diagonal entry ({i},{i}) must be 1")));
                }
                if i != j && (v < rho || v != block[j][i]) {
                    return Err(invalid(format!(
                        "block entry ({i},{j}) = {v} must be symmetric and >= rho = {rho}"
                    )));
                }
            }
        }
        let m = DMatrix::from_fn(k, k, |i, j| block[i][j]);
        let chol = m.cholesky().ok_or(Error::NotPositiveDefinite)?;
        let l = chol.l();
        let mut factor = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..=i {
                factor[i * k + j] = l[(i, j)];
            }
        }
        Ok(Self { n, k, rho, variant: CorrelationVariant::GeneralFloor { block, factor } })
    }

    /// Block with every off-diagonal equal to `rho`, routed through the
    /// factorization path.
    pub fn constant_block(k: usize, rho: f64) -> Vec<Vec<f64>> {
        (0..k).map(|i| (0..k).map(|j| if i == j { 1.0 } else { rho }).collect()).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn rho(&self) -> f64 {
        self.rho
    }
    pub fn variant(&self) -> &CorrelationVariant {
        &self.variant
    }
}

/// An observed vector. Entries are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    values: Vec<f64>,
}

impl Observation {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("observation entry {} is not finite", i + 1)));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl AsRef<[f64]> for Observation {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// Checks that `set` has `k` distinct entries in `0..n`.
pub fn validate_set(set: &[usize], n: usize, k: usize) -> Result<()> {
    if set.len() != k {
        return Err(Error::InvalidSet(format!("expected {k} indices, got {}", set.len())));
    }
    let mut seen = vec![false; n];
    for &i in set {
        if i >= n {
            return Err(Error::InvalidSet(format!("index {} out of range 1..={n}", i + 1)));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidSet(format!("index {} repeated", i + 1)));
        }
    }
    Ok(())
}

/// `n` i.i.d. standard normal draws.
pub fn sample_null(n: usize, rng: &mut Stream) -> Observation {
    let values = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Observation { values }
}

/// Draw from `N(0, A_S)`.
///
/// The `n` base normals are drawn first, exactly as in [`sample_null`]; the
/// coordinates in `S` are then replaced. With `rho = 0` the result is
/// therefore bit-identical to the null draw from the same stream, and with
/// `k = 1` no replacement happens at all.
pub fn sample_alternative(model: &CorrelationModel, set: &[usize], rng: &mut Stream) -> Result<Observation> {
    validate_set(set, model.n, model.k)?;
    let mut obs = sample_null(model.n, rng);
    if model.k == 1 {
        return Ok(obs);
    }
    let x = &mut obs.values;
    match &model.variant {
        CorrelationVariant::ExactEquicorrelated => {
            let shared: f64 = rng.sample(StandardNormal);
            let a = model.rho.sqrt();
            let b = (1.0 - model.rho).sqrt();
            for &i in set {
                x[i] = a * shared + b * x[i];
            }
        }
        CorrelationVariant::GeneralFloor { factor, .. } => {
            let k = model.k;
            let z: Vec<f64> = set.iter().map(|&i| x[i]).collect();
            for (r, &i) in set.iter().enumerate() {
                x[i] = (0..=r).map(|c| factor[r * k + c] * z[c]).sum();
            }
        }
    }
    Ok(obs)
}

/// Precomputed constants of the quadratic form `x^T (I - A_S^{-1}) x`
/// for a fixed `(k, rho)`:
/// `scale * ((Σ x_i)^2 - c Σ x_i^2)` with `c = 1 + rho (k - 1)` and
/// `scale = rho / (c (1 - rho))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadForm {
    pub k: usize,
    pub rho: f64,
    pub scale: f64,
    pub c: f64,
}

impl QuadForm {
    pub fn new(k: usize, rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho < 1.0) {
            return Err(invalid(format!("quadratic form needs rho in (0, 1), got {rho}")));
        }
        if k == 0 {
            return Err(invalid("quadratic form needs k >= 1"));
        }
        let c = 1.0 + rho * (k as f64 - 1.0);
        Ok(Self { k, rho, scale: rho / (c * (1.0 - rho)), c })
    }

    /// Value from the set sum `s` and set sum of squares `q`.
    #[inline]
    pub fn from_sums(&self, s: f64, q: f64) -> f64 {
        self.scale * (s * s - self.c * q)
    }

    /// Direct evaluation, summing in the order of `set`.
    #[inline]
    pub fn eval(&self, x: &[f64], set: &[usize]) -> f64 {
        let (s, q) = set_sums(x, set);
        self.from_sums(s, q)
    }
}

/// `(Σ x_i, Σ x_i^2)` over `set`, in set order.
#[inline]
pub fn set_sums(x: &[f64], set: &[usize]) -> (f64, f64) {
    let mut s = 0.0;
    let mut q = 0.0;
    for &i in set {
        let v = x[i];
        s += v;
        q += v * v;
    }
    (s, q)
}

/// `x^T (I - A_S^{-1}) x` for the exact model.
pub fn quad_form(x: &[f64], set: &[usize], rho: f64) -> Result<f64> {
    let form = QuadForm::new(set.len(), rho)?;
    validate_set(set, x.len(), set.len())?;
    Ok(form.eval(x, set))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Null,
    Alternative,
}

/// Law of the quadratic form as `weight_neg * χ²_{df_neg} + weight_pos * χ²_{df_pos}`
/// with independent components. `k = 1` gives the point mass at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadFormLaw {
    pub weight_neg: f64,
    pub weight_pos: f64,
    pub df_neg: usize,
    pub df_pos: usize,
}

impl QuadFormLaw {
    pub fn mean(&self) -> f64 {
        self.weight_neg * self.df_neg as f64 + self.weight_pos * self.df_pos as f64
    }

    pub fn variance(&self) -> f64 {
        2.0 * (self.weight_neg.powi(2) * self.df_neg as f64 + self.weight_pos.powi(2) * self.df_pos as f64)
    }

    pub fn is_point_mass(&self) -> bool {
        self.df_neg == 0 && self.df_pos == 0
    }

    /// One draw from the mixture.
    pub fn sample(&self, rng: &mut Stream) -> f64 {
        let mut v = 0.0;
        if self.df_neg > 0 {
            let chi = ChiSquared::new(self.df_neg as f64).expect("positive degrees of freedom");
            v += self.weight_neg * chi.sample(rng);
        }
        if self.df_pos > 0 {
            let chi = ChiSquared::new(self.df_pos as f64).expect("positive degrees of freedom");
            v += self.weight_pos * chi.sample(rng);
        }
        v
    }
}

pub fn quad_form_law(k: usize, rho: f64, hypothesis: Hypothesis) -> Result<QuadFormLaw> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let rho = validate_rho(rho)?;
    if k == 1 || rho == 0.0 {
        return Ok(QuadFormLaw { weight_neg: 0.0, weight_pos: 0.0, df_neg: 0, df_pos: 0 });
    }
    let km1 = k as f64 - 1.0;
    let (weight_neg, weight_pos) = match hypothesis {
        Hypothesis::Null => (-rho / (1.0 - rho), rho * km1 / (1.0 + rho * km1)),
        Hypothesis::Alternative => (-rho, rho * km1),
    };
    Ok(QuadFormLaw { weight_neg, weight_pos, df_neg: k - 1, df_pos: 1 })
}

/// `ln det A_S = (k-1) ln(1-rho) + ln(1 + rho (k-1))`.
pub fn log_det_as(k: usize, rho: f64) -> f64 {
    let km1 = k.saturating_sub(1) as f64;
    km1 * (-rho).ln_1p() + (rho * km1).ln_1p()
}

/// `det A_S`, evaluated through the log-determinant.
pub fn det_as(k: usize, rho: f64) -> f64 {
    log_det_as(k, rho).exp()
}

/// Spectrum of the `n x n` matrix `A_S` as `(eigenvalue, multiplicity)`
/// pairs; zero multiplicities are omitted.
pub fn spectrum_as(n: usize, k: usize, rho: f64) -> Vec<(f64, usize)> {
    let mut out = Vec::with_capacity(3);
    if k > 1 {
        out.push((1.0 - rho, k - 1));
    }
    if k >= 1 {
        out.push((1.0 + rho * (k as f64 - 1.0), 1));
    }
    if n > k {
        out.push((1.0, n - k));
    }
    out
}

/// Spectrum of `M = I - A_S^{-1}` (restricted to the non-zero block plus
/// the zero eigenvalue), as `(eigenvalue, multiplicity)`.
pub fn spectrum_m(n: usize, k: usize, rho: f64) -> Vec<(f64, usize)> {
    spectrum_as(n, k, rho).into_iter().map(|(l, m)| (1.0 - 1.0 / l, m)).collect()
}

/// `ln E exp(X^T M X)` for `X ~ N(0, I)` and symmetric `M` with the given
/// eigenvalues; `+inf` as soon as an eigenvalue reaches `1/2`.
pub fn log_gaussian_quad_mgf(eigenvalues: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &l in eigenvalues {
        if l >= 0.5 {
            return f64::INFINITY;
        }
        acc += -0.5 * (-2.0 * l).ln_1p();
    }
    acc
}

/// `det(I - 2M)^{-1/2}`, or `+inf`.
pub fn gaussian_quad_mgf(eigenvalues: &[f64]) -> f64 {
    log_gaussian_quad_mgf(eigenvalues).exp()
}

/// Same as [`log_gaussian_quad_mgf`] for an `(eigenvalue, multiplicity)` list.
pub fn log_gaussian_quad_mgf_multi(spectrum: &[(f64, usize)]) -> f64 {
    let mut acc = 0.0;
    for &(l, m) in spectrum {
        if m == 0 {
            continue;
        }
        if l >= 0.5 {
            return f64::INFINITY;
        }
        acc += -0.5 * m as f64 * (-2.0 * l).ln_1p();
    }
    acc
}

/// `E_0 Z_S = sqrt(det A_S)`.
pub fn expected_zs(k: usize, rho: f64) -> f64 {
    (0.5 * log_det_as(k, rho)).exp()
}
