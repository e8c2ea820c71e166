//! One-sample Kolmogorov–Smirnov distance.

use crate::error::{Error, Result};

/// A distribution function that may have atoms.
pub trait DistributionFunction {
    /// `F(z) = P{Z ≤ z}`.
    fn cdf(&self, z: f64) -> Result<f64>;

    /// `F(z⁻) = P{Z < z}`; equals [`cdf`](Self::cdf) where `F` is continuous.
    fn cdf_left(&self, z: f64) -> Result<f64> {
        self.cdf(z)
    }

    /// `(F(z⁻), F(z))`; override when both share an expensive part.
    fn cdf_both(&self, z: f64) -> Result<(f64, f64)> {
        Ok((self.cdf_left(z)?, self.cdf(z)?))
    }
}

impl<F: Fn(f64) -> f64> DistributionFunction for F {
    fn cdf(&self, z: f64) -> Result<f64> {
        Ok(self(z))
    }
}

/// `sup_z |F_n(z) - F(z)|` for ascending `sorted` samples.
///
/// At each distinct sample value `v` both one-sided limits are compared,
/// `|F_n(v⁻) - F(v⁻)|` and `|F_n(v) - F(v)|`. Between samples `F_n` is
/// constant and `F` monotone, so this is the exact supremum over all `z`,
/// including when `F` has atoms.
pub fn ks_statistic<C: DistributionFunction + ?Sized>(sorted: &[f64], cdf: &C) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::param("samples", "need at least one sample"));
    }
    if sorted.iter().any(|v| v.is_nan()) || sorted.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::param(
            "samples",
            "must be sorted ascending and free of NaN",
        ));
    }
    let n = sorted.len() as f64;
    let mut sup: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let below = i as f64 / n;
        let at = j as f64 / n;
        let (left, right) = cdf.cdf_both(v)?;
        sup = sup.max((below - left).abs()).max((at - right).abs());
        i = j;
    }
    Ok(sup)
}
