// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Goodness-of-fit and model-comparison statistics.

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use super::design::ColumnRole;
use super::fit::{Coefficient, GravityFit};
use crate::error::{invalid, Error, Result};
use crate::linalg::inverse_spd;

pub const ADJ_R2_DEFINITION: &str =
    "squared Pearson correlation of observed and fitted flows on the estimation sample, adjusted by (n-1)/(n-k-1)";

pub const ROBUST_SE_DEFINITION: &str =
    "HC3 sandwich: residuals scaled by 1/(1-h)^2 with GLM leverage h_i = w_i x_i' (X'WX)^-1 x_i";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldTest {
    pub chi2: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VuongTest {
    pub z: f64,
    pub p_value: f64,
}

pub fn normal_two_sided_p(z: f64) -> f64 {
    if !z.is_finite() {
        return if z.is_nan() { f64::NAN } else { 0.0 };
    }
    let n = Normal::standard();
    2.0 * n.cdf(-z.abs())
}

pub fn chi2_sf(stat: f64, df: usize) -> f64 {
    if df == 0 {
        return f64::NAN;
    }
    if stat <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).map_or(f64::NAN, |d| d.sf(stat))
}

/// Vuong's non-nested comparison from per-observation log-likelihoods.
///
/// `Z = sqrt(n) mean(d) / sd(d)` with `d = la - lb`; positive values favour
/// model A. The p-value is two-sided.
pub fn vuong_test(la: &[f64], lb: &[f64]) -> Result<VuongTest> {
    if la.len() != lb.len() {
        return invalid("Vuong test needs log-likelihoods over the same observations");
    }
    let n = la.len();
    if n < 2 {
        return invalid("Vuong test needs at least two observations");
    }
    let d: Vec<f64> = la.iter().zip(lb).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    let scale = d.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
    let sd = var.sqrt();
    // Differences that agree up to rounding carry no information.
    if !(sd > 1e-12 * scale.max(f64::MIN_POSITIVE)) {
        return Err(Error::Indistinguishable);
    }
    let z = mean * (n as f64).sqrt() / sd;
    Ok(VuongTest {
        z,
        p_value: normal_two_sided_p(z),
    })
}

/// Adjusted squared correlation between observed and fitted values, with
/// `k` estimated parameters.
pub fn adjusted_r2(observed: &[f64], fitted: &[f64], k: usize) -> Result<f64> {
    let n = observed.len();
    if fitted.len() != n {
        return invalid("observed and fitted differ in length");
    }
    if n <= k + 1 {
        return invalid(format!("adjusted R2 needs n > k + 1 (n = {n}, k = {k})"));
    }
    let r = crate::stats::pearson(observed, fitted).unwrap_or(0.0);
    let r2 = r * r;
    Ok(1.0 - (1.0 - r2) * (n - 1) as f64 / (n - k - 1) as f64)
}

/// [`adjusted_r2`] on the estimation sample of a fit.
pub fn adjusted_pseudo_r2(fit: &GravityFit) -> Result<f64> {
    let (obs, fitted): (Vec<f64>, Vec<f64>) = fit
        .observed()
        .iter()
        .zip(fit.fitted())
        .zip(fit.in_sample())
        .filter(|(_, &keep)| keep)
        .map(|((&o, &f), _)| (o, f))
        .unzip();
    adjusted_r2(&obs, &fitted, fit.coefficients().len())
}

/// Joint robust Wald test that every regressor slope (not fixed effects or
/// the constant) is zero.
pub(crate) fn wald_slopes(coefs: &[Coefficient], cov: &DMatrix<f64>) -> Option<WaldTest> {
    let idx: Vec<usize> = coefs
        .iter()
        .enumerate()
        .filter(|(_, c)| matches!(c.role, ColumnRole::Regressor { .. }))
        .map(|(i, _)| i)
        .collect();
    if idx.is_empty() {
        return None;
    }
    let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| cov[(idx[a], idx[b])]);
    let b = DVector::from_iterator(idx.len(), idx.iter().map(|&i| coefs[i].estimate));
    let inv = inverse_spd(&sub)?;
    let chi2 = (b.transpose() * inv * &b)[(0, 0)];
    Some(WaldTest {
        chi2,
        df: idx.len(),
        p_value: chi2_sf(chi2, idx.len()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vuong_degenerate_cases() {
        let a = [-1.0, -2.0, -0.5, -3.0];
        assert!(matches!(vuong_test(&a, &a), Err(Error::Indistinguishable)));
        let shifted: Vec<f64> = a.iter().map(|v| v - 0.7).collect();
        assert!(matches!(vuong_test(&a, &shifted), Err(Error::Indistinguishable)));
        assert!(vuong_test(&a, &a[..3]).is_err());
    }

    #[test]
    fn vuong_sign() {
        let a = [-1.0, -1.0, -1.0, -1.0];
        let b = [-1.5, -2.0, -1.2, -1.9];
        let v = vuong_test(&a, &b).unwrap();
        assert!(v.z > 0.0);
        let v2 = vuong_test(&b, &a).unwrap();
        assert!((v.z + v2.z).abs() < 1e-12);
    }

    #[test]
    fn perfect_fit_r2() {
        let y = [1.0, 2.0, 4.0, 8.0, 3.0, 9.0];
        assert!((adjusted_r2(&y, &y, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!(adjusted_r2(&y, &y, 5).is_err());
    }

    #[test]
    fn chi2_tail() {
        // P(chi2_1 > 3.841459) = 0.05
        let p = chi2_sf(3.841458820694124, 1);
        assert!((p - 0.05).abs() < 1e-9, "{p}");
        let q = normal_two_sided_p(1.959963984540054);
        assert!((q - 0.05).abs() < 1e-10, "{q}");
    }
}
