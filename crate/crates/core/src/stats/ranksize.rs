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

//! Rank-size (Zipf) plots and their power-law fits.

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitDomain {
    #[default]
    All,
    /// Only the `k` largest values.
    TopK(usize),
}

/// `value = scale * rank^slope`, fitted by OLS of `ln value` on `ln rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankSizeFit {
    pub slope: f64,
    /// Multiplicative constant on the original scale, `exp(intercept)`.
    pub scale: f64,
    pub intercept: f64,
    /// `None` when every fitted value is equal (degenerate series).
    pub r_squared: Option<f64>,
    pub n_points: usize,
    pub domain: FitDomain,
    pub degenerate: bool,
}

impl RankSizeFit {
    pub fn predict(&self, rank: usize) -> f64 {
        self.scale * (rank as f64).powf(self.slope)
    }
}

/// Positive values sorted in descending order with ranks `1..=m`. Zeros are
/// skipped; ties keep their input order.
pub fn rank_size(values: &[f64]) -> Result<Vec<(usize, f64)>> {
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return invalid(format!("rank-size input {v} is not a finite nonnegative value"));
    }
    let mut positive: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.is_empty() {
        return invalid("rank-size input has no positive value");
    }
    // stable sort keeps input order among ties
    positive.sort_by(|a, b| b.total_cmp(a));
    Ok(positive.into_iter().enumerate().map(|(r, v)| (r + 1, v)).collect())
}

pub fn fit_power_law(series: &[(usize, f64)], domain: FitDomain) -> Result<RankSizeFit> {
    let used: &[(usize, f64)] = match domain {
        FitDomain::All => series,
        FitDomain::TopK(k) => &series[..k.min(series.len())],
    };
    if used.len() < 3 {
        return invalid(format!("power-law fit needs at least 3 points, got {}", used.len()));
    }
    if let Some(&(r, v)) = used.iter().find(|(r, v)| *r == 0 || !(*v > 0.0)) {
        return invalid(format!("rank-size point ({r}, {v}) is not positive"));
    }
    let n = used.len() as f64;
    let lx: Vec<f64> = used.iter().map(|(r, _)| (*r as f64).ln()).collect();
    let ly: Vec<f64> = used.iter().map(|(_, v)| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let degenerate = syy == 0.0;
    let r_squared = if degenerate {
        None
    } else {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        Some((1.0 - rss / syy).clamp(0.0, 1.0))
    };
    Ok(RankSizeFit {
        slope,
        scale: intercept.exp(),
        intercept,
        r_squared,
        n_points: used.len(),
        domain,
        degenerate,
    })
}

/// Hill estimate of the tail index from the `k` largest positive values.
pub fn hill_estimator(values: &[f64], k: usize) -> Result<f64> {
    let series = rank_size(values)?;
    if k < 1 || k >= series.len() {
        return invalid(format!("Hill estimator needs 1 <= k < {} (got {k})", series.len()));
    }
    let threshold = series[k].1.ln();
    let mean_excess = series[..k].iter().map(|(_, v)| v.ln() - threshold).sum::<f64>() / k as f64;
    Ok(1.0 / mean_excess)
}
