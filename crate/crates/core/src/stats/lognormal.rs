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

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};

/// Maximum-likelihood log-normal fit with its Kolmogorov-Smirnov distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogNormalFit {
    pub mu: f64,
    pub sigma: f64,
    pub ks_statistic: f64,
    pub n: usize,
}

pub fn fit_log_normal(values: &[f64]) -> Result<LogNormalFit> {
    let n = values.len();
    if n < 10 {
        return invalid(format!("log-normal fit needs at least 10 values, got {n}"));
    }
    if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return invalid(format!("log-normal fit needs positive values, got {v}"));
    }
    let mut logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mu = logs.iter().sum::<f64>() / n as f64;
    let sigma = (logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / n as f64).sqrt();
    if !(sigma > 0.0) {
        return invalid("log-normal fit needs non-constant values");
    }
    logs.sort_by(f64::total_cmp);
    let dist = Normal::new(mu, sigma).expect("sigma > 0");
    let ks = logs
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let f = dist.cdf(l);
            let lo = k as f64 / n as f64;
            let hi = (k + 1) as f64 / n as f64;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max);
    Ok(LogNormalFit {
        mu,
        sigma,
        ks_statistic: ks,
        n,
    })
}
