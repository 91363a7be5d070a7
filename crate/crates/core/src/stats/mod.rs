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

//! Distributional and correlational comparisons between networks.

mod correlation;
mod kernel;
mod lognormal;
mod qap;
mod ranksize;
mod shares;

pub use correlation::{
    correlation, correlation_table, midranks, rank_comparison, CorrMethod, CorrelationEntry, CorrelationTable, Mover,
    RankComparison, SIGNIFICANCE_LEVEL,
};
pub use kernel::{
    kernel_conditional_mean, kernel_conditional_mean_with, Axes, CurvePoint, KernelCurve, BANDWIDTH_METHOD,
    CV_GRID_POINTS, CV_MAX_POINTS,
};
pub use lognormal::{fit_log_normal, LogNormalFit};
pub use qap::{qap_correlation, QapEntry};
pub use ranksize::{fit_power_law, hill_estimator, rank_size, FitDomain, RankSizeFit};
pub use shares::{area_trade_shares, AreaShareTable};

/// Pearson correlation; `None` when either vector has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
