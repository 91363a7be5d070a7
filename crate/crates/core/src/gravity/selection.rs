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

//! General-to-specific regressor selection by likelihood-ratio tests.

use nalgebra::{DMatrix, DVector};

use super::design::CovariateSet;
use super::diagnostics::chi2_sf;
use super::fit::{fit_ols_log, fit_ppml_from, fit_zippml_from, Coefficient, Estimator, GravityFit};
use crate::error::{invalid, Result};
use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionStep {
    pub dropped: String,
    pub lr_statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub log_likelihood_after: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionTrace {
    pub steps: Vec<SelectionStep>,
}

impl SelectionTrace {
    pub fn dropped(&self) -> Vec<&str> {
        self.steps.iter().map(|s| s.dropped.as_str()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub fit: GravityFit,
    pub trace: SelectionTrace,
    pub design: CovariateSet,
}

fn start_from(coefs: &[Coefficient], design: &CovariateSet) -> Option<DVector<f64>> {
    let values: Option<Vec<f64>> = design
        .columns()
        .iter()
        .map(|col| coefs.iter().find(|c| c.name == col.name).map(|c| c.estimate))
        .collect();
    values.map(DVector::from_vec)
}

fn refit(design: &CovariateSet, estimator: Estimator, warm: Option<&GravityFit>) -> Result<GravityFit> {
    match estimator {
        Estimator::Ppml => {
            let start = warm.and_then(|w| start_from(w.coefficients(), design));
            fit_ppml_from(design, None, start.as_ref())
        }
        Estimator::Zippml(opts) => {
            let start = warm.and_then(|w| start_from(w.coefficients(), design));
            let logit_design = if opts.logit_fixed_effects {
                design.clone()
            } else {
                design.without_fixed_effects()
            };
            let zstart = warm
                .and_then(|w| w.zero_stage())
                .and_then(|z| start_from(&z.coefficients, &logit_design));
            match &start {
                Some(s) => fit_zippml_from(design, opts, Some((s, zstart.as_ref()))),
                None => fit_zippml_from(design, opts, None),
            }
        }
        Estimator::OlsLog => fit_ols_log(design),
    }
}

/// Likelihood-ratio statistic of `reduced` against `full`.
///
/// The Poisson (or Gaussian) part is a quasi-likelihood whose working
/// variance is not trusted, so it is mean-scaled: divided by
/// `tr(B_bb^-1 V_bb) / q`, where `B` and `V` are the model-based and robust
/// covariances of the full fit restricted to the `q` dropped columns. With
/// `V = phi B` this is the usual dispersion scaling. The zero-stage logit
/// part, when present, is a proper likelihood and is added unscaled.
pub fn likelihood_ratio(full: &GravityFit, reduced: &GravityFit) -> f64 {
    let dropped: Vec<usize> = full
        .columns()
        .iter()
        .enumerate()
        .filter(|(_, c)| !reduced.columns().iter().any(|r| r.name == c.name))
        .map(|(k, _)| k)
        .collect();
    let scale = robust_scale(full, &dropped);
    let main = (full.diagnostics().log_likelihood - reduced.diagnostics().log_likelihood) / scale;
    let zero = match (full.zero_stage(), reduced.zero_stage()) {
        (Some(a), Some(b)) => a.log_likelihood - b.log_likelihood,
        _ => 0.0,
    };
    (2.0 * (main + zero)).max(0.0)
}

fn robust_scale(fit: &GravityFit, cols: &[usize]) -> f64 {
    let q = cols.len();
    if q == 0 {
        return 1.0;
    }
    let pick = |m: &DMatrix<f64>| DMatrix::from_fn(q, q, |a, b| m[(cols[a], cols[b])]);
    let model = pick(fit.model_covariance());
    let robust = pick(fit.robust_covariance());
    let scale = model
        .cholesky()
        .map(|ch| ch.solve(&robust).trace() / q as f64)
        .unwrap_or(f64::NAN);
    if scale.is_finite() && scale > 0.0 {
        scale
    } else {
        1.0
    }
}

/// Repeatedly drops the regressor block whose removal has the largest LR
/// p-value, while that p-value exceeds `retention_alpha`. Fixed effects and
/// the constant are never candidates.
pub fn select_general_to_specific(
    design: &CovariateSet,
    estimator: Estimator,
    retention_alpha: f64,
) -> Result<Selection> {
    select_general_to_specific_with(design, estimator, retention_alpha, Execution::default())
}

pub fn select_general_to_specific_with(
    design: &CovariateSet,
    estimator: Estimator,
    retention_alpha: f64,
    exec: Execution,
) -> Result<Selection> {
    if !(retention_alpha > 0.0 && retention_alpha < 1.0) {
        return invalid(format!("retention alpha must lie in (0, 1), got {retention_alpha}"));
    }
    let mut current = design.clone();
    let mut fit = super::fit::estimate(&current, estimator)?;
    let mut trace = SelectionTrace::default();
    loop {
        let blocks = current.blocks();
        if blocks.is_empty() {
            break;
        }
        let candidates = exec.map_collect(blocks.len(), |b| {
            let reduced = current.without_block(&blocks[b]);
            refit(&reduced, estimator, Some(&fit)).map(|f| (reduced, f))
        });
        let mut best: Option<(usize, f64, f64, usize)> = None;
        for (b, cand) in candidates.iter().enumerate() {
            let (_, reduced_fit) = match cand {
                Ok(v) => v,
                Err(e) => return Err(e.clone()),
            };
            let width = current.block_width(&blocks[b]);
            let df = if fit.zero_stage().is_some() { 2 * width } else { width };
            let lr = likelihood_ratio(&fit, reduced_fit);
            let p = chi2_sf(lr, df);
            if best.is_none_or(|(_, bp, _, _)| p > bp) {
                best = Some((b, p, lr, df));
            }
        }
        let (b, p, lr, df) = best.expect("at least one candidate");
        if !(p > retention_alpha) {
            break;
        }
        let (reduced, reduced_fit) = candidates
            .into_iter()
            .nth(b)
            .expect("candidate index")
            .expect("checked above");
        trace.steps.push(SelectionStep {
            dropped: blocks[b].clone(),
            lr_statistic: lr,
            df,
            p_value: p,
            log_likelihood_after: reduced_fit.diagnostics().log_likelihood,
        });
        current = reduced;
        fit = reduced_fit;
    }
    Ok(Selection {
        fit,
        trace,
        design: current,
    })
}
