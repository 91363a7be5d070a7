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

//! Poisson PML, zero-stage logit, two-stage ZIPPML and log-linear OLS.

use nalgebra::{DMatrix, DVector};

use super::design::{ColumnRole, CovariateSet, DesignColumn};
use super::diagnostics::{adjusted_r2, vuong_test, wald_slopes, VuongTest, WaldTest, ADJ_R2_DEFINITION};
use super::glm::{irls, logit_loglik, poisson_loglik, sandwich, Family, GlmFit};
use crate::error::{invalid, Error, Result};
use crate::linalg::{inverse_spd, solve_spd, tr_mul_vec, weighted_gram};

/// Linear predictor above which a zero-stage fit counts as separated.
const SEPARATION_ETA: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ZipOptions {
    /// Include country fixed effects in the zero-stage logit.
    pub logit_fixed_effects: bool,
}

impl ZipOptions {
    pub fn new() -> Self {
        Self {
            logit_fixed_effects: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Ppml,
    Zippml(ZipOptions),
    /// OLS on `log w` over positive flows; a cross-check only.
    OlsLog,
}

impl Estimator {
    pub fn label(&self) -> &'static str {
        match self {
            Estimator::Ppml => "ppml",
            Estimator::Zippml(_) => "zippml",
            Estimator::OlsLog => "ols_log",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub name: String,
    pub role: ColumnRole,
    pub estimate: f64,
    pub robust_se: f64,
    pub z: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZeroStage {
    pub coefficients: Vec<Coefficient>,
    /// Estimated probability of a zero flow, one per design dyad.
    pub p_zero: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub fixed_effects: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// Log-likelihood of the final (Poisson or Gaussian) stage.
    pub log_likelihood: f64,
    /// Pearson dispersion of the final stage, `sum (y - mu)^2 / v(mu) / (n - k)`.
    pub dispersion: f64,
    pub adj_r2: Option<f64>,
    pub adj_r2_definition: &'static str,
    pub wald: Option<WaldTest>,
    pub vuong: Option<VuongTest>,
    pub n_obs: usize,
    pub n_params: usize,
    pub iterations: usize,
    pub converged: bool,
    /// A ridge had to be added to a normal-equation matrix.
    pub ridge_used: bool,
}

/// Result of a gravity estimation, covering every dyad of the design.
#[derive(Debug, Clone, PartialEq)]
pub struct GravityFit {
    pub(crate) estimator: Estimator,
    pub(crate) n_countries: usize,
    pub(crate) dyads: Vec<(usize, usize)>,
    pub(crate) observed: Vec<f64>,
    pub(crate) fitted: Vec<f64>,
    pub(crate) residuals: Vec<f64>,
    pub(crate) in_sample: Vec<bool>,
    pub(crate) columns: Vec<DesignColumn>,
    pub(crate) coefficients: Vec<Coefficient>,
    pub(crate) covariance: DMatrix<f64>,
    /// Inverse information of the final stage; the covariance if the
    /// working variance were correct.
    pub(crate) model_covariance: DMatrix<f64>,
    pub(crate) zero_stage: Option<ZeroStage>,
    pub(crate) diagnostics: Diagnostics,
    pub(crate) loglik_obs: Vec<f64>,
}

impl GravityFit {
    pub fn estimator(&self) -> Estimator {
        self.estimator
    }

    pub fn n_countries(&self) -> usize {
        self.n_countries
    }

    pub fn dyads(&self) -> &[(usize, usize)] {
        &self.dyads
    }

    pub fn observed(&self) -> &[f64] {
        &self.observed
    }

    /// Fitted means for every design dyad.
    pub fn fitted(&self) -> &[f64] {
        &self.fitted
    }

    /// `observed / fitted`; 0 for zero flows.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Dyads used by the final estimation stage.
    pub fn in_sample(&self) -> &[bool] {
        &self.in_sample
    }

    pub fn coefficients(&self) -> &[Coefficient] {
        &self.coefficients
    }

    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn robust_covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn model_covariance(&self) -> &DMatrix<f64> {
        &self.model_covariance
    }

    pub fn zero_stage(&self) -> Option<&ZeroStage> {
        self.zero_stage.as_ref()
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Per-dyad log-likelihood of the complete model (all design dyads).
    pub fn loglik_per_dyad(&self) -> &[f64] {
        &self.loglik_obs
    }

    pub fn columns(&self) -> &[DesignColumn] {
        &self.columns
    }

    /// Score of the final stage, `X' (y - mu)` over the estimation sample,
    /// scaled by `sum |y|`. Near zero at convergence.
    pub fn relative_score(&self, design: &CovariateSet) -> Vec<f64> {
        let scale: f64 = (0..design.nobs())
            .filter(|&r| self.in_sample[r])
            .map(|r| design.response()[r].abs())
            .sum();
        (0..design.ncols())
            .map(|c| {
                (0..design.nobs())
                    .filter(|&r| self.in_sample[r])
                    .map(|r| (design.response()[r] - self.fitted[r]) * design.x()[(r, c)])
                    .sum::<f64>()
                    .abs()
                    / scale
            })
            .collect()
    }
}

fn coefficient_table(columns: &[DesignColumn], beta: &DVector<f64>, cov: &DMatrix<f64>) -> Vec<Coefficient> {
    columns
        .iter()
        .enumerate()
        .map(|(c, col)| {
            let se = cov[(c, c)].max(0.0).sqrt();
            let z = beta[c] / se;
            Coefficient {
                name: col.name.clone(),
                role: col.role.clone(),
                estimate: beta[c],
                robust_se: se,
                z,
                p_value: super::diagnostics::normal_two_sided_p(z),
            }
        })
        .collect()
}

fn pearson_dispersion(y: &[f64], mu: &[f64], family: Family, k: usize) -> f64 {
    let n = y.len();
    let chi2: f64 = y
        .iter()
        .zip(mu)
        .map(|(&yi, &mi)| match family {
            Family::Poisson => (yi - mi).powi(2) / mi,
            Family::Logit => (yi - mi).powi(2) / (mi * (1.0 - mi)),
        })
        .sum();
    if n > k {
        chi2 / (n - k) as f64
    } else {
        f64::NAN
    }
}

fn validate_prior(design: &CovariateSet, weights: Option<&[f64]>) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != design.nobs() {
            return invalid("per-dyad weights differ in length from the design");
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return invalid("per-dyad weights must be finite and nonnegative");
        }
    }
    Ok(())
}

struct PoissonStage {
    beta: DVector<f64>,
    mu: Vec<f64>,
    cov: DMatrix<f64>,
    bread: DMatrix<f64>,
    iterations: usize,
    ridge_used: bool,
}

fn poisson_stage(design: &CovariateSet, weights: Option<&[f64]>, start: Option<&DVector<f64>>) -> Result<PoissonStage> {
    design.check_rank()?;
    let glm = irls(design.x(), design.response(), weights, Family::Poisson, start)?;
    let sw = sandwich(design.x(), design.response(), &glm.mu, weights, Family::Poisson)?;
    Ok(PoissonStage {
        beta: glm.beta,
        mu: glm.mu,
        cov: sw.robust,
        bread: sw.bread,
        iterations: glm.iterations,
        ridge_used: glm.ridge_used,
    })
}

/// Poisson pseudo-maximum likelihood, `E[w | x] = exp(x'b)`, on every dyad of
/// the design. Optional nonnegative per-dyad weights scale each
/// observation's contribution.
pub fn fit_ppml(design: &CovariateSet, weights: Option<&[f64]>) -> Result<GravityFit> {
    fit_ppml_from(design, weights, None)
}

pub(crate) fn fit_ppml_from(
    design: &CovariateSet,
    weights: Option<&[f64]>,
    start: Option<&DVector<f64>>,
) -> Result<GravityFit> {
    validate_prior(design, weights)?;
    let stage = poisson_stage(design, weights, start)?;
    let y = design.response();
    let n = design.nobs();
    let k = design.ncols();
    let loglik_obs: Vec<f64> = (0..n).map(|r| poisson_loglik(y[r], stage.mu[r])).collect();
    let log_likelihood = (0..n).map(|r| weights.map_or(1.0, |w| w[r]) * loglik_obs[r]).sum();
    let coefficients = coefficient_table(design.columns(), &stage.beta, &stage.cov);
    let wald = wald_slopes(&coefficients, &stage.cov);
    Ok(GravityFit {
        estimator: Estimator::Ppml,
        n_countries: design.n_countries(),
        dyads: design.dyads().to_vec(),
        observed: y.to_vec(),
        residuals: residuals(y, &stage.mu),
        in_sample: vec![true; n],
        columns: design.columns().to_vec(),
        diagnostics: Diagnostics {
            log_likelihood,
            dispersion: pearson_dispersion(y, &stage.mu, Family::Poisson, k),
            adj_r2: adjusted_r2(y, &stage.mu, k).ok(),
            adj_r2_definition: ADJ_R2_DEFINITION,
            wald,
            vuong: None,
            n_obs: n,
            n_params: k,
            iterations: stage.iterations,
            converged: true,
            ridge_used: stage.ridge_used,
        },
        fitted: stage.mu,
        coefficients,
        covariance: stage.cov,
        model_covariance: stage.bread,
        zero_stage: None,
        loglik_obs,
    })
}

fn residuals(y: &[f64], mu: &[f64]) -> Vec<f64> {
    y.iter()
        .zip(mu)
        .map(|(&yi, &mi)| if yi > 0.0 { yi / mi } else { 0.0 })
        .collect()
}

/// Logit for `P(w = 0)` on the same regressors.
pub fn fit_logit_zero_stage(design: &CovariateSet) -> Result<ZeroStage> {
    fit_logit_from(design, None)
}

pub(crate) fn fit_logit_from(design: &CovariateSet, start: Option<&DVector<f64>>) -> Result<ZeroStage> {
    let zeros: Vec<f64> = design
        .response()
        .iter()
        .map(|&v| f64::from(u8::from(v == 0.0)))
        .collect();
    let n_zero = zeros.iter().filter(|&&z| z == 1.0).count();
    if n_zero == 0 || n_zero == zeros.len() {
        return Err(Error::SingleClass);
    }
    design.check_rank()?;
    let mut glm = irls(design.x(), &zeros, None, Family::Logit, start)?;
    let separated = |g: &GlmFit| g.eta.iter().any(|e| e.abs() > SEPARATION_ETA);
    if start.is_some() && separated(&glm) {
        // a warm start far from the optimum can stall where the weights vanish
        glm = irls(design.x(), &zeros, None, Family::Logit, None)?;
    }
    if separated(&glm) {
        let mut ranked: Vec<(usize, f64)> = glm.beta.iter().map(|b| b.abs()).enumerate().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        let names = ranked
            .iter()
            .take(5)
            .map(|&(c, _)| design.columns()[c].name.clone())
            .collect();
        return Err(Error::Separation(names));
    }
    let cov = sandwich(design.x(), &zeros, &glm.mu, None, Family::Logit)?.robust;
    let log_likelihood = zeros.iter().zip(&glm.mu).map(|(&z, &p)| logit_loglik(z, p)).sum();
    Ok(ZeroStage {
        coefficients: coefficient_table(design.columns(), &glm.beta, &cov),
        p_zero: glm.mu,
        log_likelihood,
        iterations: glm.iterations,
        fixed_effects: design.has_fixed_effects(),
    })
}

/// Two-stage zero-inflated Poisson PML.
///
/// Stage 1 fits a logit for the zero indicator; stage 2 fits Poisson PML on
/// the positive-flow dyads. Fitted means `exp(x'b)` are reported for every
/// dyad. The Vuong statistic compares the implied zero-inflated likelihood
/// against a single-stage Poisson fit on all dyads. Without zeros the
/// procedure reduces to [`fit_ppml`].
pub fn fit_zippml(design: &CovariateSet, opts: ZipOptions) -> Result<GravityFit> {
    fit_zippml_from(design, opts, None)
}

pub(crate) fn fit_zippml_from(
    design: &CovariateSet,
    opts: ZipOptions,
    start: Option<(&DVector<f64>, Option<&DVector<f64>>)>,
) -> Result<GravityFit> {
    let y = design.response();
    let positive: Vec<bool> = y.iter().map(|&v| v > 0.0).collect();
    if positive.iter().all(|&p| p) {
        let mut fit = fit_ppml_from(design, None, start.map(|s| s.0))?;
        fit.estimator = Estimator::Zippml(opts);
        return Ok(fit);
    }
    let logit_design = if opts.logit_fixed_effects {
        design.clone()
    } else {
        design.without_fixed_effects()
    };
    let zero_stage = fit_logit_from(&logit_design, start.and_then(|s| s.1))?;

    let pos_design = design.subset_rows(&positive);
    let stage = poisson_stage(&pos_design, None, start.map(|s| s.0))?;
    let mu_all: Vec<f64> = (design.x() * &stage.beta).iter().map(|e| e.min(700.0).exp()).collect();

    let n = design.nobs();
    let k = design.ncols();
    let pos_y = pos_design.response();
    let log_likelihood: f64 = pos_y.iter().zip(&stage.mu).map(|(&a, &m)| poisson_loglik(a, m)).sum();

    // Zero-inflated mixture likelihood, per dyad.
    let loglik_obs: Vec<f64> = (0..n)
        .map(|r| {
            let p = zero_stage.p_zero[r];
            let mu = mu_all[r];
            if y[r] == 0.0 {
                (p + (1.0 - p) * (-mu).exp()).ln()
            } else {
                (1.0 - p).ln() + poisson_loglik(y[r], mu)
            }
        })
        .collect();
    let single = fit_ppml(design, None)?;
    let vuong = vuong_test(&loglik_obs, single.loglik_per_dyad()).ok();

    let coefficients = coefficient_table(design.columns(), &stage.beta, &stage.cov);
    let wald = wald_slopes(&coefficients, &stage.cov);
    let n_pos = pos_design.nobs();
    Ok(GravityFit {
        estimator: Estimator::Zippml(opts),
        n_countries: design.n_countries(),
        dyads: design.dyads().to_vec(),
        observed: y.to_vec(),
        residuals: residuals(y, &mu_all),
        fitted: mu_all,
        in_sample: positive,
        columns: design.columns().to_vec(),
        diagnostics: Diagnostics {
            log_likelihood,
            dispersion: pearson_dispersion(pos_y, &stage.mu, Family::Poisson, k),
            adj_r2: adjusted_r2(pos_y, &stage.mu, k).ok(),
            adj_r2_definition: ADJ_R2_DEFINITION,
            wald,
            vuong,
            n_obs: n_pos,
            n_params: k,
            iterations: stage.iterations + zero_stage.iterations,
            converged: true,
            ridge_used: stage.ridge_used,
        },
        coefficients,
        covariance: stage.cov,
        model_covariance: stage.bread,
        zero_stage: Some(zero_stage),
        loglik_obs,
    })
}

/// OLS of `log w` on the regressors over positive flows, with HC1 robust
/// covariance. Fitted means are `exp(x'b)` without retransformation bias
/// correction.
pub fn fit_ols_log(design: &CovariateSet) -> Result<GravityFit> {
    let y = design.response();
    let positive: Vec<bool> = y.iter().map(|&v| v > 0.0).collect();
    let pos = design.subset_rows(&positive);
    let n = pos.nobs();
    let k = pos.ncols();
    if n <= k {
        return invalid(format!("{n} positive flows cannot identify {k} parameters"));
    }
    pos.check_rank()?;
    let logy: Vec<f64> = pos.response().iter().map(|v| v.ln()).collect();
    let ones = vec![1.0; n];
    let gram = weighted_gram(pos.x(), &ones);
    let solve =
        solve_spd(&gram, &tr_mul_vec(pos.x(), &logy)).ok_or_else(|| Error::Singular("OLS normal equations".into()))?;
    let beta = solve.solution;
    let fitted_log: Vec<f64> = (pos.x() * &beta).iter().copied().collect();
    let resid: Vec<f64> = logy.iter().zip(&fitted_log).map(|(a, b)| a - b).collect();
    let bread = inverse_spd(&gram).ok_or_else(|| Error::Singular("OLS information matrix".into()))?;
    let u2: Vec<f64> = resid.iter().map(|e| e * e).collect();
    let cov = &bread * weighted_gram(pos.x(), &u2) * &bread * (n as f64 / (n - k) as f64);
    let sigma2 = u2.iter().sum::<f64>() / n as f64;
    let log_likelihood = -0.5 * n as f64 * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);

    let mu_all: Vec<f64> = (design.x() * &beta).iter().map(|e| e.min(700.0).exp()).collect();
    let loglik_obs: Vec<f64> = (0..design.nobs())
        .map(|r| {
            if y[r] > 0.0 {
                let e = y[r].ln() - mu_all[r].ln();
                -0.5 * ((2.0 * std::f64::consts::PI * sigma2).ln() + e * e / sigma2)
            } else {
                0.0
            }
        })
        .collect();
    let coefficients = coefficient_table(design.columns(), &beta, &cov);
    let wald = wald_slopes(&coefficients, &cov);
    let exp_fitted: Vec<f64> = fitted_log.iter().map(|e| e.exp()).collect();
    Ok(GravityFit {
        estimator: Estimator::OlsLog,
        n_countries: design.n_countries(),
        dyads: design.dyads().to_vec(),
        observed: y.to_vec(),
        residuals: residuals(y, &mu_all),
        fitted: mu_all,
        in_sample: positive,
        columns: design.columns().to_vec(),
        diagnostics: Diagnostics {
            log_likelihood,
            dispersion: 1.0,
            adj_r2: adjusted_r2(pos.response(), &exp_fitted, k).ok(),
            adj_r2_definition: ADJ_R2_DEFINITION,
            wald,
            vuong: None,
            n_obs: n,
            n_params: k,
            iterations: 1,
            converged: true,
            ridge_used: solve.ridge_used,
        },
        coefficients,
        covariance: cov,
        model_covariance: bread * sigma2,
        zero_stage: None,
        loglik_obs,
    })
}

/// Dispatches on the estimator.
pub fn estimate(design: &CovariateSet, estimator: Estimator) -> Result<GravityFit> {
    match estimator {
        Estimator::Ppml => fit_ppml(design, None),
        Estimator::Zippml(opts) => fit_zippml(design, opts),
        Estimator::OlsLog => fit_ols_log(design),
    }
}
