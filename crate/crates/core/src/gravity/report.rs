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

//! Table-style fit reports: aligned text and flat `key=value` lines.

use std::fmt::Write;

use super::design::ColumnRole;
use super::fit::GravityFit;
use super::selection::SelectionTrace;

/// Significance stars: `*` p < 0.05, `**` p < 0.01, `***` p < 0.001.
pub fn stars(p: f64) -> &'static str {
    if p < 0.001 {
        "***"
    } else if p < 0.01 {
        "**"
    } else if p < 0.05 {
        "*"
    } else {
        ""
    }
}

/// Coefficient table (regressors only), then the diagnostics block.
pub fn fit_report_text(fit: &GravityFit, trace: Option<&SelectionTrace>) -> String {
    let d = fit.diagnostics();
    let mut out = String::new();
    let _ = writeln!(out, "Gravity equation, estimator: {}", fit.estimator().label());
    let _ = writeln!(
        out,
        "Dependent variable: symmetric bilateral flow w_ij (pre-normalization units)"
    );
    let _ = writeln!(out, "{:<24} {:>14} {:>14}", "Regressor", "Coefficient", "(Rob. SE)");
    let _ = writeln!(out, "{}", "-".repeat(54));
    for c in fit.coefficients() {
        if let ColumnRole::Regressor { .. } = c.role {
            let coef = format!("{:.3}{}", c.estimate, stars(c.p_value));
            let _ = writeln!(
                out,
                "{:<24} {:>14} {:>14}",
                c.name,
                coef,
                format!("({:.3})", c.robust_se)
            );
        }
    }
    let _ = writeln!(out, "{}", "-".repeat(54));
    let has_fe = fit.columns().iter().any(|c| c.is_fixed_effect());
    let _ = writeln!(
        out,
        "{:<24} {:>14}",
        "Constant",
        if has_fe { "absorbed" } else { "YES" }
    );
    let _ = writeln!(
        out,
        "{:<24} {:>14}",
        "Country Dummies",
        if has_fe { "YES" } else { "NO" }
    );
    let fmt_opt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    let _ = writeln!(out, "{:<24} {:>14}", "Adj. R2", fmt_opt(d.adj_r2));
    let _ = writeln!(out, "{:<24} {:>14.6e}", "Log Likelihood", d.log_likelihood);
    if let Some(w) = d.wald {
        let _ = writeln!(out, "{:<24} {:>14.6e}", format!("Wald chi2({})", w.df), w.chi2);
        let _ = writeln!(
            out,
            "{:<24} {:>14}",
            "Prob > chi2",
            format!("{:.4}{}", w.p_value, stars(w.p_value))
        );
    }
    if let Some(v) = d.vuong {
        let _ = writeln!(out, "{:<24} {:>14.4}", "Vuong Z", v.z);
        let _ = writeln!(
            out,
            "{:<24} {:>14}",
            "Prob > Z",
            format!("{:.4}{}", v.p_value, stars(v.p_value))
        );
    }
    let _ = writeln!(out, "{:<24} {:>14}", "Observations", d.n_obs);
    let _ = writeln!(out, "{:<24} {:>14}", "Parameters", d.n_params);
    let _ = writeln!(out, "{:<24} {:>14.6e}", "Pearson dispersion", d.dispersion);
    let _ = writeln!(
        out,
        "Legend: * p<0.05; ** p<0.01; *** p<0.001. Robust standard errors in parentheses."
    );
    let _ = writeln!(out, "Adj. R2 definition: {}", d.adj_r2_definition);
    if let Some(trace) = trace {
        let _ = writeln!(out, "\nGeneral-to-specific selection:");
        if trace.steps.is_empty() {
            let _ = writeln!(out, "  no block dropped");
        }
        for s in &trace.steps {
            let _ = writeln!(
                out,
                "  dropped {:<6} LR = {:.4} (df {}), p = {:.4}, log-likelihood after = {:.6e}",
                s.dropped, s.lr_statistic, s.df, s.p_value, s.log_likelihood_after
            );
        }
    }
    out
}

/// Machine-readable variant; one `key=value` per line, stable ordering.
pub fn fit_report_kv(fit: &GravityFit, trace: Option<&SelectionTrace>) -> String {
    let d = fit.diagnostics();
    let mut out = String::new();
    let _ = writeln!(out, "estimator={}", fit.estimator().label());
    for c in fit.coefficients() {
        let key = c.name.replace(' ', "_");
        let _ = writeln!(out, "coef.{key}={}", c.estimate);
        let _ = writeln!(out, "se.{key}={}", c.robust_se);
        let _ = writeln!(out, "p.{key}={}", c.p_value);
    }
    if let Some(z) = fit.zero_stage() {
        for c in &z.coefficients {
            let _ = writeln!(out, "zero_stage.coef.{}={}", c.name.replace(' ', "_"), c.estimate);
        }
        let _ = writeln!(out, "zero_stage.log_likelihood={}", z.log_likelihood);
        let _ = writeln!(out, "zero_stage.fixed_effects={}", z.fixed_effects);
    }
    let _ = writeln!(out, "log_likelihood={}", d.log_likelihood);
    let _ = writeln!(out, "dispersion={}", d.dispersion);
    if let Some(r2) = d.adj_r2 {
        let _ = writeln!(out, "adj_r2={r2}");
    }
    let _ = writeln!(out, "adj_r2_definition={}", d.adj_r2_definition);
    if let Some(w) = d.wald {
        let _ = writeln!(out, "wald_chi2={}\nwald_df={}\nwald_p={}", w.chi2, w.df, w.p_value);
    }
    if let Some(v) = d.vuong {
        let _ = writeln!(out, "vuong_z={}\nvuong_p={}", v.z, v.p_value);
    }
    let _ = writeln!(out, "n_obs={}\nn_params={}", d.n_obs, d.n_params);
    let _ = writeln!(
        out,
        "iterations={}\nconverged={}\nridge_used={}",
        d.iterations, d.converged, d.ridge_used
    );
    if let Some(trace) = trace {
        for (k, s) in trace.steps.iter().enumerate() {
            let _ = writeln!(
                out,
                "selection.{k}.dropped={}\nselection.{k}.lr={}\nselection.{k}.p={}",
                s.dropped, s.lr_statistic, s.p_value
            );
        }
    }
    out
}
