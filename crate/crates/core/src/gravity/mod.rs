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

//! Gravity-equation estimation.
//!
//! The flow between `i` and `j` is modelled multiplicatively,
//! `w_ij = exp(x_ij' b) * eta_ij` with `E[eta | x] = 1`, and estimated by
//! Poisson pseudo-maximum likelihood. The two-stage zero-inflated variant
//! first fits a logit for the probability of a zero flow and then runs the
//! Poisson stage on positive flows. Residuals `eta_ij = w_ij / mu_ij` define
//! the residual network.

mod design;
mod diagnostics;
mod fit;
mod glm;
mod report;
mod selection;

pub use design::{
    build_design, compute_remoteness, ColumnRole, CovariateSet, DesignColumn, DesignOptions, RegressorBlock,
    RejectedDyad,
};
pub use diagnostics::{
    adjusted_pseudo_r2, adjusted_r2, chi2_sf, normal_two_sided_p, vuong_test, VuongTest, WaldTest, ADJ_R2_DEFINITION,
    ROBUST_SE_DEFINITION,
};
pub use fit::{
    estimate, fit_logit_zero_stage, fit_ols_log, fit_ppml, fit_zippml, Coefficient, Diagnostics, Estimator, GravityFit,
    ZeroStage, ZipOptions,
};
pub use report::{fit_report_kv, fit_report_text, stars};
pub use selection::{
    likelihood_ratio, select_general_to_specific, select_general_to_specific_with, Selection, SelectionStep,
    SelectionTrace,
};
