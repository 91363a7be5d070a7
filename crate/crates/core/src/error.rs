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

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("country index mismatch: {0}")]
    IndexMismatch(String),

    #[error("rank-deficient design, collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),

    #[error("{stage} did not converge after {iterations} iterations (log-likelihood trace: {trace:?})")]
    NonConvergence {
        stage: &'static str,
        iterations: usize,
        trace: Vec<f64>,
    },

    #[error("perfect separation in the zero-stage logit (diverging columns: {}); prune these regressors or disable logit fixed effects", .0.join(", "))]
    Separation(Vec<String>),

    #[error("zero-stage logit needs both zero and positive outcomes")]
    SingleClass,

    #[error("models indistinguishable: per-observation log-likelihood differences have zero variance")]
    Indistinguishable,

    #[error("singular linear system: {0}")]
    Singular(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
