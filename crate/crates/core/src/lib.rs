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

//! Trade-network analysis toolkit.
//!
//! The crate covers the whole chain from a directed bilateral flow matrix to
//! a comparison between the original network and its gravity-residual
//! counterpart:
//!
//! * [`network`] builds symmetric normalized weight matrices and residual networks.
//! * [`gravity`] assembles gravity regressors and fits Poisson / zero-inflated
//!   Poisson pseudo-maximum-likelihood models with country fixed effects.
//! * [`topology`] computes node statistics (degree, strength, average
//!   nearest-neighbour strength, clustering, random-walk betweenness).
//! * [`stats`] holds rank-size fits, correlation tables, kernel smoothing and
//!   macro-area trade shares.
//! * [`mst`] builds minimal spanning trees on the ultrametric-style distance
//!   `sqrt(2 (1 - w))`.
//!
//! Data-parallel loops (betweenness pair sums, bandwidth grids, Monte Carlo
//! helpers) run on rayon when the `parallel` feature is enabled and fall back
//! to plain iterators otherwise. Both paths reduce in the same fixed order, so
//! results are bitwise identical.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod exec;
pub mod gravity;
pub mod linalg;
pub mod mst;
pub mod network;
pub mod stats;
pub mod synth;
pub mod topology;

pub use error::{Error, Result};
pub use exec::Execution;
