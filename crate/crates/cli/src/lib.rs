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

//! Batch front end for the trade-network toolkit: CSV ingestion, the staged
//! pipeline (network -> gravity fit -> residual network -> comparisons), and
//! graph / table serialization.

pub mod cli;
pub mod config;
pub mod export;
pub mod ingest;
pub mod pipeline;
pub mod synth_files;

pub use config::AnalysisConfig;
pub use pipeline::{run_pipeline, RunManifest, Stage};
