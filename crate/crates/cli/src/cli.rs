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

//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use tradenet_core::synth::{generate, SyntheticConfig, ZeroInflation};

use crate::config::{read_config_file, AnalysisConfig};
use crate::pipeline::{run_pipeline, RunManifest, Stage};
use crate::synth_files::write_world;

#[derive(Debug, Parser)]
#[command(name = "tradenet", version, about = "Original vs residual trade-network analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read and validate the inputs only.
    IngestCheck(ConfigArgs),
    /// Node statistics of the original network.
    Stats(ConfigArgs),
    /// Gravity estimation (with model selection unless `selection=off`).
    Gravity(ConfigArgs),
    /// Gravity fit, residual network and its node statistics.
    Residual(ConfigArgs),
    /// Correlation table and rank comparisons between the two networks.
    Compare(ConfigArgs),
    /// Minimal spanning trees.
    Mst(ConfigArgs),
    /// Rank-size, tail and log-normal fits, kernel curves, area shares.
    Dist(ConfigArgs),
    /// Graph files (dot / graphml / csv) of the original network.
    Export(ConfigArgs),
    /// The full pipeline.
    Run(ConfigArgs),
    /// Write a synthetic world (inputs plus config) for testing.
    Synth(SynthArgs),
}

/// Every config key is also a flag of the same name; flags win.
#[derive(Debug, Args, Default)]
pub struct ConfigArgs {
    /// key=value configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub flows: Option<String>,
    #[arg(long)]
    pub countries: Option<String>,
    #[arg(long)]
    pub dyads: Option<String>,
    #[arg(long)]
    pub distances: Option<String>,
    #[arg(long)]
    pub year: Option<String>,
    /// arithmetic | geometric
    #[arg(long)]
    pub symmetrize: Option<String>,
    /// zippml | ppml | ols_log
    #[arg(long)]
    pub estimator: Option<String>,
    #[arg(long = "fixed_effects")]
    pub fixed_effects: Option<String>,
    #[arg(long = "logit_fixed_effects")]
    pub logit_fixed_effects: Option<String>,
    /// Comma-separated regressor blocks, or `all`.
    #[arg(long)]
    pub blocks: Option<String>,
    /// on | off
    #[arg(long)]
    pub selection: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    /// preserve | zip_prune:<p>
    #[arg(long = "zero_mode")]
    pub zero_mode: Option<String>,
    /// all_pairs | positive_links
    #[arg(long = "edge_universe")]
    pub edge_universe: Option<String>,
    #[arg(long)]
    pub output: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub parallel: Option<String>,
    #[arg(long = "top_fraction")]
    pub top_fraction: Option<String>,
    #[arg(long = "graph_formats")]
    pub graph_formats: Option<String>,
    #[arg(long)]
    pub movers: Option<String>,
    #[arg(long = "kernel_points")]
    pub kernel_points: Option<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 50)]
    pub countries: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add structural zeros from a logit on mass and distance.
    #[arg(long)]
    pub zero_inflation: bool,
    /// Directory receiving the CSVs and config.txt.
    #[arg(long)]
    pub dir: PathBuf,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("flows", &self.flows),
            ("countries", &self.countries),
            ("dyads", &self.dyads),
            ("distances", &self.distances),
            ("year", &self.year),
            ("symmetrize", &self.symmetrize),
            ("estimator", &self.estimator),
            ("fixed_effects", &self.fixed_effects),
            ("logit_fixed_effects", &self.logit_fixed_effects),
            ("blocks", &self.blocks),
            ("selection", &self.selection),
            ("alpha", &self.alpha),
            ("zero_mode", &self.zero_mode),
            ("edge_universe", &self.edge_universe),
            ("output", &self.output),
            ("seed", &self.seed),
            ("parallel", &self.parallel),
            ("top_fraction", &self.top_fraction),
            ("graph_formats", &self.graph_formats),
            ("movers", &self.movers),
            ("kernel_points", &self.kernel_points),
        ]
    }

    pub fn resolve(&self) -> Result<AnalysisConfig> {
        let mut map = match &self.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        for (k, v) in self.overrides() {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        AnalysisConfig::from_map(&map)
    }
}

impl Command {
    fn targets(&self) -> (&'static str, Vec<Stage>) {
        match self {
            Command::IngestCheck(_) => ("ingest-check", vec![Stage::Ingest]),
            Command::Stats(_) => ("stats", vec![Stage::StatsOriginal]),
            Command::Gravity(_) => ("gravity", vec![Stage::Gravity]),
            Command::Residual(_) => ("residual", vec![Stage::StatsResidual]),
            Command::Compare(_) => ("compare", vec![Stage::Compare]),
            Command::Mst(_) => ("mst", vec![Stage::Mst]),
            Command::Dist(_) => ("dist", vec![Stage::Distributions]),
            Command::Export(_) => ("export", vec![Stage::Export]),
            Command::Run(_) => ("run", Stage::ALL.to_vec()),
            Command::Synth(_) => ("synth", vec![]),
        }
    }
}

fn print_summary(m: &RunManifest, output: &std::path::Path) {
    for s in &m.stages {
        match &s.error {
            Some(e) => println!("{:<15} {:<7} {e}", s.name, s.status),
            None => println!("{:<15} {:<7} {:.2}s", s.name, s.status, s.seconds),
        }
    }
    for w in &m.warnings {
        println!("warning: {w}");
    }
    println!("{} artifacts in {}", m.artifacts.len(), output.display());
}

/// Parses arguments and runs; returns the process exit code (0 success,
/// 1 failed stage, 2 usage or configuration error).
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, targets) = cli.command.targets();
    let cfg_args = match &cli.command {
        Command::Synth(a) => {
            let mut cfg = SyntheticConfig::new(a.countries, a.seed);
            if a.zero_inflation {
                cfg.zero_inflation = Some(ZeroInflation::default());
            }
            return match generate(&cfg)
                .map_err(anyhow::Error::from)
                .and_then(|w| write_world(&w, &a.dir))
            {
                Ok(path) => {
                    println!("wrote {}", path.display());
                    0
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    1
                }
            };
        }
        Command::IngestCheck(a)
        | Command::Stats(a)
        | Command::Gravity(a)
        | Command::Residual(a)
        | Command::Compare(a)
        | Command::Mst(a)
        | Command::Dist(a)
        | Command::Export(a)
        | Command::Run(a) => a,
    };
    let cfg = match cfg_args.resolve() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("configuration error: {e:#}");
            return 2;
        }
    };
    match run_pipeline(&cfg, name, &targets) {
        Ok(m) => {
            print_summary(&m, &cfg.output);
            i32::from(!m.success)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
