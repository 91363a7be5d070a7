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

//! Analysis configuration: a flat `key=value` file whose keys can all be
//! overridden by same-named command-line flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use tradenet_core::gravity::{DesignOptions, Estimator, RegressorBlock, ZipOptions};
use tradenet_core::mst::EdgeUniverse;
use tradenet_core::network::{SymmetrizeMode, ZeroMode};
use tradenet_core::Execution;

use crate::export::GraphFormat;

/// Every recognised key, in the order used when the configuration is echoed.
pub const KEYS: &[&str] = &[
    "flows",
    "countries",
    "dyads",
    "distances",
    "year",
    "symmetrize",
    "estimator",
    "fixed_effects",
    "logit_fixed_effects",
    "blocks",
    "selection",
    "alpha",
    "zero_mode",
    "edge_universe",
    "output",
    "seed",
    "parallel",
    "top_fraction",
    "graph_formats",
    "movers",
    "kernel_points",
];

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    pub flows: PathBuf,
    pub countries: PathBuf,
    pub dyads: PathBuf,
    /// Optional `id_a,id_b,distance_km` pair file; overrides the dyad file.
    pub distances: Option<PathBuf>,
    pub year: Option<i32>,
    pub symmetrize: SymmetrizeMode,
    pub estimator: Estimator,
    pub design: DesignOptions,
    pub selection: bool,
    pub alpha: f64,
    pub zero_mode: ZeroMode,
    pub edge_universe: EdgeUniverse,
    pub output: PathBuf,
    pub seed: u64,
    pub execution: Execution,
    pub top_fraction: Option<f64>,
    pub graph_formats: Vec<GraphFormat>,
    /// Largest rank displacements listed per statistic.
    pub movers: usize,
    pub kernel_points: usize,
    /// Resolved `key -> value` pairs, for the manifest.
    pub echo: BTreeMap<String, String>,
}

/// Reads `key=value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("config line {}: expected key=value, got {raw:?}", no + 1))?;
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            bail!("config line {}: unknown key {key:?}", no + 1);
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            bail!("config line {}: key {key:?} given twice", no + 1);
        }
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_config_text(&text).with_context(|| format!("in config {}", path.display()))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => bail!("{key}: expected a boolean, got {v:?}"),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| anyhow!("{key}: cannot parse {v:?}"))
}

pub fn parse_zero_mode(v: &str) -> Result<ZeroMode> {
    if v == "preserve" {
        return Ok(ZeroMode::Preserve);
    }
    if let Some(p) = v.strip_prefix("zip_prune:") {
        let p: f64 = parse_num("zero_mode", p)?;
        if !(0.0..=1.0).contains(&p) {
            bail!("zero_mode: zip_prune probability must lie in [0, 1], got {p}");
        }
        return Ok(ZeroMode::ZipPrune(p));
    }
    bail!("zero_mode: expected `preserve` or `zip_prune:<p>`, got {v:?}")
}

impl AnalysisConfig {
    /// Resolves a key map. Input paths are checked only by [`Self::check_inputs`]
    /// so that subcommands can report every problem at once.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| map.get(k).map(String::as_str).filter(|v| !v.is_empty());
        let path = |k: &str| -> Result<PathBuf> {
            get(k)
                .map(PathBuf::from)
                .ok_or_else(|| anyhow!("missing required key {k:?}"))
        };
        let flag = |k: &str, default: bool| get(k).map_or(Ok(default), |v| parse_bool(k, v));

        let symmetrize = match get("symmetrize").unwrap_or("arithmetic") {
            "arithmetic" => SymmetrizeMode::Arithmetic,
            "geometric" => SymmetrizeMode::Geometric,
            v => bail!("symmetrize: expected arithmetic or geometric, got {v:?}"),
        };
        let logit_fe = flag("logit_fixed_effects", true)?;
        let estimator = match get("estimator").unwrap_or("zippml") {
            "zippml" => Estimator::Zippml(ZipOptions {
                logit_fixed_effects: logit_fe,
            }),
            "ppml" => Estimator::Ppml,
            "ols_log" => Estimator::OlsLog,
            v => bail!("estimator: expected zippml, ppml or ols_log, got {v:?}"),
        };
        let blocks = match get("blocks") {
            None | Some("all") => RegressorBlock::ALL.to_vec(),
            Some(list) => list
                .split(',')
                .map(|b| RegressorBlock::parse(b).ok_or_else(|| anyhow!("blocks: unknown block {:?}", b.trim())))
                .collect::<Result<Vec<_>>>()?,
        };
        let alpha: f64 = get("alpha").map_or(Ok(0.05), |v| parse_num("alpha", v))?;
        if !(alpha > 0.0 && alpha < 1.0) {
            bail!("alpha must lie in (0, 1), got {alpha}");
        }
        let zero_mode = get("zero_mode").map_or(Ok(ZeroMode::Preserve), parse_zero_mode)?;
        let edge_universe = match get("edge_universe").unwrap_or("all_pairs") {
            "all_pairs" => EdgeUniverse::AllPairs,
            "positive_links" => EdgeUniverse::PositiveLinks,
            v => bail!("edge_universe: expected all_pairs or positive_links, got {v:?}"),
        };
        let top_fraction = match get("top_fraction") {
            None => None,
            Some(v) => {
                let f: f64 = parse_num("top_fraction", v)?;
                if !(f > 0.0 && f <= 1.0) {
                    bail!("top_fraction must lie in (0, 1], got {f}");
                }
                Some(f)
            }
        };
        let graph_formats = get("graph_formats")
            .unwrap_or("dot,graphml,csv")
            .split(',')
            .map(|f| GraphFormat::parse(f.trim()))
            .collect::<Result<Vec<_>>>()?;
        let execution = if flag("parallel", true)? {
            Execution::Parallel
        } else {
            Execution::Sequential
        };

        let mut echo = BTreeMap::new();
        for key in KEYS {
            if let Some(v) = get(key) {
                echo.insert(key.to_string(), v.to_string());
            }
        }

        Ok(Self {
            flows: path("flows")?,
            countries: path("countries")?,
            dyads: path("dyads")?,
            distances: get("distances").map(PathBuf::from),
            year: get("year").map(|v| parse_num("year", v)).transpose()?,
            symmetrize,
            estimator,
            design: DesignOptions {
                blocks,
                fixed_effects: flag("fixed_effects", true)?,
            },
            selection: flag("selection", true)?,
            alpha,
            zero_mode,
            edge_universe,
            output: get("output").map_or_else(|| PathBuf::from("out"), PathBuf::from),
            seed: get("seed").map_or(Ok(0), |v| parse_num("seed", v))?,
            execution,
            top_fraction,
            graph_formats,
            movers: get("movers").map_or(Ok(10), |v| parse_num("movers", v))?,
            kernel_points: get("kernel_points").map_or(Ok(50), |v| parse_num("kernel_points", v))?,
            echo,
        })
    }

    /// Every input path must exist before anything is read.
    pub fn check_inputs(&self) -> Result<()> {
        let mut missing = Vec::new();
        for (key, p) in [
            ("flows", Some(&self.flows)),
            ("countries", Some(&self.countries)),
            ("dyads", Some(&self.dyads)),
            ("distances", self.distances.as_ref()),
        ] {
            if let Some(p) = p {
                if !p.is_file() {
                    missing.push(format!("{key} = {}", p.display()));
                }
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            bail!("input files not found: {}", missing.join("; "))
        }
    }
}
