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

//! Writes a synthetic world as the three input CSVs plus a config file.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tradenet_core::data::dyad_pairs;
use tradenet_core::synth::SyntheticWorld;

use crate::ingest::{COUNTRY_HEADER, DYAD_HEADER, FLOW_HEADER};

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

pub fn countries_csv(world: &SyntheticWorld) -> String {
    let mut s = COUNTRY_HEADER.join(",") + "\n";
    for c in world.countries.iter() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            c.id,
            c.acronym,
            c.name,
            c.gdp,
            c.population,
            c.area_km2,
            u8::from(c.landlocked),
            c.continent,
            c.region,
            opt(c.cpi),
            opt(c.latitude),
            opt(c.longitude)
        );
    }
    s
}

/// Every ordered pair, zeros included.
pub fn flows_csv(world: &SyntheticWorld) -> String {
    let mut s = FLOW_HEADER.join(",") + "\n";
    let n = world.countries.len();
    let year = world.flows.year();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let (a, b) = (world.countries.get(i).id, world.countries.get(j).id);
                let _ = writeln!(s, "{a},{b},{year},{}", world.flows.get(i, j));
            }
        }
    }
    s
}

pub fn dyads_csv(world: &SyntheticWorld) -> String {
    let mut s = DYAD_HEADER.join(",") + "\n";
    let mut rows: Vec<(i64, i64, String)> = Vec::new();
    for (i, j) in dyad_pairs(world.countries.len()) {
        let Some(r) = world.dyads.get(i, j) else { continue };
        let (a, b) = (world.countries.get(i).id, world.countries.get(j).id);
        let (a, b) = (a.min(b), a.max(b));
        let body = [
            r.distance_km,
            r.contiguity,
            r.common_currency,
            r.common_language,
            r.colony,
            r.trade_agreement,
            r.common_religion,
            r.exchange_rate,
        ]
        .map(opt)
        .join(",");
        rows.push((a, b, body));
    }
    rows.sort_by_key(|r| (r.0, r.1));
    for (a, b, body) in rows {
        let _ = writeln!(s, "{a},{b},{body}");
    }
    s
}

/// Writes `countries.csv`, `flows.csv`, `dyads.csv` and `config.txt` (with
/// `output = <dir>/out`) into `dir`; returns the config path.
pub fn write_world(world: &SyntheticWorld, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("countries.csv"), countries_csv(world))?;
    fs::write(dir.join("flows.csv"), flows_csv(world))?;
    fs::write(dir.join("dyads.csv"), dyads_csv(world))?;
    let config = format!(
        "# synthetic world, {} countries\nflows = {}\ncountries = {}\ndyads = {}\noutput = {}\n",
        world.countries.len(),
        dir.join("flows.csv").display(),
        dir.join("countries.csv").display(),
        dir.join("dyads.csv").display(),
        dir.join("out").display()
    );
    let path = dir.join("config.txt");
    fs::write(&path, config)?;
    Ok(path)
}
