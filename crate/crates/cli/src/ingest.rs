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

//! CSV ingestion with line-numbered validation errors.
//!
//! Headers are fixed (column order is free):
//!
//! * flows: `exporter_id,importer_id,year,value`
//! * countries: `id,acronym,name,gdp,population,area_km2,landlocked,continent,region,cpi,latitude,longitude`
//! * dyads: `id_a,id_b,distance_km,contiguity,common_currency,common_language,colony,trade_agreement,common_religion,exchange_rate`
//! * distances (optional): `id_a,id_b,distance_km`
//!
//! Empty cells are missing values. Missing dyad covariates are never imputed;
//! the gravity design drops the affected dyads.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use tradenet_core::data::{Country, CountryTable, DyadCovariates, DyadRecord};
use tradenet_core::network::DirectedFlowMatrix;

pub const FLOW_HEADER: &[&str] = &["exporter_id", "importer_id", "year", "value"];
pub const COUNTRY_HEADER: &[&str] = &[
    "id",
    "acronym",
    "name",
    "gdp",
    "population",
    "area_km2",
    "landlocked",
    "continent",
    "region",
    "cpi",
    "latitude",
    "longitude",
];
pub const DYAD_HEADER: &[&str] = &[
    "id_a",
    "id_b",
    "distance_km",
    "contiguity",
    "common_currency",
    "common_language",
    "colony",
    "trade_agreement",
    "common_religion",
    "exchange_rate",
];
pub const DISTANCE_HEADER: &[&str] = &["id_a", "id_b", "distance_km"];

#[derive(Debug, Deserialize)]
struct FlowRow {
    exporter_id: i64,
    importer_id: i64,
    year: i32,
    value: f64,
}

#[derive(Debug, Deserialize)]
struct CountryRow {
    id: i64,
    acronym: String,
    name: String,
    gdp: f64,
    population: f64,
    area_km2: f64,
    landlocked: u8,
    continent: String,
    region: String,
    cpi: Option<f64>,
    latitude: Option<f64>,
    longitude: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct DyadRow {
    id_a: i64,
    id_b: i64,
    distance_km: Option<f64>,
    contiguity: Option<f64>,
    common_currency: Option<f64>,
    common_language: Option<f64>,
    colony: Option<f64>,
    trade_agreement: Option<f64>,
    common_religion: Option<f64>,
    exchange_rate: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct DistanceRow {
    id_a: i64,
    id_b: i64,
    distance_km: f64,
}

#[derive(Debug, Clone)]
pub struct InputDigest {
    pub role: &'static str,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub countries: CountryTable,
    pub flows: DirectedFlowMatrix,
    pub dyads: DyadCovariates,
    pub digests: Vec<InputDigest>,
    pub warnings: Vec<String>,
    /// Distances computed from coordinates.
    pub distances_from_coordinates: usize,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Parses every data row of `text`, calling `f(line, row)`.
fn for_each_row<T: DeserializeOwned>(
    file: &str,
    text: &str,
    header: &[&str],
    mut f: impl FnMut(u64, T) -> Result<()>,
) -> Result<()> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = rdr
        .headers()
        .with_context(|| format!("{file}: reading header"))?
        .clone();
    let names: BTreeSet<&str> = found.iter().collect();
    let missing: Vec<&str> = header.iter().copied().filter(|h| !names.contains(h)).collect();
    if !missing.is_empty() {
        bail!("{file} line 1: missing column(s) {}", missing.join(", "));
    }
    if let Some(extra) = found.iter().find(|h| !header.contains(h)) {
        bail!("{file} line 1: unexpected column {extra:?}");
    }
    for record in rdr.records() {
        let record = record.map_err(|e| anyhow!("{file}: {e}"))?;
        let line = record.position().map_or(0, |p| p.line());
        let row: T = record
            .deserialize(Some(&found))
            .map_err(|e| anyhow!("{file} line {line}: {}", csv_reason(&e)))?;
        f(line, row).map_err(|e| anyhow!("{file} line {line}: {e}"))?;
    }
    Ok(())
}

fn csv_reason(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(k) => format!("field {}: {}", k + 1, err.kind()),
            None => err.kind().to_string(),
        },
        _ => e.to_string(),
    }
}

fn read(path: &Path, role: &'static str, digests: &mut Vec<InputDigest>) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {role} file {}", path.display()))?;
    digests.push(InputDigest {
        role,
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    });
    String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
}

pub fn parse_countries(file: &str, text: &str) -> Result<CountryTable> {
    let mut countries = Vec::new();
    let mut seen = HashSet::new();
    for_each_row(file, text, COUNTRY_HEADER, |_, r: CountryRow| {
        if !seen.insert(r.id) {
            bail!("duplicate country id {}", r.id);
        }
        if r.landlocked > 1 {
            bail!("landlocked must be 0 or 1, got {}", r.landlocked);
        }
        for (name, v) in [("gdp", r.gdp), ("population", r.population), ("area_km2", r.area_km2)] {
            if !(v.is_finite() && v > 0.0) {
                bail!("country {}: {name} must be positive, got {v}", r.id);
            }
        }
        if r.latitude.is_some() != r.longitude.is_some() {
            bail!("country {}: latitude and longitude must be given together", r.id);
        }
        countries.push(Country {
            id: r.id,
            acronym: r.acronym,
            name: r.name,
            gdp: r.gdp,
            population: r.population,
            area_km2: r.area_km2,
            landlocked: r.landlocked == 1,
            continent: r.continent,
            region: r.region,
            cpi: r.cpi,
            latitude: r.latitude,
            longitude: r.longitude,
        });
        Ok(())
    })?;
    if countries.is_empty() {
        bail!("{file}: no countries");
    }
    Ok(CountryTable::new(countries)?)
}

fn index(countries: &CountryTable, id: i64) -> Result<usize> {
    countries.index_of(id).ok_or_else(|| anyhow!("unknown country id {id}"))
}

/// Flow matrix for one year. Without a year selector the file must hold a
/// single year.
pub fn parse_flows(file: &str, text: &str, countries: &CountryTable, year: Option<i32>) -> Result<DirectedFlowMatrix> {
    let n = countries.len();
    let mut by_year: BTreeMap<i32, Vec<(usize, usize, f64)>> = BTreeMap::new();
    let mut seen = HashSet::new();
    for_each_row(file, text, FLOW_HEADER, |_, r: FlowRow| {
        let i = index(countries, r.exporter_id)?;
        let j = index(countries, r.importer_id)?;
        if !(r.value.is_finite() && r.value >= 0.0) {
            bail!("flow value must be finite and nonnegative, got {}", r.value);
        }
        if i == j {
            bail!("self-flow for country {}", r.exporter_id);
        }
        if !seen.insert((r.exporter_id, r.importer_id, r.year)) {
            bail!("duplicate flow {} -> {} in {}", r.exporter_id, r.importer_id, r.year);
        }
        by_year.entry(r.year).or_default().push((i, j, r.value));
        Ok(())
    })?;
    let year = match year {
        Some(y) => {
            if !by_year.contains_key(&y) {
                let have: Vec<String> = by_year.keys().map(|y| y.to_string()).collect();
                bail!("{file}: year {y} not present (years: {})", have.join(", "));
            }
            y
        }
        None => match by_year.len() {
            0 => bail!("{file}: no flow rows"),
            1 => *by_year.keys().next().expect("one year"),
            _ => {
                let have: Vec<String> = by_year.keys().map(|y| y.to_string()).collect();
                bail!("{file}: several years ({}); set `year`", have.join(", "))
            }
        },
    };
    let mut m = DMatrix::zeros(n, n);
    for &(i, j, v) in &by_year[&year] {
        m[(i, j)] = v;
    }
    Ok(DirectedFlowMatrix::new(m, year)?)
}

pub fn parse_dyads(file: &str, text: &str, countries: &CountryTable) -> Result<DyadCovariates> {
    let mut dyads = DyadCovariates::new();
    for_each_row(file, text, DYAD_HEADER, |_, r: DyadRow| {
        if r.id_a >= r.id_b {
            bail!("id_a must be smaller than id_b, got ({}, {})", r.id_a, r.id_b);
        }
        let a = index(countries, r.id_a)?;
        let b = index(countries, r.id_b)?;
        if let Some(d) = r.distance_km {
            if !(d.is_finite() && d > 0.0) {
                bail!("distance_km must be positive, got {d}");
            }
        }
        dyads
            .insert(
                a,
                b,
                DyadRecord {
                    distance_km: r.distance_km,
                    contiguity: r.contiguity,
                    common_currency: r.common_currency,
                    common_language: r.common_language,
                    colony: r.colony,
                    trade_agreement: r.trade_agreement,
                    common_religion: r.common_religion,
                    exchange_rate: r.exchange_rate,
                },
            )
            .map_err(|_| anyhow!("duplicate dyad ({}, {})", r.id_a, r.id_b))
    })?;
    Ok(dyads)
}

/// Applies a pair-distance file on top of the dyad records.
pub fn apply_distances(file: &str, text: &str, countries: &CountryTable, dyads: &mut DyadCovariates) -> Result<usize> {
    let mut seen = HashSet::new();
    let mut applied = 0;
    for_each_row(file, text, DISTANCE_HEADER, |_, r: DistanceRow| {
        let a = index(countries, r.id_a)?;
        let b = index(countries, r.id_b)?;
        if a == b {
            bail!("self-pair {}", r.id_a);
        }
        if !seen.insert((a.min(b), a.max(b))) {
            bail!("duplicate distance pair ({}, {})", r.id_a, r.id_b);
        }
        if !(r.distance_km.is_finite() && r.distance_km > 0.0) {
            bail!("distance_km must be positive, got {}", r.distance_km);
        }
        match dyads.get_mut(a, b) {
            Some(rec) => rec.distance_km = Some(r.distance_km),
            None => dyads.insert(
                a,
                b,
                DyadRecord {
                    distance_km: Some(r.distance_km),
                    ..DyadRecord::default()
                },
            )?,
        }
        applied += 1;
        Ok(())
    })?;
    Ok(applied)
}

/// Reads and validates every input named by the configuration.
pub fn ingest(cfg: &crate::config::AnalysisConfig) -> Result<Ingested> {
    cfg.check_inputs()?;
    let mut digests = Vec::new();
    let mut warnings = Vec::new();
    let name = |p: &Path| p.display().to_string();

    let text = read(&cfg.countries, "countries", &mut digests)?;
    let countries = parse_countries(&name(&cfg.countries), &text)?;
    let text = read(&cfg.flows, "flows", &mut digests)?;
    let flows = parse_flows(&name(&cfg.flows), &text, &countries, cfg.year)?;
    let text = read(&cfg.dyads, "dyads", &mut digests)?;
    let mut dyads = parse_dyads(&name(&cfg.dyads), &text, &countries)?;
    if let Some(path) = &cfg.distances {
        let text = read(path, "distances", &mut digests)?;
        apply_distances(&name(path), &text, &countries, &mut dyads)?;
    }
    let distances_from_coordinates = dyads.fill_distances_from_coordinates(&countries);
    if distances_from_coordinates > 0 {
        warnings.push(format!(
            "{distances_from_coordinates} dyad distances computed great-circle from coordinates"
        ));
    }

    let n = countries.len();
    let silent: Vec<&str> = (0..n)
        .filter(|&i| (0..n).all(|j| flows.get(i, j) == 0.0 && flows.get(j, i) == 0.0))
        .map(|i| countries.get(i).acronym.as_str())
        .collect();
    if !silent.is_empty() {
        warnings.push(format!(
            "countries without any flow in {}: {}",
            flows.year(),
            silent.join(", ")
        ));
    }
    let expected = n * (n - 1) / 2;
    if dyads.len() < expected {
        warnings.push(format!(
            "dyad file covers {} of {expected} country pairs; uncovered pairs are dropped from estimation",
            dyads.len()
        ));
    }
    Ok(Ingested {
        countries,
        flows,
        dyads,
        digests,
        warnings,
        distances_from_coordinates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTRIES: &str = "id,acronym,name,gdp,population,area_km2,landlocked,continent,region,cpi,latitude,longitude
1,AAA,Alpha,100,10,1000,0,Africa,AF,1.0,0,0
2,BBB,Beta,200,20,2000,1,Africa,AF,,0,90
3,CCC,\"Gamma, Republic of\",300,30,3000,0,Europe,EU,2.0,,
";

    #[test]
    fn toy_fixture() {
        let c = parse_countries("c", COUNTRIES).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.get(2).name, "Gamma, Republic of");
        assert!(c.get(1).cpi.is_none());
        let f = parse_flows(
            "f",
            "exporter_id,importer_id,year,value\n1,2,2000,5\n2,1,2000,3\n3,1,2000,0\n",
            &c,
            None,
        )
        .unwrap();
        assert_eq!(f.n(), 3);
        assert_eq!(f.get(0, 1), 5.0);
        let d = parse_dyads(
            "d",
            "id_a,id_b,distance_km,contiguity,common_currency,common_language,colony,trade_agreement,common_religion,exchange_rate
1,2,,1,0,0,0,0,0,
1,3,500,0,0,0,0,0,0,
2,3,700,0,0,0,0,0,0,
",
            &c,
        )
        .unwrap();
        assert_eq!(d.len(), 3);
        assert!(d.get(0, 1).unwrap().exchange_rate.is_none());
    }

    #[test]
    fn unknown_id_named_with_line() {
        let c = parse_countries("c", COUNTRIES).unwrap();
        let err = parse_flows(
            "flows.csv",
            "exporter_id,importer_id,year,value\n1,2,2000,5\n1,77,2000,1\n",
            &c,
            None,
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("77") && err.contains("line 3"), "{err}");
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let c = parse_countries("c", COUNTRIES).unwrap();
        let err = parse_flows("f", "exporter_id,importer_id,year,value\n1,2,2000,abc\n", &c, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 2"), "{err}");
        let err = parse_flows("f", "exporter,importer_id,year,value\n", &c, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("exporter_id"), "{err}");
        let err = parse_flows("f", "exporter_id,importer_id,year,value\n1,2,2000,-1\n", &c, None)
            .unwrap_err()
            .to_string();
        assert!(err.contains("nonnegative"), "{err}");
    }

    #[test]
    fn duplicates_rejected() {
        let c = parse_countries("c", COUNTRIES).unwrap();
        let h = DYAD_HEADER.join(",");
        let err = parse_dyads("d", &format!("{h}\n1,2,5,0,0,0,0,0,0,\n1,2,6,0,0,0,0,0,0,\n"), &c)
            .unwrap_err()
            .to_string();
        assert!(err.contains("duplicate dyad") && err.contains("line 3"), "{err}");
        assert!(parse_dyads("d", &format!("{h}\n2,1,5,0,0,0,0,0,0,\n"), &c).is_err());
        let dup_flow = "exporter_id,importer_id,year,value\n1,2,2000,5\n1,2,2000,6\n";
        assert!(parse_flows("f", dup_flow, &c, None).is_err());
    }

    #[test]
    fn year_selection() {
        let c = parse_countries("c", COUNTRIES).unwrap();
        let two = "exporter_id,importer_id,year,value\n1,2,1999,5\n1,2,2000,6\n";
        assert!(parse_flows("f", two, &c, None).is_err());
        assert_eq!(parse_flows("f", two, &c, Some(2000)).unwrap().get(0, 1), 6.0);
        assert!(parse_flows("f", two, &c, Some(2001)).is_err());
    }
}
