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

//! Country attributes and per-pair covariates.

use std::collections::{BTreeMap, HashMap};

use crate::error::{invalid, Result};

/// Mean Earth radius used for great-circle distances, in km.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Country {
    pub id: i64,
    pub acronym: String,
    pub name: String,
    pub gdp: f64,
    pub population: f64,
    pub area_km2: f64,
    pub landlocked: bool,
    pub continent: String,
    /// Macro-area used for the within/between trade-share table.
    pub region: String,
    pub cpi: Option<f64>,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
}

impl Country {
    /// Whether the mandatory size attributes are usable under a log.
    pub fn has_positive_sizes(&self) -> bool {
        self.gdp > 0.0 && self.population > 0.0 && self.area_km2 > 0.0
    }

    pub fn coordinates(&self) -> Option<(f64, f64)> {
        Some((self.latitude?, self.longitude?))
    }
}

/// Ordered country list. Every matrix in an analysis is indexed against it.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryTable {
    countries: Vec<Country>,
    by_id: HashMap<i64, usize>,
}

impl CountryTable {
    pub fn new(countries: Vec<Country>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(countries.len());
        for (idx, c) in countries.iter().enumerate() {
            if by_id.insert(c.id, idx).is_some() {
                return invalid(format!("duplicate country id {}", c.id));
            }
        }
        Ok(Self { countries, by_id })
    }

    pub fn len(&self) -> usize {
        self.countries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.countries.is_empty()
    }

    pub fn get(&self, idx: usize) -> &Country {
        &self.countries[idx]
    }

    pub fn index_of(&self, id: i64) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Country> {
        self.countries.iter()
    }

    pub fn as_slice(&self) -> &[Country] {
        &self.countries
    }

    pub fn gdp(&self) -> Vec<f64> {
        self.countries.iter().map(|c| c.gdp).collect()
    }

    /// GDP per capita, the external variable of the correlation table.
    pub fn gdp_per_capita(&self) -> Vec<f64> {
        self.countries.iter().map(|c| c.gdp / c.population).collect()
    }
}

/// Link-level regressors for one unordered pair. `None` marks a missing value;
/// dyads with a missing value in a used column are dropped, never imputed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DyadRecord {
    pub distance_km: Option<f64>,
    pub contiguity: Option<f64>,
    pub common_currency: Option<f64>,
    pub common_language: Option<f64>,
    pub colony: Option<f64>,
    pub trade_agreement: Option<f64>,
    pub common_religion: Option<f64>,
    pub exchange_rate: Option<f64>,
}

/// Per-pair covariates keyed by country indices `(lo, hi)`, `lo < hi`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DyadCovariates {
    records: BTreeMap<(usize, usize), DyadRecord>,
}

impl DyadCovariates {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a record; returns an error on a duplicate or a self-pair.
    pub fn insert(&mut self, a: usize, b: usize, record: DyadRecord) -> Result<()> {
        if a == b {
            return invalid(format!("self-pair ({a}, {a}) in dyad covariates"));
        }
        let key = (a.min(b), a.max(b));
        if self.records.insert(key, record).is_some() {
            return invalid(format!("duplicate dyad ({}, {})", key.0, key.1));
        }
        Ok(())
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&DyadRecord> {
        self.records.get(&(a.min(b), a.max(b)))
    }

    pub fn get_mut(&mut self, a: usize, b: usize) -> Option<&mut DyadRecord> {
        self.records.get_mut(&(a.min(b), a.max(b)))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &DyadRecord)> {
        self.records.iter()
    }

    /// Symmetric distance matrix; NaN where the distance is unknown.
    pub fn distance_matrix(&self, n: usize) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::from_element(n, n, f64::NAN);
        for i in 0..n {
            d[(i, i)] = 0.0;
        }
        for (&(a, b), rec) in &self.records {
            if let Some(km) = rec.distance_km {
                if a < n && b < n {
                    d[(a, b)] = km;
                    d[(b, a)] = km;
                }
            }
        }
        d
    }

    /// Fills missing distances from country coordinates (haversine). Returns
    /// how many were filled.
    pub fn fill_distances_from_coordinates(&mut self, countries: &CountryTable) -> usize {
        let mut filled = 0;
        for (&(a, b), rec) in self.records.iter_mut() {
            if rec.distance_km.is_some() {
                continue;
            }
            if let (Some(pa), Some(pb)) = (countries.get(a).coordinates(), countries.get(b).coordinates()) {
                rec.distance_km = Some(great_circle_km(pa, pb));
                filled += 1;
            }
        }
        filled
    }
}

/// Haversine great-circle distance between `(lat, lon)` points in degrees.
pub fn great_circle_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (lat1, lon1) = (a.0.to_radians(), a.1.to_radians());
    let (lat2, lon2) = (b.0.to_radians(), b.1.to_radians());
    let dlat = lat2 - lat1;
    let dlon = lon2 - lon1;
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

/// Unordered pairs `(i, j)` with `i > j`, in the row order used by every
/// dyadic vector in the crate.
pub fn dyad_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (1..n).flat_map(|i| (0..i).map(move |j| (i, j)))
}
