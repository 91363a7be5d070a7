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

//! Within/between macro-area trade shares.

use std::collections::BTreeMap;
use std::fmt::Write;

use crate::data::CountryTable;
use crate::error::{invalid, Error, Result};
use crate::network::DirectedFlowMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct AreaShareTable {
    pub regions: Vec<String>,
    /// `percent[r][s]`: share (in %) of region `r`'s total trade exchanged
    /// with region `s`. Rows sum to 100 (or are all zero for a region that
    /// does not trade).
    pub percent: Vec<Vec<f64>>,
    /// Region total trade as a percentage of the sum of region totals.
    pub world_share: Vec<f64>,
}

impl AreaShareTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("region");
        for r in &self.regions {
            let _ = write!(out, ",pct_with_{r}");
        }
        out.push_str(",world_share_pct\n");
        for (r, row) in self.regions.iter().zip(&self.percent) {
            out.push_str(r);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            let idx = self.regions.iter().position(|x| x == r).expect("own region");
            let _ = writeln!(out, ",{}", self.world_share[idx]);
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self.regions.iter().map(String::len).max().unwrap_or(6).max(8);
        let mut out = format!("{:<width$}", "");
        for r in &self.regions {
            let _ = write!(out, " {r:>width$}");
        }
        let _ = writeln!(out, " {:>width$}", "World");
        for (i, r) in self.regions.iter().enumerate() {
            let _ = write!(out, "{r:<width$}");
            for v in &self.percent[i] {
                let _ = write!(out, " {:>width$.2}", v);
            }
            let _ = writeln!(out, " {:>width$.2}", self.world_share[i]);
        }
        out
    }
}

/// Trade between `i` and `j` counts as `flow(i, j) + flow(j, i)`.
pub fn area_trade_shares(flows: &DirectedFlowMatrix, countries: &CountryTable) -> Result<AreaShareTable> {
    let n = flows.n();
    if countries.len() != n {
        return Err(Error::IndexMismatch(format!(
            "flow matrix has {n} countries, country table {}",
            countries.len()
        )));
    }
    let unmapped: Vec<&str> = countries
        .iter()
        .filter(|c| c.region.trim().is_empty())
        .map(|c| c.acronym.as_str())
        .collect();
    if !unmapped.is_empty() {
        return invalid(format!("countries without a region: {}", unmapped.join(", ")));
    }
    let mut region_index: BTreeMap<&str, usize> = BTreeMap::new();
    for c in countries.iter() {
        region_index.entry(c.region.as_str()).or_insert(0);
    }
    for (k, v) in region_index.values_mut().enumerate() {
        *v = k;
    }
    let regions: Vec<String> = region_index.keys().map(|s| s.to_string()).collect();
    let of: Vec<usize> = countries.iter().map(|c| region_index[c.region.as_str()]).collect();
    let m = regions.len();

    let mut trade = vec![vec![0.0; m]; m];
    for i in 0..n {
        for j in 0..i {
            let t = flows.get(i, j) + flows.get(j, i);
            let (a, b) = (of[i], of[j]);
            trade[a][b] += t;
            if a != b {
                trade[b][a] += t;
            }
        }
    }
    let totals: Vec<f64> = trade.iter().map(|row| row.iter().sum()).collect();
    let grand: f64 = totals.iter().sum();
    let percent = trade
        .iter()
        .zip(&totals)
        .map(|(row, &tot)| {
            row.iter()
                .map(|&v| if tot > 0.0 { 100.0 * v / tot } else { 0.0 })
                .collect()
        })
        .collect();
    let world_share = totals
        .iter()
        .map(|&t| if grand > 0.0 { 100.0 * t / grand } else { 0.0 })
        .collect();
    Ok(AreaShareTable {
        regions,
        percent,
        world_share,
    })
}
