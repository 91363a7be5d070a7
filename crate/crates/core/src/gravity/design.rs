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

//! Regressor assembly for the gravity equation.
//!
//! Rows are unordered pairs `(i, j)` with `i > j` in country-index order.
//! Country-level variables enter twice, once for each side (`_i` is the
//! higher-index country). Country fixed effects are per-country presence
//! counts: since pairs are unordered, the exporter and importer dummies of a
//! country collapse into one column taking values in {0, 1}. The first
//! country is the reference and a constant carries its level.

use std::collections::BTreeSet;
use std::fmt;

use nalgebra::DMatrix;

use crate::data::{dyad_pairs, CountryTable, DyadCovariates, DyadRecord};
use crate::error::{invalid, Error, Result};
use crate::linalg::greedy_independent_columns;
use crate::network::WeightedNetwork;

/// Named regressor groups. A group is kept or dropped as a whole during
/// model selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegressorBlock {
    Gdp,
    Dist,
    Area,
    Pop,
    Cpi,
    Exc,
    Rm,
    Ll,
    Cont,
    Ctg,
    Comc,
    Coml,
    Col,
    Ta,
    Comr,
}

impl RegressorBlock {
    pub const ALL: [RegressorBlock; 15] = [
        RegressorBlock::Gdp,
        RegressorBlock::Dist,
        RegressorBlock::Area,
        RegressorBlock::Pop,
        RegressorBlock::Cpi,
        RegressorBlock::Exc,
        RegressorBlock::Rm,
        RegressorBlock::Ll,
        RegressorBlock::Cont,
        RegressorBlock::Ctg,
        RegressorBlock::Comc,
        RegressorBlock::Coml,
        RegressorBlock::Col,
        RegressorBlock::Ta,
        RegressorBlock::Comr,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RegressorBlock::Gdp => "GDP",
            RegressorBlock::Dist => "DIST",
            RegressorBlock::Area => "AREA",
            RegressorBlock::Pop => "POP",
            RegressorBlock::Cpi => "CPI",
            RegressorBlock::Exc => "EXC",
            RegressorBlock::Rm => "RM",
            RegressorBlock::Ll => "LL",
            RegressorBlock::Cont => "CONT",
            RegressorBlock::Ctg => "CTG",
            RegressorBlock::Comc => "COMC",
            RegressorBlock::Coml => "COML",
            RegressorBlock::Col => "COL",
            RegressorBlock::Ta => "TA",
            RegressorBlock::Comr => "COMR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.label().eq_ignore_ascii_case(s.trim()))
    }

    fn pair_field(self, rec: &DyadRecord) -> Option<Option<f64>> {
        Some(match self {
            RegressorBlock::Exc => rec.exchange_rate,
            RegressorBlock::Ctg => rec.contiguity,
            RegressorBlock::Comc => rec.common_currency,
            RegressorBlock::Coml => rec.common_language,
            RegressorBlock::Col => rec.colony,
            RegressorBlock::Ta => rec.trade_agreement,
            RegressorBlock::Comr => rec.common_religion,
            _ => return None,
        })
    }

    fn is_dummy(self) -> bool {
        matches!(
            self,
            RegressorBlock::Ctg
                | RegressorBlock::Comc
                | RegressorBlock::Coml
                | RegressorBlock::Col
                | RegressorBlock::Ta
                | RegressorBlock::Comr
        )
    }
}

impl fmt::Display for RegressorBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnRole {
    /// Slope parameter belonging to a named block.
    Regressor {
        block: String,
    },
    /// Country presence count.
    FixedEffect {
        country: usize,
    },
    Constant,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignColumn {
    pub name: String,
    pub role: ColumnRole,
}

impl DesignColumn {
    pub fn regressor(name: impl Into<String>, block: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            role: ColumnRole::Regressor { block: block.into() },
        }
    }

    pub fn constant() -> Self {
        Self {
            name: "Constant".into(),
            role: ColumnRole::Constant,
        }
    }

    pub fn block(&self) -> Option<&str> {
        match &self.role {
            ColumnRole::Regressor { block } => Some(block),
            _ => None,
        }
    }

    pub fn is_fixed_effect(&self) -> bool {
        matches!(self.role, ColumnRole::FixedEffect { .. })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RejectedDyad {
    pub i: usize,
    pub j: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignOptions {
    pub blocks: Vec<RegressorBlock>,
    pub fixed_effects: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            blocks: RegressorBlock::ALL.to_vec(),
            fixed_effects: true,
        }
    }
}

/// Estimation-ready design: response, regressor matrix and bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateSet {
    n_countries: usize,
    dyads: Vec<(usize, usize)>,
    response: Vec<f64>,
    x: DMatrix<f64>,
    columns: Vec<DesignColumn>,
    rejected: Vec<RejectedDyad>,
    /// Columns removed because they were constant zero or a linear
    /// combination of the fixed effects and earlier columns.
    absorbed: Vec<String>,
}

impl CovariateSet {
    /// Wraps an arbitrary design. Used for custom specifications and tests.
    pub fn from_parts(
        n_countries: usize,
        dyads: Vec<(usize, usize)>,
        response: Vec<f64>,
        x: DMatrix<f64>,
        columns: Vec<DesignColumn>,
    ) -> Result<Self> {
        if x.nrows() != response.len() || dyads.len() != response.len() {
            return invalid("design rows, response and dyad list differ in length");
        }
        if x.ncols() != columns.len() {
            return invalid("design columns and column names differ in length");
        }
        if let Some(v) = response.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return invalid(format!("response value {v} is not a finite nonnegative number"));
        }
        Ok(Self {
            n_countries,
            dyads,
            response,
            x,
            columns,
            rejected: Vec::new(),
            absorbed: Vec::new(),
        })
    }

    pub fn n_countries(&self) -> usize {
        self.n_countries
    }

    pub fn nobs(&self) -> usize {
        self.response.len()
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn dyads(&self) -> &[(usize, usize)] {
        &self.dyads
    }

    pub fn response(&self) -> &[f64] {
        &self.response
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn columns(&self) -> &[DesignColumn] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn rejected(&self) -> &[RejectedDyad] {
        &self.rejected
    }

    pub fn absorbed(&self) -> &[String] {
        &self.absorbed
    }

    pub fn has_fixed_effects(&self) -> bool {
        self.columns.iter().any(DesignColumn::is_fixed_effect)
    }

    pub fn has_constant(&self) -> bool {
        self.columns.iter().any(|c| c.role == ColumnRole::Constant)
    }

    /// Distinct regressor blocks, in column order.
    pub fn blocks(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for b in self.columns.iter().filter_map(DesignColumn::block) {
            if !out.iter().any(|o| o == b) {
                out.push(b.to_string());
            }
        }
        out
    }

    pub fn block_width(&self, block: &str) -> usize {
        self.columns.iter().filter(|c| c.block() == Some(block)).count()
    }

    fn select_columns(&self, keep: &[usize]) -> Self {
        let x = self.x.select_columns(keep.iter());
        let columns = keep.iter().map(|&c| self.columns[c].clone()).collect();
        Self {
            x,
            columns,
            ..self.clone()
        }
    }

    /// Same design without the columns of `block`.
    pub fn without_block(&self, block: &str) -> Self {
        let keep: Vec<usize> = (0..self.ncols())
            .filter(|&c| self.columns[c].block() != Some(block))
            .collect();
        self.select_columns(&keep)
    }

    /// Same design without fixed-effect columns. A constant is added if the
    /// design had none.
    pub fn without_fixed_effects(&self) -> Self {
        let keep: Vec<usize> = (0..self.ncols())
            .filter(|&c| !self.columns[c].is_fixed_effect())
            .collect();
        let mut out = self.select_columns(&keep);
        if !out.has_constant() {
            out = out.with_column(DesignColumn::constant(), &vec![1.0; out.nobs()]);
        }
        out
    }

    /// Appends one column.
    pub fn with_column(&self, column: DesignColumn, values: &[f64]) -> Self {
        assert_eq!(values.len(), self.nobs(), "column length must equal the number of rows");
        let mut x = self.x.clone().insert_column(self.ncols(), 0.0);
        x.column_mut(self.ncols()).copy_from_slice(values);
        let mut columns = self.columns.clone();
        columns.push(column);
        Self {
            x,
            columns,
            ..self.clone()
        }
    }

    /// Rows where `mask` is true.
    pub fn subset_rows(&self, mask: &[bool]) -> Self {
        let rows: Vec<usize> = (0..self.nobs()).filter(|&r| mask[r]).collect();
        Self {
            x: self.x.select_rows(rows.iter()),
            dyads: rows.iter().map(|&r| self.dyads[r]).collect(),
            response: rows.iter().map(|&r| self.response[r]).collect(),
            ..self.clone()
        }
    }

    /// Replaces the response, keeping the regressors.
    pub fn with_response(&self, response: Vec<f64>) -> Result<Self> {
        if response.len() != self.nobs() {
            return invalid("response length differs from design rows");
        }
        Ok(Self {
            response,
            ..self.clone()
        })
    }

    /// Errors with the names of columns that are linear combinations of
    /// earlier ones.
    pub fn check_rank(&self) -> Result<()> {
        let (_, dependent) = greedy_independent_columns(&self.x);
        if dependent.is_empty() {
            Ok(())
        } else {
            Err(Error::RankDeficient(
                dependent.iter().map(|&c| self.columns[c].name.clone()).collect(),
            ))
        }
    }

    /// Drops dependent columns (recording them as absorbed).
    fn drop_dependent(mut self) -> Self {
        let (kept, dependent) = greedy_independent_columns(&self.x);
        if dependent.is_empty() {
            return self;
        }
        self.absorbed
            .extend(dependent.iter().map(|&c| self.columns[c].name.clone()));
        let absorbed = std::mem::take(&mut self.absorbed);
        let mut out = self.select_columns(&kept);
        out.absorbed = absorbed;
        out
    }
}

/// GDP-weighted average distance of each country to all others, with the
/// weights renormalized over the other countries.
pub fn compute_remoteness(countries: &CountryTable, dist: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n = countries.len();
    if n < 2 {
        return invalid("remoteness needs at least two countries");
    }
    if dist.nrows() != n || dist.ncols() != n {
        return Err(Error::IndexMismatch(format!(
            "distance matrix is {}x{}, country table has {n} entries",
            dist.nrows(),
            dist.ncols()
        )));
    }
    let gdp = countries.gdp();
    if let Some(c) = countries.iter().find(|c| !(c.gdp > 0.0)) {
        return invalid(format!("country {} has nonpositive GDP", c.acronym));
    }
    let total: f64 = gdp.iter().sum();
    Ok((0..n)
        .map(|i| {
            let others = total - gdp[i];
            (0..n).filter(|&j| j != i).map(|j| gdp[j] / others * dist[(i, j)]).sum()
        })
        .collect())
}

fn side_columns(label: &str, block: RegressorBlock) -> [DesignColumn; 2] {
    [
        DesignColumn::regressor(format!("{label}_i"), block.label()),
        DesignColumn::regressor(format!("{label}_j"), block.label()),
    ]
}

/// Builds the design for the pre-normalization weights of `response`.
///
/// Dyads with a missing or non-loggable value in any used column are
/// dropped and listed in [`CovariateSet::rejected`]. Columns that are
/// identically zero or collinear with the fixed effects (for instance the
/// second side of every country-level variable) are removed and listed in
/// [`CovariateSet::absorbed`].
pub fn build_design(
    countries: &CountryTable,
    dyads: &DyadCovariates,
    response: &WeightedNetwork,
    opts: &DesignOptions,
) -> Result<CovariateSet> {
    let n = countries.len();
    if response.n() != n {
        return Err(Error::IndexMismatch(format!(
            "network has {} nodes, country table has {n} entries",
            response.n()
        )));
    }
    let flows = response.unnormalized();
    let blocks: BTreeSet<RegressorBlock> = opts.blocks.iter().copied().collect();
    let uses = |b: RegressorBlock| blocks.contains(&b);

    let remoteness = if uses(RegressorBlock::Rm) {
        let gdp_ok = countries.iter().all(|c| c.gdp > 0.0);
        if gdp_ok {
            Some(compute_remoteness(countries, &dyads.distance_matrix(n))?)
        } else {
            // Remoteness weights need every GDP; missing ones void RM for all.
            Some(vec![f64::NAN; n])
        }
    } else {
        None
    };
    let continents: Vec<String> = {
        let set: BTreeSet<&str> = countries.iter().map(|c| c.continent.as_str()).collect();
        set.into_iter().skip(1).map(str::to_string).collect()
    };

    // Column layout.
    let mut columns: Vec<DesignColumn> = Vec::new();
    if opts.fixed_effects {
        columns.push(DesignColumn::constant());
        for c in 1..n {
            columns.push(DesignColumn {
                name: format!("C[{}]", countries.get(c).acronym),
                role: ColumnRole::FixedEffect { country: c },
            });
        }
    } else {
        columns.push(DesignColumn::constant());
    }
    for &block in &opts.blocks {
        match block {
            RegressorBlock::Gdp => columns.extend(side_columns("Log GDP", block)),
            RegressorBlock::Dist => columns.push(DesignColumn::regressor("Log DIST", block.label())),
            RegressorBlock::Area => columns.extend(side_columns("Log AREA", block)),
            RegressorBlock::Pop => columns.extend(side_columns("Log POP", block)),
            RegressorBlock::Cpi => columns.extend(side_columns("CPI", block)),
            RegressorBlock::Rm => columns.extend(side_columns("RM", block)),
            RegressorBlock::Ll => columns.extend(side_columns("LL", block)),
            RegressorBlock::Cont => {
                for side in ["i", "j"] {
                    for cont in &continents {
                        columns.push(DesignColumn::regressor(format!("CONT_{side}[{cont}]"), block.label()));
                    }
                }
            }
            _ => columns.push(DesignColumn::regressor(block.label(), block.label())),
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut kept_dyads = Vec::new();
    let mut y = Vec::new();
    let mut rejected = Vec::new();
    for (i, j) in dyad_pairs(n) {
        match dyad_row(countries, dyads, &opts.blocks, &continents, remoteness.as_deref(), i, j) {
            Ok(mut row) => {
                let mut full = Vec::with_capacity(columns.len());
                full.push(1.0);
                if opts.fixed_effects {
                    full.extend((1..n).map(|c| f64::from(u8::from(c == i || c == j))));
                }
                full.append(&mut row);
                rows.push(full);
                kept_dyads.push((i, j));
                y.push(flows[(i, j)]);
            }
            Err(reason) => rejected.push(RejectedDyad { i, j, reason }),
        }
    }
    if rows.is_empty() {
        return invalid("no dyad has complete covariates");
    }
    let x = DMatrix::from_fn(rows.len(), columns.len(), |r, c| rows[r][c]);
    let mut set = CovariateSet::from_parts(n, kept_dyads, y, x, columns)?;
    set.rejected = rejected;
    Ok(set.drop_dependent())
}

fn log_positive(value: f64, what: &str, who: &str) -> std::result::Result<f64, String> {
    if value > 0.0 && value.is_finite() {
        Ok(value.ln())
    } else if value.is_nan() {
        Err(format!("missing {what} for {who}"))
    } else {
        Err(format!("nonpositive {what} ({value}) for {who}"))
    }
}

fn dyad_row(
    countries: &CountryTable,
    dyads: &DyadCovariates,
    blocks: &[RegressorBlock],
    continents: &[String],
    remoteness: Option<&[f64]>,
    i: usize,
    j: usize,
) -> std::result::Result<Vec<f64>, String> {
    let (ci, cj) = (countries.get(i), countries.get(j));
    let record = dyads.get(i, j);
    let need_record = || record.ok_or_else(|| format!("no covariate record for pair {}-{}", ci.acronym, cj.acronym));
    let mut row = Vec::new();
    for &block in blocks {
        match block {
            RegressorBlock::Gdp => {
                row.push(log_positive(ci.gdp, "GDP", &ci.acronym)?);
                row.push(log_positive(cj.gdp, "GDP", &cj.acronym)?);
            }
            RegressorBlock::Area => {
                row.push(log_positive(ci.area_km2, "area", &ci.acronym)?);
                row.push(log_positive(cj.area_km2, "area", &cj.acronym)?);
            }
            RegressorBlock::Pop => {
                row.push(log_positive(ci.population, "population", &ci.acronym)?);
                row.push(log_positive(cj.population, "population", &cj.acronym)?);
            }
            RegressorBlock::Dist => {
                let d = need_record()?.distance_km.unwrap_or(f64::NAN);
                row.push(log_positive(d, "distance", &format!("{}-{}", ci.acronym, cj.acronym))?);
            }
            RegressorBlock::Cpi => {
                for c in [ci, cj] {
                    let v = c.cpi.filter(|v| v.is_finite());
                    row.push(v.ok_or_else(|| format!("missing CPI for {}", c.acronym))?);
                }
            }
            RegressorBlock::Rm => {
                let rm = remoteness.expect("remoteness computed when RM is used");
                for (idx, c) in [(i, ci), (j, cj)] {
                    if !rm[idx].is_finite() {
                        return Err(format!("remoteness undefined for {}", c.acronym));
                    }
                    row.push(rm[idx]);
                }
            }
            RegressorBlock::Ll => {
                row.push(f64::from(u8::from(ci.landlocked)));
                row.push(f64::from(u8::from(cj.landlocked)));
            }
            RegressorBlock::Cont => {
                for c in [ci, cj] {
                    row.extend(continents.iter().map(|k| f64::from(u8::from(&c.continent == k))));
                }
            }
            _ => {
                let rec = need_record()?;
                let v = block
                    .pair_field(rec)
                    .expect("pair-level block")
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| format!("missing {} for pair {}-{}", block.label(), ci.acronym, cj.acronym))?;
                if block.is_dummy() && v != 0.0 && v != 1.0 {
                    return Err(format!(
                        "{} = {v} is not a 0/1 dummy for pair {}-{}",
                        block.label(),
                        ci.acronym,
                        cj.acronym
                    ));
                }
                row.push(v);
            }
        }
    }
    Ok(row)
}
