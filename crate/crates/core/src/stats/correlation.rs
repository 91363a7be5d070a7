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

//! Pearson / Spearman correlations, the cross-network correlation table and
//! ranking comparisons.

use std::fmt::Write;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::pearson;
use crate::error::{invalid, Error, Result};
use crate::topology::{NodeStatistics, Statistic};

/// Level below which a coefficient counts as significant.
pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorrMethod {
    Pearson,
    /// Pearson on midranks.
    Spearman,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationEntry {
    pub coefficient: f64,
    pub p_value: f64,
    pub significant: bool,
}

/// Midranks (average rank for ties), 1-based, ascending.
pub fn midranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && x[idx[end]] == x[idx[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Coefficient with a two-sided t-test p-value on `n - 2` degrees of freedom.
pub fn correlation(x: &[f64], y: &[f64], method: CorrMethod) -> Result<CorrelationEntry> {
    if x.len() != y.len() {
        return invalid(format!(
            "correlation inputs differ in length ({} vs {})",
            x.len(),
            y.len()
        ));
    }
    let n = x.len();
    if n < 3 {
        return invalid(format!("correlation needs at least 3 observations, got {n}"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return invalid("correlation inputs must be finite");
    }
    let r = match method {
        CorrMethod::Pearson => pearson(x, y),
        CorrMethod::Spearman => pearson(&midranks(x), &midranks(y)),
    }
    .ok_or_else(|| Error::InvalidInput("correlation input has zero variance".into()))?;
    let p_value = t_test_p(r, n);
    Ok(CorrelationEntry {
        coefficient: r,
        p_value,
        significant: p_value < SIGNIFICANCE_LEVEL,
    })
}

fn t_test_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df > 0");
    2.0 * dist.cdf(-t.abs())
}

/// Pairwise Pearson correlations among the weighted statistics of both
/// networks and per-capita GDP.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    /// Variable labels such as `W:NS`, `E:ANNS`, `pcGDP`.
    pub labels: Vec<String>,
    /// Full symmetric matrix of entries.
    pub entries: Vec<Vec<CorrelationEntry>>,
    pub n: usize,
}

pub const TABLE_STATISTICS: [Statistic; 4] = [Statistic::Ns, Statistic::Anns, Statistic::Wcc, Statistic::Rwbc];

impl CorrelationTable {
    pub fn get(&self, a: &str, b: &str) -> Option<&CorrelationEntry> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(&self.entries[i][j])
    }

    /// Long-form CSV: one row per unordered variable pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row,column,pearson,p_value,significant_5pct\n");
        for i in 0..self.labels.len() {
            for j in i + 1..self.labels.len() {
                let e = &self.entries[i][j];
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.labels[i], self.labels[j], e.coefficient, e.p_value, e.significant
                );
            }
        }
        out
    }

    /// Upper-triangular text layout; insignificant coefficients in brackets.
    pub fn to_text(&self) -> String {
        let k = self.labels.len();
        let mut out = String::new();
        let _ = write!(out, "{:<8}", "");
        for l in &self.labels[1..] {
            let _ = write!(out, "{l:>11}");
        }
        out.push('\n');
        for i in 0..k - 1 {
            let _ = write!(out, "{:<8}", self.labels[i]);
            for j in 1..k {
                if j <= i {
                    let _ = write!(out, "{:>11}", "-");
                } else {
                    let e = &self.entries[i][j];
                    let cell = if e.significant {
                        format!("{:.4}", e.coefficient)
                    } else {
                        format!("[{:.4}]", e.coefficient)
                    };
                    let _ = write!(out, "{cell:>11}");
                }
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "Pearson coefficients, n = {}. Brackets: not significant at 5%.",
            self.n
        );
        out
    }
}

pub fn correlation_table(
    stats_w: &NodeStatistics,
    stats_e: &NodeStatistics,
    pcgdp: &[f64],
) -> Result<CorrelationTable> {
    let n = stats_w.len();
    if stats_e.len() != n || pcgdp.len() != n {
        return Err(Error::IndexMismatch(format!(
            "statistics cover {} / {} countries, pcGDP {}",
            n,
            stats_e.len(),
            pcgdp.len()
        )));
    }
    let mut labels = Vec::new();
    let mut series: Vec<Vec<f64>> = Vec::new();
    for (tag, stats) in [("W", stats_w), ("E", stats_e)] {
        for st in TABLE_STATISTICS {
            labels.push(format!("{tag}:{}", st.label()));
            series.push(stats.values(st));
        }
    }
    labels.push("pcGDP".to_string());
    series.push(pcgdp.to_vec());

    let k = series.len();
    let diag = CorrelationEntry {
        coefficient: 1.0,
        p_value: 0.0,
        significant: true,
    };
    let mut entries = vec![vec![diag; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let e = correlation(&series[i], &series[j], CorrMethod::Pearson)
                .map_err(|e| Error::InvalidInput(format!("{} vs {}: {e}", labels[i], labels[j])))?;
            entries[i][j] = e;
            entries[j][i] = e;
        }
    }
    Ok(CorrelationTable { labels, entries, n })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mover {
    pub node: usize,
    pub rank_original: usize,
    pub rank_residual: usize,
    /// `rank_original - rank_residual`; positive means the node climbs.
    pub displacement: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankComparison {
    pub statistic: Statistic,
    pub spearman: CorrelationEntry,
    pub climbers: Vec<Mover>,
    pub fallers: Vec<Mover>,
}

/// Descending ordinal ranks (1 = largest), ties by index.
fn descending_ranks(x: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; x.len()];
    for (pos, &i) in idx.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// Spearman correlation between the rankings induced by one statistic on
/// the two networks, with the `k` largest rank displacements each way.
pub fn rank_comparison(
    stats_w: &NodeStatistics,
    stats_e: &NodeStatistics,
    statistic: Statistic,
    k: usize,
) -> Result<RankComparison> {
    let a = stats_w.values(statistic);
    let b = stats_e.values(statistic);
    if a.len() != b.len() {
        return Err(Error::IndexMismatch(format!("{} vs {} countries", a.len(), b.len())));
    }
    let spearman = correlation(&a, &b, CorrMethod::Spearman)?;
    let (ra, rb) = (descending_ranks(&a), descending_ranks(&b));
    let movers: Vec<Mover> = (0..a.len())
        .map(|i| Mover {
            node: i,
            rank_original: ra[i],
            rank_residual: rb[i],
            displacement: ra[i] as i64 - rb[i] as i64,
        })
        .filter(|m| m.displacement != 0)
        .collect();
    let mut climbers: Vec<Mover> = movers.iter().filter(|m| m.displacement > 0).cloned().collect();
    climbers.sort_by(|x, y| y.displacement.cmp(&x.displacement).then(x.node.cmp(&y.node)));
    climbers.truncate(k);
    let mut fallers: Vec<Mover> = movers.into_iter().filter(|m| m.displacement < 0).collect();
    fallers.sort_by(|x, y| x.displacement.cmp(&y.displacement).then(x.node.cmp(&y.node)));
    fallers.truncate(k);
    Ok(RankComparison {
        statistic,
        spearman,
        climbers,
        fallers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_and_negated() {
        let x = [1.0, 4.0, 2.0, 8.0, 5.0];
        let c = correlation(&x, &x, CorrMethod::Pearson).unwrap();
        assert!((c.coefficient - 1.0).abs() < 1e-15 && c.p_value < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let c = correlation(&x, &neg, CorrMethod::Spearman).unwrap();
        assert!((c.coefficient + 1.0).abs() < 1e-15 && c.p_value < 1e-12);
    }

    #[test]
    fn zero_variance_and_shape_errors() {
        assert!(correlation(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0], CorrMethod::Pearson).is_err());
        assert!(correlation(&[1.0, 2.0], &[1.0, 2.0], CorrMethod::Pearson).is_err());
        assert!(correlation(&[1.0, 2.0, 3.0], &[1.0, 2.0], CorrMethod::Pearson).is_err());
    }

    #[test]
    fn midrank_ties() {
        assert_eq!(midranks(&[10.0, 20.0, 10.0, 30.0]), vec![1.5, 3.0, 1.5, 4.0]);
    }

    #[test]
    fn t_test_reference_value() {
        // r = 0.5, n = 12: t = 0.5 sqrt(10 / 0.75) = 1.825742, two-sided p = 0.0978546
        let p = t_test_p(0.5, 12);
        assert!((p - 0.097_854_614_257_812).abs() < 1e-10, "{p}");
    }
}
