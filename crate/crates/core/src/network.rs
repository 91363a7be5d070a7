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

//! Directed flows, symmetric normalized weight networks and their binary
//! projection.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::gravity::GravityFit;

/// Exports from row country to column country for one year.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedFlowMatrix {
    values: DMatrix<f64>,
    year: i32,
}

impl DirectedFlowMatrix {
    pub fn new(values: DMatrix<f64>, year: i32) -> Result<Self> {
        if !values.is_square() {
            return invalid("flow matrix must be square");
        }
        for i in 0..values.nrows() {
            for j in 0..values.ncols() {
                let v = values[(i, j)];
                if !v.is_finite() || v < 0.0 {
                    return invalid(format!("flow ({i}, {j}) = {v} is not a finite nonnegative value"));
                }
                if i == j && v != 0.0 {
                    return invalid(format!("flow matrix diagonal entry {i} is nonzero"));
                }
            }
        }
        Ok(Self { values, year })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn get(&self, exporter: usize, importer: usize) -> f64 {
        self.values[(exporter, importer)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetworkKind {
    Original,
    Residual,
    Mst,
}

impl NetworkKind {
    pub fn label(self) -> &'static str {
        match self {
            NetworkKind::Original => "original",
            NetworkKind::Residual => "residual",
            NetworkKind::Mst => "mst",
        }
    }
}

impl fmt::Display for NetworkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SymmetrizeMode {
    #[default]
    Arithmetic,
    Geometric,
}

/// How zero flows are handled when the residual network is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ZeroMode {
    #[default]
    Preserve,
    /// Also zero links whose estimated zero-stage probability exceeds the
    /// given cutoff.
    ZipPrune(f64),
}

/// Metadata attached to a constructed network.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NetworkFlags {
    /// All entries were zero; no normalization took place.
    pub degenerate: bool,
    /// Cutoff and number of links removed in `ZeroMode::ZipPrune`.
    pub zip_pruned: Option<(f64, usize)>,
    /// Positive links without a residual (their dyad was dropped from
    /// estimation); they carry weight 0.
    pub unestimated_links: usize,
}

/// Symmetric weight matrix in `[0, 1]` with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedNetwork {
    weights: DMatrix<f64>,
    kind: NetworkKind,
    normalizer: f64,
    flags: NetworkFlags,
}

impl WeightedNetwork {
    /// Validates a symmetric nonnegative matrix and divides it by its maximum.
    pub fn from_unnormalized(raw: DMatrix<f64>, kind: NetworkKind) -> Result<Self> {
        if !raw.is_square() {
            return invalid("weight matrix must be square");
        }
        let n = raw.nrows();
        for i in 0..n {
            if raw[(i, i)] != 0.0 {
                return invalid(format!("diagonal entry {i} is nonzero"));
            }
            for j in 0..i {
                let (a, b) = (raw[(i, j)], raw[(j, i)]);
                if !a.is_finite() || a < 0.0 {
                    return invalid(format!("weight ({i}, {j}) = {a} is not a finite nonnegative value"));
                }
                if a != b {
                    return invalid(format!("weight matrix is not symmetric at ({i}, {j})"));
                }
            }
        }
        Ok(Self::normalize(raw, kind))
    }

    fn normalize(mut raw: DMatrix<f64>, kind: NetworkKind) -> Self {
        let max = raw.iter().copied().fold(0.0_f64, f64::max);
        let mut flags = NetworkFlags::default();
        if max > 0.0 {
            raw.iter_mut().for_each(|w| *w /= max);
        } else {
            flags.degenerate = true;
        }
        Self {
            weights: raw,
            kind,
            normalizer: max,
            flags,
        }
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    /// Maximum of the pre-normalization matrix (0 for a degenerate network).
    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn flags(&self) -> &NetworkFlags {
        &self.flags
    }

    pub fn is_degenerate(&self) -> bool {
        self.flags.degenerate
    }

    /// Weights in the original (pre-normalization) units.
    pub fn unnormalized(&self) -> DMatrix<f64> {
        if self.flags.degenerate {
            self.weights.clone()
        } else {
            &self.weights * self.normalizer
        }
    }

    /// Positive links `(i, j, w)` with `i > j`.
    pub fn links(&self) -> Vec<(usize, usize, f64)> {
        crate::data::dyad_pairs(self.n())
            .filter_map(|(i, j)| {
                let w = self.weights[(i, j)];
                (w > 0.0).then_some((i, j, w))
            })
            .collect()
    }
}

/// Undirected projection of a directed flow matrix, normalized by its maximum.
pub fn symmetrize(flows: &DirectedFlowMatrix, mode: SymmetrizeMode) -> WeightedNetwork {
    let v = flows.values();
    let n = flows.n();
    let raw = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            return 0.0;
        }
        let (a, b) = (v[(i, j)], v[(j, i)]);
        match mode {
            SymmetrizeMode::Arithmetic => 0.5 * (a + b),
            SymmetrizeMode::Geometric => (a * b).sqrt(),
        }
    });
    WeightedNetwork::normalize(raw, NetworkKind::Original)
}

/// Binary view `a_ij = (w_ij > threshold)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjacencyView {
    n: usize,
    bits: Vec<bool>,
    threshold: f64,
}

impl AdjacencyView {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.n + j]
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count() / 2
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.bits[i * self.n + j])
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).count()
    }
}

pub fn adjacency(net: &WeightedNetwork, threshold: f64) -> Result<AdjacencyView> {
    if !(threshold >= 0.0) {
        return invalid(format!("adjacency threshold must be nonnegative, got {threshold}"));
    }
    let n = net.n();
    let mut bits = vec![false; n * n];
    for i in 0..n {
        for j in 0..n {
            bits[i * n + j] = i != j && net.get(i, j) > threshold;
        }
    }
    Ok(AdjacencyView { n, bits, threshold })
}

/// Fraction of the `n (n - 1) / 2` possible links that carry positive weight.
pub fn density(net: &WeightedNetwork) -> Result<f64> {
    let n = net.n();
    if n < 2 {
        return invalid("density needs at least two nodes");
    }
    let positive = net.links().len();
    Ok(positive as f64 / (n * (n - 1) / 2) as f64)
}

/// Builds the residual network `e_ij = eta_ij` from a gravity fit.
///
/// Zero flows stay zero. In `ZipPrune(p)` mode, links whose zero-stage
/// probability exceeds `p` are removed as well. Positive links whose dyad was
/// not estimated get weight 0 and are counted in the flags.
pub fn assemble_residual_network(
    fit: &GravityFit,
    net: &WeightedNetwork,
    zero_mode: ZeroMode,
) -> Result<WeightedNetwork> {
    let n = net.n();
    if fit.n_countries() != n {
        return Err(Error::IndexMismatch(format!(
            "fit covers {} countries, network has {n}",
            fit.n_countries()
        )));
    }
    if let ZeroMode::ZipPrune(p) = zero_mode {
        if !(0.0..=1.0).contains(&p) {
            return invalid(format!("zip_prune probability must lie in [0, 1], got {p}"));
        }
    }
    let mut raw = DMatrix::zeros(n, n);
    let mut estimated = DMatrix::from_element(n, n, false);
    let mut pruned = 0;
    let p_zero = fit.zero_stage().map(|z| z.p_zero.as_slice());
    for (row, &(i, j)) in fit.dyads().iter().enumerate() {
        if i >= n || j >= n {
            return Err(Error::IndexMismatch(format!(
                "dyad ({i}, {j}) outside a {n}-country network"
            )));
        }
        estimated[(i, j)] = true;
        estimated[(j, i)] = true;
        if net.get(i, j) <= 0.0 {
            continue;
        }
        if let (ZeroMode::ZipPrune(cut), Some(pz)) = (zero_mode, p_zero) {
            if pz[row] > cut {
                pruned += 1;
                continue;
            }
        }
        let e = fit.residuals()[row];
        raw[(i, j)] = e;
        raw[(j, i)] = e;
    }
    let unestimated = net.links().iter().filter(|&&(i, j, _)| !estimated[(i, j)]).count();
    let mut out = WeightedNetwork::normalize(raw, NetworkKind::Residual);
    out.flags.unestimated_links = unestimated;
    if let ZeroMode::ZipPrune(cut) = zero_mode {
        out.flags.zip_pruned = Some((cut, pruned));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flows(n: usize, entries: &[(usize, usize, f64)]) -> DirectedFlowMatrix {
        let mut m = DMatrix::zeros(n, n);
        for &(i, j, v) in entries {
            m[(i, j)] = v;
        }
        DirectedFlowMatrix::new(m, 2000).unwrap()
    }

    #[test]
    fn arithmetic_average() {
        let net = symmetrize(&flows(3, &[(0, 1, 4.0), (1, 0, 2.0)]), SymmetrizeMode::Arithmetic);
        assert_eq!(net.normalizer(), 3.0);
        assert_eq!(net.get(0, 1), 1.0);
        assert_eq!(net.get(1, 0), 1.0);
        assert_eq!(net.kind(), NetworkKind::Original);
    }

    #[test]
    fn geometric_average() {
        let net = symmetrize(&flows(2, &[(0, 1, 4.0), (1, 0, 2.0)]), SymmetrizeMode::Geometric);
        assert!((net.normalizer() - 8f64.sqrt()).abs() < 1e-15);
        assert!((net.normalizer() - 2.8284).abs() < 1e-4);
    }

    #[test]
    fn all_zero_is_flagged_not_error() {
        let net = symmetrize(&flows(3, &[]), SymmetrizeMode::Arithmetic);
        assert!(net.is_degenerate());
        assert_eq!(net.normalizer(), 0.0);
        assert!(net.weights().iter().all(|&w| w == 0.0));
    }

    #[test]
    fn invalid_flows_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = 1.0;
        assert!(DirectedFlowMatrix::new(m, 2000).is_err());
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = -1.0;
        assert!(DirectedFlowMatrix::new(m, 2000).is_err());
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(DirectedFlowMatrix::new(m, 2000).is_err());
    }

    fn triangle() -> WeightedNetwork {
        let mut m = DMatrix::zeros(3, 3);
        for &(i, j, w) in &[(0, 1, 0.2), (1, 2, 0.5), (0, 2, 1.0)] {
            m[(i, j)] = w;
            m[(j, i)] = w;
        }
        WeightedNetwork::from_unnormalized(m, NetworkKind::Original).unwrap()
    }

    #[test]
    fn adjacency_thresholds() {
        let net = triangle();
        assert_eq!(adjacency(&net, 0.0).unwrap().edge_count(), 3);
        assert_eq!(adjacency(&net, 0.3).unwrap().edge_count(), 2);
        assert!(adjacency(&net, -0.1).is_err());
        let empty = WeightedNetwork::from_unnormalized(DMatrix::zeros(4, 4), NetworkKind::Original).unwrap();
        assert_eq!(adjacency(&empty, 0.0).unwrap().edge_count(), 0);
    }

    #[test]
    fn density_cases() {
        assert_eq!(density(&triangle()).unwrap(), 1.0);
        let empty = WeightedNetwork::from_unnormalized(DMatrix::zeros(4, 4), NetworkKind::Original).unwrap();
        assert_eq!(density(&empty).unwrap(), 0.0);
        let single = WeightedNetwork::from_unnormalized(DMatrix::zeros(1, 1), NetworkKind::Original).unwrap();
        assert!(density(&single).is_err());
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        assert!(WeightedNetwork::from_unnormalized(m, NetworkKind::Original).is_err());
    }
}
