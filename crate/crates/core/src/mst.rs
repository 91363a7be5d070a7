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

//! Minimal spanning trees on the distance `d = sqrt(2 (1 - w))`.

use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::network::WeightedNetwork;

/// Tree metric and report weight, for reports.
pub const DISTANCE_DEFINITION: &str =
    "d_ij = sqrt(2 (1 - w_ij)); Kruskal minimum spanning forest; report weight 1 - d_ij / max tree d";

/// Which pairs are candidate tree edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeUniverse {
    /// Only pairs with positive weight (distance below `sqrt(2)`).
    PositiveLinks,
    /// Every pair, including non-trading ones at distance `sqrt(2)`.
    #[default]
    AllPairs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
    /// Distance divided by the largest tree-edge distance.
    pub rescaled_distance: f64,
    /// `1 - rescaled_distance`.
    pub report_weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    pub n: usize,
    pub edges: Vec<TreeEdge>,
    pub total_distance: f64,
    pub component_count: usize,
    /// Largest tree-edge distance, used to rescale (0 if no edges).
    pub rescale_factor: f64,
}

impl SpanningTree {
    /// Report weights as a symmetric matrix.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for e in &self.edges {
            m[(e.a, e.b)] = e.report_weight;
            m[(e.b, e.a)] = e.report_weight;
        }
        m
    }
}

/// `d_ij = sqrt(2 (1 - w_ij))` off the diagonal, 0 on it.
pub fn mantegna_distance(weights: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !weights.is_square() {
        return invalid("weight matrix must be square");
    }
    if let Some(bad) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
        return invalid(format!("weight {bad} outside [0, 1]"));
    }
    let n = weights.nrows();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            (2.0 * (1.0 - weights[(i, j)])).sqrt()
        }
    }))
}

pub fn network_distance(net: &WeightedNetwork) -> DMatrix<f64> {
    mantegna_distance(net.weights()).expect("network weights lie in [0, 1]")
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false if `a` and `b` were already connected.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Kruskal's algorithm over a symmetric distance matrix.
///
/// Candidates are scanned by `(distance, min endpoint, max endpoint)`.
/// Disconnected inputs yield a spanning forest; `component_count` reports
/// how many trees it has.
pub fn kruskal_mst(distances: &DMatrix<f64>, universe: EdgeUniverse) -> Result<SpanningTree> {
    if !distances.is_square() {
        return invalid("distance matrix must be square");
    }
    let n = distances.nrows();
    if n < 2 {
        return invalid("spanning tree needs at least two nodes");
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let d = distances[(a, b)];
            if d.is_nan() {
                return invalid(format!("distance ({a}, {b}) is NaN"));
            }
            if universe == EdgeUniverse::PositiveLinks && d >= SQRT_2 {
                continue;
            }
            candidates.push((d, a, b));
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut dsu = DisjointSet::new(n);
    let mut chosen = Vec::with_capacity(n - 1);
    for (d, a, b) in candidates {
        if dsu.union(a, b) {
            chosen.push((a, b, d));
            if chosen.len() == n - 1 {
                break;
            }
        }
    }
    let total_distance = chosen.iter().map(|e| e.2).sum();
    let rescale_factor = chosen.iter().map(|e| e.2).fold(0.0_f64, f64::max);
    let edges = chosen
        .into_iter()
        .map(|(a, b, distance)| {
            let rescaled_distance = if rescale_factor > 0.0 {
                distance / rescale_factor
            } else {
                0.0
            };
            TreeEdge {
                a,
                b,
                distance,
                rescaled_distance,
                report_weight: 1.0 - rescaled_distance,
            }
        })
        .collect::<Vec<_>>();
    Ok(SpanningTree {
        n,
        component_count: n - edges.len(),
        edges,
        total_distance,
        rescale_factor,
    })
}

pub fn network_mst(net: &WeightedNetwork, universe: EdgeUniverse) -> Result<SpanningTree> {
    kruskal_mst(&network_distance(net), universe)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_endpoints() {
        let w = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.5, 0.0]);
        let d = mantegna_distance(&w).unwrap();
        assert_eq!(d[(0, 1)], 0.0);
        assert_eq!(d[(0, 2)], SQRT_2);
        assert_eq!(d[(1, 2)], 1.0);
        assert_eq!(d[(0, 0)], 0.0);
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, 0.0]);
        assert!(mantegna_distance(&bad).is_err());
    }

    #[test]
    fn tree_input_is_reproduced() {
        // path 0-1-2-3 with positive weights, rest zero
        let mut w = DMatrix::zeros(4, 4);
        for &(a, b, v) in &[(0, 1, 0.9), (1, 2, 0.4), (2, 3, 0.7)] {
            w[(a, b)] = v;
            w[(b, a)] = v;
        }
        let tree = kruskal_mst(&mantegna_distance(&w).unwrap(), EdgeUniverse::PositiveLinks).unwrap();
        let mut pairs: Vec<_> = tree.edges.iter().map(|e| (e.a, e.b)).collect();
        pairs.sort();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
        assert_eq!(tree.component_count, 1);
        // largest tree distance rescales to 1, so its report weight is 0
        let heaviest = tree.edges.iter().find(|e| (e.a, e.b) == (1, 2)).unwrap();
        assert_eq!(heaviest.report_weight, 0.0);
    }

    #[test]
    fn disconnected_forest() {
        let mut w = DMatrix::zeros(4, 4);
        for &(a, b) in &[(0, 1), (2, 3)] {
            w[(a, b)] = 0.5;
            w[(b, a)] = 0.5;
        }
        let tree = kruskal_mst(&mantegna_distance(&w).unwrap(), EdgeUniverse::PositiveLinks).unwrap();
        assert_eq!(tree.edges.len(), 2);
        assert_eq!(tree.component_count, 2);
        // the complete universe bridges the gap at distance sqrt(2)
        let full = kruskal_mst(&mantegna_distance(&w).unwrap(), EdgeUniverse::AllPairs).unwrap();
        assert_eq!(full.edges.len(), 3);
        assert_eq!(full.component_count, 1);
    }

    #[test]
    fn ties_broken_by_index() {
        let w = DMatrix::from_fn(4, 4, |i, j| if i == j { 0.0 } else { 0.5 });
        let tree = kruskal_mst(&mantegna_distance(&w).unwrap(), EdgeUniverse::AllPairs).unwrap();
        let pairs: Vec<_> = tree.edges.iter().map(|e| (e.a, e.b)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (0, 3)]);
    }
}
