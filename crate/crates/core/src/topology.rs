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

//! Node statistics on a weighted network.
//!
//! All statistics use the binary projection at threshold 0 for degrees and
//! neighbourhoods. Clustering follows the cube-root form
//! `wcc_i = ((W^[1/3])^3)_ii / (nd_i (nd_i - 1))`, where `W^[1/3]` takes
//! the cube root entrywise. Betweenness is the current-flow (random-walk)
//! variant evaluated on the largest connected component.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::network::{NetworkKind, WeightedNetwork};

/// How RWBC values are scaled, for reports.
pub const RWBC_NORMALIZATION: &str = "current-flow betweenness on the largest connected component: \
current through node i summed over unordered source/target pairs not containing i (unit injection, \
conductances w_ij), divided by (m-1)(m-2)/2 with m the component size; 0 outside that component";

/// Clustering definitions, for reports.
pub const CLUSTERING_DEFINITION: &str = "BCC_i = (A^3)_ii / (k_i (k_i - 1)); \
WCC_i = ((W^(1/3))^3)_ii / (k_i (k_i - 1)); 0 and flagged undefined when k_i < 2";

/// Per-node values plus a flag for nodes where the statistic is undefined
/// (the value is then 0).
#[derive(Debug, Clone, PartialEq)]
pub struct FlaggedValues {
    pub values: Vec<f64>,
    pub undefined: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Statistic {
    Nd,
    Ns,
    Anns,
    Bcc,
    Wcc,
    Rwbc,
}

impl Statistic {
    pub const ALL: [Statistic; 6] = [
        Statistic::Nd,
        Statistic::Ns,
        Statistic::Anns,
        Statistic::Bcc,
        Statistic::Wcc,
        Statistic::Rwbc,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Statistic::Nd => "ND",
            Statistic::Ns => "NS",
            Statistic::Anns => "ANNS",
            Statistic::Bcc => "BCC",
            Statistic::Wcc => "WCC",
            Statistic::Rwbc => "RWBC",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|st| st.label().eq_ignore_ascii_case(s))
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusteringMode {
    Binary,
    Weighted,
}

/// Current-flow betweenness on the largest component.
#[derive(Debug, Clone, PartialEq)]
pub struct Betweenness {
    /// 0 for nodes outside the largest component.
    pub values: Vec<f64>,
    /// Connected component sizes, largest first.
    pub component_sizes: Vec<usize>,
    pub in_giant: Vec<bool>,
}

/// The full node-statistics battery for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStatistics {
    pub network_kind: NetworkKind,
    pub nd: Vec<usize>,
    pub ns: Vec<f64>,
    pub anns: Vec<f64>,
    pub bcc: Vec<f64>,
    pub wcc: Vec<f64>,
    pub rwbc: Vec<f64>,
    /// Isolated nodes (ANNS undefined).
    pub anns_undefined: Vec<bool>,
    /// Nodes with fewer than two neighbours (clustering undefined).
    pub clustering_undefined: Vec<bool>,
    pub component_sizes: Vec<usize>,
}

impl NodeStatistics {
    pub fn len(&self) -> usize {
        self.nd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nd.is_empty()
    }

    pub fn values(&self, stat: Statistic) -> Vec<f64> {
        match stat {
            Statistic::Nd => self.nd.iter().map(|&d| d as f64).collect(),
            Statistic::Ns => self.ns.clone(),
            Statistic::Anns => self.anns.clone(),
            Statistic::Bcc => self.bcc.clone(),
            Statistic::Wcc => self.wcc.clone(),
            Statistic::Rwbc => self.rwbc.clone(),
        }
    }
}

pub fn node_degree(net: &WeightedNetwork) -> Vec<usize> {
    let w = net.weights();
    (0..net.n())
        .map(|i| (0..net.n()).filter(|&j| j != i && w[(i, j)] > 0.0).count())
        .collect()
}

pub fn node_strength(net: &WeightedNetwork) -> Vec<f64> {
    strength_of(net.weights())
}

fn strength_of(w: &DMatrix<f64>) -> Vec<f64> {
    (0..w.nrows()).map(|i| w.row(i).sum()).collect()
}

/// Mean strength of each node's neighbours.
pub fn avg_nn_strength(net: &WeightedNetwork) -> FlaggedValues {
    let w = net.weights();
    let ns = node_strength(net);
    let n = net.n();
    let mut values = vec![0.0; n];
    let mut undefined = vec![false; n];
    for i in 0..n {
        let (mut sum, mut deg) = (0.0, 0usize);
        for j in 0..n {
            if j != i && w[(i, j)] > 0.0 {
                sum += ns[j];
                deg += 1;
            }
        }
        if deg == 0 {
            undefined[i] = true;
        } else {
            values[i] = sum / deg as f64;
        }
    }
    FlaggedValues { values, undefined }
}

pub fn clustering(net: &WeightedNetwork, mode: ClusteringMode) -> FlaggedValues {
    let w = net.weights();
    let n = net.n();
    let z = DMatrix::from_fn(n, n, |i, j| {
        let v = w[(i, j)];
        match mode {
            _ if i == j || v <= 0.0 => 0.0,
            ClusteringMode::Binary => 1.0,
            ClusteringMode::Weighted => v.cbrt(),
        }
    });
    let z2 = &z * &z;
    let nd = node_degree(net);
    let mut values = vec![0.0; n];
    let mut undefined = vec![false; n];
    for i in 0..n {
        if nd[i] < 2 {
            undefined[i] = true;
            continue;
        }
        let cube_diag: f64 = (0..n).map(|k| z2[(i, k)] * z[(k, i)]).sum();
        values[i] = cube_diag / (nd[i] * (nd[i] - 1)) as f64;
    }
    FlaggedValues { values, undefined }
}

/// Connected components on positive weights, each sorted ascending; the
/// list is ordered by size (descending), ties by smallest member.
pub fn connected_components(w: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = w.nrows();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut comp = Vec::new();
        while let Some(u) = stack.pop() {
            comp.push(u);
            for v in 0..n {
                if !seen[v] && v != u && w[(u, v)] > 0.0 {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    comps
}

pub fn rw_betweenness(net: &WeightedNetwork) -> Result<Betweenness> {
    rw_betweenness_weights(net.weights(), Execution::default())
}

pub fn rw_betweenness_with(net: &WeightedNetwork, exec: Execution) -> Result<Betweenness> {
    rw_betweenness_weights(net.weights(), exec)
}

/// Current-flow betweenness on an arbitrary symmetric nonnegative matrix.
///
/// For every source/target pair `(s, t)` of the largest component, a unit
/// current is injected at `s` and extracted at `t`; node potentials come
/// from the inverse of the grounded weighted Laplacian. The throughput of a
/// node `i` is half the absolute current on its incident links. Each node's
/// value is its throughput summed over pairs not containing it, divided by
/// `(m - 1)(m - 2) / 2` where `m` is the component size. Scaling all weights
/// by `c > 0` leaves the result unchanged.
pub fn rw_betweenness_weights(w: &DMatrix<f64>, exec: Execution) -> Result<Betweenness> {
    let n = w.nrows();
    let comps = connected_components(w);
    let component_sizes: Vec<usize> = comps.iter().map(Vec::len).collect();
    let mut values = vec![0.0; n];
    let mut in_giant = vec![false; n];
    let Some(giant) = comps.first() else {
        return Ok(Betweenness {
            values,
            component_sizes,
            in_giant,
        });
    };
    for &g in giant {
        in_giant[g] = true;
    }
    let m = giant.len();
    if m < 3 {
        return Ok(Betweenness {
            values,
            component_sizes,
            in_giant,
        });
    }

    let sub = DMatrix::from_fn(m, m, |a, b| if a == b { 0.0 } else { w[(giant[a], giant[b])] });
    let potentials = grounded_inverse(&sub)?;
    let edges: Vec<(usize, usize, f64)> = (0..m)
        .flat_map(|a| (a + 1..m).map(move |b| (a, b)))
        .filter_map(|(a, b)| {
            let wab = sub[(a, b)];
            (wab > 0.0).then_some((a, b, wab))
        })
        .collect();

    // One task per source; each returns its partial per-node sums over targets t > s.
    let partials = exec.map_collect(m, |s| {
        let mut acc = vec![0.0; m];
        let mut through = vec![0.0; m];
        for t in s + 1..m {
            through.iter_mut().for_each(|v| *v = 0.0);
            for &(a, b, wab) in &edges {
                let va = potentials[(a, s)] - potentials[(a, t)];
                let vb = potentials[(b, s)] - potentials[(b, t)];
                let f = wab * (va - vb).abs();
                through[a] += f;
                through[b] += f;
            }
            for (i, v) in through.iter().enumerate() {
                if i != s && i != t {
                    acc[i] += 0.5 * v;
                }
            }
        }
        acc
    });
    let mut total = vec![0.0; m];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    let pairs = ((m - 1) * (m - 2) / 2) as f64;
    for (a, &g) in giant.iter().enumerate() {
        values[g] = total[a] / pairs;
    }
    Ok(Betweenness {
        values,
        component_sizes,
        in_giant,
    })
}

/// Inverse of the Laplacian with node 0 grounded, padded with a zero row and
/// column for the grounded node.
fn grounded_inverse(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = w.nrows();
    let strength = strength_of(w);
    let reduced = DMatrix::from_fn(
        m - 1,
        m - 1,
        |a, b| {
            if a == b {
                strength[a + 1]
            } else {
                -w[(a + 1, b + 1)]
            }
        },
    );
    let inv = crate::linalg::inverse_spd(&reduced)
        .ok_or_else(|| Error::Singular("grounded Laplacian of a connected component".into()))?;
    let mut full = DMatrix::zeros(m, m);
    full.view_mut((1, 1), (m - 1, m - 1)).copy_from(&inv);
    Ok(full)
}

pub fn all_statistics(net: &WeightedNetwork) -> Result<NodeStatistics> {
    all_statistics_with(net, Execution::default())
}

pub fn all_statistics_with(net: &WeightedNetwork, exec: Execution) -> Result<NodeStatistics> {
    let anns = avg_nn_strength(net);
    let bcc = clustering(net, ClusteringMode::Binary);
    let wcc = clustering(net, ClusteringMode::Weighted);
    let rw = rw_betweenness_with(net, exec)?;
    Ok(NodeStatistics {
        network_kind: net.kind(),
        nd: node_degree(net),
        ns: node_strength(net),
        anns: anns.values,
        bcc: bcc.values,
        wcc: wcc.values,
        rwbc: rw.values,
        anns_undefined: anns.undefined,
        clustering_undefined: wcc.undefined,
        component_sizes: rw.component_sizes,
    })
}
