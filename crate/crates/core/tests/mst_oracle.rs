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

mod oracles;

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::Rng;
use tradenet_core::mst::*;
use tradenet_core::network::{NetworkKind, WeightedNetwork};

use oracles::rng;

fn edge_set(t: &SpanningTree) -> BTreeSet<(usize, usize)> {
    t.edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect()
}

#[test]
fn kruskal_matches_brute_force_on_complete_graphs() {
    let mut r = rng(2024);
    for _ in 0..100 {
        let n = r.random_range(2..=8);
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..i {
                let v: f64 = r.random_range(0.0..=1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        let d = mantegna_distance(&w).unwrap();
        let tree = kruskal_mst(&d, EdgeUniverse::AllPairs).unwrap();
        assert_eq!(tree.edges.len(), n - 1);
        let best = oracles::brute_force_mst_total(&d);
        assert!(
            (tree.total_distance - best).abs() <= 1e-12 * best.max(1.0),
            "{} vs {best}",
            tree.total_distance
        );
    }
}

#[test]
fn sixteen_trees_of_four_nodes() {
    // distinct distances; Cayley: 4^2 = 16 labelled trees
    let d = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0, 0.3, 0.9, 0.5, 0.3, 0.0, 0.4, 0.8, 0.9, 0.4, 0.0, 0.7, 0.5, 0.8, 0.7, 0.0,
        ],
    );
    let tree = kruskal_mst(&d, EdgeUniverse::AllPairs).unwrap();
    assert!((tree.total_distance - 1.2).abs() < 1e-15);
    assert_eq!(edge_set(&tree), BTreeSet::from([(0, 1), (1, 2), (0, 3)]));
}

#[test]
fn mantegna_endpoints_are_exact() {
    let w = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.5, 0.0, 0.5, 0.0]);
    let d = mantegna_distance(&w).unwrap();
    assert_eq!(d[(0, 1)], 0.0);
    assert_eq!(d[(0, 2)], std::f64::consts::SQRT_2);
    assert_eq!(d[(1, 2)], 1.0);
    assert_eq!(d[(0, 0)], 0.0);
    let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, 0.0]);
    assert!(mantegna_distance(&bad).is_err());
}

#[test]
fn a_tree_is_its_own_mst() {
    // path 0-1-2-3 plus a leaf 4 on 1
    let mut w = DMatrix::zeros(5, 5);
    for &(a, b, v) in &[(0, 1, 0.2), (1, 2, 1.0), (2, 3, 0.6), (1, 4, 0.05)] {
        w[(a, b)] = v;
        w[(b, a)] = v;
    }
    let net = WeightedNetwork::from_unnormalized(w, NetworkKind::Original).unwrap();
    for universe in [EdgeUniverse::AllPairs, EdgeUniverse::PositiveLinks] {
        let t = network_mst(&net, universe).unwrap();
        assert_eq!(edge_set(&t), BTreeSet::from([(0, 1), (1, 2), (2, 3), (1, 4)]));
    }
}

#[test]
fn disconnected_input_gives_a_forest() {
    let mut w = DMatrix::zeros(4, 4);
    w[(0, 1)] = 0.5;
    w[(1, 0)] = 0.5;
    w[(2, 3)] = 1.0;
    w[(3, 2)] = 1.0;
    let net = WeightedNetwork::from_unnormalized(w, NetworkKind::Original).unwrap();
    let t = network_mst(&net, EdgeUniverse::PositiveLinks).unwrap();
    assert_eq!(t.edges.len(), 2);
    assert_eq!(t.component_count, 2);
    // every pair is a candidate in the complete universe
    let full = network_mst(&net, EdgeUniverse::AllPairs).unwrap();
    assert_eq!(full.component_count, 1);
}

#[test]
fn equal_weights_use_the_index_tie_rule() {
    let w = DMatrix::from_fn(5, 5, |i, j| if i == j { 0.0 } else { 0.5 });
    let d = mantegna_distance(&w).unwrap();
    let t = kruskal_mst(&d, EdgeUniverse::AllPairs).unwrap();
    // (0,1), (0,2), ... come first in (distance, min, max) order
    assert_eq!(edge_set(&t), BTreeSet::from([(0, 1), (0, 2), (0, 3), (0, 4)]));
    assert!((t.total_distance - oracles::brute_force_mst_total(&d)).abs() < 1e-12);
    assert_eq!(t, kruskal_mst(&d, EdgeUniverse::AllPairs).unwrap());
}

#[test]
fn report_weights_rescale_by_the_longest_tree_edge() {
    let d = DMatrix::from_row_slice(3, 3, &[0.0, 0.2, 0.8, 0.2, 0.0, 0.4, 0.8, 0.4, 0.0]);
    let t = kruskal_mst(&d, EdgeUniverse::AllPairs).unwrap();
    assert_eq!(t.rescale_factor, 0.4);
    let mut w: Vec<f64> = t.edges.iter().map(|e| e.report_weight).collect();
    w.sort_by(f64::total_cmp);
    assert_eq!(w, vec![0.0, 0.5]);
}
