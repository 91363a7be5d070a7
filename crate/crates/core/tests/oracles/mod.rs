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

//! Deliberately naive reference implementations used as test oracles.
//!
//! Nothing here calls into the library's numerical code: linear systems are
//! solved by textbook Gaussian elimination, components by BFS, spanning
//! trees by exhaustive Pruefer enumeration.

#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `|a - b| <= rel * max(|a|, |b|) + 1e-12`; the absolute floor covers
/// quantities that are exactly zero in theory (leaf betweenness).
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}

/// Symmetric matrix with zero diagonal, max entry 1, random support.
pub fn random_weights(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    let density: f64 = rng.random_range(0.3..1.0);
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if rng.random_bool(density) {
                let v: f64 = rng.random_range(0.001..1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
    }
    let max = w.max();
    if max > 0.0 {
        w /= max;
    }
    w
}

pub fn degree(w: &DMatrix<f64>) -> Vec<usize> {
    let n = w.nrows();
    (0..n)
        .map(|i| (0..n).filter(|&j| j != i && w[(i, j)] > 0.0).count())
        .collect()
}

pub fn strength(w: &DMatrix<f64>) -> Vec<f64> {
    let n = w.nrows();
    (0..n).map(|i| (0..n).map(|j| w[(i, j)]).sum()).collect()
}

pub fn anns(w: &DMatrix<f64>) -> Vec<Option<f64>> {
    let n = w.nrows();
    let s = strength(w);
    (0..n)
        .map(|i| {
            let nb: Vec<usize> = (0..n).filter(|&j| j != i && w[(i, j)] > 0.0).collect();
            (!nb.is_empty()).then(|| nb.iter().map(|&j| s[j]).sum::<f64>() / nb.len() as f64)
        })
        .collect()
}

/// Clustering by explicit triangle enumeration. `weighted` uses the
/// geometric mean of the three triangle weights, binary counts triangles.
pub fn clustering_by_triangles(w: &DMatrix<f64>, weighted: bool) -> Vec<Option<f64>> {
    let n = w.nrows();
    let nd = degree(w);
    (0..n)
        .map(|i| {
            if nd[i] < 2 {
                return None;
            }
            let mut sum = 0.0;
            for j in 0..n {
                for k in j + 1..n {
                    if j == i || k == i {
                        continue;
                    }
                    let (a, b, c) = (w[(i, j)], w[(j, k)], w[(k, i)]);
                    if a > 0.0 && b > 0.0 && c > 0.0 {
                        sum += if weighted { (a * b * c).cbrt() } else { 1.0 };
                    }
                }
            }
            Some(2.0 * sum / (nd[i] * (nd[i] - 1)) as f64)
        })
        .collect()
}

pub fn largest_component(w: &DMatrix<f64>) -> Vec<usize> {
    let n = w.nrows();
    let mut label = vec![usize::MAX; n];
    let mut best: Vec<usize> = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        label[s] = s;
        let mut comp = vec![s];
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if v != u && w[(u, v)] > 0.0 && label[v] == usize::MAX {
                    label[v] = s;
                    comp.push(v);
                    queue.push_back(v);
                }
            }
        }
        comp.sort_unstable();
        // strictly larger only: ties keep the component with the smaller first node
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Current-flow betweenness, one linear solve per source/target pair with
/// the target grounded. Nodes outside the largest component get 0.
pub fn rwbc(w: &DMatrix<f64>) -> Vec<f64> {
    let n = w.nrows();
    let comp = largest_component(w);
    let m = comp.len();
    let mut out = vec![0.0; n];
    if m < 3 {
        return out;
    }
    let sub = |a: usize, b: usize| w[(comp[a], comp[b])];
    let mut total = vec![0.0; m];
    for s in 0..m {
        for t in s + 1..m {
            // unknown potentials for every node except t (V_t = 0)
            let idx: Vec<usize> = (0..m).filter(|&k| k != t).collect();
            let a: Vec<Vec<f64>> = idx
                .iter()
                .map(|&r| {
                    idx.iter()
                        .map(|&c| {
                            if r == c {
                                (0..m).filter(|&k| k != r).map(|k| sub(r, k)).sum()
                            } else {
                                -sub(r, c)
                            }
                        })
                        .collect()
                })
                .collect();
            let b: Vec<f64> = idx.iter().map(|&r| if r == s { 1.0 } else { 0.0 }).collect();
            let sol = gauss_solve(a, b);
            let mut v = vec![0.0; m];
            for (k, &r) in idx.iter().enumerate() {
                v[r] = sol[k];
            }
            for i in 0..m {
                if i == s || i == t {
                    continue;
                }
                let through: f64 = (0..m)
                    .filter(|&j| j != i)
                    .map(|j| sub(i, j) * (v[i] - v[j]).abs())
                    .sum();
                total[i] += 0.5 * through;
            }
        }
    }
    let pairs = ((m - 1) * (m - 2) / 2) as f64;
    for (a, &g) in comp.iter().enumerate() {
        out[g] = total[a] / pairs;
    }
    out
}

/// Minimum total distance over all labelled spanning trees of `K_n`,
/// enumerated through Pruefer sequences (`n^(n-2)` trees).
pub fn brute_force_mst_total(d: &DMatrix<f64>) -> f64 {
    let n = d.nrows();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return d[(0, 1)];
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(pruefer_tree_weight(&seq, d));
        // odometer increment
        let mut k = 0;
        while k < len {
            seq[k] += 1;
            if seq[k] < n {
                break;
            }
            seq[k] = 0;
            k += 1;
        }
        if k == len {
            return best;
        }
    }
}

fn pruefer_tree_weight(seq: &[usize], d: &DMatrix<f64>) -> f64 {
    let n = seq.len() + 2;
    let mut deg = vec![1usize; n];
    for &s in seq {
        deg[s] += 1;
    }
    let mut total = 0.0;
    for &s in seq {
        let leaf = (0..n).find(|&v| deg[v] == 1).unwrap();
        total += d[(leaf, s)];
        deg[leaf] = 0;
        deg[s] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| deg[v] == 1).collect();
    total + d[(rest[0], rest[1])]
}

/// Ordinary least squares via the normal equations.
pub fn ols(columns: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = columns.len();
    let a: Vec<Vec<f64>> = (0..k)
        .map(|p| {
            (0..k)
                .map(|q| columns[p].iter().zip(&columns[q]).map(|(x, z)| x * z).sum())
                .collect()
        })
        .collect();
    let b: Vec<f64> = (0..k)
        .map(|p| columns[p].iter().zip(y).map(|(x, v)| x * v).sum())
        .collect();
    gauss_solve(a, b)
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Six countries in two regions with hand-computed trade shares.
///
/// Pair totals (both directions): inside A 16 + 4 + 4 = 24, inside B
/// 8 + 2 = 10, across 8 + 8 + 4 = 20. Region totals A = 44, B = 30.
pub struct ShareFixture {
    pub flows: tradenet_core::network::DirectedFlowMatrix,
    pub countries: tradenet_core::data::CountryTable,
    pub percent: [[f64; 2]; 2],
    pub world_share: [f64; 2],
}

pub fn six_country_fixture() -> ShareFixture {
    use tradenet_core::data::{Country, CountryTable};
    use tradenet_core::network::DirectedFlowMatrix;
    let mut f = DMatrix::zeros(6, 6);
    for &(a, b, v) in &[
        (0, 1, 10.0),
        (1, 0, 6.0),
        (0, 2, 4.0),
        (1, 2, 2.0),
        (2, 1, 2.0),
        (3, 4, 5.0),
        (4, 3, 3.0),
        (4, 5, 1.0),
        (5, 4, 1.0),
        (0, 3, 7.0),
        (3, 0, 1.0),
        (2, 5, 3.0),
        (5, 2, 5.0),
        (1, 4, 4.0),
    ] {
        f[(a, b)] = v;
    }
    let countries = (0..6)
        .map(|k| Country {
            id: 10 + k as i64,
            acronym: format!("X{k}"),
            name: format!("Six {k}"),
            gdp: 1.0 + k as f64,
            population: 1.0,
            area_km2: 1.0,
            landlocked: false,
            continent: "C".into(),
            region: if k < 3 { "A".into() } else { "B".into() },
            cpi: None,
            latitude: None,
            longitude: None,
        })
        .collect();
    ShareFixture {
        flows: DirectedFlowMatrix::new(f, 2000).unwrap(),
        countries: CountryTable::new(countries).unwrap(),
        percent: [
            [100.0 * 24.0 / 44.0, 100.0 * 20.0 / 44.0],
            [100.0 * 20.0 / 30.0, 100.0 * 10.0 / 30.0],
        ],
        world_share: [100.0 * 44.0 / 74.0, 100.0 * 30.0 / 74.0],
    }
}
