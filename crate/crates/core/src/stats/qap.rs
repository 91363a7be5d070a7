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

//! Quadratic assignment procedure (QAP) for correlations between dyadic
//! variables.
//!
//! Link weights of one network share node-level components (every dyad of a
//! country carries that country's estimated effect), so the iid t-test on a
//! dyadic correlation over-rejects. QAP draws the null by relabelling the
//! nodes of the covariate matrix, which keeps that row/column dependence.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{pearson, SIGNIFICANCE_LEVEL};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QapEntry {
    pub coefficient: f64,
    /// `(1 + #{|r_perm| >= |r|}) / (1 + permutations)`.
    pub p_value: f64,
    pub significant: bool,
    pub permutations: usize,
}

/// Pearson correlation of `weights` with `covariate` over the positive links
/// `i < j` of `weights`, with a node-permutation p-value.
///
/// `covariate` must be finite off the diagonal. Deterministic for a given seed.
pub fn qap_correlation(
    weights: &DMatrix<f64>,
    covariate: &DMatrix<f64>,
    permutations: usize,
    seed: u64,
) -> Result<QapEntry> {
    let n = weights.nrows();
    if weights.ncols() != n || covariate.shape() != (n, n) {
        return Err(Error::IndexMismatch(format!(
            "QAP needs two square matrices of one size, got {:?} and {:?}",
            weights.shape(),
            covariate.shape()
        )));
    }
    if permutations == 0 {
        return invalid("QAP needs at least one permutation");
    }
    if (0..n).any(|i| (0..n).any(|j| i != j && !covariate[(i, j)].is_finite())) {
        return invalid("QAP covariate must be finite off the diagonal");
    }
    let links: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .filter(|&(i, j)| weights[(i, j)] > 0.0)
        .collect();
    if links.len() < 3 {
        return invalid(format!("QAP needs at least 3 links, got {}", links.len()));
    }
    let w: Vec<f64> = links.iter().map(|&(i, j)| weights[(i, j)]).collect();
    let corr = |perm: &[usize]| {
        let x: Vec<f64> = links.iter().map(|&(i, j)| covariate[(perm[i], perm[j])]).collect();
        pearson(&w, &x)
    };
    let mut perm: Vec<usize> = (0..n).collect();
    let r = corr(&perm).ok_or_else(|| Error::InvalidInput("QAP input has zero variance".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut extreme = 0usize;
    for _ in 0..permutations {
        perm.shuffle(&mut rng);
        // a permutation that leaves the covariate constant on the links counts as extreme
        let rp = corr(&perm).unwrap_or(f64::INFINITY);
        if rp.abs() >= r.abs() - 1e-12 {
            extreme += 1;
        }
    }
    let p_value = (1 + extreme) as f64 / (1 + permutations) as f64;
    Ok(QapEntry {
        coefficient: r,
        p_value,
        significant: p_value < SIGNIFICANCE_LEVEL,
        permutations,
    })
}
