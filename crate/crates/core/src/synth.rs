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

//! Seeded synthetic trade worlds with known gravity coefficients.
//!
//! Used by the test suites, the benchmarks and the `synth` CLI command. The
//! symmetric mean is
//! `mu_ij = exp(c + g (ln GDP_i + ln GDP_j) + d ln DIST_ij + dummies + u_i + u_j)`
//! with country heterogeneity `u ~ N(0, fe_sd)`. Flows are `mu * eta` with
//! unit-mean log-normal `eta` (or Poisson counts), optionally preceded by
//! structural zeros drawn from a logit.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};

use crate::data::{dyad_pairs, great_circle_km, Country, CountryTable, DyadCovariates, DyadRecord};
use crate::error::{invalid, Result};
use crate::network::DirectedFlowMatrix;

const CONTINENTS: [(&str, f64, f64); 6] = [
    ("Africa", 5.0, 20.0),
    ("Asia", 30.0, 100.0),
    ("Europe", 50.0, 15.0),
    ("NorthAmerica", 40.0, -95.0),
    ("Oceania", -25.0, 140.0),
    ("SouthAmerica", -15.0, -60.0),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GravityTruth {
    pub constant: f64,
    /// Coefficient on each side's log GDP.
    pub log_gdp: f64,
    pub log_dist: f64,
    pub contiguity: f64,
    pub common_language: f64,
    pub colony: f64,
    pub trade_agreement: f64,
    /// Standard deviation of the country effects `u_i`.
    pub fe_sd: f64,
}

impl Default for GravityTruth {
    fn default() -> Self {
        Self {
            constant: -38.0,
            log_gdp: 1.0,
            log_dist: -0.8,
            contiguity: 0.5,
            common_language: 0.3,
            colony: 0.2,
            trade_agreement: 0.25,
            fe_sd: 0.3,
        }
    }
}

/// `P(structural zero) = logistic(intercept + mass * z_mass + dist * z_dist)`,
/// with `z_mass`, `z_dist` the standardized log GDP product and log distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroInflation {
    pub intercept: f64,
    pub mass: f64,
    pub dist: f64,
}

impl Default for ZeroInflation {
    fn default() -> Self {
        Self {
            intercept: -1.2,
            mass: -0.9,
            dist: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub countries: usize,
    pub seed: u64,
    pub truth: GravityTruth,
    /// Standard deviation of `ln eta`.
    pub noise_sigma: f64,
    /// Standard deviation of log GDP across countries.
    pub gdp_log_sd: f64,
    pub zero_inflation: Option<ZeroInflation>,
    /// Draw Poisson counts with mean `mu * eta` instead of continuous flows.
    pub counts: bool,
    pub year: i32,
}

impl SyntheticConfig {
    pub fn new(countries: usize, seed: u64) -> Self {
        Self {
            countries,
            seed,
            truth: GravityTruth::default(),
            noise_sigma: 0.5,
            gdp_log_sd: 1.6,
            zero_inflation: None,
            counts: false,
            year: 2000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub countries: CountryTable,
    pub dyads: DyadCovariates,
    pub flows: DirectedFlowMatrix,
    /// Symmetric true mean (before noise and zeros).
    pub true_mean: DMatrix<f64>,
    pub structural_zero: DMatrix<bool>,
}

pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticWorld> {
    let n = cfg.countries;
    if n < 3 {
        return invalid("a synthetic world needs at least 3 countries");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");

    let mut countries = Vec::with_capacity(n);
    let mut effects = Vec::with_capacity(n);
    for k in 0..n {
        let (cont, clat, clon) = CONTINENTS[k % CONTINENTS.len()];
        let lat: f64 = (clat + 12.0 * std_normal.sample(&mut rng)).clamp(-70.0, 75.0);
        let lon: f64 = clon + 18.0 * std_normal.sample(&mut rng);
        let gdp = LogNormal::new(24.0, cfg.gdp_log_sd).expect("valid").sample(&mut rng);
        let population = LogNormal::new(16.0, 1.5).expect("valid").sample(&mut rng);
        let area = LogNormal::new(12.0, 1.8).expect("valid").sample(&mut rng);
        countries.push(Country {
            id: 1000 + k as i64,
            acronym: format!("C{k:03}"),
            name: format!("Country {k}"),
            gdp,
            population,
            area_km2: area,
            landlocked: rng.random_bool(0.2),
            continent: cont.to_string(),
            region: cont.to_string(),
            cpi: Some(100.0 + 10.0 * std_normal.sample(&mut rng)),
            latitude: Some(lat),
            longitude: Some(lon),
        });
        effects.push(cfg.truth.fe_sd * std_normal.sample(&mut rng));
    }
    let table = CountryTable::new(countries)?;

    let mut dyads = DyadCovariates::new();
    for (i, j) in dyad_pairs(n) {
        let (ci, cj) = (table.get(i), table.get(j));
        let d = great_circle_km(ci.coordinates().expect("set"), cj.coordinates().expect("set")).max(50.0);
        let same = ci.continent == cj.continent;
        let ctg = same && d < 1200.0;
        let rec = DyadRecord {
            distance_km: Some(d),
            contiguity: Some(f64::from(u8::from(ctg))),
            common_currency: Some(f64::from(u8::from(rng.random_bool(0.03)))),
            common_language: Some(f64::from(u8::from(rng.random_bool(if same { 0.3 } else { 0.1 })))),
            colony: Some(f64::from(u8::from(rng.random_bool(0.06)))),
            trade_agreement: Some(f64::from(u8::from(rng.random_bool(if same { 0.5 } else { 0.1 })))),
            common_religion: Some(f64::from(u8::from(rng.random_bool(if same { 0.4 } else { 0.15 })))),
            exchange_rate: Some(LogNormal::new(0.0, 1.0).expect("valid").sample(&mut rng)),
        };
        dyads.insert(j, i, rec)?;
    }

    let t = cfg.truth;
    let mut mean = DMatrix::zeros(n, n);
    let mut log_mass = Vec::new();
    let mut log_dist = Vec::new();
    for (i, j) in dyad_pairs(n) {
        let rec = dyads.get(i, j).expect("inserted");
        let lm = table.get(i).gdp.ln() + table.get(j).gdp.ln();
        let ld = rec.distance_km.expect("set").ln();
        let eta = t.constant
            + t.log_gdp * lm
            + t.log_dist * ld
            + t.contiguity * rec.contiguity.expect("set")
            + t.common_language * rec.common_language.expect("set")
            + t.colony * rec.colony.expect("set")
            + t.trade_agreement * rec.trade_agreement.expect("set")
            + effects[i]
            + effects[j];
        mean[(i, j)] = eta.exp();
        mean[(j, i)] = eta.exp();
        log_mass.push(lm);
        log_dist.push(ld);
    }
    let standardize = |v: &[f64]| -> Vec<f64> {
        let m = v.iter().sum::<f64>() / v.len() as f64;
        let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
        v.iter().map(|x| (x - m) / sd).collect()
    };
    let (zm, zd) = (standardize(&log_mass), standardize(&log_dist));

    let noise = LogNormal::new(-0.5 * cfg.noise_sigma.powi(2), cfg.noise_sigma.max(1e-300))
        .map_err(|e| crate::Error::InvalidInput(format!("noise: {e}")))?;
    let mut flows = DMatrix::zeros(n, n);
    let mut structural_zero = DMatrix::from_element(n, n, false);
    for (row, (i, j)) in dyad_pairs(n).enumerate() {
        if let Some(z) = cfg.zero_inflation {
            let lin = z.intercept + z.mass * zm[row] + z.dist * zd[row];
            let p = 1.0 / (1.0 + (-lin).exp());
            if rng.random_bool(p) {
                structural_zero[(i, j)] = true;
                structural_zero[(j, i)] = true;
                continue;
            }
        }
        let eta = if cfg.noise_sigma > 0.0 {
            noise.sample(&mut rng)
        } else {
            1.0
        };
        let level = mean[(i, j)] * eta;
        let s: f64 = if cfg.counts {
            if level > 0.0 {
                Poisson::new(level).expect("positive mean").sample(&mut rng)
            } else {
                0.0
            }
        } else {
            level
        };
        // split the symmetric flow into two directions with the same average
        let u: f64 = rng.random_range(0.5..1.5);
        flows[(i, j)] = s * u;
        flows[(j, i)] = s * (2.0 - u);
    }
    Ok(SyntheticWorld {
        countries: table,
        dyads,
        flows: DirectedFlowMatrix::new(flows, cfg.year)?,
        true_mean: mean,
        structural_zero,
    })
}

/// Random symmetric weight matrix with entries in `(0, 1]` on a random
/// support of the given density, rescaled so the maximum is 1.
pub fn random_weights(n: usize, density: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if rng.random_bool(density) {
                let v: f64 = rng.random_range(0.01..1.0);
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{symmetrize, SymmetrizeMode};

    #[test]
    fn deterministic_for_seed() {
        let a = generate(&SyntheticConfig::new(12, 5)).unwrap();
        let b = generate(&SyntheticConfig::new(12, 5)).unwrap();
        assert_eq!(a.flows, b.flows);
        let c = generate(&SyntheticConfig::new(12, 6)).unwrap();
        assert_ne!(a.flows, c.flows);
    }

    #[test]
    fn shapes_and_zeros() {
        let mut cfg = SyntheticConfig::new(20, 1);
        cfg.zero_inflation = Some(ZeroInflation::default());
        let w = generate(&cfg).unwrap();
        assert_eq!(w.flows.n(), 20);
        assert_eq!(w.dyads.len(), 190);
        let net = symmetrize(&w.flows, SymmetrizeMode::Arithmetic);
        let zeros = net.links().len();
        assert!(zeros < 190 && zeros > 60);
    }
}
