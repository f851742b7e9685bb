// Copyright 2026 The itree Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Exact outcome distributions.
//!
//! Two independent exponential-cost routes: an explicit sum over every spin
//! history of every leaf, and a product of 2x2 transfer matrices per leaf.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::analysis::Observable;
use crate::error::{Error, Result};
use crate::event::Event;
use crate::model::{mat_vec, ModelConfig, StepMatrices};
use crate::rng::{event_rng, uniform};

pub const BRUTE_FORCE_MAX_N: usize = 14;
pub const MATRIX_PRODUCT_MAX_N: usize = 24;
/// Normalization tolerance for every exact distribution.
pub const NORM_TOL: f64 = 1e-10;

/// Spin amplitudes `(down, up)` of one leaf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinVector {
    pub down: f64,
    pub up: f64,
}

impl SpinVector {
    pub fn norm_sqr(&self) -> f64 {
        self.down * self.down + self.up * self.up
    }
}

/// Probability table over all `(path, spin)` outcomes, indexed
/// `(path << 1) | spin` (see [`Event::index`]).
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    n_steps: usize,
    probs: Vec<f64>,
    pub method: String,
    pub config_hash: u64,
}

/// FNV-1a over the config's JSON form; stable across builds.
pub fn config_hash(config: &ModelConfig) -> u64 {
    let text = serde_json::to_string(config).expect("config serializes");
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl OutcomeDistribution {
    pub fn new(n_steps: usize, probs: Vec<f64>, method: impl Into<String>) -> Result<Self> {
        let expected = 1usize << (n_steps + 1);
        if probs.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                got: probs.len(),
            });
        }
        Ok(OutcomeDistribution {
            n_steps,
            probs,
            method: method.into(),
            config_hash: 0,
        })
    }

    fn for_config(config: &ModelConfig, probs: Vec<f64>, method: &str) -> Self {
        OutcomeDistribution {
            n_steps: config.n_steps,
            probs,
            method: method.to_string(),
            config_hash: config_hash(config),
        }
    }

    /// Empirical distribution of an event stream.
    pub fn from_events(n_steps: usize, events: &[Event]) -> Result<Self> {
        if n_steps > MATRIX_PRODUCT_MAX_N {
            return Err(Error::TooLarge {
                what: "empirical table",
                n: n_steps,
                limit: MATRIX_PRODUCT_MAX_N,
            });
        }
        if events.is_empty() {
            return Err(Error::EmptyStream);
        }
        let mut counts = vec![0u64; 1 << (n_steps + 1)];
        for ev in events {
            if ev.n_steps() != n_steps {
                return Err(Error::LengthMismatch {
                    expected: n_steps,
                    got: ev.n_steps(),
                });
            }
            counts[ev.index()] += 1;
        }
        let m = events.len() as f64;
        let probs = counts.into_iter().map(|c| c as f64 / m).collect();
        Self::new(n_steps, probs, "empirical")
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, path: usize, spin: bool) -> f64 {
        self.probs[(path << 1) | spin as usize]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.probs.iter().all(|&p| p >= 0.0) && (self.total() - 1.0).abs() <= NORM_TOL
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        if self.n_steps != other.n_steps {
            return Err(Error::KeyMismatch(format!(
                "N = {} vs N = {}",
                self.n_steps, other.n_steps
            )));
        }
        Ok(self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Outcomes with their probabilities, in index order.
    pub fn iter(&self) -> impl Iterator<Item = (Event, f64)> + '_ {
        let n = self.n_steps;
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (Event::from_index(n, i), p))
    }

    /// Draw `m` outcomes by inverse CDF; event `i` uses one uniform from
    /// stream `(seed, i)`.
    pub fn sample(&self, seed: u64, m: usize) -> Vec<Event> {
        let mut cumulative = Vec::with_capacity(self.probs.len());
        let mut acc = 0.0;
        for &p in &self.probs {
            acc += p;
            cumulative.push(acc);
        }
        // Draws past the rounded total land on the last outcome with mass.
        let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        let n = self.n_steps;
        (0..m as u64)
            .into_par_iter()
            .map(|i| {
                let u = uniform(&mut event_rng(seed, i)) * acc;
                let index = cumulative.partition_point(|&c| c <= u).min(last);
                Event::from_index(n, index)
            })
            .collect()
    }

    /// `path,spin,probability` rows, sorted by outcome index.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "path,spin,probability")?;
        for (ev, p) in self.iter() {
            writeln!(out, "{},{},{:.16e}", ev.path_string(), ev.spin as u8, p)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "path,spin,probability" => {}
            _ => return Err(Error::Parse("missing distribution CSV header".into())),
        }
        let mut rows = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::Parse(e.to_string()))?;
            let fields: Vec<&str> = line.trim().split(',').collect();
            if fields.len() != 3 {
                continue;
            }
            let path: Vec<bool> = fields[0].chars().map(|c| c == '1').collect();
            let spin = fields[1] == "1";
            let p: f64 = fields[2]
                .parse()
                .map_err(|_| Error::Parse(format!("bad probability {:?}", fields[2])))?;
            rows.push((Event::new(spin, path), p));
        }
        let n = rows
            .first()
            .map(|(e, _)| e.n_steps())
            .ok_or(Error::EmptyStream)?;
        let mut probs = vec![0.0; 1 << (n + 1)];
        for (ev, p) in rows {
            probs[ev.index()] = p;
        }
        Self::new(n, probs, "csv")
    }
}

fn check_limit(what: &'static str, n: usize, limit: usize) -> Result<()> {
    if n > limit {
        Err(Error::TooLarge { what, n, limit })
    } else {
        Ok(())
    }
}

fn leaf_product(init: [f64; 2], matrices: &[StepMatrices], path: usize) -> [f64; 2] {
    matrices
        .iter()
        .enumerate()
        .fold(init, |v, (k, m)| mat_vec(m.get((path >> k) & 1 == 1), v))
}

/// Final spin amplitudes for one leaf: `M_L(n)` for a left step, `M_R(n)`
/// for a right step, applied in step order to the initial spin.
pub fn leaf_amplitude(config: &ModelConfig, path: &[bool]) -> Result<SpinVector> {
    if path.len() != config.n_steps {
        return Err(Error::LengthMismatch {
            expected: config.n_steps,
            got: path.len(),
        });
    }
    let v = config
        .transfer_matrices()
        .iter()
        .zip(path)
        .fold(config.initial_spin(), |v, (m, &left)| {
            mat_vec(m.get(left), v)
        });
    Ok(SpinVector {
        down: v[0],
        up: v[1],
    })
}

fn collect_leaves<F>(n: usize, leaf: F) -> Vec<f64>
where
    F: Fn(usize) -> [f64; 2] + Sync,
{
    let mut probs = vec![0.0; 1 << (n + 1)];
    probs
        .par_chunks_mut(2)
        .enumerate()
        .for_each(|(path, slot)| {
            let amp = leaf(path);
            slot[0] = amp[0] * amp[0];
            slot[1] = amp[1] * amp[1];
        });
    probs
}

/// Exact distribution from an explicit sum over all spin histories
/// `s0, s1, …, sN` of every leaf. Cost grows as `4^N`.
pub fn brute_force_distribution(config: &ModelConfig) -> Result<OutcomeDistribution> {
    let n = config.n_steps;
    check_limit("brute force", n, BRUTE_FORCE_MAX_N)?;
    let matrices = config.transfer_matrices();
    let init = config.initial_spin();
    let probs = collect_leaves(n, |path| {
        let mut amp = [0.0; 2];
        for history in 0..(1usize << (n + 1)) {
            let s0 = history & 1;
            let mut term = init[s0];
            let mut prev = s0;
            for (k, m) in matrices.iter().enumerate() {
                let next = (history >> (k + 1)) & 1;
                term *= m.get((path >> k) & 1 == 1)[next][prev];
                prev = next;
            }
            amp[prev] += term;
        }
        amp
    });
    Ok(OutcomeDistribution::for_config(config, probs, "brute"))
}

/// Exact distribution from a 2x2 matrix product per leaf. Cost grows as `N·2^N`.
pub fn matrix_product_distribution(config: &ModelConfig) -> Result<OutcomeDistribution> {
    let n = config.n_steps;
    check_limit("matrix product", n, MATRIX_PRODUCT_MAX_N)?;
    let matrices = config.transfer_matrices();
    let init = config.initial_spin();
    let probs = collect_leaves(n, |path| leaf_product(init, &matrices, path));
    Ok(OutcomeDistribution::for_config(config, probs, "matrix"))
}

/// `Σ P(outcome) · observable(outcome)`.
pub fn exact_observable_expectation(dist: &OutcomeDistribution, observable: Observable) -> f64 {
    let n = dist.n_steps();
    dist.probabilities()
        .iter()
        .enumerate()
        .map(|(i, &p)| p * observable.of_index(n, i) as f64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn single_left_step() {
        let cfg = ModelConfig::uniform(1, 0.0, 0.8, 0.5, 1.0, 0).unwrap();
        let amp = leaf_amplitude(&cfg, &[true]).unwrap();
        assert_abs_diff_eq!(amp.down, 0.8f64.sqrt(), epsilon = 1e-15);
        assert_eq!(amp.up, 0.0);
    }

    #[test]
    fn two_right_steps() {
        let cfg = ModelConfig::from_probabilities(2, 0.0, &[0.8, 0.6], &[0.5], 1.0, 0).unwrap();
        let amp = leaf_amplitude(&cfg, &[false, false]).unwrap();
        assert_abs_diff_eq!(amp.down, 0.2f64.sqrt() * 0.4f64.sqrt(), epsilon = 1e-15);
        assert_eq!(amp.up, 0.0);
    }

    #[test]
    fn leaf_amplitude_length_checked() {
        let cfg = ModelConfig::uniform(3, 0.0, 0.8, 0.5, 1.0, 0).unwrap();
        assert!(matches!(
            leaf_amplitude(&cfg, &[true]),
            Err(Error::LengthMismatch {
                expected: 3,
                got: 1
            })
        ));
    }

    #[test]
    fn leaf_amplitude_matches_history_sum() {
        let cfg =
            ModelConfig::from_probabilities(2, 0.5, &[0.8, 0.3], &[0.5, 0.9], 0.6, 0).unwrap();
        let brute = brute_force_distribution(&cfg).unwrap();
        for path in 0..4usize {
            let bits = [path & 1 == 1, path & 2 == 2];
            let amp = leaf_amplitude(&cfg, &bits).unwrap();
            assert_abs_diff_eq!(amp.down * amp.down, brute.get(path, false), epsilon = 1e-14);
            assert_abs_diff_eq!(amp.up * amp.up, brute.get(path, true), epsilon = 1e-14);
        }
    }

    #[test]
    fn brute_force_single_step() {
        let cfg = ModelConfig::uniform(1, 0.0, 0.8, 0.5, 1.0, 0).unwrap();
        let d = brute_force_distribution(&cfg).unwrap();
        assert_abs_diff_eq!(d.get(1, false), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(d.get(0, false), 0.2, epsilon = 1e-15);
        assert_eq!(d.get(0, true), 0.0);
        assert_eq!(d.get(1, true), 0.0);
    }

    #[test]
    fn brute_force_quarter_turn_values() {
        // Hand computation: the spin enters as (c, -s) ⊗ ... with c = s = 1/√2;
        // P(left, ↓) = ((√0.8 + √0.5) / 2)², P(left, ↑) = ((√0.5 - √0.8) / 2)²,
        // P(right, ↓) = ((√0.2 + √0.5) / 2)², P(right, ↑) = ((√0.5 - √0.2) / 2)².
        let cfg = ModelConfig::uniform(1, FRAC_PI_4, 0.8, 0.5, 1.0, 0).unwrap();
        let d = brute_force_distribution(&cfg).unwrap();
        let h = |x: f64, y: f64| ((x.sqrt() + y.sqrt()) / 2.0).powi(2);
        let g = |x: f64, y: f64| ((x.sqrt() - y.sqrt()) / 2.0).powi(2);
        assert_abs_diff_eq!(d.get(1, false), h(0.8, 0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(d.get(0, false), h(0.2, 0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(d.get(1, true), g(0.8, 0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(d.get(0, true), g(0.2, 0.5), epsilon = 1e-15);
        assert_abs_diff_eq!(d.get(1, false), 0.6412, epsilon = 5e-5);
        assert_abs_diff_eq!(d.get(0, false), 0.3331, epsilon = 5e-5);
        assert_abs_diff_eq!(d.get(1, true), 0.0088, epsilon = 5e-5);
        assert_abs_diff_eq!(d.get(0, true), 0.0169, epsilon = 5e-5);
    }

    #[test]
    fn normalization_and_cross_oracle() {
        let cfg =
            ModelConfig::from_probabilities(5, 0.9, &[0.1, 0.7, 0.3, 0.95, 0.5], &[0.6], -0.3, 0)
                .unwrap();
        let brute = brute_force_distribution(&cfg).unwrap();
        let matrix = matrix_product_distribution(&cfg).unwrap();
        assert!(brute.is_normalized());
        assert!(matrix.is_normalized());
        assert!(brute.max_abs_diff(&matrix).unwrap() < 1e-10);
        assert_eq!(brute.config_hash, matrix.config_hash);
    }

    #[test]
    fn all_right_leaf_is_delta_product() {
        let cfg =
            ModelConfig::from_probabilities(2, 0.5, &[0.8, 0.4], &[0.5, 0.1], 1.0, 0).unwrap();
        let m = cfg.transfer_matrices();
        let f = mat_vec(&m[1].right, mat_vec(&m[0].right, [1.0, 0.0]));
        let d = matrix_product_distribution(&cfg).unwrap();
        assert_abs_diff_eq!(d.get(0, false), f[0] * f[0], epsilon = 1e-16);
        assert_abs_diff_eq!(d.get(0, true), f[1] * f[1], epsilon = 1e-16);
    }

    #[test]
    fn zero_angle_factorizes() {
        let p = [0.8, 0.3, 0.6];
        let cfg = ModelConfig::from_probabilities(3, 0.0, &p, &[0.5], 1.0, 0).unwrap();
        let d = matrix_product_distribution(&cfg).unwrap();
        for path in 0..8usize {
            let expected: f64 = (0..3)
                .map(|k| {
                    if (path >> k) & 1 == 1 {
                        p[k]
                    } else {
                        1.0 - p[k]
                    }
                })
                .product();
            assert_abs_diff_eq!(d.get(path, false), expected, epsilon = 1e-15);
            assert_eq!(d.get(path, true), 0.0);
        }
    }

    #[test]
    fn guard_rails() {
        let big = ModelConfig::uniform(15, 0.1, 0.8, 0.5, 1.0, 0).unwrap();
        assert!(matches!(
            brute_force_distribution(&big),
            Err(Error::TooLarge { .. })
        ));
        let huge = ModelConfig::uniform(25, 0.1, 0.8, 0.5, 1.0, 0).unwrap();
        assert!(matches!(
            matrix_product_distribution(&huge),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn expectation_of_point_mass() {
        let mut probs = vec![0.0; 16];
        let ev = Event::new(false, vec![false, false, true]);
        probs[ev.index()] = 1.0;
        let d = OutcomeDistribution::new(3, probs, "point").unwrap();
        assert_eq!(
            exact_observable_expectation(&d, Observable::FirstLeftDepth),
            3.0
        );
        assert_eq!(
            exact_observable_expectation(&d, Observable::NumLeftBranches),
            1.0
        );
    }

    #[test]
    fn csv_round_trip() {
        let cfg = ModelConfig::uniform(2, 0.4, 0.8, 0.5, 1.0, 0).unwrap();
        let d = matrix_product_distribution(&cfg).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("path,spin,probability\n00,0,"));
        let back = OutcomeDistribution::read_csv(&buf[..]).unwrap();
        assert_eq!(back.probabilities(), d.probabilities());
    }
}
