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

//! Observables, histograms and goodness-of-fit statistics.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::event::Event;
use crate::model::ModelConfig;
use crate::oracle::{
    exact_observable_expectation, matrix_product_distribution, OutcomeDistribution,
    MATRIX_PRODUCT_MAX_N,
};
use crate::samplers::Method;

/// 1-based step of the first left move, `N + 1` if the path never went left.
pub fn first_left_depth(event: &Event) -> u32 {
    event
        .path
        .iter()
        .position(|&left| left)
        .map_or(event.n_steps() + 1, |k| k + 1) as u32
}

pub fn num_left_branches(event: &Event) -> u32 {
    event.path.iter().filter(|&&left| left).count() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Observable {
    FirstLeftDepth,
    NumLeftBranches,
}

impl Observable {
    pub const ALL: [Observable; 2] = [Observable::FirstLeftDepth, Observable::NumLeftBranches];

    pub fn name(&self) -> &'static str {
        match self {
            Observable::FirstLeftDepth => "first-left-depth",
            Observable::NumLeftBranches => "num-left-branches",
        }
    }

    pub fn of_event(&self, event: &Event) -> u32 {
        match self {
            Observable::FirstLeftDepth => first_left_depth(event),
            Observable::NumLeftBranches => num_left_branches(event),
        }
    }

    /// Value on a packed outcome index (see [`Event::index`]).
    pub fn of_index(&self, n_steps: usize, index: usize) -> u32 {
        let path = index >> 1;
        match self {
            Observable::FirstLeftDepth => {
                if path == 0 {
                    n_steps as u32 + 1
                } else {
                    path.trailing_zeros() + 1
                }
            }
            Observable::NumLeftBranches => path.count_ones(),
        }
    }

    /// All values the observable can take at depth `n_steps`.
    pub fn support(&self, n_steps: usize) -> std::ops::RangeInclusive<u32> {
        match self {
            Observable::FirstLeftDepth => 1..=n_steps as u32 + 1,
            Observable::NumLeftBranches => 0..=n_steps as u32,
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Observable::ALL
            .iter()
            .copied()
            .find(|o| o.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown observable {:?}", s)))
    }
}

/// Integer-binned counts with Poisson errors, covering the observed range.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub observable: Observable,
    /// Bin values, contiguous and increasing.
    pub bins: Vec<u32>,
    pub counts: Vec<u64>,
    /// `√count` per bin.
    pub errors: Vec<f64>,
    pub total: u64,
}

impl Histogram {
    pub fn count(&self, bin: u32) -> u64 {
        match self.bins.first() {
            Some(&lo) if bin >= lo => self.counts.get((bin - lo) as usize).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "observable,bin,count,error")?;
        for ((bin, count), err) in self.bins.iter().zip(&self.counts).zip(&self.errors) {
            writeln!(out, "{},{},{},{:.16e}", self.observable, bin, count, err)?;
        }
        Ok(())
    }
}

pub fn histogram(events: &[Event], observable: Observable) -> Result<Histogram> {
    let values: Vec<u32> = events.iter().map(|e| observable.of_event(e)).collect();
    let lo = *values.iter().min().ok_or(Error::EmptyStream)?;
    let hi = *values.iter().max().expect("nonempty");
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for v in values {
        counts[(v - lo) as usize] += 1;
    }
    Ok(Histogram {
        observable,
        bins: (lo..=hi).collect(),
        errors: counts.iter().map(|&c| (c as f64).sqrt()).collect(),
        total: events.len() as u64,
        counts,
    })
}

/// Sample mean and its standard error (sample standard deviation / √M).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(mean: f64) -> Self {
        Estimate { mean, stderr: 0.0 }
    }

    /// Distance from `target` in units of the standard error.
    pub fn pull(&self, target: f64) -> f64 {
        (self.mean - target) / self.stderr
    }
}

pub fn estimate(events: &[Event], observable: Observable) -> Result<Estimate> {
    if events.is_empty() {
        return Err(Error::EmptyStream);
    }
    let m = events.len() as f64;
    let values: Vec<f64> = events
        .iter()
        .map(|e| observable.of_event(e) as f64)
        .collect();
    let mean = values.iter().sum::<f64>() / m;
    let var = if events.len() > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        stderr: (var / m).sqrt(),
    })
}

/// `½ Σ |p − q|` over a shared outcome space.
pub fn tv_distance(a: &OutcomeDistribution, b: &OutcomeDistribution) -> Result<f64> {
    if a.n_steps() != b.n_steps() {
        return Err(Error::KeyMismatch(format!(
            "N = {} vs N = {}",
            a.n_steps(),
            b.n_steps()
        )));
    }
    Ok(0.5
        * a.probabilities()
            .iter()
            .zip(b.probabilities())
            .map(|(p, q)| (p - q).abs())
            .sum::<f64>())
}

/// Sampling-noise scale for the TV distance of `m` draws from `dist`:
/// `½ Σ √(p(1−p)/m)`, the sum of per-outcome standard deviations. It bounds
/// the expected empirical TV distance from above.
pub fn tv_noise_floor(dist: &OutcomeDistribution, m: usize) -> f64 {
    let m = m as f64;
    0.5 * dist
        .probabilities()
        .iter()
        .map(|&p| (p * (1.0 - p) / m).sqrt())
        .sum::<f64>()
}

/// Exact probability of every bin of `observable`.
pub fn exact_bin_probabilities(
    dist: &OutcomeDistribution,
    observable: Observable,
) -> Vec<(u32, f64)> {
    let n = dist.n_steps();
    let support = observable.support(n);
    let lo = *support.start();
    let mut probs: Vec<(u32, f64)> = support.map(|b| (b, 0.0)).collect();
    for (i, &p) in dist.probabilities().iter().enumerate() {
        probs[(observable.of_index(n, i) - lo) as usize].1 += p;
    }
    probs
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
}

impl ChiSquare {
    /// Whether the statistic lies within `k` standard deviations
    /// (`√(2·dof)`) of its mean `dof`.
    pub fn within(&self, k: f64) -> bool {
        let dof = self.dof as f64;
        (self.statistic - dof).abs() <= k * (2.0 * dof).sqrt()
    }
}

/// Pearson statistic `Σ (obs − exp)² / exp` with `bins − 1` degrees of
/// freedom. Every expected count must be at least 5, and every observed
/// bin must appear in `expected`.
pub fn chi_square(hist: &Histogram, expected: &[(u32, f64)]) -> Result<ChiSquare> {
    for (&bin, &count) in hist.bins.iter().zip(&hist.counts) {
        if count > 0 && !expected.iter().any(|&(b, _)| b == bin) {
            return Err(Error::KeyMismatch(format!(
                "observed bin {} has no expectation",
                bin
            )));
        }
    }
    if let Some(&(bin, e)) = expected.iter().find(|&&(_, e)| e < 5.0) {
        return Err(Error::InsufficientExpected { bin, expected: e });
    }
    let statistic = expected
        .iter()
        .map(|&(bin, e)| {
            let o = hist.count(bin) as f64;
            (o - e).powi(2) / e
        })
        .sum();
    Ok(ChiSquare {
        statistic,
        dof: expected.len().saturating_sub(1),
    })
}

/// Group contiguous bins so each group's expected count reaches `min`;
/// a short remainder joins the previous group.
pub fn merge_sparse_bins(expected: &[(u32, f64)], min: f64) -> Vec<(Vec<u32>, f64)> {
    let mut groups: Vec<(Vec<u32>, f64)> = Vec::new();
    let mut current: (Vec<u32>, f64) = (Vec::new(), 0.0);
    for &(bin, e) in expected {
        current.0.push(bin);
        current.1 += e;
        if current.1 >= min {
            groups.push(std::mem::take(&mut current));
        }
    }
    if !current.0.is_empty() {
        match groups.last_mut() {
            Some(last) => {
                last.0.extend(current.0);
                last.1 += current.1;
            }
            None => groups.push(current),
        }
    }
    groups
}

/// [`chi_square`] after merging sparse bins of the exact expectation.
pub fn chi_square_merged(hist: &Histogram, expected: &[(u32, f64)]) -> Result<ChiSquare> {
    let groups = merge_sparse_bins(expected, 5.0);
    let mut merged = Histogram {
        observable: hist.observable,
        bins: Vec::new(),
        counts: Vec::new(),
        errors: Vec::new(),
        total: hist.total,
    };
    let mut merged_expected = Vec::new();
    for (k, (bins, e)) in groups.iter().enumerate() {
        let count: u64 = bins.iter().map(|&b| hist.count(b)).sum();
        merged.bins.push(k as u32);
        merged.counts.push(count);
        merged.errors.push((count as f64).sqrt());
        merged_expected.push((k as u32, *e));
    }
    let covered: u64 = merged.counts.iter().sum();
    if covered != hist.total {
        return Err(Error::KeyMismatch(
            "observed bins outside the expected support".into(),
        ));
    }
    chi_square(&merged, &merged_expected)
}

/// Expectation curves of one method over a `λ` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub method: String,
    pub lambdas: Vec<f64>,
    /// Indexed like `lambdas`; one estimate per entry of [`Observable::ALL`].
    pub estimates: Vec<[Estimate; 2]>,
}

impl SweepResult {
    pub fn get(&self, index: usize, observable: Observable) -> Estimate {
        let k = Observable::ALL
            .iter()
            .position(|&o| o == observable)
            .expect("known observable");
        self.estimates[index][k]
    }
}

pub fn check_lambda_grid(grid: &[f64]) -> Result<()> {
    use std::f64::consts::FRAC_PI_2;
    if grid.is_empty() {
        return Err(Error::EmptyStream);
    }
    for &l in grid {
        if !l.is_finite() {
            return Err(Error::NonFinite("lambda grid"));
        }
        if !(0.0..=FRAC_PI_2 + 1e-12).contains(&l) {
            return Err(Error::OutOfRange {
                what: "lambda grid",
                value: l,
            });
        }
    }
    if let Some(w) = grid.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::OutOfRange {
            what: "lambda grid (not increasing)",
            value: w[1],
        });
    }
    Ok(())
}

/// Expectation values of both observables for each method at each `λ`,
/// with an `exact` curve from the matrix-product oracle when `N` permits.
pub fn lambda_sweep(
    template: &ModelConfig,
    grid: &[f64],
    m: usize,
    methods: &[Method],
) -> Result<Vec<SweepResult>> {
    check_lambda_grid(grid)?;
    let mut results: Vec<SweepResult> = methods
        .iter()
        .map(|method| SweepResult {
            method: method.label().to_string(),
            lambdas: grid.to_vec(),
            estimates: Vec::with_capacity(grid.len()),
        })
        .collect();
    let with_exact = template.n_steps <= MATRIX_PRODUCT_MAX_N;
    let mut exact = SweepResult {
        method: "exact".into(),
        lambdas: grid.to_vec(),
        estimates: Vec::new(),
    };
    for &lambda in grid {
        let config = template.with_lambda(lambda);
        for (method, result) in methods.iter().zip(results.iter_mut()) {
            let events = method.sample(&config, m)?;
            result.estimates.push([
                estimate(&events, Observable::ALL[0])?,
                estimate(&events, Observable::ALL[1])?,
            ]);
        }
        if with_exact {
            let dist = matrix_product_distribution(&config)?;
            exact.estimates.push(
                Observable::ALL.map(|o| Estimate::exact(exact_observable_expectation(&dist, o))),
            );
        }
    }
    if with_exact {
        results.push(exact);
    }
    Ok(results)
}

/// `lambda,method,observable,mean,stderr` rows, grouped by `λ`.
pub fn write_sweep_csv<W: Write>(mut out: W, results: &[SweepResult]) -> std::io::Result<()> {
    writeln!(out, "lambda,method,observable,mean,stderr")?;
    let n = results.first().map_or(0, |r| r.lambdas.len());
    for i in 0..n {
        for r in results {
            for (k, obs) in Observable::ALL.iter().enumerate() {
                let e = r.estimates[i][k];
                writeln!(
                    out,
                    "{:.16e},{},{},{:.16e},{:.16e}",
                    r.lambdas[i], r.method, obs, e.mean, e.stderr
                )?;
            }
        }
    }
    Ok(())
}
