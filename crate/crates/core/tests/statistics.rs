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

//! Fixed-seed statistical checks of every sampler against the exact oracle.

use itree::analysis::{
    chi_square_merged, estimate, exact_bin_probabilities, histogram, tv_distance, Observable,
};
use itree::oracle::{
    exact_observable_expectation, matrix_product_distribution, OutcomeDistribution,
};
use itree::samplers::{naive_mcmc_distribution, Method};
use itree::ModelConfig;

const QUANTUM: [Method; 3] = [Method::Statevector, Method::TwoQubit, Method::Qica];

fn reference_config(n: usize, lambda: f64, seed: u64) -> ModelConfig {
    ModelConfig::uniform(n, lambda, 0.8, 0.5, 1.0, seed).unwrap()
}

#[test]
fn empirical_distribution_converges() {
    let config = reference_config(4, 0.5, 11);
    let exact = matrix_product_distribution(&config).unwrap();
    for method in QUANTUM {
        let events = method.sample(&config, 1_000_000).unwrap();
        let empirical = OutcomeDistribution::from_events(4, &events).unwrap();
        let tv = tv_distance(&empirical, &exact).unwrap();
        assert!(tv < 0.005, "{}: tv = {}", method, tv);
    }
}

#[test]
fn histograms_pass_chi_square() {
    let config = reference_config(4, 0.7, 5);
    let exact = matrix_product_distribution(&config).unwrap();
    let m = 100_000;
    for method in QUANTUM {
        let events = method.sample(&config, m).unwrap();
        for obs in Observable::ALL {
            let expected: Vec<(u32, f64)> = exact_bin_probabilities(&exact, obs)
                .into_iter()
                .map(|(b, p)| (b, p * m as f64))
                .collect();
            let chi = chi_square_merged(&histogram(&events, obs).unwrap(), &expected).unwrap();
            assert!(chi.within(5.0), "{} {}: {:?}", method, obs, chi);
        }
    }
}

#[test]
fn lambda_zero_closed_forms() {
    let n = 20;
    let p: f64 = 0.8;
    let lefts = n as f64 * p;
    let depth = (1..=n)
        .map(|k| k as f64 * p * (1.0 - p).powi(k as i32 - 1))
        .sum::<f64>()
        + (n + 1) as f64 * (1.0 - p).powi(n as i32);
    assert!((lefts - 16.0).abs() < 1e-12);
    assert!((depth - 1.25).abs() < 1e-12);

    let config = reference_config(n, 0.0, 3);
    let exact = matrix_product_distribution(&config).unwrap();
    assert!(
        (exact_observable_expectation(&exact, Observable::NumLeftBranches) - lefts).abs() < 1e-10
    );
    assert!(
        (exact_observable_expectation(&exact, Observable::FirstLeftDepth) - depth).abs() < 1e-10
    );

    for method in [Method::TwoQubit, Method::Qica, Method::Mcmc] {
        let events = method.sample(&config, 100_000).unwrap();
        let e = estimate(&events, Observable::NumLeftBranches).unwrap();
        assert!(e.pull(lefts).abs() < 3.0, "{}: {:?}", method, e);
        let e = estimate(&events, Observable::FirstLeftDepth).unwrap();
        assert!(e.pull(depth).abs() < 3.0, "{}: {:?}", method, e);
    }
}

#[test]
fn mcmc_matches_only_without_interference() {
    for lambda in [0.0, std::f64::consts::FRAC_PI_2] {
        let config = reference_config(6, lambda, 1);
        let truth = matrix_product_distribution(&config).unwrap();
        let mcmc = naive_mcmc_distribution(&config).unwrap();
        assert!(
            tv_distance(&truth, &mcmc).unwrap() < 1e-12,
            "lambda = {}",
            lambda
        );
    }
    let config = reference_config(6, 0.5, 1);
    let truth = matrix_product_distribution(&config).unwrap();
    let mcmc = naive_mcmc_distribution(&config).unwrap();
    assert!(tv_distance(&truth, &mcmc).unwrap() > 0.01);
}

#[test]
fn samplers_are_reproducible() {
    let config = reference_config(8, 0.4, 99);
    for method in Method::ALL {
        let a = method.sample(&config, 2_000).unwrap();
        let b = method.sample(&config, 2_000).unwrap();
        assert_eq!(a, b, "{}", method);
        let other = method
            .sample(
                &ModelConfig {
                    seed: 100,
                    ..config.clone()
                },
                2_000,
            )
            .unwrap();
        assert_ne!(a, other, "{}", method);
    }
}

#[test]
fn literal_variant_differs_when_rotated() {
    let config = reference_config(4, 0.5, 2);
    let exact = matrix_product_distribution(&config).unwrap();
    let events = Method::QicaLiteral.sample(&config, 100_000).unwrap();
    let empirical = OutcomeDistribution::from_events(4, &events).unwrap();
    assert!(tv_distance(&empirical, &exact).unwrap() > 0.05);

    let unrotated = config.with_lambda(0.0);
    let exact = matrix_product_distribution(&unrotated).unwrap();
    let events = Method::QicaLiteral.sample(&unrotated, 100_000).unwrap();
    let empirical = OutcomeDistribution::from_events(4, &events).unwrap();
    assert!(tv_distance(&empirical, &exact).unwrap() < 0.01);
}
