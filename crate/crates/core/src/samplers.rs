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

//! Event generators.
//!
//! The two-qubit sampler and its classical counterpart cost `O(N)` per
//! event and reproduce the full circuit's distribution exactly. The naive
//! Markov chain samples squared amplitudes step by step and so drops every
//! interference term.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::circuit::sample_events_statevector;
use crate::error::{Error, Result};
use crate::event::Event;
use crate::model::{
    mat_vec, rotation, transpose, DecoupledParams, Mat2, ModelConfig, StepMatrices,
};
use crate::oracle::{OutcomeDistribution, BRUTE_FORCE_MAX_N, MATRIX_PRODUCT_MAX_N};
use crate::rng::{event_rng, uniform};

pub const ENUMERATION_MAX_N: usize = BRUTE_FORCE_MAX_N;

/// Selected branches below this probability are treated as unreachable.
const MIN_BRANCH_PROB: f64 = 1e-300;

pub type Mat4 = [[f64; 4]; 4];

/// State of the (path, spin) qubit pair; index `2·spin + path`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    pub amps: [f64; 4],
}

impl TwoQubitState {
    /// Path qubit reset to `|0⟩`, spin amplitudes `(a1, a3)`.
    pub fn reduced(a1: f64, a3: f64) -> Self {
        TwoQubitState {
            amps: [a1, 0.0, a3, 0.0],
        }
    }

    pub fn spin_amplitudes(&self) -> [f64; 2] {
        [self.amps[0], self.amps[2]]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a * a).sum()
    }
}

/// `U_k`: the spin-controlled path rotations of one step, block diagonal
/// in the spin. Each block sends `|0⟩` to `sin θ|0⟩ + cos θ|1⟩`.
pub fn step_unitary(params: &DecoupledParams, step: usize) -> Mat4 {
    let (sd, cd) = params.theta_down[step].sin_cos();
    let (su, cu) = params.theta_up[step].sin_cos();
    [
        [sd, -cd, 0.0, 0.0],
        [cd, sd, 0.0, 0.0],
        [0.0, 0.0, su, -cu],
        [0.0, 0.0, cu, su],
    ]
}

/// Apply `U`, measure the path qubit against `draw` and reset it.
///
/// Returns the measured bit (`true` = left) and the renormalized state.
pub fn two_qubit_step(
    state: &TwoQubitState,
    unitary: &Mat4,
    draw: f64,
) -> Result<(bool, TwoQubitState)> {
    let mut b = [0.0; 4];
    for (i, bi) in b.iter_mut().enumerate() {
        *bi = unitary[i][0] * state.amps[0]
            + unitary[i][1] * state.amps[1]
            + unitary[i][2] * state.amps[2]
            + unitary[i][3] * state.amps[3];
    }
    let p0 = b[0] * b[0] + b[2] * b[2];
    let p1 = b[1] * b[1] + b[3] * b[3];
    let (bit, p, lo, hi) = if draw < p0 {
        (false, p0, b[0], b[2])
    } else {
        (true, p1, b[1], b[3])
    };
    if p < MIN_BRANCH_PROB {
        return Err(Error::DegenerateBranch(p));
    }
    let norm = p.sqrt();
    Ok((bit, TwoQubitState::reduced(lo / norm, hi / norm)))
}

/// Operation tally for the linear-time samplers.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCount {
    /// Fixed-size 4x4 step updates.
    pub steps: u64,
    /// Uniform draws.
    pub draws: u64,
    /// Fixed-size 2x2 spin rotations.
    pub rotations: u64,
}

fn final_spin(a1: f64, a3: f64, draw: f64) -> bool {
    draw >= a1 * a1 / (a1 * a1 + a3 * a3)
}

/// One event of the two-qubit repeated-measurement circuit.
///
/// The spin starts in `initial`, is rotated by `R(λ)`, runs through the
/// steps (one draw each) and is rotated back by `R†(λ)` before the final
/// spin draw.
pub fn two_qubit_event<R: Rng + ?Sized>(
    params: &DecoupledParams,
    initial: [f64; 2],
    rng: &mut R,
    ops: &mut OpCount,
) -> Result<Event> {
    let r = rotation(params.lambda);
    let spin = mat_vec(&r, initial);
    ops.rotations += 1;
    let mut state = TwoQubitState::reduced(spin[0], spin[1]);
    let mut path = Vec::with_capacity(params.n_steps());
    for step in 0..params.n_steps() {
        let draw = uniform(rng);
        let (bit, next) = two_qubit_step(&state, &step_unitary(params, step), draw)?;
        ops.steps += 1;
        ops.draws += 1;
        path.push(bit);
        state = next;
    }
    let back = mat_vec(&transpose(&r), state.spin_amplitudes());
    ops.rotations += 1;
    ops.draws += 1;
    Ok(Event::new(final_spin(back[0], back[1], uniform(rng)), path))
}

fn par_events<F>(m: usize, f: F) -> Result<Vec<Event>>
where
    F: Fn(u64) -> Result<Event> + Sync + Send,
{
    (0..m as u64).into_par_iter().map(f).collect()
}

/// `m` events from the two-qubit circuit; event `i` uses stream `(seed, i)`.
pub fn two_qubit_sample(config: &ModelConfig, m: usize) -> Result<Vec<Event>> {
    let params = config.params();
    let initial = config.initial_spin();
    par_events(m, |i| {
        two_qubit_event(
            &params,
            initial,
            &mut event_rng(config.seed, i),
            &mut OpCount::default(),
        )
    })
}

/// One event of the quantum-inspired classical algorithm.
///
/// With `literal` the basis rotations are skipped and the steps act on the
/// initial spin amplitudes directly.
pub fn qica_event<R: Rng + ?Sized>(
    params: &DecoupledParams,
    a: f64,
    literal: bool,
    rng: &mut R,
) -> Event {
    let mut a1 = a;
    let mut a3 = (1.0 - a * a).max(0.0).sqrt();
    let (s, c) = params.lambda.sin_cos();
    if !literal {
        (a1, a3) = (c * a1 - s * a3, s * a1 + c * a3);
    }
    let mut path = Vec::with_capacity(params.n_steps());
    for step in 0..params.n_steps() {
        let u = step_unitary(params, step);
        let b: [f64; 4] = std::array::from_fn(|i| u[i][0] * a1 + u[i][2] * a3);
        let p0 = b[0] * b[0] + b[2] * b[2];
        let p1 = b[1] * b[1] + b[3] * b[3];
        if uniform(rng) < p0 {
            path.push(false);
            a1 = b[0] / p0.sqrt();
            a3 = b[2] / p0.sqrt();
        } else {
            path.push(true);
            a1 = b[1] / p1.sqrt();
            a3 = b[3] / p1.sqrt();
        }
    }
    if !literal {
        (a1, a3) = (c * a1 + s * a3, -s * a1 + c * a3);
    }
    Event::new(final_spin(a1, a3, uniform(rng)), path)
}

/// `m` events of the classical algorithm; stream layout as in
/// [`two_qubit_sample`].
pub fn qica_sample(config: &ModelConfig, m: usize, literal: bool) -> Vec<Event> {
    let params = config.params();
    (0..m as u64)
        .into_par_iter()
        .map(|i| {
            qica_event(
                &params,
                config.initial_a,
                literal,
                &mut event_rng(config.seed, i),
            )
        })
        .collect()
}

/// Exact two-qubit distribution: walk every branch of the measurement tree
/// and multiply the conditional probabilities.
pub fn enumerate_two_qubit_distribution(config: &ModelConfig) -> Result<OutcomeDistribution> {
    let n = config.n_steps;
    if n > ENUMERATION_MAX_N {
        return Err(Error::TooLarge {
            what: "two-qubit enumeration",
            n,
            limit: ENUMERATION_MAX_N,
        });
    }
    let params = config.params();
    let unitaries: Vec<Mat4> = (0..n).map(|k| step_unitary(&params, k)).collect();
    let r = rotation(params.lambda);
    let rt = transpose(&r);
    let spin = mat_vec(&r, config.initial_spin());
    let mut probs = vec![0.0; 1 << (n + 1)];

    struct Frame {
        step: usize,
        path: usize,
        prob: f64,
        state: TwoQubitState,
        // Unnormalized spin amplitudes, carried to cross-check the chain.
        raw: [f64; 2],
    }
    let mut stack = vec![Frame {
        step: 0,
        path: 0,
        prob: 1.0,
        state: TwoQubitState::reduced(spin[0], spin[1]),
        raw: spin,
    }];
    while let Some(f) = stack.pop() {
        if f.step == n {
            let a = mat_vec(&rt, f.state.spin_amplitudes());
            let p_down = a[0] * a[0] / (a[0] * a[0] + a[1] * a[1]);
            let raw = mat_vec(&rt, f.raw);
            for (spin, p_spin) in [(0usize, p_down), (1, 1.0 - p_down)] {
                let p = f.prob * p_spin;
                assert!(
                    (p - raw[spin] * raw[spin]).abs() <= 1e-12,
                    "conditional chain {} disagrees with amplitude {}",
                    p,
                    raw[spin] * raw[spin]
                );
                probs[(f.path << 1) | spin] = p;
            }
            continue;
        }
        let u = &unitaries[f.step];
        let s = f.state.amps;
        let b: [f64; 4] = std::array::from_fn(|i| u[i][0] * s[0] + u[i][2] * s[2]);
        let raw_b: [f64; 4] = std::array::from_fn(|i| u[i][0] * f.raw[0] + u[i][2] * f.raw[1]);
        for (bit, lo, hi) in [(0usize, 0usize, 2usize), (1, 1, 3)] {
            let p = b[lo] * b[lo] + b[hi] * b[hi];
            if f.prob * p == 0.0 {
                continue;
            }
            let norm = p.sqrt();
            stack.push(Frame {
                step: f.step + 1,
                path: f.path | (bit << f.step),
                prob: f.prob * p,
                state: TwoQubitState::reduced(b[lo] / norm, b[hi] / norm),
                raw: [raw_b[lo], raw_b[hi]],
            });
        }
    }
    let mut dist = OutcomeDistribution::new(n, probs, "two-qubit-enum")?;
    dist.config_hash = crate::oracle::config_hash(config);
    Ok(dist)
}

fn squared(m: &Mat2) -> Mat2 {
    [
        [m[0][0] * m[0][0], m[0][1] * m[0][1]],
        [m[1][0] * m[1][0], m[1][1] * m[1][1]],
    ]
}

/// One naive Markov-chain event: draw the initial spin from `(a², 1−a²)`,
/// then at each step one of (left, right) × (final spin) with probability
/// equal to the squared original-basis amplitude. The final spin is the
/// last latent spin.
pub fn mcmc_event<R: Rng + ?Sized>(
    matrices: &[StepMatrices],
    initial: [f64; 2],
    rng: &mut R,
) -> Event {
    let mut spin = usize::from(uniform(rng) >= initial[0] * initial[0]);
    let mut path = Vec::with_capacity(matrices.len());
    for m in matrices {
        let options = [
            (true, 0usize, m.left[0][spin]),
            (true, 1, m.left[1][spin]),
            (false, 0, m.right[0][spin]),
            (false, 1, m.right[1][spin]),
        ];
        let u = uniform(rng);
        let mut acc = 0.0;
        let mut chosen = None;
        for &(left, next, amp) in &options {
            let p = amp * amp;
            if p == 0.0 {
                continue;
            }
            acc += p;
            chosen = Some((left, next));
            if u < acc {
                break;
            }
        }
        let (left, next) = chosen.expect("step matrices carry probability mass");
        path.push(left);
        spin = next;
    }
    Event::new(spin == 1, path)
}

/// `m` naive Markov-chain events; event `i` uses stream `(seed, i)`.
pub fn naive_mcmc_sample(config: &ModelConfig, m: usize) -> Vec<Event> {
    let matrices = config.transfer_matrices();
    let initial = config.initial_spin();
    (0..m as u64)
        .into_par_iter()
        .map(|i| mcmc_event(&matrices, initial, &mut event_rng(config.seed, i)))
        .collect()
}

/// Exact distribution of the naive Markov chain (squared transfer matrices).
pub fn naive_mcmc_distribution(config: &ModelConfig) -> Result<OutcomeDistribution> {
    let n = config.n_steps;
    if n > MATRIX_PRODUCT_MAX_N {
        return Err(Error::TooLarge {
            what: "naive chain enumeration",
            n,
            limit: MATRIX_PRODUCT_MAX_N,
        });
    }
    let sq: Vec<(Mat2, Mat2)> = config
        .transfer_matrices()
        .iter()
        .map(|m| (squared(&m.left), squared(&m.right)))
        .collect();
    let init = config.initial_spin();
    let init = [init[0] * init[0], init[1] * init[1]];
    let mut probs = vec![0.0; 1 << (n + 1)];
    probs
        .par_chunks_mut(2)
        .enumerate()
        .for_each(|(path, slot)| {
            let v = sq.iter().enumerate().fold(init, |v, (k, (l, r))| {
                mat_vec(if (path >> k) & 1 == 1 { l } else { r }, v)
            });
            slot.copy_from_slice(&v);
        });
    let mut dist = OutcomeDistribution::new(n, probs, "mcmc-exact")?;
    dist.config_hash = crate::oracle::config_hash(config);
    Ok(dist)
}

/// Event generators exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Statevector,
    TwoQubit,
    Qica,
    QicaLiteral,
    Mcmc,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Statevector,
        Method::TwoQubit,
        Method::Qica,
        Method::QicaLiteral,
        Method::Mcmc,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Statevector => "statevector",
            Method::TwoQubit => "two-qubit",
            Method::Qica => "qica",
            Method::QicaLiteral => "qica-literal",
            Method::Mcmc => "mcmc",
        }
    }

    pub fn sample(&self, config: &ModelConfig, m: usize) -> Result<Vec<Event>> {
        match self {
            Method::Statevector => sample_events_statevector(config, m),
            Method::TwoQubit => two_qubit_sample(config, m),
            Method::Qica => Ok(qica_sample(config, m, false)),
            Method::QicaLiteral => Ok(qica_sample(config, m, true)),
            Method::Mcmc => Ok(naive_mcmc_sample(config, m)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.label() == s)
            .ok_or_else(|| Error::Parse(format!("unknown method {:?}", s)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::statevector_run;
    use crate::oracle::brute_force_distribution;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn always_left_at_zero_angles() {
        let params = DecoupledParams::uniform(0.0, 0.0, 0.0, 1).unwrap();
        let (bit, next) = two_qubit_step(
            &TwoQubitState::reduced(1.0, 0.0),
            &step_unitary(&params, 0),
            0.3,
        )
        .unwrap();
        assert!(bit);
        assert_eq!(next, TwoQubitState::reduced(1.0, 0.0));
    }

    #[test]
    fn decoupled_bernoulli_step() {
        let cfg = ModelConfig::uniform(3, 0.0, 0.8, 0.5, 1.0, 0).unwrap();
        let params = cfg.params();
        let u = step_unitary(&params, 0);
        let s = TwoQubitState::reduced(1.0, 0.0);
        let (bit, _) = two_qubit_step(&s, &u, 0.19999).unwrap();
        assert!(!bit);
        let (bit, _) = two_qubit_step(&s, &u, 0.20001).unwrap();
        assert!(bit);
    }

    #[test]
    fn branch_probabilities_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let params = DecoupledParams::uniform(
                0.0,
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                1,
            )
            .unwrap();
            let t: f64 = rng.random_range(0.0..6.3);
            let state = TwoQubitState::reduced(t.cos(), t.sin());
            let u = step_unitary(&params, 0);
            let b: [f64; 4] =
                std::array::from_fn(|i| (0..4).map(|j| u[i][j] * state.amps[j]).sum());
            assert_abs_diff_eq!(b.iter().map(|x| x * x).sum::<f64>(), 1.0, epsilon = 1e-12);
            let (_, next) = two_qubit_step(&state, &u, rng.random()).unwrap();
            assert_abs_diff_eq!(next.norm_sqr(), 1.0, epsilon = 1e-12);
            assert_eq!(next.amps[1], 0.0);
            assert_eq!(next.amps[3], 0.0);
        }
    }

    #[test]
    fn degenerate_branch_reported() {
        // All mass stays on path 0; a draw of 1.0 still selects path 1.
        let u = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let err = two_qubit_step(&TwoQubitState::reduced(1.0, 0.0), &u, 1.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateBranch(_)));
    }

    #[test]
    fn zero_lambda_never_leaves_down_tree() {
        let cfg = ModelConfig::uniform(6, 0.0, 0.8, 0.5, 1.0, 3).unwrap();
        assert!(two_qubit_sample(&cfg, 2000)
            .unwrap()
            .iter()
            .all(|e| !e.spin));
    }

    #[test]
    fn certain_left_with_unit_probability() {
        let cfg = ModelConfig::uniform(5, 0.0, 1.0, 0.5, 1.0, 3).unwrap();
        for ev in qica_sample(&cfg, 500, false) {
            assert!(!ev.spin);
            assert!(ev.path.iter().all(|&b| b));
        }
    }

    #[test]
    fn samplers_are_deterministic() {
        let cfg = ModelConfig::uniform(5, 0.5, 0.8, 0.5, 1.0, 17).unwrap();
        assert_eq!(
            two_qubit_sample(&cfg, 300).unwrap(),
            two_qubit_sample(&cfg, 300).unwrap()
        );
        assert_eq!(naive_mcmc_sample(&cfg, 300), naive_mcmc_sample(&cfg, 300));
        let other = ModelConfig {
            seed: 18,
            ..cfg.clone()
        };
        assert_ne!(
            two_qubit_sample(&cfg, 300).unwrap(),
            two_qubit_sample(&other, 300).unwrap()
        );
    }

    #[test]
    fn qica_matches_two_qubit_on_shared_stream() {
        let cfg = ModelConfig::from_probabilities(
            7,
            0.6,
            &[0.8, 0.1, 0.5, 0.9, 0.3, 0.7, 0.2],
            &[0.5],
            0.3,
            4,
        )
        .unwrap();
        let params = cfg.params();
        let mut r1 = ChaCha8Rng::seed_from_u64(77);
        let mut r2 = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..2000 {
            let a = two_qubit_event(
                &params,
                cfg.initial_spin(),
                &mut r1,
                &mut OpCount::default(),
            )
            .unwrap();
            let b = qica_event(&params, cfg.initial_a, false, &mut r2);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn per_event_cost_is_linear() {
        for n in [1usize, 5, 20, 80] {
            let cfg = ModelConfig::uniform(n, 0.5, 0.8, 0.5, 0.6, 0).unwrap();
            let params = cfg.params();
            let mut ops = OpCount::default();
            let mut rng = event_rng(1, 0);
            two_qubit_event(&params, cfg.initial_spin(), &mut rng, &mut ops).unwrap();
            assert_eq!(
                ops,
                OpCount {
                    steps: n as u64,
                    draws: n as u64 + 1,
                    rotations: 2
                }
            );
        }
    }

    #[test]
    fn enumeration_matches_oracle_quarter_turn() {
        let cfg = ModelConfig::uniform(1, FRAC_PI_4, 0.8, 0.5, 1.0, 0).unwrap();
        let e = enumerate_two_qubit_distribution(&cfg).unwrap();
        let b = brute_force_distribution(&cfg).unwrap();
        assert!(e.max_abs_diff(&b).unwrap() < 1e-15);
        assert!(e.is_normalized());
    }

    #[test]
    fn enumeration_matches_statevector() {
        let cfg = ModelConfig::from_probabilities(
            6,
            -0.8,
            &[0.8, 0.1, 0.5, 0.9, 0.3, 0.7],
            &[0.5, 0.2, 0.6, 0.99, 0.01, 0.4],
            -0.45,
            0,
        )
        .unwrap();
        let e = enumerate_two_qubit_distribution(&cfg).unwrap();
        let s = statevector_run(&cfg).unwrap();
        assert!(e.max_abs_diff(&s).unwrap() < 1e-10);
        assert!(matches!(
            enumerate_two_qubit_distribution(
                &ModelConfig::uniform(15, 0.1, 0.8, 0.5, 1.0, 0).unwrap()
            ),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn mcmc_exact_where_no_interference() {
        for lambda in [0.0, FRAC_PI_2] {
            let cfg = ModelConfig::uniform(5, lambda, 0.8, 0.5, 1.0, 0).unwrap();
            let naive = naive_mcmc_distribution(&cfg).unwrap();
            let exact = brute_force_distribution(&cfg).unwrap();
            assert!(
                naive.max_abs_diff(&exact).unwrap() < 1e-10,
                "lambda {}",
                lambda
            );
        }
        let cfg = ModelConfig::uniform(5, 0.5, 0.8, 0.5, 1.0, 0).unwrap();
        let naive = naive_mcmc_distribution(&cfg).unwrap();
        let exact = brute_force_distribution(&cfg).unwrap();
        assert!(naive.max_abs_diff(&exact).unwrap() > 1e-3);
        assert!(naive.is_normalized());
    }

    #[test]
    fn mcmc_first_step_probability() {
        let cfg = ModelConfig::uniform(1, 0.0, 0.8, 0.5, 1.0, 9).unwrap();
        let events = naive_mcmc_sample(&cfg, 20000);
        let left = events.iter().filter(|e| e.path[0]).count() as f64 / 20000.0;
        assert!((left - 0.8).abs() < 4.0 * (0.16f64 / 20000.0).sqrt());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.label().parse::<Method>().unwrap(), m);
        }
        assert!("gibbs".parse::<Method>().is_err());
    }
}
