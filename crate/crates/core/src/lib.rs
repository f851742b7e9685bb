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

//! Sampling from interfering binary trees.
//!
//! A quantum tree is a depth-`N` binary tree carrying a hidden spin. The
//! amplitude for each left/right move depends on the spin, and the spin may
//! flip at every step. Only the leaf (the path) and the final spin are
//! observed, so distinct spin histories ending at the same leaf interfere.
//!
//! The crate is organized as follows:
//!
//! * [`model`]: step amplitudes in the original and decoupled spin bases,
//!   the rotation-angle solver and run configuration.
//! * [`oracle`]: exact, exponential-cost outcome distributions.
//! * [`circuit`]: the `(N+1)`-qubit circuit, its decomposition into `ry`,
//!   `x` and `cx` gates, a real statevector simulator and OpenQASM export.
//! * [`samplers`]: linear-time event generators (two-qubit repeated
//!   measurement and its classical counterpart) and the naive Markov chain.
//! * [`analysis`]: observables, histograms and goodness-of-fit statistics.
//!
//! Outcomes are indexed as `(path << 1) | spin`, with step 1 in the least
//! significant path bit and a set bit meaning the path went left.

pub mod analysis;
pub mod circuit;
mod error;
pub mod event;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
pub use event::Event;
pub use model::{DecoupledParams, ModelConfig, StepAmplitudes};
pub use oracle::OutcomeDistribution;
