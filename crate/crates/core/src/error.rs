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

use thiserror::Error;

/// Errors produced by the tree models, oracles, circuits and samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("amplitudes are not decouplable: {0}")]
    NotDecouplable(String),

    #[error("left and right rotation equations disagree (residual {residual:e})")]
    InconsistentAmplitudes { residual: f64 },

    #[error("closed form is singular: diagonal left amplitudes are equal")]
    DegenerateDenominator,

    #[error("{what}: N = {n} exceeds the limit of {limit}")]
    TooLarge {
        what: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("selected measurement branch has vanishing probability {0:e}")]
    DegenerateBranch(f64),

    #[error("outcome spaces differ: {0}")]
    KeyMismatch(String),

    #[error("empty event stream")]
    EmptyStream,

    #[error("bin {bin} has expected count {expected} < 5")]
    InsufficientExpected { bin: u32, expected: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
