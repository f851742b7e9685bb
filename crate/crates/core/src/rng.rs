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

//! Per-event random streams.
//!
//! Every event owns a ChaCha8 stream selected by `(seed, event index)`, so
//! event `i` is the same no matter how events are split across threads.
//! The linear-time samplers consume exactly `N + 1` uniforms per event: one
//! per step, in step order, then one for the final spin. The naive Markov
//! chain draws the initial spin first, then one uniform per step.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type EventRng = ChaCha8Rng;

/// Independent stream for event `index` under `seed`.
pub fn event_rng(seed: u64, index: u64) -> EventRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
pub fn uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
