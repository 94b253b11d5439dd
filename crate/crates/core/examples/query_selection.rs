// Copyright 2026 The rona Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Pick query samples from a pool of student output distributions and
//! compare the cover radius of each selector.
//!
//! cargo run --example query_selection

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rona::nn::{softmax_temp, Tensor};
use rona::query_select::{cover_radius, select, Selector};

fn main() -> rona::Result<()> {
    let (pool, classes, n_q) = (200, 10, 20);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let logits: Vec<f32> = (0..pool * classes).map(|_| rng.random_range(-3.0..3.0)).collect();
    let probs = softmax_temp(&Tensor::new(vec![pool, classes], logits)?, 1.0)?;

    println!("selector  radius");
    for kind in Selector::ALL {
        let qs = select(kind, &probs, n_q, &mut ChaCha8Rng::seed_from_u64(0))?;
        println!("{:<9} {:.4}", kind.name(), cover_radius(&probs, &qs)?.lambda);
    }
    Ok(())
}
