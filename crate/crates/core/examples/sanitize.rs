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

//! Clip a loss vector to a bound and add Gaussian noise scaled to it.
//!
//! cargo run --example sanitize

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rona::losses::LossVector;
use rona::privacy::{clip, sanitize, BoundMode, BoundTracker, SanitizeParams};

fn main() -> rona::Result<()> {
    let losses = LossVector::new(vec![3.0, 4.0, 0.5, 1.5]);
    println!("norm {:.4}", losses.norm());
    for bound in [10.0, 2.0, 0.5] {
        let c = clip(&losses, bound);
        let v: Vec<String> = c.values().iter().map(|x| format!("{x:.3}")).collect();
        println!("clip to {bound:>4}: [{}] (norm {:.4})", v.join(", "), c.norm());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for sigma in [0.0, 0.1, 1.0] {
        let params = SanitizeParams::new(sigma, BoundMode::Fixed(2.0))?;
        let s = sanitize(&losses, &params, 2.0, &mut rng)?;
        let v: Vec<String> = s.values.values().iter().map(|x| format!("{x:+.3}")).collect();
        println!("sigma {sigma:<3} -> [{}], clip factor {:.4}", v.join(", "), s.scale);
    }

    // Adaptive bound: moving average of auxiliary-teacher loss norms.
    let mut tracker = BoundTracker::new(0.9)?;
    for norm in [5.0, 4.0, 3.0, 2.0] {
        let b = tracker.update(&LossVector::new(vec![norm]));
        println!("aux loss norm {norm} -> bound {b:.4}");
    }
    Ok(())
}
