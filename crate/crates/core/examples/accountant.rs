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

//! How epsilon grows with the number of sanitized queries, and the noise
//! needed to stay within a budget.
//!
//! cargo run --example accountant

use rona::privacy::{sigma_for_budget, Accountant, DEFAULT_SIGMA_CAP};

fn main() -> rona::Result<()> {
    let (sigma, delta) = (4.845, 1e-5);
    let mut acc = Accountant::new();
    println!("queries  epsilon   (sigma {sigma}, delta {delta})");
    for t in 1..=256u32 {
        acc.accumulate(sigma)?;
        if t.is_power_of_two() {
            println!("{t:>7}  {:.4}", acc.epsilon(delta)?);
        }
    }

    println!("\nsigma for a budget of epsilon 10:");
    for t in [1, 16, 64, 256, 1024] {
        println!("{t:>7}  {:.4}", sigma_for_budget(t, 10.0, delta, DEFAULT_SIGMA_CAP)?);
    }
    Ok(())
}
