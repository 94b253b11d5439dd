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

//! Layer tables of the built-in architectures and a timing comparison of a
//! teacher with its student.
//!
//! cargo run --example architectures

use rona::models::{build, describe, Arch, ModelSpec};
use rona::nn::Tensor;
use rona::pipeline::{compression_report, MIN_TIMING_RUNS};

fn main() -> rona::Result<()> {
    for arch in Arch::ALL {
        let net = build(&ModelSpec::new(arch, 10), 0)?;
        println!("{arch}: {} parameters\n{}", net.param_count(), describe(&net));
    }
    let teacher = build(&ModelSpec::new(Arch::TeacherSmall, 10), 0)?;
    let student = build(&ModelSpec::new(Arch::StudentSmall, 10), 0)?;
    let r = compression_report(&teacher, &student, &Tensor::zeros(&[256, 1, 28, 28]), MIN_TIMING_RUNS)?;
    println!("params {:.1}x smaller, inference {:.1}x faster", r.param_ratio(), r.speedup());
    Ok(())
}
