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

//! Train a teacher on all synthetic training data and an auxiliary teacher
//! on the public part only.
//!
//! cargo run --example train_teacher

use rona::data::{split, synth, SplitSpec};
use rona::models::{Arch, ModelSpec};
use rona::pipeline::{evaluate, train_aux_teacher, train_teacher, TeacherConfig, TrainingConfig};

fn main() -> rona::Result<()> {
    let train = synth(4, 100, 0)?;
    let test = synth(4, 50, 1)?;
    let (public, sensitive) = split(&train, &SplitSpec::fraction(0.8, 0)?)?;
    let cfg = TrainingConfig::default();
    let spec = ModelSpec::new(Arch::TeacherMicro, 4).with_input(train.sample_shape());

    let teacher = train_teacher(&public, Some(&sensitive), &spec, &TeacherConfig::teacher(&cfg), 0)?;
    let aux = train_aux_teacher(&public, &spec, &TeacherConfig::auxiliary(&cfg), 1)?;
    println!("teacher   test accuracy {:.4}", evaluate(&teacher, &test)?.accuracy);
    println!("auxiliary test accuracy {:.4}", evaluate(&aux, &test)?.accuracy);

    // The auxiliary teacher refuses sensitive samples.
    let err = train_aux_teacher(&sensitive, &spec, &TeacherConfig::auxiliary(&cfg), 1).unwrap_err();
    println!("on sensitive data: {err}");
    Ok(())
}
