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

//! Full private compression on synthetic data: hint learning, then rounds of
//! self learning and distillation from sanitized teacher outputs.
//!
//! cargo run --example private_distill [eps_budget]

use rona::data::{split, synth, SplitSpec};
use rona::models::{Arch, ModelSpec};
use rona::pipeline::{train_aux_teacher, train_teacher, StudentRun, TeacherConfig, TrainingConfig};

fn main() -> rona::Result<()> {
    let budget = std::env::args().nth(1).unwrap_or_else(|| "10".into());
    let train = synth(4, 100, 0)?;
    let test = synth(4, 50, 1)?;
    let (public, sensitive) = split(&train, &SplitSpec::fraction(0.8, 0)?)?;

    let mut cfg = TrainingConfig::default();
    cfg.set("eps_budget", &budget)?;
    let tspec = ModelSpec::new(Arch::TeacherMicro, 4).with_input(train.sample_shape());
    let teacher = train_teacher(&public, Some(&sensitive), &tspec, &TeacherConfig::teacher(&cfg), 0)?;
    let aux = train_aux_teacher(&public, &tspec, &TeacherConfig::auxiliary(&cfg), 1)?;

    let sspec = ModelSpec::new(Arch::StudentMicro, 4).with_input(train.sample_shape());
    let mut run = StudentRun::new(&cfg, &teacher, Some(&aux), &public, Some(&test), &sspec)?;
    println!("sigma {:.4} for {} planned charges", run.sigma(), run.planned_charges());
    run.hint_stage()?;
    println!("after hints: epsilon {:.4}", run.accountant().epsilon(cfg.delta)?);
    run.distill_self_stage()?;
    let (_, report) = run.finish()?;
    print!("{}", report.summary());
    Ok(())
}
