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

//! Four-class synthetic setup shared by the pipeline tests and the
//! end-to-end acceptance run.

use rona::data::{split, synth, Dataset, SplitSpec};
use rona::models::{Arch, ModelSpec};
use rona::nn::Network;
use rona::pipeline::{run_student, train_aux_teacher, train_teacher, RunReport, TeacherConfig, TrainingConfig};

pub struct Synth {
    pub public: Dataset,
    pub sensitive: Dataset,
    pub test: Dataset,
    pub teacher: Network,
    pub aux: Network,
}

pub fn spec(arch: Arch, ds: &Dataset) -> ModelSpec {
    ModelSpec::new(arch, ds.class_count()).with_input(ds.sample_shape())
}

/// Data split 80/20 public/sensitive, with teachers trained at the defaults.
pub fn setup(per_class: usize, seed: u64) -> Synth {
    let train = synth(4, per_class, seed).unwrap();
    let test = synth(4, 50, seed + 1).unwrap();
    let (public, sensitive) = split(&train, &SplitSpec::fraction(0.8, seed).unwrap()).unwrap();
    let cfg = TrainingConfig::default();
    let tspec = spec(Arch::TeacherMicro, &train);
    let teacher = train_teacher(&public, Some(&sensitive), &tspec, &TeacherConfig::teacher(&cfg), seed).unwrap();
    let aux = train_aux_teacher(&public, &tspec, &TeacherConfig::auxiliary(&cfg), seed + 1).unwrap();
    Synth { public, sensitive, test, teacher, aux }
}

/// Training config with `key=value` overrides applied on top of the defaults.
pub fn config(overrides: &[(&str, &str)]) -> TrainingConfig {
    let mut cfg = TrainingConfig::default();
    for (k, v) in overrides {
        cfg.set(k, v).unwrap();
    }
    cfg
}

impl Synth {
    pub fn run(&self, cfg: &TrainingConfig) -> (Network, RunReport) {
        run_student(cfg, &self.teacher, Some(&self.aux), &self.public, Some(&self.test), &spec(Arch::StudentMicro, &self.public))
            .unwrap()
    }
}
