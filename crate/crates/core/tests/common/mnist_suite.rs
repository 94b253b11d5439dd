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

//! Desk-scale MNIST runs driven by `configs/mnist.cfg`.

use std::fs;
use std::path::{Path, PathBuf};

use rona::cli::{load_data, Data, RunConfig};
use rona::data::{split, Dataset, SplitSpec};
use rona::models::{Arch, ModelSpec};
use rona::nn::Network;
use rona::pipeline::{run_student, train_aux_teacher, train_teacher, RunReport, TeacherConfig};

pub fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The shared configuration with data paths made absolute.
pub fn config() -> RunConfig {
    let root = repo_root();
    let mut cfg = RunConfig::default();
    cfg.apply_text(&fs::read_to_string(root.join("configs/mnist.cfg")).unwrap()).unwrap();
    for p in [
        &mut cfg.data.train_images,
        &mut cfg.data.train_labels,
        &mut cfg.data.test_images,
        &mut cfg.data.test_labels,
    ] {
        *p = p.take().map(|p| root.join(p));
    }
    cfg
}

pub fn available() -> bool {
    let cfg = config();
    [&cfg.data.train_images, &cfg.data.train_labels, &cfg.data.test_images, &cfg.data.test_labels]
        .iter()
        .all(|p| p.as_ref().is_some_and(|p| p.is_file()))
}

pub fn spec(arch: Arch, ds: &Dataset) -> ModelSpec {
    ModelSpec::new(arch, ds.class_count()).with_input(ds.sample_shape())
}

pub struct Mnist {
    pub cfg: RunConfig,
    pub data: Data,
    pub teacher: Network,
    pub aux: Network,
}

impl Mnist {
    /// Load the 40% public split and train both teachers.
    pub fn setup() -> Mnist {
        let cfg = config();
        let data = load_data(&cfg.data).unwrap();
        let t = &cfg.training;
        let tspec = spec(Arch::TeacherSmall, &data.public);
        let teacher = train_teacher(&data.public, Some(&data.sensitive), &tspec, &TeacherConfig::teacher(t), t.seed).unwrap();
        let aux = train_aux_teacher(&data.public, &tspec, &TeacherConfig::auxiliary(t), t.seed.wrapping_add(1)).unwrap();
        Mnist { cfg, data, teacher, aux }
    }

    /// Student trained on `public` with `key=value` overrides.
    pub fn student(&self, public: &Dataset, aux: &Network, overrides: &[(&str, &str)]) -> (Network, RunReport) {
        let mut cfg = self.cfg.training.clone();
        for (k, v) in overrides {
            cfg.set(k, v).unwrap();
        }
        run_student(&cfg, &self.teacher, Some(aux), public, Some(&self.data.test), &spec(Arch::StudentSmall, public)).unwrap()
    }

    /// Public side of a split where `classes` are entirely sensitive, with
    /// its own auxiliary teacher.
    pub fn masked(&self, classes: &[usize]) -> (Dataset, Network) {
        let train = self.data.public.concat(&self.data.sensitive).unwrap();
        let (public, _) = split(&train, &SplitSpec::class_mask(classes.iter().copied())).unwrap();
        let t = &self.cfg.training;
        let aux = train_aux_teacher(&public, &spec(Arch::TeacherSmall, &public), &TeacherConfig::auxiliary(t), t.seed.wrapping_add(1))
            .unwrap();
        (public, aux)
    }
}
