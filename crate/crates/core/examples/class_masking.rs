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

//! Digits 6 and 9 are entirely sensitive: the student never sees one. It
//! can only learn them from the teacher's softened outputs on other digits.
//! Compares a student trained alone with one distilled at epsilon <= 10.
//!
//! Needs the MNIST subset in data/mnist. Takes a few minutes.
//!
//! cargo run --release --example class_masking

use std::path::Path;

use rona::cli::{load_data, RunConfig};
use rona::models::{Arch, ModelSpec};
use rona::pipeline::{run_student, train_aux_teacher, train_teacher, Evaluation, TeacherConfig};

const MASKED: [usize; 2] = [6, 9];

fn masked_accuracy(e: &Evaluation) -> f64 {
    let hit: f64 = MASKED.iter().map(|&c| e.per_class[c].unwrap_or(0.0) * e.class_counts[c] as f64).sum();
    hit / MASKED.iter().map(|&c| e.class_counts[c]).sum::<usize>() as f64
}

fn main() -> rona::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    let mut cfg = RunConfig::default();
    cfg.apply_text(&std::fs::read_to_string(root.join("configs/mnist.cfg"))?)?;
    cfg.set("mask_classes", "6,9")?;
    for p in [&mut cfg.data.train_images, &mut cfg.data.train_labels, &mut cfg.data.test_images, &mut cfg.data.test_labels] {
        *p = p.take().map(|p| root.join(p));
    }
    let data = load_data(&cfg.data)?;
    println!("{} public samples, {} sensitive", data.public.len(), data.sensitive.len());

    let t = &cfg.training;
    let tspec = ModelSpec::new(Arch::TeacherSmall, 10).with_input(data.public.sample_shape());
    let teacher = train_teacher(&data.public, Some(&data.sensitive), &tspec, &TeacherConfig::teacher(t), 0)?;
    let aux = train_aux_teacher(&data.public, &tspec, &TeacherConfig::auxiliary(t), 1)?;
    let sspec = ModelSpec::new(Arch::StudentSmall, 10).with_input(data.public.sample_shape());

    let mut alone = t.clone();
    alone.use_teacher = false;
    // Self learning on hard labels would suppress 6 and 9 again.
    let mut distilled = t.clone();
    for (k, v) in [("t_s", "0"), ("tau", "8"), ("n_q", &data.public.len().to_string())] {
        distilled.set(k, v)?;
    }
    for (name, c) in [("self only", &alone), ("distilled", &distilled)] {
        let (_, r) = run_student(c, &teacher, Some(&aux), &data.public, Some(&data.test), &sspec)?;
        let e = r.final_eval.expect("test set given");
        println!("{name:<10} overall {:.4}, digits 6 and 9 {:.4}, epsilon {:.4}", e.accuracy, masked_accuracy(&e), r.epsilon);
    }
    Ok(())
}
