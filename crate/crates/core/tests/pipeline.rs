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

mod common;

use common::synth_fixture::{config, setup, spec, Synth};
use rona::data::{split, synth, SplitSpec};
use rona::models::{build, Arch, ModelSpec};
use rona::nn::Tensor;
use rona::pipeline::{compression_report, evaluate, train_aux_teacher, StudentRun, TeacherConfig, TrainingConfig};
use rona::RonaError;
use std::sync::OnceLock;

fn fixture() -> &'static Synth {
    static F: OnceLock<Synth> = OnceLock::new();
    F.get_or_init(|| setup(100, 0))
}

fn student_spec(f: &Synth) -> ModelSpec {
    spec(Arch::StudentMicro, &f.public)
}

#[test]
fn teacher_fits_synthetic_data() {
    let f = fixture();
    let train = f.public.concat(&f.sensitive).unwrap();
    let acc = evaluate(&f.teacher, &train).unwrap().accuracy;
    assert!(acc >= 0.99, "teacher train accuracy {acc}");
}

#[test]
fn auxiliary_teacher_is_close_to_teacher() {
    let f = fixture();
    let t = evaluate(&f.teacher, &f.test).unwrap().accuracy;
    let a = evaluate(&f.aux, &f.test).unwrap().accuracy;
    assert!(t - a <= 0.05, "teacher {t}, auxiliary {a}");
}

#[test]
fn student_never_sees_sensitive_samples() {
    let f = fixture();
    let mixed = f.public.concat(&f.sensitive).unwrap();
    let cfg = TrainingConfig::default();
    let err = StudentRun::new(&cfg, &f.teacher, Some(&f.aux), &mixed, None, &student_spec(f)).err().unwrap();
    assert!(matches!(err, RonaError::Usage(_)), "{err}");
    let tspec = spec(Arch::TeacherMicro, &mixed);
    assert!(train_aux_teacher(&mixed, &tspec, &TeacherConfig::auxiliary(&cfg), 0).is_err());
    let sensitive_row = f.public.len();
    assert!(mixed.public_batch(&[0, sensitive_row]).is_err());
}

#[test]
fn hint_stage_charges_once_per_batch() {
    // 1024 public samples, so N_q = 1024 fits.
    let train = synth(4, 320, 3).unwrap();
    let (public, _) = split(&train, &SplitSpec::fraction(0.8, 3).unwrap()).unwrap();
    assert_eq!(public.len(), 1024);
    let teacher = build(&spec(Arch::TeacherMicro, &public), 1).unwrap();
    let cfg = config(&[("t_h", "2"), ("t_d", "2"), ("r", "3"), ("t_s", "1"), ("n_q", "1024"), ("s", "512"), ("bound", "1"), ("sigma", "50")]);
    let mut run = StudentRun::new(&cfg, &teacher, None, &public, None, &spec(Arch::StudentMicro, &public)).unwrap();
    assert_eq!(run.planned_charges(), 16);
    run.hint_stage().unwrap();
    assert_eq!(run.accountant().queries(), 4);
    run.distill_self_stage().unwrap();
    assert_eq!(run.accountant().queries(), 16);
}

#[test]
fn partial_batches_are_charged_in_full() {
    let f = fixture();
    let cfg = config(&[("n_q", "100"), ("s", "64"), ("t_h", "1"), ("t_d", "1"), ("r", "2"), ("t_s", "1")]);
    let (_, report) = f.run(&cfg);
    assert_eq!(report.planned_charges, (1 + 2) * 2);
    assert_eq!(report.charges, report.planned_charges);
}

#[test]
fn empty_hint_stage_changes_nothing() {
    let f = fixture();
    let cfg = config(&[("t_h", "0")]);
    let mut run = StudentRun::new(&cfg, &f.teacher, Some(&f.aux), &f.public, None, &student_spec(f)).unwrap();
    let before = run.student().param_bytes();
    run.hint_stage().unwrap();
    assert_eq!(run.student().param_bytes(), before);
    assert_eq!(run.accountant().queries(), 0);
}

#[test]
fn hint_stage_leaves_upper_layers_alone() {
    let f = fixture();
    let cfg = config(&[("t_h", "3")]);
    let mut run = StudentRun::new(&cfg, &f.teacher, Some(&f.aux), &f.public, None, &student_spec(f)).unwrap();
    let guided = run.student().tap_index(rona::nn::Tap::Guided).unwrap();
    let snapshot = |r: &StudentRun| -> Vec<Vec<f32>> {
        r.student().named_params().iter().map(|(_, t)| t.data().to_vec()).collect()
    };
    let names: Vec<String> = run.student().named_params().iter().map(|(n, _)| n.clone()).collect();
    let before = snapshot(&run);
    run.hint_stage().unwrap();
    let after = snapshot(&run);
    let mut lower_changed = false;
    for ((name, b), a) in names.iter().zip(&before).zip(&after) {
        let layer: usize = name.split('.').next().unwrap().trim_start_matches(|c: char| !c.is_ascii_digit()).parse().unwrap();
        if layer > guided {
            assert_eq!(a, b, "{name} moved during hint learning");
        } else {
            lower_changed |= a != b;
        }
    }
    assert!(lower_changed);
}

#[test]
fn hint_loss_decreases_on_held_batch() {
    let f = fixture();
    let cfg = config(&[("t_h", "5"), ("sigma", "1")]);
    let mut run = StudentRun::new(&cfg, &f.teacher, Some(&f.aux), &f.public, None, &student_spec(f)).unwrap();
    let held: Vec<usize> = (0..64).collect();
    let before = run.hint_loss_on(&held).unwrap();
    run.hint_stage().unwrap();
    let after = run.hint_loss_on(&held).unwrap();
    assert!(after < before, "hint loss {before} -> {after}");
}

#[test]
fn self_learning_alone_beats_initialization() {
    let f = fixture();
    let init = build(&student_spec(f), 0).unwrap();
    let base = evaluate(&init, &f.test).unwrap().accuracy;
    let (student, report) = f.run(&config(&[("use_teacher", "false")]));
    let acc = evaluate(&student, &f.test).unwrap().accuracy;
    assert_eq!(report.charges, 0);
    assert!(acc > base + 0.2, "init {base}, self-only {acc}");
}

#[test]
fn huge_noise_matches_self_learning_baseline() {
    let f = fixture();
    let (_, self_only) = f.run(&config(&[("use_teacher", "false")]));
    let (_, noisy) = f.run(&config(&[("sigma", "1e6"), ("eps_budget", "1e9")]));
    let a = self_only.final_eval.unwrap().accuracy;
    let b = noisy.final_eval.unwrap().accuracy;
    assert!((a - b).abs() <= 0.02, "self-only {a}, huge sigma {b}");
}

#[test]
fn budget_is_never_exceeded() {
    let f = fixture();
    for (sigma, budget) in [("0.5", "2"), ("2", "1"), ("auto", "0.5"), ("auto", "10")] {
        let cfg = config(&[("sigma", sigma), ("eps_budget", budget)]);
        let (_, report) = f.run(&cfg);
        let eps: f64 = budget.parse().unwrap();
        assert!(report.epsilon <= eps, "sigma {sigma}: {} > {eps}", report.epsilon);
        assert!(report.rows.windows(2).all(|w| w[0].epsilon <= w[1].epsilon));
        assert!(report.final_eval.is_some());
    }
}

#[test]
fn budget_stop_still_reports() {
    let f = fixture();
    let (_, report) = f.run(&config(&[("sigma", "0.5"), ("eps_budget", "2")]));
    assert!(report.stopped_early.is_some());
    assert!(report.charges < report.planned_charges);
    assert!(report.metrics_csv().lines().count() > 1);
}

#[test]
fn same_seed_same_report() {
    let f = fixture();
    let cfg = config(&[("seed", "7")]);
    let (a_net, a) = f.run(&cfg);
    let (b_net, b) = f.run(&cfg);
    assert_eq!(a.metrics_csv(), b.metrics_csv());
    assert_eq!(a_net.param_bytes(), b_net.param_bytes());
    let (_, c) = f.run(&config(&[("seed", "8")]));
    assert_ne!(a.metrics_csv(), c.metrics_csv());
}

#[test]
fn teacher_training_is_reproducible() {
    let f = fixture();
    let cfg = TeacherConfig { epochs: 2, ..TeacherConfig::teacher(&TrainingConfig::default()) };
    let s = spec(Arch::TeacherMicro, &f.public);
    let a = rona::pipeline::train_teacher(&f.public, Some(&f.sensitive), &s, &cfg, 5).unwrap();
    let b = rona::pipeline::train_teacher(&f.public, Some(&f.sensitive), &s, &cfg, 5).unwrap();
    assert_eq!(a.param_bytes(), b.param_bytes());
}

#[test]
fn per_class_accuracy_averages_to_overall() {
    let f = fixture();
    let e = evaluate(&f.teacher, &f.test).unwrap();
    let n: usize = e.class_counts.iter().sum();
    let weighted: f64 = e.per_class.iter().zip(&e.class_counts).map(|(a, &c)| a.unwrap_or(0.0) * c as f64).sum();
    assert!((weighted / n as f64 - e.accuracy).abs() < 1e-12);
}

#[test]
fn compression_of_small_architectures() {
    let classes = 10;
    let t = build(&ModelSpec::new(Arch::TeacherSmall, classes), 0).unwrap();
    let s = build(&ModelSpec::new(Arch::StudentSmall, classes), 0).unwrap();
    let batch = Tensor::zeros(&[64, 1, 28, 28]);
    let r = compression_report(&t, &s, &batch, 5).unwrap();
    assert!(r.param_ratio() > 10.0, "ratio {}", r.param_ratio());
    assert!(r.student_seconds < r.teacher_seconds);
    let same = compression_report(&t, &t, &batch, 5).unwrap();
    assert_eq!(same.param_ratio(), 1.0);
}
