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

//! Evaluation, compression measurements and the run report.

use std::fmt;
use std::fmt::Write as _;
use std::time::Instant;

use crate::data::Dataset;
use crate::error::{RonaError, Result};
use crate::nn::{Network, Tensor};

const EVAL_CHUNK: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `None` for classes absent from the dataset.
    pub per_class: Vec<Option<f64>>,
    pub class_counts: Vec<usize>,
}

/// Top-1 accuracy overall and per class.
pub fn evaluate(net: &Network, ds: &Dataset) -> Result<Evaluation> {
    let logits = net.predict(ds.images(), EVAL_CHUNK)?;
    let classes = logits.row_len();
    if ds.class_count() > classes {
        return Err(RonaError::config(format!(
            "{} classes in the data, {classes} network outputs",
            ds.class_count()
        )));
    }
    let mut hits = vec![0usize; classes];
    let mut counts = vec![0usize; classes];
    for (pred, &y) in logits.argmax_rows().into_iter().zip(ds.labels()) {
        counts[y] += 1;
        if pred == y {
            hits[y] += 1;
        }
    }
    Ok(Evaluation {
        accuracy: hits.iter().sum::<usize>() as f64 / ds.len() as f64,
        per_class: hits
            .iter()
            .zip(&counts)
            .map(|(&h, &c)| (c > 0).then(|| h as f64 / c as f64))
            .collect(),
        class_counts: counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionReport {
    pub teacher_params: usize,
    pub student_params: usize,
    /// Median wall-clock seconds to run one batch.
    pub teacher_seconds: f64,
    pub student_seconds: f64,
}

impl CompressionReport {
    pub fn param_ratio(&self) -> f64 {
        self.teacher_params as f64 / self.student_params as f64
    }

    pub fn speedup(&self) -> f64 {
        self.teacher_seconds / self.student_seconds
    }
}

pub const MIN_TIMING_RUNS: usize = 5;

fn median_seconds(net: &Network, batch: &Tensor, runs: usize) -> Result<f64> {
    let mut times = Vec::with_capacity(runs);
    for _ in 0..runs {
        let start = Instant::now();
        net.predict(batch, batch.rows())?;
        times.push(start.elapsed().as_secs_f64());
    }
    times.sort_by(f64::total_cmp);
    Ok(times[runs / 2])
}

/// Parameter counts and the median batched inference time of each network
/// over `runs` (at least five) repetitions on `batch`.
pub fn compression_report(teacher: &Network, student: &Network, batch: &Tensor, runs: usize) -> Result<CompressionReport> {
    let runs = runs.max(MIN_TIMING_RUNS);
    Ok(CompressionReport {
        teacher_params: teacher.param_count(),
        student_params: student.param_count(),
        teacher_seconds: median_seconds(teacher, batch, runs)?,
        student_seconds: median_seconds(student, batch, runs)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Hint,
    SelfLearn,
    Distill,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Hint => "hint",
            Stage::SelfLearn => "self",
            Stage::Distill => "distill",
        })
    }
}

/// One line of the metrics CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub stage: Stage,
    pub round: usize,
    pub epoch: usize,
    /// Mean self loss, or mean of the sanitized batch losses.
    pub loss: f64,
    pub train_acc: f64,
    pub test_acc: Option<f64>,
    /// Accountant charges so far.
    pub queries: usize,
    pub epsilon: f64,
    pub bound: Option<f64>,
    /// Cover radius of the epoch's query set.
    pub lambda: Option<f64>,
}

/// Everything a run produced, complete even when the budget stopped it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    /// Resolved configuration as `key = value` lines.
    pub config: String,
    pub sigma: f64,
    pub n_q: usize,
    pub planned_charges: usize,
    pub charges: usize,
    pub epsilon: f64,
    pub rows: Vec<EpochRow>,
    pub stopped_early: Option<String>,
    pub final_eval: Option<Evaluation>,
    pub teacher_eval: Option<Evaluation>,
    pub compression: Option<CompressionReport>,
}

pub const CSV_HEADER: &str = "stage,round,epoch,loss,train_acc,test_acc,queries,epsilon,bound,lambda";

fn opt6(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x:.6}"))
}

impl RunReport {
    /// Per-epoch metrics; contains no timing, so equal runs give equal bytes.
    pub fn metrics_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{},{},{:.6},{},{}",
                r.stage,
                r.round,
                r.epoch,
                r.loss,
                r.train_acc,
                opt6(r.test_acc),
                r.queries,
                r.epsilon,
                opt6(r.bound),
                opt6(r.lambda)
            );
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sigma: {:.6}", self.sigma);
        let _ = writeln!(s, "query_samples: {}", self.n_q);
        let _ = writeln!(s, "charges: {} of {} planned", self.charges, self.planned_charges);
        let _ = writeln!(s, "epsilon: {:.6}", self.epsilon);
        let _ = writeln!(s, "stopped_early: {}", self.stopped_early.as_deref().unwrap_or("no"));
        if let Some(e) = &self.final_eval {
            let _ = writeln!(s, "test_accuracy: {:.6}", e.accuracy);
            for (c, a) in e.per_class.iter().enumerate() {
                let _ = writeln!(s, "class_{c}_accuracy: {}", a.map_or("n/a".into(), |a| format!("{a:.6}")));
            }
        }
        if let Some(e) = &self.teacher_eval {
            let _ = writeln!(s, "teacher_test_accuracy: {:.6}", e.accuracy);
        }
        if let Some(c) = &self.compression {
            let _ = writeln!(s, "teacher_params: {}", c.teacher_params);
            let _ = writeln!(s, "student_params: {}", c.student_params);
            let _ = writeln!(s, "param_ratio: {:.3}", c.param_ratio());
            let _ = writeln!(s, "teacher_batch_seconds: {:.6}", c.teacher_seconds);
            let _ = writeln!(s, "student_batch_seconds: {:.6}", c.student_seconds);
            let _ = writeln!(s, "speedup: {:.3}", c.speedup());
        }
        s
    }
}
