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

//! The private student run: hint learning, then rounds of self learning
//! and distillation, with every teacher signal sanitized and charged.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::{evaluate, EpochRow, RunReport, Stage};
use super::teacher::classifier_epoch;
use super::{SanitizeMode, TrainingConfig};
use crate::data::Dataset;
use crate::error::{RonaError, Result};
use crate::losses::{distill_loss, distill_loss_grad, hint_loss, hint_loss_grad, LossVector};
use crate::models::{attach_adapter, build, Adapter, ModelSpec};
use crate::nn::{softmax_temp, Network, Sgd, Tap, Tensor};
use crate::privacy::{
    sanitize, sanitize_values, sigma_for_budget, Accountant, BoundMode, BoundTracker, SanitizeParams,
    DEFAULT_SIGMA_CAP,
};
use crate::query_select::{cover_radius, select};

const PREDICT_CHUNK: usize = 256;

/// Relative slack kept below the budget when calibrating σ, so that the
/// accountant's running sums never land above it by rounding.
const CALIBRATION_SLACK: f64 = 1e-9;

/// Mutable state of one student training run.
pub struct StudentRun<'a> {
    cfg: TrainingConfig,
    teacher: &'a Network,
    aux: Option<&'a Network>,
    public: &'a Dataset,
    test: Option<&'a Dataset>,
    student: Network,
    adapter: Option<Adapter>,
    opt: Sgd,
    hint_opt: Sgd,
    adapter_opt: Sgd,
    accountant: Accountant,
    params: SanitizeParams,
    hint_bound: BoundTracker,
    distill_bound: BoundTracker,
    shuffle_rng: ChaCha8Rng,
    select_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    n_q: usize,
    planned: usize,
    rows: Vec<EpochRow>,
    stopped: Option<String>,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

impl<'a> StudentRun<'a> {
    /// Validate the configuration, build the student (and adapter when hint
    /// learning is enabled) and fix σ.
    pub fn new(
        cfg: &TrainingConfig,
        teacher: &'a Network,
        aux: Option<&'a Network>,
        public: &'a Dataset,
        test: Option<&'a Dataset>,
        student_spec: &ModelSpec,
    ) -> Result<Self> {
        cfg.validate()?;
        public.assert_public("student training")?;
        let n_q = cfg.query_count(public.len())?;
        let planned = cfg.planned_charges(n_q);
        let sigma = match (cfg.sigma, planned) {
            (Some(s), _) => s,
            (None, 0) => 0.0,
            (None, t) => sigma_for_budget(t, cfg.eps_budget * (1.0 - CALIBRATION_SLACK), cfg.delta, DEFAULT_SIGMA_CAP)?,
        };
        let student = build(student_spec, cfg.seed)?;
        if student.output_shape() != teacher.output_shape() {
            return Err(RonaError::config(format!(
                "student has {:?} outputs, teacher {:?}",
                student.output_shape(),
                teacher.output_shape()
            )));
        }
        if cfg.use_teacher && cfg.bound.is_none() {
            let aux = aux.ok_or_else(|| RonaError::config("adaptive bound needs an auxiliary teacher"))?;
            if aux.output_shape() != teacher.output_shape()
                || (cfg.t_h > 0 && aux.tap_shape(Tap::Hint)? != teacher.tap_shape(Tap::Hint)?)
            {
                return Err(RonaError::config("auxiliary teacher must share the teacher's architecture"));
            }
        }
        // Without hint epochs an incompatible pair is not an error.
        let adapter = match (cfg.use_teacher, cfg.t_h) {
            (false, _) => None,
            (true, 0) => attach_adapter(&student, teacher, cfg.seed.wrapping_add(1)).ok(),
            (true, _) => Some(attach_adapter(&student, teacher, cfg.seed.wrapping_add(1))?),
        };
        let params = SanitizeParams::new(sigma, cfg.bound_mode())?;
        Ok(StudentRun {
            cfg: cfg.clone(),
            teacher,
            aux,
            public,
            test,
            student,
            adapter,
            opt: Sgd::new(cfg.lr, cfg.momentum)?,
            hint_opt: Sgd::new(cfg.hint_lr, cfg.momentum)?,
            adapter_opt: Sgd::new(cfg.hint_lr, cfg.momentum)?,
            accountant: Accountant::new(),
            params,
            hint_bound: BoundTracker::new(cfg.bound_decay)?,
            distill_bound: BoundTracker::new(cfg.bound_decay)?,
            shuffle_rng: stream(cfg.seed, 1),
            select_rng: stream(cfg.seed, 2),
            noise_rng: stream(cfg.seed, 3),
            n_q,
            planned,
            rows: Vec::new(),
            stopped: None,
        })
    }

    pub fn student(&self) -> &Network {
        &self.student
    }

    pub fn adapter(&self) -> Option<&Adapter> {
        self.adapter.as_ref()
    }

    pub fn accountant(&self) -> &Accountant {
        &self.accountant
    }

    pub fn sigma(&self) -> f64 {
        self.params.sigma
    }

    pub fn query_count(&self) -> usize {
        self.n_q
    }

    pub fn planned_charges(&self) -> usize {
        self.planned
    }

    pub fn rows(&self) -> &[EpochRow] {
        &self.rows
    }

    /// Why the run stopped before finishing, if it did.
    pub fn stopped(&self) -> Option<&str> {
        self.stopped.as_deref()
    }

    /// Mean unsanitized hint loss of the current student on public samples
    /// `indices`. Diagnostic only; it reads the teacher directly.
    pub fn hint_loss_on(&self, indices: &[usize]) -> Result<f64> {
        let adapter = self.adapter.as_ref().ok_or_else(|| RonaError::usage("hint learning is disabled"))?;
        let (x, _) = self.public.public_batch(indices)?;
        let (g, h) = (self.student.tap_index(Tap::Guided)?, self.teacher.tap_index(Tap::Hint)?);
        let srec = self.student.forward_through(&x, g)?;
        let adapted = adapter.forward(srec.output(g))?;
        let z_h = self.teacher.forward_through(&x, h)?;
        Ok(hint_loss(adapted.last(), z_h.output(h))?.mean())
    }

    /// Check the budget before a sanitize call; records the stop reason
    /// and returns false if one more charge would exceed it.
    fn may_charge(&mut self) -> Result<bool> {
        if self.stopped.is_some() {
            return Ok(false);
        }
        let next = match self.accountant.epsilon_after(self.params.sigma, self.cfg.delta) {
            Ok(e) => e,
            Err(RonaError::BudgetExceeded(m)) => {
                self.stopped = Some(m);
                return Ok(false);
            }
            Err(e) => return Err(e),
        };
        if next > self.cfg.eps_budget {
            self.stopped = Some(format!(
                "privacy budget {} reached after {} charges",
                self.cfg.eps_budget,
                self.accountant.queries()
            ));
            return Ok(false);
        }
        Ok(true)
    }

    fn push_row(&mut self, stage: Stage, round: usize, epoch: usize, loss: f64, bound: Option<f64>, lambda: Option<f64>) -> Result<()> {
        let train_acc = evaluate(&self.student, self.public)?.accuracy;
        let test_acc = self.test.map(|t| evaluate(&self.student, t)).transpose()?.map(|e| e.accuracy);
        self.rows.push(EpochRow {
            stage,
            round,
            epoch,
            loss,
            train_acc,
            test_acc,
            queries: self.accountant.queries(),
            epsilon: self.accountant.epsilon(self.cfg.delta)?,
            bound,
            lambda,
        });
        Ok(())
    }

    /// `T_h` epochs of hint learning on random query sets. Only layers up to
    /// the guided layer and the adapter are updated.
    pub fn hint_stage(&mut self) -> Result<()> {
        if self.adapter.is_none() {
            return Ok(());
        }
        for epoch in 0..self.cfg.t_h {
            if self.stopped.is_some() {
                break;
            }
            let queries = index::sample(&mut self.select_rng, self.public.len(), self.n_q).into_vec();
            let (mut sum, mut batches, mut bound) = (0.0, 0usize, None);
            for idx in queries.chunks(self.cfg.s) {
                if !self.may_charge()? {
                    break;
                }
                let (loss, b) = self.hint_batch(idx)?;
                sum += loss;
                batches += 1;
                bound = Some(b);
            }
            let mean = if batches > 0 { sum / batches as f64 } else { 0.0 };
            self.push_row(Stage::Hint, 0, epoch, mean, bound, None)?;
        }
        Ok(())
    }

    fn hint_batch(&mut self, idx: &[usize]) -> Result<(f64, f64)> {
        let (x, _) = self.public.public_batch(idx)?;
        let n = idx.len() as f64;
        let g = self.student.tap_index(Tap::Guided)?;
        let h = self.teacher.tap_index(Tap::Hint)?;
        let adapter = self.adapter.as_mut().expect("hint stage has an adapter");
        let srec = self.student.forward_through(&x, g)?;
        let arec = adapter.forward(srec.output(g))?;
        let adapted = arec.last();
        let aux_hint = match (self.params.bound_mode, self.aux) {
            (BoundMode::Adaptive { .. }, Some(aux)) => Some(aux.forward_through(&x, h)?.output(h).clone()),
            _ => None,
        };
        let z_h = self.teacher.forward_through(&x, h)?.output(h).clone();
        let (grad, reported, bound) = match self.cfg.sanitize_mode {
            SanitizeMode::Loss => {
                if let Some(a) = &aux_hint {
                    self.hint_bound.update(&hint_loss(adapted, a)?);
                }
                let bound = self.params.current_bound(&self.hint_bound)?;
                let s = sanitize(&hint_loss(adapted, &z_h)?, &self.params, bound, &mut self.noise_rng)?;
                let w = vec![s.scale / n; idx.len()];
                (hint_loss_grad(adapted, &z_h, &w)?, s.values.mean(), bound)
            }
            SanitizeMode::Target => {
                if let Some(a) = &aux_hint {
                    self.hint_bound.update(&mean_row_norm(a));
                }
                let bound = self.params.current_bound(&self.hint_bound)?;
                let noisy = perturb_rows(&z_h, self.params.sigma, bound, &mut self.noise_rng)?;
                let w = vec![1.0 / n; idx.len()];
                (hint_loss_grad(adapted, &noisy, &w)?, hint_loss(adapted, &noisy)?.mean(), bound)
            }
        };
        self.accountant.accumulate(self.params.sigma)?;
        let ga = adapter.backward(&arec, &grad)?;
        let gs = self.student.backward_from(&srec, g, &ga.input)?;
        self.adapter_opt.step(adapter.network_mut(), &ga)?;
        self.hint_opt.step(&mut self.student, &gs)?;
        Ok((reported, bound))
    }

    fn self_epoch(&mut self, round: usize, epoch: usize) -> Result<()> {
        let loss = classifier_epoch(
            &mut self.student,
            &mut self.opt,
            self.public,
            self.cfg.s_prime,
            true,
            &mut self.shuffle_rng,
        )?;
        self.push_row(Stage::SelfLearn, round, epoch, loss, None, None)
    }

    /// `R` rounds of `T_s` self-learning epochs followed by `T_d`
    /// distillation epochs, each on a freshly selected query set.
    pub fn distill_self_stage(&mut self) -> Result<()> {
        for round in 0..self.cfg.r {
            for epoch in 0..self.cfg.t_s {
                if self.stopped.is_some() {
                    return Ok(());
                }
                self.self_epoch(round, epoch)?;
            }
            if !self.cfg.use_teacher {
                continue;
            }
            for epoch in 0..self.cfg.t_d {
                if self.stopped.is_some() {
                    return Ok(());
                }
                let probs = softmax_temp(&self.student.predict(self.public.images(), PREDICT_CHUNK)?, 1.0)?;
                let qs = select(self.cfg.selector, &probs, self.n_q, &mut self.select_rng)?;
                let lambda = cover_radius(&probs, &qs)?.lambda;
                let (mut sum, mut batches, mut bound) = (0.0, 0usize, None);
                for idx in qs.indices().chunks(self.cfg.s) {
                    if !self.may_charge()? {
                        break;
                    }
                    let (loss, b) = self.distill_batch(idx)?;
                    sum += loss;
                    batches += 1;
                    bound = Some(b);
                }
                let mean = if batches > 0 { sum / batches as f64 } else { 0.0 };
                self.push_row(Stage::Distill, round, epoch, mean, bound, Some(lambda))?;
            }
        }
        Ok(())
    }

    fn distill_batch(&mut self, idx: &[usize]) -> Result<(f64, f64)> {
        let (x, _) = self.public.public_batch(idx)?;
        let n = idx.len() as f64;
        let tau = self.cfg.tau;
        let rec = self.student.forward(&x)?;
        let z_s = rec.last();
        let aux_soft = match (self.params.bound_mode, self.aux) {
            (BoundMode::Adaptive { .. }, Some(aux)) => Some(softmax_temp(aux.forward(&x)?.last(), tau)?),
            _ => None,
        };
        let p_t = softmax_temp(self.teacher.forward(&x)?.last(), tau)?;
        let (grad, reported, bound) = match self.cfg.sanitize_mode {
            SanitizeMode::Loss => {
                if let Some(a) = &aux_soft {
                    self.distill_bound.update(&distill_loss(z_s, a, tau)?);
                }
                let bound = self.params.current_bound(&self.distill_bound)?;
                let s = sanitize(&distill_loss(z_s, &p_t, tau)?, &self.params, bound, &mut self.noise_rng)?;
                let w = vec![s.scale / n; idx.len()];
                (distill_loss_grad(z_s, &p_t, tau, &w)?, s.values.mean(), bound)
            }
            SanitizeMode::Target => {
                if let Some(a) = &aux_soft {
                    self.distill_bound.update(&mean_row_norm(a));
                }
                let bound = self.params.current_bound(&self.distill_bound)?;
                let noisy = renormalize(perturb_rows(&p_t, self.params.sigma, bound, &mut self.noise_rng)?);
                let w = vec![1.0 / n; idx.len()];
                (distill_loss_grad(z_s, &noisy, tau, &w)?, distill_loss(z_s, &noisy, tau)?.mean(), bound)
            }
        };
        self.accountant.accumulate(self.params.sigma)?;
        let gs = self.student.backward(&rec, &grad)?;
        self.opt.step(&mut self.student, &gs)?;
        Ok((reported, bound))
    }

    /// Evaluate on the test set (if any) and package the report.
    pub fn finish(self) -> Result<(Network, RunReport)> {
        let final_eval = self.test.map(|t| evaluate(&self.student, t)).transpose()?;
        let report = RunReport {
            config: self.cfg.to_kv(),
            sigma: self.params.sigma,
            n_q: self.n_q,
            planned_charges: self.planned,
            charges: self.accountant.queries(),
            epsilon: self.accountant.epsilon(self.cfg.delta)?,
            rows: self.rows,
            stopped_early: self.stopped,
            final_eval,
            teacher_eval: None,
            compression: None,
        };
        Ok((self.student, report))
    }
}

/// A one-element vector holding the mean row norm of `t`, the statistic
/// tracked for the bound when targets are perturbed.
fn mean_row_norm(t: &Tensor) -> LossVector {
    let n = t.rows();
    let total: f64 = (0..n)
        .map(|i| t.row(i).iter().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt())
        .sum();
    LossVector::new(vec![total / n as f64])
}

/// Clip every row to `bound` and add `N(0, σ²B²)` to each element.
fn perturb_rows(t: &Tensor, sigma: f64, bound: f64, rng: &mut ChaCha8Rng) -> Result<Tensor> {
    let mut out = t.clone();
    for i in 0..t.rows() {
        let row: Vec<f64> = t.row(i).iter().map(|&v| v as f64).collect();
        let (noisy, _) = sanitize_values(&row, sigma, bound, rng)?;
        for (o, v) in out.row_mut(i).iter_mut().zip(noisy) {
            *o = v as f32;
        }
    }
    Ok(out)
}

/// Clamp to non-negative and rescale each row to sum to one; rows with no
/// mass become uniform.
fn renormalize(mut t: Tensor) -> Tensor {
    for i in 0..t.rows() {
        let row = t.row_mut(i);
        let k = row.len() as f64;
        let mass: f64 = row.iter().map(|&v| (v as f64).max(0.0)).sum();
        for v in row.iter_mut() {
            *v = if mass > 0.0 { ((*v as f64).max(0.0) / mass) as f32 } else { (1.0 / k) as f32 };
        }
    }
    t
}

/// Build, train and report a student in one call.
pub fn run_student(
    cfg: &TrainingConfig,
    teacher: &Network,
    aux: Option<&Network>,
    public: &Dataset,
    test: Option<&Dataset>,
    student_spec: &ModelSpec,
) -> Result<(Network, RunReport)> {
    let mut run = StudentRun::new(cfg, teacher, aux, public, test, student_spec)?;
    run.hint_stage()?;
    run.distill_self_stage()?;
    run.finish()
}
