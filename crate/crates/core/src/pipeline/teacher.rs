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

//! Supervised training of the teacher and the auxiliary teacher.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TrainingConfig;
use crate::data::Dataset;
use crate::error::{RonaError, Result};
use crate::losses::{self_loss_from_logits, self_loss_grad};
use crate::models::{build, ModelSpec};
use crate::nn::{Network, Sgd};

/// Optimizer schedule for supervised training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeacherConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f32,
    pub momentum: f32,
    /// Learning-rate multiplier applied after every epoch.
    pub lr_decay: f32,
}

impl TeacherConfig {
    pub fn teacher(cfg: &TrainingConfig) -> Self {
        TeacherConfig {
            epochs: cfg.teacher_epochs,
            batch: cfg.teacher_batch,
            lr: cfg.teacher_lr,
            momentum: cfg.momentum,
            lr_decay: cfg.teacher_lr_decay,
        }
    }

    pub fn auxiliary(cfg: &TrainingConfig) -> Self {
        TeacherConfig {
            epochs: cfg.aux_epochs,
            ..Self::teacher(cfg)
        }
    }
}

/// One shuffled pass of cross-entropy training; returns the mean loss.
/// With `public_only` every batch is checked for non-public samples.
pub(crate) fn classifier_epoch<R: Rng + ?Sized>(
    net: &mut Network,
    opt: &mut Sgd,
    ds: &Dataset,
    batch: usize,
    public_only: bool,
    rng: &mut R,
) -> Result<f64> {
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(rng);
    let mut total = 0.0;
    for idx in order.chunks(batch.max(1)) {
        let (x, y) = if public_only { ds.public_batch(idx)? } else { ds.batch(idx)? };
        let rec = net.forward(&x)?;
        let loss = self_loss_from_logits(rec.last(), &y)?;
        let sum: f64 = loss.values().iter().sum();
        if !sum.is_finite() {
            return Err(RonaError::Training(format!("{}: loss diverged", net.name())));
        }
        total += sum;
        let w = vec![1.0 / idx.len() as f64; idx.len()];
        let g = self_loss_grad(rec.last(), &y, &w)?;
        let grads = net.backward(&rec, &g)?;
        opt.step(net, &grads)?;
    }
    Ok(total / ds.len() as f64)
}

fn fit(data: &Dataset, spec: &ModelSpec, cfg: &TeacherConfig, seed: u64) -> Result<Network> {
    if data.class_count() > spec.class_count {
        return Err(RonaError::config(format!(
            "data has {} classes, model has {}",
            data.class_count(),
            spec.class_count
        )));
    }
    let mut net = build(spec, seed)?;
    let mut opt = Sgd::new(cfg.lr, cfg.momentum)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    for _ in 0..cfg.epochs {
        classifier_epoch(&mut net, &mut opt, data, cfg.batch, false, &mut rng)?;
        opt.set_lr(opt.lr() * cfg.lr_decay)?;
    }
    Ok(net)
}

/// Train the teacher on the union of public and sensitive data. No privacy
/// machinery is involved; the teacher is never released.
pub fn train_teacher(
    public: &Dataset,
    sensitive: Option<&Dataset>,
    spec: &ModelSpec,
    cfg: &TeacherConfig,
    seed: u64,
) -> Result<Network> {
    match sensitive {
        Some(s) => fit(&public.concat(s)?, spec, cfg, seed),
        None => fit(public, spec, cfg, seed),
    }
}

/// Train the auxiliary teacher on public data only. Its outputs are used to
/// set the clipping bound and never enter a student loss.
pub fn train_aux_teacher(public: &Dataset, spec: &ModelSpec, cfg: &TeacherConfig, seed: u64) -> Result<Network> {
    public.assert_public("auxiliary teacher")?;
    fit(public, spec, cfg, seed)
}
