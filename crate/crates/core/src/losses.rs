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

//! Hint, distillation and self losses as per-sample vectors.
//!
//! Every loss returns one value per sample so the privacy layer can clip and
//! perturb the batch loss as a vector. The matching `*_grad` functions take
//! per-sample weights and return `Σ_i w_i ∂L_i/∂input`; teacher-side inputs
//! are always constants.

use crate::error::{RonaError, Result};
use crate::nn::{log_softmax_row, Tensor};

/// Per-sample loss values for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossVector(Vec<f64>);

impl LossVector {
    pub fn new(values: Vec<f64>) -> Self {
        LossVector(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn mean(&self) -> f64 {
        if self.0.is_empty() {
            0.0
        } else {
            self.0.iter().sum::<f64>() / self.0.len() as f64
        }
    }
}

fn same_shape(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(RonaError::usage(format!(
            "{what}: shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

fn check_weights(weights: &[f64], rows: usize) -> Result<()> {
    if weights.len() != rows {
        return Err(RonaError::usage(format!(
            "{} sample weights for a batch of {rows}",
            weights.len()
        )));
    }
    Ok(())
}

/// `½‖adapted_i − z_h,i‖²` per sample.
pub fn hint_loss(adapted: &Tensor, z_h: &Tensor) -> Result<LossVector> {
    same_shape(adapted, z_h, "hint loss")?;
    Ok(LossVector(
        (0..adapted.rows())
            .map(|i| {
                adapted
                    .row(i)
                    .iter()
                    .zip(z_h.row(i))
                    .map(|(&a, &b)| {
                        let d = a as f64 - b as f64;
                        d * d
                    })
                    .sum::<f64>()
                    / 2.0
            })
            .collect(),
    ))
}

pub fn hint_loss_grad(adapted: &Tensor, z_h: &Tensor, weights: &[f64]) -> Result<Tensor> {
    same_shape(adapted, z_h, "hint loss")?;
    check_weights(weights, adapted.rows())?;
    let mut g = Tensor::zeros(adapted.shape());
    for (i, &w) in weights.iter().enumerate() {
        for ((o, &a), &b) in g.row_mut(i).iter_mut().zip(adapted.row(i)).zip(z_h.row(i)) {
            *o = (w * (a as f64 - b as f64)) as f32;
        }
    }
    Ok(g)
}

fn check_distribution_rows(p: &Tensor, what: &str) -> Result<()> {
    for i in 0..p.rows() {
        let s: f64 = p.row(i).iter().map(|&v| v as f64).sum();
        if (s - 1.0).abs() > 1e-4 || p.row(i).iter().any(|&v| v < 0.0) {
            return Err(RonaError::usage(format!(
                "{what}: row {i} is not a probability vector (sum {s})"
            )));
        }
    }
    Ok(())
}

/// Cross-entropy `H(P_s^τ, P_t^τ) = −Σ_k P_t,k ln softmax(z_s/τ)_k` per sample.
pub fn distill_loss(student_logits: &Tensor, teacher_soft: &Tensor, tau: f32) -> Result<LossVector> {
    same_shape(student_logits, teacher_soft, "distillation loss")?;
    check_distribution_rows(teacher_soft, "distillation target")?;
    if !(tau > 0.0) {
        return Err(RonaError::domain(format!("temperature must be positive, got {tau}")));
    }
    Ok(LossVector(
        (0..student_logits.rows())
            .map(|i| {
                let logp = log_softmax_row(student_logits.row(i), tau as f64);
                -teacher_soft
                    .row(i)
                    .iter()
                    .zip(&logp)
                    .map(|(&t, &l)| t as f64 * l)
                    .sum::<f64>()
            })
            .collect(),
    ))
}

/// Gradient w.r.t. the student logits: `w_i (softmax(z_s/τ) − P_t) / τ`.
pub fn distill_loss_grad(
    student_logits: &Tensor,
    teacher_soft: &Tensor,
    tau: f32,
    weights: &[f64],
) -> Result<Tensor> {
    same_shape(student_logits, teacher_soft, "distillation loss")?;
    check_weights(weights, student_logits.rows())?;
    let t = tau as f64;
    let mut g = Tensor::zeros(student_logits.shape());
    for (i, &w) in weights.iter().enumerate() {
        let logp = log_softmax_row(student_logits.row(i), t);
        for ((o, &lp), &pt) in g.row_mut(i).iter_mut().zip(&logp).zip(teacher_soft.row(i)) {
            *o = (w * (lp.exp() - pt as f64) / t) as f32;
        }
    }
    Ok(g)
}

fn check_labels(labels: &[usize], rows: usize, classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(RonaError::usage(format!("{} labels for a batch of {rows}", labels.len())));
    }
    if let Some(bad) = labels.iter().find(|&&l| l >= classes) {
        return Err(RonaError::usage(format!("label {bad} outside [0, {classes})")));
    }
    Ok(())
}

/// `−ln p_y` per sample, given temperature-1 student probabilities.
pub fn self_loss(student_probs: &Tensor, labels: &[usize]) -> Result<LossVector> {
    check_labels(labels, student_probs.rows(), student_probs.row_len())?;
    Ok(LossVector(
        labels
            .iter()
            .enumerate()
            .map(|(i, &y)| -(student_probs.row(i)[y] as f64).ln())
            .collect(),
    ))
}

/// Self loss computed stably from logits.
pub fn self_loss_from_logits(logits: &Tensor, labels: &[usize]) -> Result<LossVector> {
    check_labels(labels, logits.rows(), logits.row_len())?;
    Ok(LossVector(
        labels
            .iter()
            .enumerate()
            .map(|(i, &y)| -log_softmax_row(logits.row(i), 1.0)[y])
            .collect(),
    ))
}

/// Gradient of the self loss w.r.t. the logits: `w_i (softmax(z) − onehot(y))`.
pub fn self_loss_grad(logits: &Tensor, labels: &[usize], weights: &[f64]) -> Result<Tensor> {
    check_labels(labels, logits.rows(), logits.row_len())?;
    check_weights(weights, logits.rows())?;
    let mut g = Tensor::zeros(logits.shape());
    for (i, (&y, &w)) in labels.iter().zip(weights).enumerate() {
        let logp = log_softmax_row(logits.row(i), 1.0);
        for (k, (o, lp)) in g.row_mut(i).iter_mut().zip(&logp).enumerate() {
            let target = if k == y { 1.0 } else { 0.0 };
            *o = (w * (lp.exp() - target)) as f32;
        }
    }
    Ok(g)
}
