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

//! Run configuration and its flat `key = value` form.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{RonaError, Result};
use crate::privacy::BoundMode;
use crate::query_select::Selector;

/// What the sanitizer perturbs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SanitizeMode {
    /// Clip and noise the per-sample loss vector; the reduced loss is
    /// backpropagated with clip factor and noise held constant.
    Loss,
    /// Clip and noise the teacher's targets (hint outputs and softened
    /// probabilities) row by row before the loss is formed.
    Target,
}

impl SanitizeMode {
    pub fn name(self) -> &'static str {
        match self {
            SanitizeMode::Loss => "loss",
            SanitizeMode::Target => "target",
        }
    }
}

impl FromStr for SanitizeMode {
    type Err = RonaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loss" => Ok(SanitizeMode::Loss),
            "target" => Ok(SanitizeMode::Target),
            _ => Err(RonaError::config(format!("unknown sanitize mode '{s}' (loss|target)"))),
        }
    }
}

/// Hyperparameters of one private compression run, including teacher
/// training.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    /// Hint epochs.
    pub t_h: usize,
    /// Distillation epochs per round.
    pub t_d: usize,
    /// Self-learning epochs per round.
    pub t_s: usize,
    /// Rounds of self learning followed by distillation.
    pub r: usize,
    /// Hint/distillation batch size; one privacy charge per batch.
    pub s: usize,
    /// Self-learning batch size.
    pub s_prime: usize,
    /// Query samples per epoch; `None` means 20% of the public set.
    pub n_q: Option<usize>,
    pub tau: f32,
    /// Noise scale; `None` calibrates it so the planned charges exactly fit
    /// the budget.
    pub sigma: Option<f64>,
    /// Fixed clipping bound; `None` tracks the auxiliary teacher.
    pub bound: Option<f64>,
    pub bound_decay: f64,
    pub eps_budget: f64,
    pub delta: f64,
    pub lr: f32,
    /// Learning rate of the hint stage (student below the guided layer and
    /// adapter).
    pub hint_lr: f32,
    pub momentum: f32,
    pub seed: u64,
    pub selector: Selector,
    pub sanitize_mode: SanitizeMode,
    /// When false the student only learns from public labels.
    pub use_teacher: bool,
    pub teacher_epochs: usize,
    pub aux_epochs: usize,
    pub teacher_batch: usize,
    pub teacher_lr: f32,
    /// Per-epoch learning-rate multiplier for teacher training.
    pub teacher_lr_decay: f32,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            t_h: 2,
            t_d: 4,
            t_s: 2,
            r: 3,
            s: 512,
            s_prime: 64,
            n_q: None,
            tau: 4.0,
            sigma: None,
            bound: None,
            bound_decay: 0.9,
            eps_budget: 10.0,
            delta: 1e-5,
            lr: 0.02,
            hint_lr: 0.001,
            momentum: 0.9,
            seed: 0,
            selector: Selector::KCenter,
            sanitize_mode: SanitizeMode::Loss,
            use_teacher: true,
            teacher_epochs: 20,
            aux_epochs: 10,
            teacher_batch: 64,
            teacher_lr: 0.01,
            teacher_lr_decay: 0.9,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| RonaError::config(format!("key '{key}': cannot parse '{value}'")))
}

fn opt_text<T: ToString>(v: &Option<T>, none: &str) -> String {
    v.as_ref().map_or_else(|| none.to_string(), T::to_string)
}

impl TrainingConfig {
    /// Every recognised key, in serialization order.
    pub const KEYS: &'static [&'static str] = &[
        "t_h",
        "t_d",
        "t_s",
        "r",
        "s",
        "s_prime",
        "n_q",
        "tau",
        "sigma",
        "bound",
        "bound_decay",
        "eps_budget",
        "delta",
        "lr",
        "hint_lr",
        "momentum",
        "seed",
        "selector",
        "sanitize_mode",
        "use_teacher",
        "teacher_epochs",
        "aux_epochs",
        "teacher_batch",
        "teacher_lr",
        "teacher_lr_decay",
    ];

    /// Set one field from its text form. Unknown keys and malformed values
    /// are configuration errors naming the key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "t_h" => self.t_h = parse(key, v)?,
            "t_d" => self.t_d = parse(key, v)?,
            "t_s" => self.t_s = parse(key, v)?,
            "r" => self.r = parse(key, v)?,
            "s" => self.s = parse(key, v)?,
            "s_prime" => self.s_prime = parse(key, v)?,
            "n_q" => self.n_q = if v == "auto" { None } else { Some(parse(key, v)?) },
            "tau" => self.tau = parse(key, v)?,
            "sigma" => self.sigma = if v == "auto" { None } else { Some(parse(key, v)?) },
            "bound" => self.bound = if v == "adaptive" { None } else { Some(parse(key, v)?) },
            "bound_decay" => self.bound_decay = parse(key, v)?,
            "eps_budget" => self.eps_budget = parse(key, v)?,
            "delta" => self.delta = parse(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "hint_lr" => self.hint_lr = parse(key, v)?,
            "momentum" => self.momentum = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "selector" => self.selector = v.parse().map_err(|e| RonaError::config(format!("key 'selector': {e}")))?,
            "sanitize_mode" => {
                self.sanitize_mode = v.parse().map_err(|e| RonaError::config(format!("key 'sanitize_mode': {e}")))?
            }
            "use_teacher" => self.use_teacher = parse(key, v)?,
            "teacher_epochs" => self.teacher_epochs = parse(key, v)?,
            "aux_epochs" => self.aux_epochs = parse(key, v)?,
            "teacher_batch" => self.teacher_batch = parse(key, v)?,
            "teacher_lr" => self.teacher_lr = parse(key, v)?,
            "teacher_lr_decay" => self.teacher_lr_decay = parse(key, v)?,
            _ => return Err(RonaError::config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Text form of one field, as accepted by [`TrainingConfig::set`].
    pub fn get(&self, key: &str) -> Result<String> {
        Ok(match key {
            "t_h" => self.t_h.to_string(),
            "t_d" => self.t_d.to_string(),
            "t_s" => self.t_s.to_string(),
            "r" => self.r.to_string(),
            "s" => self.s.to_string(),
            "s_prime" => self.s_prime.to_string(),
            "n_q" => opt_text(&self.n_q, "auto"),
            "tau" => self.tau.to_string(),
            "sigma" => opt_text(&self.sigma, "auto"),
            "bound" => opt_text(&self.bound, "adaptive"),
            "bound_decay" => self.bound_decay.to_string(),
            "eps_budget" => self.eps_budget.to_string(),
            "delta" => self.delta.to_string(),
            "lr" => self.lr.to_string(),
            "hint_lr" => self.hint_lr.to_string(),
            "momentum" => self.momentum.to_string(),
            "seed" => self.seed.to_string(),
            "selector" => self.selector.to_string(),
            "sanitize_mode" => self.sanitize_mode.name().to_string(),
            "use_teacher" => self.use_teacher.to_string(),
            "teacher_epochs" => self.teacher_epochs.to_string(),
            "aux_epochs" => self.aux_epochs.to_string(),
            "teacher_batch" => self.teacher_batch.to_string(),
            "teacher_lr" => self.teacher_lr.to_string(),
            "teacher_lr_decay" => self.teacher_lr_decay.to_string(),
            _ => return Err(RonaError::config(format!("unknown key '{key}'"))),
        })
    }

    /// All fields as `key = value` lines.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for key in Self::KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("known key"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(RonaError::config(format!("key '{key}': {why}")));
        if self.s == 0 {
            return bad("s", "batch size must be at least 1");
        }
        if self.s_prime == 0 {
            return bad("s_prime", "batch size must be at least 1");
        }
        if self.teacher_batch == 0 {
            return bad("teacher_batch", "batch size must be at least 1");
        }
        if self.n_q == Some(0) {
            return bad("n_q", "must be at least 1");
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return bad("tau", "must be positive");
        }
        if let Some(s) = self.sigma {
            if !(s >= 0.0 && s.is_finite()) {
                return bad("sigma", "must be non-negative");
            }
        }
        if let Some(b) = self.bound {
            if !(b > 0.0 && b.is_finite()) {
                return bad("bound", "must be positive");
            }
        }
        if !(self.bound_decay > 0.0 && self.bound_decay < 1.0) {
            return bad("bound_decay", "must be in (0, 1)");
        }
        if !(self.eps_budget > 0.0 && self.eps_budget.is_finite()) {
            return bad("eps_budget", "must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta", "must be in (0, 1)");
        }
        for (key, lr) in [("lr", self.lr), ("hint_lr", self.hint_lr), ("teacher_lr", self.teacher_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return bad(key, "must be positive");
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", "must be in [0, 1)");
        }
        if !(self.teacher_lr_decay > 0.0 && self.teacher_lr_decay <= 1.0) {
            return bad("teacher_lr_decay", "must be in (0, 1]");
        }
        Ok(())
    }

    /// Sanitizer bound policy implied by `bound`.
    pub fn bound_mode(&self) -> BoundMode {
        match self.bound {
            Some(b) => BoundMode::Fixed(b),
            None => BoundMode::Adaptive { decay: self.bound_decay },
        }
    }

    /// Query samples per epoch for a public set of `public` samples.
    pub fn query_count(&self, public: usize) -> Result<usize> {
        let n = self.n_q.unwrap_or_else(|| (public / 5).max(1));
        if n > public {
            return Err(RonaError::config(format!("key 'n_q': {n} query samples exceed {public} public samples")));
        }
        Ok(n)
    }

    /// Sanitized batches over an uninterrupted run: `(T_h + R·T_d)·⌈N_q/S⌉`.
    pub fn planned_charges(&self, n_q: usize) -> usize {
        if !self.use_teacher {
            return 0;
        }
        (self.t_h + self.r * self.t_d) * n_q.div_ceil(self.s)
    }
}
