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

use super::network::{Gradients, Network};
use crate::error::{RonaError, Result};

/// One SGD-with-momentum update on flat slices:
/// `v ← momentum·v + g`, `p ← p − lr·v`. With `momentum == 0` this is exactly
/// `p ← p − lr·g`.
pub fn sgd_step(params: &mut [f32], grads: &[f32], velocity: &mut [f32], lr: f32, momentum: f32) {
    assert_eq!(params.len(), grads.len(), "gradient length mismatch");
    assert_eq!(params.len(), velocity.len(), "velocity length mismatch");
    for ((p, &g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
        *v = momentum * *v + g;
        *p -= lr * *v;
    }
}

/// Momentum SGD over a network's parameterized layers.
///
/// Layers whose gradient entry is `None` are left untouched, including their
/// velocity; this is how partial-network updates (e.g. only up to the
/// guided layer) are expressed.
#[derive(Debug, Clone)]
pub struct Sgd {
    lr: f32,
    momentum: f32,
    velocity: Vec<Option<(Vec<f32>, Vec<f32>)>>,
}

impl Sgd {
    pub fn new(lr: f32, momentum: f32) -> Result<Self> {
        if !(lr > 0.0) || !lr.is_finite() {
            return Err(RonaError::domain(format!("learning rate must be positive, got {lr}")));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(RonaError::domain(format!("momentum must be in [0, 1), got {momentum}")));
        }
        Ok(Sgd {
            lr,
            momentum,
            velocity: Vec::new(),
        })
    }

    pub fn lr(&self) -> f32 {
        self.lr
    }

    pub fn set_lr(&mut self, lr: f32) -> Result<()> {
        if !(lr > 0.0) {
            return Err(RonaError::domain(format!("learning rate must be positive, got {lr}")));
        }
        self.lr = lr;
        Ok(())
    }

    pub fn step(&mut self, net: &mut Network, grads: &Gradients) -> Result<()> {
        let n_layers = net.layers().len();
        if grads.layers.len() != n_layers {
            return Err(RonaError::usage(format!(
                "gradients cover {} layers, network has {n_layers}",
                grads.layers.len()
            )));
        }
        if !grads.all_finite() {
            return Err(RonaError::Training(format!("{}: non-finite gradient", net.name())));
        }
        if self.velocity.len() != n_layers {
            self.velocity = vec![None; n_layers];
        }
        for (i, g) in grads.layers.iter().enumerate() {
            let Some(g) = g else { continue };
            let Some(p) = net.layer_params_mut(i) else {
                return Err(RonaError::usage(format!("layer {i} has no parameters to update")));
            };
            if p.weight.shape() != g.weight.shape() || p.bias.shape() != g.bias.shape() {
                return Err(RonaError::usage(format!("gradient shape mismatch at layer {i}")));
            }
            let (vw, vb) = self.velocity[i]
                .get_or_insert_with(|| (vec![0.0; p.weight.len()], vec![0.0; p.bias.len()]));
            sgd_step(p.weight.data_mut(), g.weight.data(), vw, self.lr, self.momentum);
            sgd_step(p.bias.data_mut(), g.bias.data(), vb, self.lr, self.momentum);
        }
        Ok(())
    }
}
