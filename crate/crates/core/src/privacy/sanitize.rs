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

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::bound::BoundTracker;
use crate::error::{RonaError, Result};
use crate::losses::LossVector;

/// How the clipping bound `B` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundMode {
    Fixed(f64),
    /// EMA of auxiliary-teacher loss norms with the given decay.
    Adaptive { decay: f64 },
}

/// Noise scale and bound policy of the sanitizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SanitizeParams {
    /// Noise standard deviation as a multiple of `B`.
    pub sigma: f64,
    pub bound_mode: BoundMode,
}

impl SanitizeParams {
    pub fn new(sigma: f64, bound_mode: BoundMode) -> Result<Self> {
        if !(sigma >= 0.0) || sigma.is_nan() {
            return Err(RonaError::domain(format!("noise scale must be non-negative, got {sigma}")));
        }
        match bound_mode {
            BoundMode::Fixed(b) if !(b > 0.0 && b.is_finite()) => {
                return Err(RonaError::domain(format!("fixed bound must be positive, got {b}")))
            }
            BoundMode::Adaptive { decay } if !(decay > 0.0 && decay < 1.0) => {
                return Err(RonaError::domain(format!("bound decay must be in (0, 1), got {decay}")))
            }
            _ => {}
        }
        Ok(SanitizeParams { sigma, bound_mode })
    }

    /// The bound in force right now. Adaptive bounds need at least one
    /// auxiliary batch first.
    pub fn current_bound(&self, tracker: &BoundTracker) -> Result<f64> {
        match self.bound_mode {
            BoundMode::Fixed(b) => Ok(b),
            BoundMode::Adaptive { .. } => tracker.bound().ok_or_else(|| {
                RonaError::usage("adaptive bound used before any auxiliary batch was observed")
            }),
        }
    }
}

/// Result of sanitizing one batch loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Sanitized {
    pub values: LossVector,
    /// `1 / max(1, ‖v‖₂ / B)`; the clipped vector is `scale · v`.
    pub scale: f64,
    pub bound: f64,
}

/// Factor by which `v` is scaled so that its L2 norm is at most `bound`.
/// Norms within a relative 1e-12 of the bound count as inside it, which
/// keeps clipping idempotent under rounding.
pub fn clip_factor(norm: f64, bound: f64) -> f64 {
    if norm <= bound * (1.0 + 1e-12) {
        1.0
    } else {
        bound / norm
    }
}

/// `v / max(1, ‖v‖₂ / B)`.
pub fn clip(v: &LossVector, bound: f64) -> LossVector {
    let s = clip_factor(v.norm(), bound);
    LossVector::new(v.values().iter().map(|x| x * s).collect())
}

/// Clip to `bound` and add `N(0, σ²B²)` independently to every element.
pub fn sanitize<R: Rng + ?Sized>(v: &LossVector, params: &SanitizeParams, bound: f64, rng: &mut R) -> Result<Sanitized> {
    let (values, scale) = sanitize_values(v.values(), params.sigma, bound, rng)?;
    Ok(Sanitized {
        values: LossVector::new(values),
        scale,
        bound,
    })
}

/// Slice form of [`sanitize`], also used for perturbing teacher targets.
/// Returns the noisy values and the clip factor.
pub fn sanitize_values<R: Rng + ?Sized>(v: &[f64], sigma: f64, bound: f64, rng: &mut R) -> Result<(Vec<f64>, f64)> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(RonaError::domain(format!("clip bound must be positive, got {bound}")));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = clip_factor(norm, bound);
    let std = sigma * bound;
    let out = v
        .iter()
        .map(|x| {
            let clipped = x * scale;
            if std > 0.0 {
                let z: f64 = StandardNormal.sample(rng);
                clipped + std * z
            } else {
                clipped
            }
        })
        .collect();
    Ok((out, scale))
}
