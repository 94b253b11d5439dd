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

use crate::error::{RonaError, Result};
use crate::losses::LossVector;

/// Bounds never collapse below this, so clipping stays well defined even if
/// the auxiliary teacher and the student agree exactly.
pub const MIN_BOUND: f64 = 1e-6;

/// Adaptive clipping bound: an exponential moving average of the L2 norms of
/// auxiliary batch losses (auxiliary teacher vs. student on public data).
///
/// The tracker only ever sees auxiliary losses, so the bound it produces is
/// a function of public data alone and costs no privacy budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundTracker {
    ema: f64,
    decay: f64,
    initialized: bool,
}

impl BoundTracker {
    pub fn new(decay: f64) -> Result<Self> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(RonaError::domain(format!("decay must be in (0, 1), got {decay}")));
        }
        Ok(BoundTracker {
            ema: 0.0,
            decay,
            initialized: false,
        })
    }

    /// Fold in one auxiliary batch loss and return the new bound.
    pub fn update(&mut self, aux_loss: &LossVector) -> f64 {
        let norm = aux_loss.norm();
        self.ema = if self.initialized {
            self.decay * self.ema + (1.0 - self.decay) * norm
        } else {
            norm
        };
        self.ema = self.ema.max(MIN_BOUND);
        self.initialized = true;
        self.ema
    }

    pub fn bound(&self) -> Option<f64> {
        self.initialized.then_some(self.ema)
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }
}
