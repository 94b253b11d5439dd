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

use super::tensor::Tensor;
use crate::error::{RonaError, Result};

/// Row-wise `softmax(z / tau)` for a `[batch, classes]` tensor.
pub fn softmax_temp(z: &Tensor, tau: f32) -> Result<Tensor> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(RonaError::domain(format!("temperature must be positive, got {tau}")));
    }
    if z.shape().len() != 2 {
        return Err(RonaError::usage(format!("softmax expects [batch, classes], got {:?}", z.shape())));
    }
    let mut out = Tensor::zeros(z.shape());
    let t = tau as f64;
    for i in 0..z.rows() {
        let row = z.row(i);
        let max = row.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v)) as f64;
        let exps: Vec<f64> = row.iter().map(|&v| ((v as f64 - max) / t).exp()).collect();
        let sum: f64 = exps.iter().sum();
        for (o, e) in out.row_mut(i).iter_mut().zip(&exps) {
            *o = (e / sum) as f32;
        }
    }
    Ok(out)
}

/// Row-wise `log softmax(z / tau)`, computed stably in `f64`.
pub(crate) fn log_softmax_row(row: &[f32], tau: f64) -> Vec<f64> {
    let max = row.iter().fold(f32::NEG_INFINITY, |m, &v| m.max(v)) as f64;
    let scaled: Vec<f64> = row.iter().map(|&v| (v as f64 - max) / tau).collect();
    let lse = scaled.iter().map(|s| s.exp()).sum::<f64>().ln();
    scaled.into_iter().map(|s| s - lse).collect()
}
