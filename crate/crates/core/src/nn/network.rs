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

use std::sync::atomic::{AtomicU64, Ordering};

use super::layer::{Layer, LayerParams};
use super::tensor::Tensor;
use crate::error::{RonaError, Result};

static NEXT_STAMP: AtomicU64 = AtomicU64::new(1);

fn fresh_stamp() -> u64 {
    NEXT_STAMP.fetch_add(1, Ordering::Relaxed)
}

/// Named layer outputs used by the training losses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tap {
    /// Teacher layer whose output supervises the student's guided layer.
    Hint,
    /// Student layer trained to reproduce the hint.
    Guided,
    /// Output of the final layer.
    Logits,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Taps {
    pub hint: Option<usize>,
    pub guided: Option<usize>,
}

/// An ordered stack of layers.
///
/// Every parameter mutation gives the network a fresh stamp; activation
/// records carry the stamp of the parameters that produced them so that
/// backpropagating through stale activations is caught.
#[derive(Debug, Clone)]
pub struct Network {
    name: String,
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    taps: Taps,
    stamp: u64,
}

/// Every layer output of one forward pass.
#[derive(Debug, Clone)]
pub struct ActivationRecord {
    stamp: u64,
    input: Tensor,
    outputs: Vec<Tensor>,
}

impl ActivationRecord {
    pub fn input(&self) -> &Tensor {
        &self.input
    }

    pub fn output(&self, layer: usize) -> &Tensor {
        &self.outputs[layer]
    }

    pub fn outputs(&self) -> &[Tensor] {
        &self.outputs
    }

    /// Output of the deepest layer that was evaluated.
    pub fn last(&self) -> &Tensor {
        self.outputs.last().expect("record has at least one layer")
    }
}

/// Per-layer parameter gradients plus the gradient at the network input.
/// Layers without parameters, or above the layer backpropagation started
/// from, hold `None`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<Option<LayerParams>>,
    pub input: Tensor,
}

impl Gradients {
    pub fn scale(&mut self, factor: f32) {
        for p in self.layers.iter_mut().flatten() {
            p.weight.data_mut().iter_mut().for_each(|v| *v *= factor);
            p.bias.data_mut().iter_mut().for_each(|v| *v *= factor);
        }
        self.input.data_mut().iter_mut().for_each(|v| *v *= factor);
    }

    pub fn all_finite(&self) -> bool {
        self.input.all_finite()
            && self
                .layers
                .iter()
                .flatten()
                .all(|p| p.weight.all_finite() && p.bias.all_finite())
    }
}

impl Network {
    pub fn new(name: impl Into<String>, input_shape: &[usize], layers: Vec<Layer>, taps: Taps) -> Result<Self> {
        if layers.is_empty() {
            return Err(RonaError::config("network needs at least one layer"));
        }
        let mut shape = input_shape.to_vec();
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_shape() != shape.as_slice() {
                return Err(RonaError::config(format!(
                    "layer {i} ({}) expects {:?} but receives {shape:?}",
                    layer.kind(),
                    layer.in_shape()
                )));
            }
            shape = layer.out_shape().to_vec();
        }
        for (label, tap) in [("hint", taps.hint), ("guided", taps.guided)] {
            if let Some(t) = tap {
                if t >= layers.len() {
                    return Err(RonaError::config(format!(
                        "{label} tap {t} is out of range for {} layers",
                        layers.len()
                    )));
                }
            }
        }
        Ok(Network {
            name: name.into(),
            input_shape: input_shape.to_vec(),
            layers,
            taps,
            stamp: fresh_stamp(),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.layers.last().expect("nonempty").out_shape()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn taps(&self) -> Taps {
        self.taps
    }

    pub fn tap_index(&self, tap: Tap) -> Result<usize> {
        match tap {
            Tap::Hint => self.taps.hint.ok_or_else(|| RonaError::config(format!("{} has no hint tap", self.name))),
            Tap::Guided => self
                .taps
                .guided
                .ok_or_else(|| RonaError::config(format!("{} has no guided tap", self.name))),
            Tap::Logits => Ok(self.layers.len() - 1),
        }
    }

    /// Per-sample output shape at a tap.
    pub fn tap_shape(&self, tap: Tap) -> Result<&[usize]> {
        Ok(self.layers[self.tap_index(tap)?].out_shape())
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Parameter count of layers `0..=last`.
    pub fn param_count_through(&self, last: usize) -> usize {
        self.layers[..=last].iter().map(Layer::param_count).sum()
    }

    /// Run every layer.
    pub fn forward(&self, batch: &Tensor) -> Result<ActivationRecord> {
        self.forward_through(batch, self.layers.len() - 1)
    }

    /// Run layers `0..=last` only.
    pub fn forward_through(&self, batch: &Tensor, last: usize) -> Result<ActivationRecord> {
        if batch.row_shape() != self.input_shape.as_slice() {
            return Err(RonaError::config(format!(
                "{} expects samples of shape {:?}, got {:?}",
                self.name,
                self.input_shape,
                batch.row_shape()
            )));
        }
        if last >= self.layers.len() {
            return Err(RonaError::usage(format!("layer {last} out of range")));
        }
        let mut outputs: Vec<Tensor> = Vec::with_capacity(last + 1);
        for layer in &self.layers[..=last] {
            let x = outputs.last().unwrap_or(batch);
            let y = layer.forward(x)?;
            if !y.all_finite() {
                return Err(RonaError::Training(format!(
                    "{}: non-finite activation in {} layer",
                    self.name,
                    layer.kind()
                )));
            }
            outputs.push(y);
        }
        Ok(ActivationRecord {
            stamp: self.stamp,
            input: batch.clone(),
            outputs,
        })
    }

    /// Logits for a batch, evaluated in chunks of `chunk` samples.
    pub fn predict(&self, batch: &Tensor, chunk: usize) -> Result<Tensor> {
        let n = batch.rows();
        let chunk = chunk.max(1);
        let mut data = Vec::new();
        let mut start = 0;
        while start < n {
            let end = (start + chunk).min(n);
            let idx: Vec<usize> = (start..end).collect();
            let rec = self.forward(&batch.select_rows(&idx)?)?;
            data.extend_from_slice(rec.last().data());
            start = end;
        }
        let mut shape = vec![n];
        shape.extend_from_slice(self.output_shape());
        Tensor::new(shape, data)
    }

    /// Backpropagate from the final layer.
    pub fn backward(&self, rec: &ActivationRecord, out_grad: &Tensor) -> Result<Gradients> {
        self.backward_from(rec, self.layers.len() - 1, out_grad)
    }

    /// Backpropagate `grad`, the gradient at the output of layer `from`,
    /// down to the input.
    pub fn backward_from(&self, rec: &ActivationRecord, from: usize, grad: &Tensor) -> Result<Gradients> {
        if rec.stamp != self.stamp {
            return Err(RonaError::usage(format!(
                "{}: activation record is stale (parameters changed since forward)",
                self.name
            )));
        }
        if from >= rec.outputs.len() {
            return Err(RonaError::usage(format!(
                "layer {from} was not evaluated by this record"
            )));
        }
        if grad.shape() != rec.outputs[from].shape() {
            return Err(RonaError::usage(format!(
                "output gradient shape {:?} does not match layer output {:?}",
                grad.shape(),
                rec.outputs[from].shape()
            )));
        }
        let mut layers: Vec<Option<LayerParams>> = vec![None; self.layers.len()];
        let mut g = grad.clone();
        for i in (0..=from).rev() {
            let x = if i == 0 { &rec.input } else { &rec.outputs[i - 1] };
            let (pg, gx) = self.layers[i].backward(x, &rec.outputs[i], &g);
            layers[i] = pg;
            g = gx;
        }
        Ok(Gradients { layers, input: g })
    }

    /// Mutable access to the parameters of layer `i`. Invalidates
    /// outstanding activation records.
    pub fn layer_params_mut(&mut self, i: usize) -> Option<&mut LayerParams> {
        self.stamp = fresh_stamp();
        self.layers[i].params_mut()
    }

    /// Named parameter tensors in layer order, e.g. `layer3.weight`.
    pub fn named_params(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            if let Some(p) = layer.params() {
                out.push((format!("layer{i}.weight"), &p.weight));
                out.push((format!("layer{i}.bias"), &p.bias));
            }
        }
        out
    }

    /// All parameters as little-endian bytes; equal bytes means equal networks.
    pub fn param_bytes(&self) -> Vec<u8> {
        self.named_params()
            .into_iter()
            .flat_map(|(_, t)| t.data().iter().flat_map(|v| v.to_le_bytes()).collect::<Vec<_>>())
            .collect()
    }
}
