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

//! Central finite-difference oracle for network gradients.
//!
//! Networks are copied into an independent `f64` reference implementation
//! (naive loops, no shared kernels) and the objective is differenced there
//! with `h = 1e-3`. Probes whose ±h perturbation flips a ReLU or moves a
//! max-pool winner are resampled: the objective is not differentiable there.

use rand::Rng;
use rona::nn::{LayerKind, Network, Tensor};

pub const H: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
pub struct Probe {
    pub net: usize,
    pub layer: usize,
    pub is_bias: bool,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl Probe {
    pub fn rel_err(&self) -> f64 {
        let denom = self.analytic.abs().max(self.numeric.abs());
        if denom == 0.0 {
            0.0
        } else {
            (self.analytic - self.numeric).abs() / denom
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefLayer {
    kind: LayerKind,
    in_shape: Vec<usize>,
    out_shape: Vec<usize>,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// `f64` copy of a network.
#[derive(Debug, Clone)]
pub struct RefNet {
    pub layers: Vec<RefLayer>,
}

/// Batch of `f64` activations: `rows` samples of `len` values each.
#[derive(Debug, Clone)]
pub struct Batch {
    pub rows: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn from_tensor(t: &Tensor) -> Self {
        Batch {
            rows: t.rows(),
            data: t.data().iter().map(|&v| v as f64).collect(),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.data.len() / self.rows;
        &self.data[i * n..(i + 1) * n]
    }
}

impl RefNet {
    pub fn of(net: &Network) -> Self {
        RefNet {
            layers: net
                .layers()
                .iter()
                .map(|l| RefLayer {
                    kind: l.kind(),
                    in_shape: l.in_shape().to_vec(),
                    out_shape: l.out_shape().to_vec(),
                    w: l.params().map_or(vec![], |p| p.weight.data().iter().map(|&v| v as f64).collect()),
                    b: l.params().map_or(vec![], |p| p.bias.data().iter().map(|&v| v as f64).collect()),
                })
                .collect(),
        }
    }

    /// Output of layer `last` plus the discrete activation pattern.
    pub fn forward(&self, x: &Batch, last: usize) -> (Batch, Vec<usize>) {
        let mut cur = x.clone();
        let mut sig = Vec::new();
        for layer in &self.layers[..=last] {
            cur = layer.forward(&cur, &mut sig);
        }
        (cur, sig)
    }

    pub fn logits(&self, x: &Batch) -> (Batch, Vec<usize>) {
        self.forward(x, self.layers.len() - 1)
    }
}

impl RefLayer {
    fn forward(&self, x: &Batch, sig: &mut Vec<usize>) -> Batch {
        let n = x.rows;
        let in_len: usize = self.in_shape.iter().product();
        let out_len: usize = self.out_shape.iter().product();
        let mut y = vec![0.0; n * out_len];
        for s in 0..n {
            let xs = &x.data[s * in_len..(s + 1) * in_len];
            let ys = &mut y[s * out_len..(s + 1) * out_len];
            match self.kind {
                LayerKind::Dense => {
                    for (o, yo) in ys.iter_mut().enumerate() {
                        *yo = self.b[o] + (0..in_len).map(|i| self.w[o * in_len + i] * xs[i]).sum::<f64>();
                    }
                }
                LayerKind::Conv2d | LayerKind::Conv1x1 => {
                    let k = if self.kind == LayerKind::Conv2d { 3 } else { 1 };
                    let (c, h, w) = (self.in_shape[0], self.in_shape[1], self.in_shape[2]);
                    let (oc, oh, ow) = (self.out_shape[0], self.out_shape[1], self.out_shape[2]);
                    for o in 0..oc {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let mut acc = self.b[o];
                                for ci in 0..c {
                                    for ky in 0..k {
                                        for kx in 0..k {
                                            acc += self.w[((o * c + ci) * k + ky) * k + kx]
                                                * xs[(ci * h + oy + ky) * w + ox + kx];
                                        }
                                    }
                                }
                                ys[(o * oh + oy) * ow + ox] = acc;
                            }
                        }
                    }
                }
                LayerKind::MaxPool => {
                    let (c, h, w) = (self.in_shape[0], self.in_shape[1], self.in_shape[2]);
                    let (oh, ow) = (h / 2, w / 2);
                    for ci in 0..c {
                        for oy in 0..oh {
                            for ox in 0..ow {
                                let mut best = (usize::MAX, f64::NEG_INFINITY);
                                for dy in 0..2 {
                                    for dx in 0..2 {
                                        let i = (ci * h + 2 * oy + dy) * w + 2 * ox + dx;
                                        if xs[i] > best.1 {
                                            best = (i, xs[i]);
                                        }
                                    }
                                }
                                ys[(ci * oh + oy) * ow + ox] = best.1;
                                sig.push(best.0);
                            }
                        }
                    }
                }
                LayerKind::Relu => {
                    for (yo, &v) in ys.iter_mut().zip(xs) {
                        *yo = v.max(0.0);
                        sig.push((v > 0.0) as usize);
                    }
                }
            }
        }
        Batch { rows: n, data: y }
    }
}

pub type Analytic = Vec<Option<(Vec<f32>, Vec<f32>)>>;

/// Compare analytic gradients against central differences of `objective`
/// at `count` random coordinates of `nets[which]`, restricted to `layers`.
/// Loss of a set of reference networks and its activation signature.
pub type Objective<'a> = dyn Fn(&[RefNet]) -> (f64, Vec<usize>) + 'a;

pub fn probe_params<R: Rng>(
    nets: &[RefNet],
    which: usize,
    layers: &[usize],
    count: usize,
    rng: &mut R,
    objective: &Objective,
    analytic: &Analytic,
) -> Vec<Probe> {
    let (_, base_sig) = objective(nets);
    let mut probes = Vec::new();
    let mut attempts = 0;
    while probes.len() < count {
        attempts += 1;
        assert!(attempts < count * 50, "could not find smooth probes");
        let layer = layers[rng.random_range(0..layers.len())];
        let is_bias = rng.random_bool(0.25);
        let len = if is_bias { nets[which].layers[layer].b.len() } else { nets[which].layers[layer].w.len() };
        let index = rng.random_range(0..len);
        let eval = |delta: f64| {
            let mut n = nets.to_vec();
            let l = &mut n[which].layers[layer];
            if is_bias {
                l.b[index] += delta;
            } else {
                l.w[index] += delta;
            }
            objective(&n)
        };
        let (fp, sp) = eval(H);
        let (fm, sm) = eval(-H);
        if sp != base_sig || sm != base_sig {
            continue;
        }
        let (gw, gb) = analytic[layer].as_ref().expect("analytic gradient for probe layer");
        let a = if is_bias { gb[index] } else { gw[index] } as f64;
        probes.push(Probe {
            net: which,
            layer,
            is_bias,
            index,
            analytic: a,
            numeric: (fp - fm) / (2.0 * H),
        });
    }
    probes
}

pub fn random_tensor<R: Rng>(shape: &[usize], scale: f32, rng: &mut R) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-scale..scale)).collect()).unwrap()
}

pub fn log_softmax(row: &[f64], tau: f64) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = row.iter().map(|v| ((v - max) / tau).exp()).sum::<f64>().ln();
    row.iter().map(|v| (v - max) / tau - lse).collect()
}
