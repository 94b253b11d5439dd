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

use std::fmt;

use rand::Rng;

use super::kernels::{col2im, gemm, im2col, pool_argmax};
use super::tensor::Tensor;
use crate::error::{RonaError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Dense,
    /// 3×3 kernel, valid padding, stride 1.
    Conv2d,
    Conv1x1,
    /// 2×2 window, stride 2, trailing odd row/column dropped.
    MaxPool,
    Relu,
}

impl LayerKind {
    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Dense => "dense",
            LayerKind::Conv2d => "conv2d",
            LayerKind::Conv1x1 => "conv1x1",
            LayerKind::MaxPool => "maxpool",
            LayerKind::Relu => "relu",
        }
    }

    fn kernel(self) -> usize {
        match self {
            LayerKind::Conv2d => 3,
            _ => 1,
        }
    }

    fn is_conv(self) -> bool {
        matches!(self, LayerKind::Conv2d | LayerKind::Conv1x1)
    }
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Weight and bias of a parameterized layer.
///
/// Dense weights are `[out, in]`; convolution weights are `[out_ch, in_ch, k, k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl LayerParams {
    pub fn count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }
}

/// One layer with per-sample input and output shapes (batch dimension excluded).
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    kind: LayerKind,
    params: Option<LayerParams>,
    in_shape: Vec<usize>,
    out_shape: Vec<usize>,
}

/// Fan-in scaled uniform init, `U(-sqrt(3/fan_in), sqrt(3/fan_in))`.
fn fan_in_uniform<R: Rng + ?Sized>(shape: &[usize], fan_in: usize, rng: &mut R) -> Tensor {
    let bound = (3.0 / fan_in as f64).sqrt() as f32;
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("init shape is consistent")
}

fn chw(in_shape: &[usize], kind: LayerKind) -> Result<(usize, usize, usize)> {
    match *in_shape {
        [c, h, w] => Ok((c, h, w)),
        _ => Err(RonaError::config(format!(
            "{kind} layer needs a channels×height×width input, got {in_shape:?}"
        ))),
    }
}

impl Layer {
    /// Fully connected layer; any input rank is flattened per sample.
    pub fn dense<R: Rng + ?Sized>(in_shape: &[usize], out: usize, rng: &mut R) -> Result<Self> {
        let fan_in: usize = in_shape.iter().product();
        if fan_in == 0 || out == 0 {
            return Err(RonaError::config("dense layer with zero width"));
        }
        Ok(Layer {
            kind: LayerKind::Dense,
            params: Some(LayerParams {
                weight: fan_in_uniform(&[out, fan_in], fan_in, rng),
                bias: Tensor::zeros(&[out]),
            }),
            in_shape: in_shape.to_vec(),
            out_shape: vec![out],
        })
    }

    pub fn conv2d<R: Rng + ?Sized>(in_shape: &[usize], out_ch: usize, rng: &mut R) -> Result<Self> {
        Self::conv(LayerKind::Conv2d, in_shape, out_ch, rng)
    }

    pub fn conv1x1<R: Rng + ?Sized>(in_shape: &[usize], out_ch: usize, rng: &mut R) -> Result<Self> {
        Self::conv(LayerKind::Conv1x1, in_shape, out_ch, rng)
    }

    fn conv<R: Rng + ?Sized>(
        kind: LayerKind,
        in_shape: &[usize],
        out_ch: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let (c, h, w) = chw(in_shape, kind)?;
        let k = kind.kernel();
        if h < k || w < k || out_ch == 0 || c == 0 {
            return Err(RonaError::config(format!(
                "{kind} cannot map {in_shape:?} to {out_ch} channels"
            )));
        }
        let fan_in = c * k * k;
        Ok(Layer {
            kind,
            params: Some(LayerParams {
                weight: fan_in_uniform(&[out_ch, c, k, k], fan_in, rng),
                bias: Tensor::zeros(&[out_ch]),
            }),
            in_shape: in_shape.to_vec(),
            out_shape: vec![out_ch, h - k + 1, w - k + 1],
        })
    }

    pub fn max_pool(in_shape: &[usize]) -> Result<Self> {
        let (c, h, w) = chw(in_shape, LayerKind::MaxPool)?;
        if h < 2 || w < 2 {
            return Err(RonaError::config(format!("cannot pool a {h}×{w} map")));
        }
        Ok(Layer {
            kind: LayerKind::MaxPool,
            params: None,
            in_shape: in_shape.to_vec(),
            out_shape: vec![c, h / 2, w / 2],
        })
    }

    pub fn relu(in_shape: &[usize]) -> Self {
        Layer {
            kind: LayerKind::Relu,
            params: None,
            in_shape: in_shape.to_vec(),
            out_shape: in_shape.to_vec(),
        }
    }

    /// Build a parameterized layer around explicit parameters.
    pub fn with_params(kind: LayerKind, in_shape: &[usize], params: LayerParams) -> Result<Self> {
        let out_shape = match kind {
            LayerKind::Dense => {
                let fan_in: usize = in_shape.iter().product();
                match *params.weight.shape() {
                    [o, i] if i == fan_in && params.bias.shape() == [o] => vec![o],
                    _ => return Err(RonaError::config("dense parameters do not match input")),
                }
            }
            LayerKind::Conv2d | LayerKind::Conv1x1 => {
                let (c, h, w) = chw(in_shape, kind)?;
                let k = kind.kernel();
                match *params.weight.shape() {
                    [o, ci, kh, kw]
                        if ci == c && kh == k && kw == k && params.bias.shape() == [o] && h >= k && w >= k =>
                    {
                        vec![o, h - k + 1, w - k + 1]
                    }
                    _ => return Err(RonaError::config("convolution parameters do not match input")),
                }
            }
            _ => return Err(RonaError::config(format!("{kind} layers have no parameters"))),
        };
        Ok(Layer {
            kind,
            params: Some(params),
            in_shape: in_shape.to_vec(),
            out_shape,
        })
    }

    pub fn kind(&self) -> LayerKind {
        self.kind
    }

    pub fn params(&self) -> Option<&LayerParams> {
        self.params.as_ref()
    }

    pub(crate) fn params_mut(&mut self) -> Option<&mut LayerParams> {
        self.params.as_mut()
    }

    pub fn in_shape(&self) -> &[usize] {
        &self.in_shape
    }

    pub fn out_shape(&self) -> &[usize] {
        &self.out_shape
    }

    pub fn param_count(&self) -> usize {
        self.params.as_ref().map_or(0, LayerParams::count)
    }

    pub fn is_conv(&self) -> bool {
        self.kind.is_conv()
    }

    fn batch_shape(&self, n: usize, per_sample: &[usize]) -> Vec<usize> {
        let mut s = Vec::with_capacity(per_sample.len() + 1);
        s.push(n);
        s.extend_from_slice(per_sample);
        s
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        if x.row_shape() != self.in_shape.as_slice() {
            return Err(RonaError::config(format!(
                "{} layer expects per-sample shape {:?}, got {:?}",
                self.kind,
                self.in_shape,
                x.row_shape()
            )));
        }
        let n = x.rows();
        let out_shape = self.batch_shape(n, &self.out_shape);
        let mut out = Tensor::zeros(&out_shape);
        match self.kind {
            LayerKind::Dense => {
                let p = self.params.as_ref().expect("dense has params");
                let fan_in = x.row_len();
                let o = self.out_shape[0];
                for chunk in out.data_mut().chunks_mut(o) {
                    chunk.copy_from_slice(p.bias.data());
                }
                // out[n, o] += x[n, i] · W^T[i, o]
                gemm(n, fan_in, o, x.data(), (fan_in, 1), p.weight.data(), (1, fan_in), 1.0, out.data_mut(), (o, 1));
            }
            LayerKind::Conv2d | LayerKind::Conv1x1 => {
                let p = self.params.as_ref().expect("conv has params");
                let (c, h, w) = (self.in_shape[0], self.in_shape[1], self.in_shape[2]);
                let k = self.kind.kernel();
                let oc = self.out_shape[0];
                let np = self.out_shape[1] * self.out_shape[2];
                let ckk = c * k * k;
                let mut col = vec![0.0f32; if k == 1 { 0 } else { ckk * np }];
                let in_len = x.row_len();
                let out_len = oc * np;
                for s in 0..n {
                    let xs = &x.data()[s * in_len..(s + 1) * in_len];
                    let ys = &mut out.data_mut()[s * out_len..(s + 1) * out_len];
                    for (ch, plane) in ys.chunks_mut(np).enumerate() {
                        plane.fill(p.bias.data()[ch]);
                    }
                    let patches: &[f32] = if k == 1 {
                        xs
                    } else {
                        im2col(xs, c, h, w, k, &mut col);
                        &col
                    };
                    gemm(oc, ckk, np, p.weight.data(), (ckk, 1), patches, (np, 1), 1.0, ys, (np, 1));
                }
            }
            LayerKind::MaxPool => {
                let (c, h, w) = (self.in_shape[0], self.in_shape[1], self.in_shape[2]);
                let in_len = x.row_len();
                let out_len = out.row_len();
                for s in 0..n {
                    let xs = &x.data()[s * in_len..(s + 1) * in_len];
                    let idx = pool_argmax(xs, c, h, w);
                    let ys = &mut out.data_mut()[s * out_len..(s + 1) * out_len];
                    for (y, &i) in ys.iter_mut().zip(&idx) {
                        *y = xs[i];
                    }
                }
            }
            LayerKind::Relu => {
                for (y, &v) in out.data_mut().iter_mut().zip(x.data()) {
                    *y = v.max(0.0);
                }
            }
        }
        Ok(out)
    }

    /// Backpropagate `gy` (gradient at this layer's output) given the layer's
    /// input `x` and output `y`. Returns parameter gradients (if any) and the
    /// gradient at the input.
    pub(crate) fn backward(
        &self,
        x: &Tensor,
        y: &Tensor,
        gy: &Tensor,
    ) -> (Option<LayerParams>, Tensor) {
        let n = x.rows();
        let mut gx = Tensor::zeros(x.shape());
        match self.kind {
            LayerKind::Dense => {
                let p = self.params.as_ref().expect("dense has params");
                let fan_in = x.row_len();
                let o = self.out_shape[0];
                let mut gw = Tensor::zeros(p.weight.shape());
                let mut gb = Tensor::zeros(p.bias.shape());
                // gW[o, i] = gy^T[o, n] · x[n, i]
                gemm(o, n, fan_in, gy.data(), (1, o), x.data(), (fan_in, 1), 0.0, gw.data_mut(), (fan_in, 1));
                for row in gy.data().chunks(o) {
                    for (b, g) in gb.data_mut().iter_mut().zip(row) {
                        *b += g;
                    }
                }
                // gx[n, i] = gy[n, o] · W[o, i]
                gemm(n, o, fan_in, gy.data(), (o, 1), p.weight.data(), (fan_in, 1), 0.0, gx.data_mut(), (fan_in, 1));
                (Some(LayerParams { weight: gw, bias: gb }), gx)
            }
            LayerKind::Conv2d | LayerKind::Conv1x1 => {
                let p = self.params.as_ref().expect("conv has params");
                let (c, h, w) = (self.in_shape[0], self.in_shape[1], self.in_shape[2]);
                let k = self.kind.kernel();
                let oc = self.out_shape[0];
                let np = self.out_shape[1] * self.out_shape[2];
                let ckk = c * k * k;
                let mut gw = Tensor::zeros(p.weight.shape());
                let mut gb = Tensor::zeros(p.bias.shape());
                let mut col = vec![0.0f32; if k == 1 { 0 } else { ckk * np }];
                let mut gcol = vec![0.0f32; ckk * np];
                let in_len = x.row_len();
                let out_len = oc * np;
                for s in 0..n {
                    let xs = &x.data()[s * in_len..(s + 1) * in_len];
                    let gys = &gy.data()[s * out_len..(s + 1) * out_len];
                    let patches: &[f32] = if k == 1 {
                        xs
                    } else {
                        im2col(xs, c, h, w, k, &mut col);
                        &col
                    };
                    // gW[oc, ckk] += gy_s[oc, p] · patches^T[p, ckk]
                    gemm(oc, np, ckk, gys, (np, 1), patches, (1, np), 1.0, gw.data_mut(), (ckk, 1));
                    for (b, plane) in gb.data_mut().iter_mut().zip(gys.chunks(np)) {
                        *b += plane.iter().sum::<f32>();
                    }
                    // gcol[ckk, p] = W^T[ckk, oc] · gy_s[oc, p]
                    let gxs = &mut gx.data_mut()[s * in_len..(s + 1) * in_len];
                    if k == 1 {
                        gemm(ckk, oc, np, p.weight.data(), (1, ckk), gys, (np, 1), 0.0, gxs, (np, 1));
                    } else {
                        gemm(ckk, oc, np, p.weight.data(), (1, ckk), gys, (np, 1), 0.0, &mut gcol, (np, 1));
                        col2im(&gcol, c, h, w, k, gxs);
                    }
                }
                (Some(LayerParams { weight: gw, bias: gb }), gx)
            }
            LayerKind::MaxPool => {
                let (c, h, w) = (self.in_shape[0], self.in_shape[1], self.in_shape[2]);
                let in_len = x.row_len();
                let out_len = y.row_len();
                for s in 0..n {
                    let xs = &x.data()[s * in_len..(s + 1) * in_len];
                    let idx = pool_argmax(xs, c, h, w);
                    let gys = &gy.data()[s * out_len..(s + 1) * out_len];
                    let gxs = &mut gx.data_mut()[s * in_len..(s + 1) * in_len];
                    for (&i, &g) in idx.iter().zip(gys) {
                        gxs[i] += g;
                    }
                }
                (None, gx)
            }
            LayerKind::Relu => {
                for ((g, &yv), &gv) in gx.data_mut().iter_mut().zip(y.data()).zip(gy.data()) {
                    *g = if yv > 0.0 { gv } else { 0.0 };
                }
                (None, gx)
            }
        }
    }
}
