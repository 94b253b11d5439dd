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

//! Teacher and student architectures and the hint adaptation layer.
//!
//! The architectures are fixed, downsized convolutional stacks; see
//! `ARCHITECTURES.md` at the repository root for the versioned table. Every
//! network is built from "blocks" (conv → relu [→ pool], or dense → relu);
//! the guided tap is the output of the student's middle hidden block and the
//! hint tap is the output of the teacher block at the same depth.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{RonaError, Result};
use crate::nn::{ActivationRecord, Gradients, Layer, LayerKind, LayerParams, Network, Tap, Taps, Tensor};

/// Version of the architecture table; bump whenever a builder changes.
pub const ARCH_TABLE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arch {
    TeacherSmall,
    TeacherMicro,
    StudentSmall,
    StudentMicro,
}

impl Arch {
    pub const ALL: [Arch; 4] = [Arch::TeacherSmall, Arch::TeacherMicro, Arch::StudentSmall, Arch::StudentMicro];

    pub fn name(self) -> &'static str {
        match self {
            Arch::TeacherSmall => "teacher_small",
            Arch::TeacherMicro => "teacher_micro",
            Arch::StudentSmall => "student_small",
            Arch::StudentMicro => "student_micro",
        }
    }

    pub fn is_teacher(self) -> bool {
        matches!(self, Arch::TeacherSmall | Arch::TeacherMicro)
    }

    /// Input shape the architecture was sized for.
    pub fn default_input(self) -> [usize; 3] {
        match self {
            Arch::TeacherSmall | Arch::StudentSmall => [1, 28, 28],
            Arch::TeacherMicro | Arch::StudentMicro => [1, 8, 8],
        }
    }

    /// Student/teacher architecture of the same scale.
    pub fn counterpart(self) -> Arch {
        match self {
            Arch::TeacherSmall => Arch::StudentSmall,
            Arch::StudentSmall => Arch::TeacherSmall,
            Arch::TeacherMicro => Arch::StudentMicro,
            Arch::StudentMicro => Arch::TeacherMicro,
        }
    }

    fn blocks(self) -> &'static [Block] {
        use Block::*;
        match self {
            Arch::TeacherSmall => &[Conv { ch: 16, pool: true }, Conv { ch: 16, pool: true }, Dense(256)],
            Arch::StudentSmall => &[Conv { ch: 8, pool: true }, Conv { ch: 8, pool: true }, Dense(24)],
            Arch::TeacherMicro => &[Conv { ch: 8, pool: false }, Conv { ch: 16, pool: true }, Dense(64)],
            Arch::StudentMicro => &[Conv { ch: 4, pool: false }, Conv { ch: 8, pool: true }, Dense(16)],
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = RonaError;

    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| RonaError::config(format!("unknown architecture '{s}'")))
    }
}

#[derive(Debug, Clone, Copy)]
enum Block {
    Conv { ch: usize, pool: bool },
    Dense(usize),
}

/// Everything needed to build a network deterministically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub arch: Arch,
    pub input_shape: Vec<usize>,
    pub class_count: usize,
    /// Hidden block whose output is tapped (hint for teachers, guided for
    /// students); `None` selects the middle hidden block.
    pub tap_block: Option<usize>,
}

impl ModelSpec {
    pub fn new(arch: Arch, class_count: usize) -> Self {
        ModelSpec {
            arch,
            input_shape: arch.default_input().to_vec(),
            class_count,
            tap_block: None,
        }
    }

    pub fn with_input(mut self, input_shape: &[usize]) -> Self {
        self.input_shape = input_shape.to_vec();
        self
    }

    pub fn with_tap_block(mut self, block: usize) -> Self {
        self.tap_block = Some(block);
        self
    }
}

/// Build a network with fan-in uniform initialization from `seed`.
pub fn build(spec: &ModelSpec, seed: u64) -> Result<Network> {
    if spec.class_count < 2 {
        return Err(RonaError::config("need at least two classes"));
    }
    let blocks = spec.arch.blocks();
    let tap_block = spec.tap_block.unwrap_or(blocks.len() / 2);
    if tap_block >= blocks.len() {
        return Err(RonaError::config(format!(
            "{} has {} hidden blocks; tap block {tap_block} does not exist",
            spec.arch,
            blocks.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers: Vec<Layer> = Vec::new();
    let mut shape = spec.input_shape.clone();
    let mut tap = 0;
    for (b, block) in blocks.iter().enumerate() {
        match *block {
            Block::Conv { ch, pool } => {
                let conv = Layer::conv2d(&shape, ch, &mut rng)?;
                shape = conv.out_shape().to_vec();
                layers.push(conv);
                layers.push(Layer::relu(&shape));
                if pool {
                    let p = Layer::max_pool(&shape)?;
                    shape = p.out_shape().to_vec();
                    layers.push(p);
                }
            }
            Block::Dense(width) => {
                let d = Layer::dense(&shape, width, &mut rng)?;
                shape = d.out_shape().to_vec();
                layers.push(d);
                layers.push(Layer::relu(&shape));
            }
        }
        if b == tap_block {
            tap = layers.len() - 1;
        }
    }
    layers.push(Layer::dense(&shape, spec.class_count, &mut rng)?);
    let taps = if spec.arch.is_teacher() {
        Taps { hint: Some(tap), guided: None }
    } else {
        Taps { hint: None, guided: Some(tap) }
    };
    Network::new(spec.arch.name(), &spec.input_shape, layers, taps)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdapterKind {
    Fc,
    Conv1x1,
}

/// Adaptation layer mapping the student's guided output onto the shape of
/// the teacher's hint output.
#[derive(Debug, Clone)]
pub struct Adapter {
    kind: AdapterKind,
    net: Network,
}

impl Adapter {
    pub fn kind(&self) -> AdapterKind {
        self.kind
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn in_shape(&self) -> &[usize] {
        self.net.input_shape()
    }

    pub fn out_shape(&self) -> &[usize] {
        self.net.output_shape()
    }

    pub fn param_count(&self) -> usize {
        self.net.param_count()
    }

    pub fn forward(&self, guided: &Tensor) -> Result<ActivationRecord> {
        self.net.forward(guided)
    }

    /// Gradient w.r.t. the adapter parameters and its input (the guided output).
    pub fn backward(&self, rec: &ActivationRecord, grad: &Tensor) -> Result<Gradients> {
        self.net.backward(rec, grad)
    }
}

fn tapped_layer(net: &Network, tap: Tap) -> Result<&Layer> {
    let i = net.tap_index(tap)?;
    let layers = net.layers();
    // The tap may sit on a relu/pool; its kind is that of the nearest
    // parameterized layer below it.
    layers[..=i]
        .iter()
        .rev()
        .find(|l| l.params().is_some())
        .ok_or_else(|| RonaError::config(format!("{} tap has no parameterized layer below it", net.name())))
}

/// Build the adaptation layer for a student/teacher pair.
///
/// Convolutional taps get a 1×1 convolution, fully connected taps a dense
/// layer; mixed pairs are rejected. Equal-width adapters start at identity
/// plus small noise.
pub fn attach_adapter(student: &Network, teacher: &Network, seed: u64) -> Result<Adapter> {
    let guided = student.tap_shape(Tap::Guided)?.to_vec();
    let hint = teacher.tap_shape(Tap::Hint)?.to_vec();
    let g_conv = tapped_layer(student, Tap::Guided)?.is_conv();
    let h_conv = tapped_layer(teacher, Tap::Hint)?.is_conv();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (kind, layer) = match (g_conv, h_conv) {
        (true, true) => {
            if guided.len() != 3 || hint.len() != 3 || guided[1..] != hint[1..] {
                return Err(RonaError::config(format!(
                    "guided map {guided:?} and hint map {hint:?} differ spatially"
                )));
            }
            if hint[0] < guided[0] {
                return Err(RonaError::config(format!(
                    "hint layer has {} channels, fewer than the guided layer's {}",
                    hint[0], guided[0]
                )));
            }
            let mut layer = Layer::conv1x1(&guided, hint[0], &mut rng)?;
            if hint[0] == guided[0] {
                layer = near_identity(LayerKind::Conv1x1, &guided, guided[0], &mut rng)?;
            }
            (AdapterKind::Conv1x1, layer)
        }
        (false, false) => {
            let gw: usize = guided.iter().product();
            let hw: usize = hint.iter().product();
            if hw < gw {
                return Err(RonaError::config(format!(
                    "hint layer width {hw} is smaller than guided width {gw}"
                )));
            }
            let layer = if gw == hw {
                near_identity(LayerKind::Dense, &guided, gw, &mut rng)?
            } else {
                Layer::dense(&guided, hw, &mut rng)?
            };
            (AdapterKind::Fc, layer)
        }
        _ => {
            return Err(RonaError::config(
                "guided and hint layers must both be convolutional or both fully connected",
            ))
        }
    };
    let net = Network::new("adapter", &guided, vec![layer], Taps::default())?;
    if net.output_shape() != hint.as_slice() {
        return Err(RonaError::config(format!(
            "adapter output {:?} does not match hint {hint:?}",
            net.output_shape()
        )));
    }
    Ok(Adapter { kind, net })
}

fn near_identity(kind: LayerKind, in_shape: &[usize], width: usize, rng: &mut ChaCha8Rng) -> Result<Layer> {
    use rand::Rng;
    let mut w = vec![0.0f32; width * width];
    for (i, v) in w.iter_mut().enumerate() {
        *v = rng.random_range(-0.01..0.01) + if i / width == i % width { 1.0 } else { 0.0 };
    }
    let shape = match kind {
        LayerKind::Conv1x1 => vec![width, width, 1, 1],
        _ => vec![width, width],
    };
    let params = LayerParams {
        weight: Tensor::new(shape, w)?,
        bias: Tensor::zeros(&[width]),
    };
    Layer::with_params(kind, in_shape, params)
}

/// Architecture table as CSV: `layer,kind,shape,params`, where `shape` is the
/// per-sample output shape joined with `x`.
pub fn describe(net: &Network) -> String {
    let mut out = String::from("layer,kind,shape,params\n");
    for (i, layer) in net.layers().iter().enumerate() {
        let shape: Vec<String> = layer.out_shape().iter().map(|d| d.to_string()).collect();
        out.push_str(&format!("{i},{},{},{}\n", layer.kind(), shape.join("x"), layer.param_count()));
    }
    out
}
