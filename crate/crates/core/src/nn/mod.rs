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

//! Minimal deterministic neural-network engine.
//!
//! Dense, 3×3 convolution, 1×1 convolution, 2×2 max-pool and ReLU layers with
//! exact analytic gradients, a temperature softmax, momentum SGD and a binary
//! checkpoint format. All arithmetic is `f32`.

pub mod checkpoint;
mod kernels;
mod layer;
mod network;
mod optim;
mod softmax;
mod tensor;

pub use layer::{Layer, LayerKind, LayerParams};
pub use network::{ActivationRecord, Gradients, Network, Tap, Taps};
pub use optim::{sgd_step, Sgd};
pub(crate) use softmax::log_softmax_row;
pub use softmax::softmax_temp;
pub use tensor::Tensor;
