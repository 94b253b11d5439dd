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

//! Private model compression: a small student network learns from a large
//! teacher trained on sensitive data, seeing only public samples and
//! differentially private teacher signals.
//!
//! The pieces are a from-scratch CNN engine ([`nn`]), the teacher/student
//! architectures ([`models`]), hint, distillation and self losses
//! ([`losses`]), clipping, Gaussian noise and a moments accountant
//! ([`privacy`]), k-center query selection ([`query_select`]), datasets
//! ([`data`]), the end-to-end trainer ([`pipeline`]) and a command line
//! ([`cli`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod error;
pub mod losses;
pub mod models;
pub mod nn;
pub mod pipeline;
pub mod privacy;
pub mod query_select;

pub use error::{RonaError, Result};
