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

//! Batch-loss sanitization, adaptive clipping bounds and privacy accounting.

mod accountant;
mod bound;
mod sanitize;

pub use accountant::{epsilon_for, gaussian_sigma, sigma_for_budget, Accountant, DEFAULT_SIGMA_CAP, MAX_ORDER};
pub use bound::{BoundTracker, MIN_BOUND};
pub use sanitize::{clip, clip_factor, sanitize, sanitize_values, BoundMode, SanitizeParams, Sanitized};
