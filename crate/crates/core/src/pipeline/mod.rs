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

//! End-to-end private compression.
//!
//! A teacher is trained on public plus sensitive data and an auxiliary
//! teacher on public data alone. The student then learns in three phases:
//! hint learning against the teacher's intermediate layer, self learning on
//! public labels, and distillation from the teacher's softened outputs on
//! selected query samples. Each teacher signal is sanitized and charged to
//! the moments accountant; the run stops before the budget would be
//! exceeded.

mod config;
mod report;
mod student;
mod teacher;

pub use config::{SanitizeMode, TrainingConfig};
pub use report::{
    compression_report, evaluate, CompressionReport, EpochRow, Evaluation, RunReport, Stage, CSV_HEADER,
    MIN_TIMING_RUNS,
};
pub use student::{run_student, StudentRun};
pub use teacher::{train_aux_teacher, train_teacher, TeacherConfig};
