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

//! Error type shared by every module of the crate.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, RonaError>;

#[derive(Debug, thiserror::Error)]
pub enum RonaError {
    /// Inconsistent configuration, shapes or architecture.
    #[error("configuration error: {0}")]
    Config(String),

    /// An API was called out of contract (wrong shapes, stale records, bad labels).
    #[error("usage error: {0}")]
    Usage(String),

    /// A numeric argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("ingestion error in {path} at byte offset {offset}: {message}")]
    Ingest {
        path: PathBuf,
        offset: u64,
        message: String,
    },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("training error: {0}")]
    Training(String),

    /// A query would push the accountant past the configured budget.
    #[error("privacy budget exceeded: {0}")]
    BudgetExceeded(String),

    /// No noise scale under the configured cap meets the requested budget.
    #[error("privacy budget infeasible: {0}")]
    BudgetInfeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl RonaError {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        RonaError::Usage(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        RonaError::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        RonaError::Domain(msg.into())
    }
}
