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

//! Moments accountant for repeated Gaussian-mechanism queries.
//!
//! Each sanitized batch is a Gaussian mechanism with sensitivity `B` and
//! noise `σB`. Its privacy-loss log-moment at integer order `λ` is
//! `λ(λ+1) / (2σ²)`; log-moments add across queries, and the tail bound
//! gives `ε = min_λ (α(λ) + ln(1/δ)) / λ`.

use crate::error::{RonaError, Result};

pub const MAX_ORDER: usize = 64;

/// Default upper limit for [`sigma_for_budget`].
pub const DEFAULT_SIGMA_CAP: f64 = 1e4;

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(RonaError::domain(format!("{name} must be in (0, 1), got {v}")));
    }
    Ok(())
}

/// Classic single-query Gaussian calibration `σ = √(2 ln(1.25/δ)) / ε`,
/// valid for `ε < 1`.
pub fn gaussian_sigma(eps: f64, delta: f64) -> Result<f64> {
    check_unit("epsilon", eps)?;
    check_unit("delta", delta)?;
    Ok((2.0 * (1.25 / delta).ln()).sqrt() / eps)
}

fn log_moment(order: usize, sigma: f64) -> f64 {
    let l = order as f64;
    l * (l + 1.0) / (2.0 * sigma * sigma)
}

fn epsilon_from_moments(moments: &[f64], delta: f64) -> f64 {
    let tail = (1.0 / delta).ln();
    moments
        .iter()
        .enumerate()
        .map(|(i, a)| (a + tail) / (i + 1) as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Accumulated log-moments at orders `1..=64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Accountant {
    log_moments: [f64; MAX_ORDER],
    sigmas: Vec<f64>,
}

impl Default for Accountant {
    fn default() -> Self {
        Accountant {
            log_moments: [0.0; MAX_ORDER],
            sigmas: Vec::new(),
        }
    }
}

impl Accountant {
    pub fn new() -> Self {
        Self::default()
    }

    /// Charge one query answered with noise scale `sigma`.
    pub fn accumulate(&mut self, sigma: f64) -> Result<()> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(RonaError::BudgetExceeded(format!(
                "noise scale {sigma} gives unbounded privacy loss"
            )));
        }
        for (i, m) in self.log_moments.iter_mut().enumerate() {
            *m += log_moment(i + 1, sigma);
        }
        self.sigmas.push(sigma);
        Ok(())
    }

    /// Number of queries charged so far.
    pub fn queries(&self) -> usize {
        self.sigmas.len()
    }

    pub fn sigma_history(&self) -> &[f64] {
        &self.sigmas
    }

    /// Log-moment at `order` (1-based).
    pub fn log_moment(&self, order: usize) -> f64 {
        self.log_moments[order - 1]
    }

    pub fn log_moments(&self) -> &[f64; MAX_ORDER] {
        &self.log_moments
    }

    /// Spent `ε` at the given `δ`; zero before the first query.
    pub fn epsilon(&self, delta: f64) -> Result<f64> {
        check_unit("delta", delta)?;
        if self.sigmas.is_empty() {
            return Ok(0.0);
        }
        Ok(epsilon_from_moments(&self.log_moments, delta))
    }

    /// `ε` after one more query at `sigma`, without charging it.
    pub fn epsilon_after(&self, sigma: f64, delta: f64) -> Result<f64> {
        let mut next = self.clone();
        next.accumulate(sigma)?;
        next.epsilon(delta)
    }
}

/// `ε` after `queries` identical queries at noise scale `sigma`.
pub fn epsilon_for(queries: usize, sigma: f64, delta: f64) -> Result<f64> {
    check_unit("delta", delta)?;
    if queries == 0 {
        return Ok(0.0);
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(RonaError::domain(format!("noise scale must be positive, got {sigma}")));
    }
    let moments: Vec<f64> = (1..=MAX_ORDER).map(|l| queries as f64 * log_moment(l, sigma)).collect();
    Ok(epsilon_from_moments(&moments, delta))
}

/// Smallest noise scale (to relative precision 1e-9) for which `queries`
/// queries stay within `(eps, delta)`, searched by bisection up to `cap`.
pub fn sigma_for_budget(queries: usize, eps: f64, delta: f64, cap: f64) -> Result<f64> {
    if queries == 0 {
        return Err(RonaError::domain("need at least one query"));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(RonaError::domain(format!("epsilon must be positive, got {eps}")));
    }
    check_unit("delta", delta)?;
    if epsilon_for(queries, cap, delta)? > eps {
        return Err(RonaError::BudgetInfeasible(format!(
            "{queries} queries cannot meet epsilon {eps} at delta {delta} with sigma <= {cap}"
        )));
    }
    let (mut lo, mut hi) = (0.0f64, cap);
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if mid > 0.0 && epsilon_for(queries, mid, delta)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
