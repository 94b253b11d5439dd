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

//! Query-sample selection.
//!
//! The student's temperature-1 output distributions define a distance
//! between public samples (symmetrized KL divergence). Greedy k-center picks
//! query samples by repeatedly adding the sample farthest from the current
//! set; its cover radius is the diagnostic `λ`. An exhaustive optimum is
//! provided for small pools, along with the random, margin and diverse
//! baselines.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;

use crate::error::{RonaError, Result};
use crate::nn::Tensor;

/// Lower clamp applied to probabilities before taking logs.
pub const LOG_CLAMP: f64 = 1e-12;

/// Ordered, distinct indices into the public pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySet {
    indices: Vec<usize>,
}

impl QuerySet {
    pub fn new(indices: Vec<usize>, pool: usize) -> Result<Self> {
        let mut seen = vec![false; pool];
        for &i in &indices {
            if i >= pool {
                return Err(RonaError::usage(format!("query index {i} outside pool of {pool}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(RonaError::usage(format!("query index {i} repeated")));
            }
        }
        Ok(QuerySet { indices })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverReport {
    /// Largest distance from any pool sample to its nearest query sample.
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    KCenter,
    Random,
    Margin,
    Diverse,
}

impl Selector {
    pub const ALL: [Selector; 4] = [Selector::KCenter, Selector::Random, Selector::Margin, Selector::Diverse];

    pub fn name(self) -> &'static str {
        match self {
            Selector::KCenter => "kcenter",
            Selector::Random => "random",
            Selector::Margin => "margin",
            Selector::Diverse => "diverse",
        }
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Selector {
    type Err = RonaError;

    fn from_str(s: &str) -> Result<Self> {
        Selector::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| RonaError::config(format!("unknown selector '{s}' (kcenter|random|margin|diverse)")))
    }
}

fn check_distribution(p: &[f32]) -> Result<()> {
    let s: f64 = p.iter().map(|&v| v as f64).sum();
    if (s - 1.0).abs() > 1e-4 {
        return Err(RonaError::usage(format!("probability vector sums to {s}")));
    }
    Ok(())
}

fn clamped_log(p: &[f32]) -> Vec<f64> {
    p.iter().map(|&v| (v as f64).max(LOG_CLAMP).ln()).collect()
}

/// `½ (KL(p‖q) + KL(q‖p))`, i.e. `½ Σ (p_k − q_k)(ln p_k − ln q_k)`.
pub fn kl_distance(p: &[f32], q: &[f32]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(RonaError::usage(format!(
            "distributions of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    check_distribution(p)?;
    check_distribution(q)?;
    Ok(sym_kl(p, &clamped_log(p), q, &clamped_log(q)))
}

fn sym_kl(p: &[f32], lp: &[f64], q: &[f32], lq: &[f64]) -> f64 {
    let s: f64 = p
        .iter()
        .zip(q)
        .zip(lp.iter().zip(lq))
        .map(|((&a, &b), (la, lb))| (a as f64 - b as f64) * (la - lb))
        .sum();
    (0.5 * s).max(0.0)
}

/// Pairwise symmetrized-KL distances over the rows of `probs`, with logs
/// precomputed once per row.
pub struct KlSpace<'a> {
    probs: &'a Tensor,
    logs: Vec<Vec<f64>>,
}

impl<'a> KlSpace<'a> {
    pub fn new(probs: &'a Tensor) -> Result<Self> {
        if probs.shape().len() != 2 {
            return Err(RonaError::usage(format!("expected [pool, classes] probabilities, got {:?}", probs.shape())));
        }
        let mut logs = Vec::with_capacity(probs.rows());
        for i in 0..probs.rows() {
            check_distribution(probs.row(i)).map_err(|e| RonaError::usage(format!("pool row {i}: {e}")))?;
            logs.push(clamped_log(probs.row(i)));
        }
        Ok(KlSpace { probs, logs })
    }

    pub fn len(&self) -> usize {
        self.logs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logs.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        sym_kl(self.probs.row(i), &self.logs[i], self.probs.row(j), &self.logs[j])
    }
}

fn check_count(n_q: usize, pool: usize) -> Result<()> {
    if n_q == 0 {
        return Err(RonaError::usage("query set size must be at least 1"));
    }
    if n_q > pool {
        return Err(RonaError::usage(format!("cannot select {n_q} samples from a pool of {pool}")));
    }
    Ok(())
}

/// Farthest-point selection under an arbitrary distance, starting at `init`.
/// Ties go to the lowest index.
pub fn greedy_k_center_by(
    pool: usize,
    n_q: usize,
    init: usize,
    dist: impl Fn(usize, usize) -> f64,
) -> Result<QuerySet> {
    check_count(n_q, pool)?;
    if init >= pool {
        return Err(RonaError::usage(format!("initial index {init} outside pool of {pool}")));
    }
    let mut chosen = vec![false; pool];
    let mut nearest: Vec<f64> = (0..pool).map(|i| dist(i, init)).collect();
    let mut indices = Vec::with_capacity(n_q);
    indices.push(init);
    chosen[init] = true;
    while indices.len() < n_q {
        let mut best: Option<usize> = None;
        for i in 0..pool {
            if chosen[i] {
                continue;
            }
            if best.is_none_or(|b| nearest[i] > nearest[b]) {
                best = Some(i);
            }
        }
        let next = best.expect("pool larger than query set");
        chosen[next] = true;
        indices.push(next);
        for (i, d) in nearest.iter_mut().enumerate() {
            if !chosen[i] {
                *d = d.min(dist(i, next));
            }
        }
    }
    QuerySet::new(indices, pool)
}

/// Greedy k-center under symmetrized KL with a uniformly random first sample.
pub fn greedy_k_center<R: Rng + ?Sized>(probs: &Tensor, n_q: usize, rng: &mut R) -> Result<QuerySet> {
    let space = KlSpace::new(probs)?;
    check_count(n_q, space.len())?;
    let init = rng.random_range(0..space.len());
    greedy_k_center_by(space.len(), n_q, init, |i, j| space.distance(i, j))
}

pub fn cover_radius_by(pool: usize, qs: &QuerySet, dist: impl Fn(usize, usize) -> f64) -> Result<CoverReport> {
    if qs.is_empty() {
        return Err(RonaError::usage("cover radius of an empty query set"));
    }
    let lambda = (0..pool)
        .map(|i| qs.indices().iter().map(|&j| dist(i, j)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    Ok(CoverReport { lambda })
}

pub fn cover_radius(probs: &Tensor, qs: &QuerySet) -> Result<CoverReport> {
    let space = KlSpace::new(probs)?;
    if let Some(&bad) = qs.indices().iter().find(|&&i| i >= space.len()) {
        return Err(RonaError::usage(format!("query index {bad} outside pool of {}", space.len())));
    }
    cover_radius_by(space.len(), qs, |i, j| space.distance(i, j))
}

/// Exhaustive minimum cover radius over all `C(pool, n_q)` subsets. Only for
/// small pools; the first optimal subset in lexicographic order is returned.
pub fn optimal_cover_by(pool: usize, n_q: usize, dist: impl Fn(usize, usize) -> f64) -> Result<(QuerySet, f64)> {
    check_count(n_q, pool)?;
    let mut subset: Vec<usize> = (0..n_q).collect();
    let mut best: Option<(Vec<usize>, f64)> = None;
    loop {
        let radius = (0..pool)
            .map(|i| subset.iter().map(|&j| dist(i, j)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(_, r)| radius < *r) {
            best = Some((subset.clone(), radius));
        }
        // next combination
        let mut k = n_q;
        loop {
            if k == 0 {
                let (idx, r) = best.expect("at least one subset");
                return Ok((QuerySet::new(idx, pool)?, r));
            }
            k -= 1;
            if subset[k] < pool - n_q + k {
                subset[k] += 1;
                for m in k + 1..n_q {
                    subset[m] = subset[m - 1] + 1;
                }
                break;
            }
        }
    }
}

fn euclidean(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>().sqrt()
}

/// Baseline selectors.
///
/// * `Random`: uniform without replacement.
/// * `Margin`: the `n_q` samples with the smallest gap between the top two
///   probabilities.
/// * `Diverse`: farthest-point selection under Euclidean distance between
///   probability vectors, starting from the sample farthest from the mean.
pub fn baseline_select<R: Rng + ?Sized>(kind: Selector, probs: &Tensor, n_q: usize, rng: &mut R) -> Result<QuerySet> {
    let pool = probs.rows();
    check_count(n_q, pool)?;
    match kind {
        Selector::KCenter => greedy_k_center(probs, n_q, rng),
        Selector::Random => QuerySet::new(index::sample(rng, pool, n_q).into_vec(), pool),
        Selector::Margin => {
            let mut gaps: Vec<(f64, usize)> = (0..pool)
                .map(|i| {
                    let (mut top1, mut top2) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
                    for &v in probs.row(i) {
                        let v = v as f64;
                        if v > top1 {
                            top2 = top1;
                            top1 = v;
                        } else if v > top2 {
                            top2 = v;
                        }
                    }
                    (top1 - top2, i)
                })
                .collect();
            gaps.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            QuerySet::new(gaps.into_iter().take(n_q).map(|(_, i)| i).collect(), pool)
        }
        Selector::Diverse => {
            let k = probs.row_len();
            let mut mean = vec![0.0f32; k];
            for i in 0..pool {
                for (m, &v) in mean.iter_mut().zip(probs.row(i)) {
                    *m += v / pool as f32;
                }
            }
            let mut init = 0;
            let mut far = f64::NEG_INFINITY;
            for i in 0..pool {
                let d = euclidean(probs.row(i), &mean);
                if d > far {
                    far = d;
                    init = i;
                }
            }
            greedy_k_center_by(pool, n_q, init, |i, j| euclidean(probs.row(i), probs.row(j)))
        }
    }
}

/// Dispatch to the requested selector.
pub fn select<R: Rng + ?Sized>(kind: Selector, probs: &Tensor, n_q: usize, rng: &mut R) -> Result<QuerySet> {
    baseline_select(kind, probs, n_q, rng)
}
