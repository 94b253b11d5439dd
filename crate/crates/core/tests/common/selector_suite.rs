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

//! Random selection instances with an exhaustive cover-radius oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rona::nn::Tensor;
use rona::query_select::greedy_k_center;

pub struct Instance {
    pub probs: Tensor,
    pub n_q: usize,
}

/// Softmax of Gaussian logits, computed here rather than by the library.
pub fn random_probs(pool: usize, classes: usize, spread: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let mut data = Vec::with_capacity(pool * classes);
    for _ in 0..pool {
        let z: Vec<f64> = (0..classes).map(|_| spread * rng.sample::<f64, _>(StandardNormal)).collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        data.extend(e.iter().map(|v| (v / s) as f32));
    }
    Tensor::new(vec![pool, classes], data).unwrap()
}

pub fn instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let pool = rng.random_range(5..=12);
            let classes = rng.random_range(3..=6);
            let n_q = rng.random_range(1..=4);
            Instance { probs: random_probs(pool, classes, 2.0, &mut rng), n_q }
        })
        .collect()
}

/// `½(KL(p‖q) + KL(q‖p))` with the 1e-12 clamp inside the logs.
pub fn sym_kl(p: &[f32], q: &[f32]) -> f64 {
    let kl = |a: &[f32], b: &[f32]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(&x, &y)| x as f64 * ((x as f64).max(1e-12).ln() - (y as f64).max(1e-12).ln()))
            .sum()
    };
    0.5 * (kl(p, q) + kl(q, p))
}

pub fn euclid(p: &[f32], q: &[f32]) -> f64 {
    p.iter().zip(q).map(|(&a, &b)| (a as f64 - b as f64).powi(2)).sum::<f64>().sqrt()
}

pub fn radius(pool: usize, chosen: &[usize], d: &dyn Fn(usize, usize) -> f64) -> f64 {
    (0..pool)
        .map(|i| chosen.iter().map(|&j| d(i, j)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Minimum radius over every subset of size `k`, by bitmask enumeration.
pub fn exhaustive_optimum(pool: usize, k: usize, d: &dyn Fn(usize, usize) -> f64) -> f64 {
    (0u32..1 << pool)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| {
            let chosen: Vec<usize> = (0..pool).filter(|i| m & (1 << i) != 0).collect();
            radius(pool, &chosen, d)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Greedy-to-optimum radius ratio under symmetrized KL for each instance.
pub fn kl_ratios(instances: &[Instance], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    instances
        .iter()
        .map(|inst| {
            let p = &inst.probs;
            let d = |i: usize, j: usize| sym_kl(p.row(i), p.row(j));
            let qs = greedy_k_center(p, inst.n_q, &mut rng).unwrap();
            let greedy = radius(p.rows(), qs.indices(), &d);
            let opt = exhaustive_optimum(p.rows(), inst.n_q, &d);
            if opt == 0.0 {
                if greedy == 0.0 { 1.0 } else { f64::INFINITY }
            } else {
                greedy / opt
            }
        })
        .collect()
}
