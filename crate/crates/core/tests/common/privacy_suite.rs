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

//! Sanitizer and accountant checks against closed-form oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rona::losses::LossVector;
use rona::privacy::{clip, sanitize, sigma_for_budget, Accountant, BoundMode, SanitizeParams};

use super::check::Check;

pub const DRAWS: usize = 100_000;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn random_vector(rng: &mut ChaCha8Rng) -> LossVector {
    let len = rng.random_range(1..40);
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    LossVector::new((0..len).map(|_| scale * rng.random_range(-1.0..1.0)).collect())
}

/// Per-element sample mean and variance of `DRAWS` sanitizations of `v`.
fn moments(v: &[f64], sigma: f64, bound: f64, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let params = SanitizeParams::new(sigma, BoundMode::Fixed(bound)).unwrap();
    let lv = LossVector::new(v.to_vec());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (vec![0.0; v.len()], vec![0.0; v.len()]);
    for _ in 0..DRAWS {
        let s = sanitize(&lv, &params, bound, &mut rng).unwrap();
        for (k, x) in s.values.values().iter().enumerate() {
            sum[k] += x;
            sq[k] += x * x;
        }
    }
    let n = DRAWS as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let var = sq.iter().zip(&mean).map(|(q, m)| q / n - m * m).collect();
    (mean, var)
}

pub fn sanitizer_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(21);

    let (mut idem, mut worst_norm) = (true, 0.0f64);
    for _ in 0..1000 {
        let v = random_vector(&mut rng);
        let b = 10f64.powf(rng.random_range(-2.0..2.0));
        let once = clip(&v, b);
        idem &= clip(&once, b) == once;
        let expect = norm(v.values()).min(b);
        worst_norm = worst_norm.max((norm(once.values()) - expect).abs());
        // direction preserved
        let dot: f64 = once.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
        idem &= dot >= 0.0;
    }
    checks.push(Check::new("clip idempotent over 1000 vectors", idem, ""));
    checks.push(Check::new(
        "clip norm equals min(|v|, B)",
        worst_norm <= 1e-6,
        format!("worst deviation {worst_norm:.2e} (tol 1e-6)"),
    ));

    let (three_four, under) = (clip(&LossVector::new(vec![3.0, 4.0]), 2.5), clip(&LossVector::new(vec![1.0, 0.0]), 5.0));
    checks.push(Check::new(
        "clip examples",
        three_four.values() == [1.5, 2.0] && under.values() == [1.0, 0.0],
        format!("{:?} {:?}", three_four.values(), under.values()),
    ));

    let params = SanitizeParams::new(0.0, BoundMode::Fixed(1.0)).unwrap();
    let v = LossVector::new(vec![3.0, -4.0, 12.0]);
    let s = sanitize(&v, &params, 1.0, &mut rng).unwrap();
    checks.push(Check::new("zero noise equals clip", s.values == clip(&v, 1.0), ""));

    let (mean, var) = moments(&[0.0; 4], 1.0, 1.0, 5);
    let ok = mean.iter().all(|m| m.abs() <= 0.02) && var.iter().all(|v| (v.sqrt() - 1.0).abs() <= 0.02);
    checks.push(Check::new(
        "zero vector, sigma 1, B 1: mean within 0.02 of 0, std within 0.02 of 1",
        ok,
        format!("mean {mean:.4?} std {:.4?}", var.iter().map(|v| v.sqrt()).collect::<Vec<_>>()),
    ));

    // clipped input: (3,4) with B = 2 becomes (1.2, 1.6)
    let (sigma, bound) = (0.7, 2.0);
    let target = [1.2, 1.6];
    let (mean, var) = moments(&[3.0, 4.0], sigma, bound, 6);
    let sd = sigma * bound;
    let mean_ok = mean.iter().zip(target).all(|(m, t)| (m - t).abs() <= 3.0 * sd / (DRAWS as f64).sqrt());
    let var_ok = var.iter().all(|v| (v / (sd * sd) - 1.0).abs() <= 0.05);
    checks.push(Check::new(
        "mean within 3 sigma*B/sqrt(n) of clip(v)",
        mean_ok,
        format!("mean {mean:.4?} target {target:?}"),
    ));
    checks.push(Check::new(
        "variance within 5% of (sigma*B)^2",
        var_ok,
        format!("var {var:.4?} target {:.4}", sd * sd),
    ));

    let (_, var) = moments(&[1.0], 20.0, 1.0, 7);
    let std = var[0].sqrt();
    checks.push(Check::new("sigma 20: std about 20", (std / 20.0 - 1.0).abs() <= 0.05, format!("std {std:.3}")));
    checks
}

/// `min_λ (T·λ(λ+1)/(2σ²) + ln(1/δ)) / λ` over λ = 1..=64, written out
/// independently of the library.
pub fn epsilon_oracle(queries: usize, sigma: f64, delta: f64) -> f64 {
    (1..=64)
        .map(|l| {
            let l = l as f64;
            (queries as f64 * l * (l + 1.0) / (2.0 * sigma * sigma) + (1.0 / delta).ln()) / l
        })
        .fold(f64::INFINITY, f64::min)
}

fn epsilon(queries: usize, sigma: f64, delta: f64) -> f64 {
    let mut acc = Accountant::new();
    for _ in 0..queries {
        acc.accumulate(sigma).unwrap();
    }
    acc.epsilon(delta).unwrap()
}

pub fn accountant_checks() -> Vec<Check> {
    let mut checks = Vec::new();
    let e1 = epsilon(1, 4.845, 1e-5);
    let oracle = epsilon_oracle(1, 4.845, 1e-5);
    checks.push(Check::new(
        "eps(T=1, sigma=4.845, delta=1e-5) in [0.95, 1.10]",
        (0.95..=1.10).contains(&e1) && (e1 - oracle).abs() < 1e-9,
        format!("eps {e1:.4}, oracle {oracle:.4}"),
    ));

    let ts = [1usize, 10, 100];
    let sigmas = [2.0, 4.0, 8.0];
    let deltas = [1e-6, 1e-5, 1e-4];
    let mut grid = [[[0.0f64; 3]; 3]; 3];
    let mut worst_oracle = 0.0f64;
    for (a, &t) in ts.iter().enumerate() {
        for (b, &s) in sigmas.iter().enumerate() {
            for (c, &d) in deltas.iter().enumerate() {
                grid[a][b][c] = epsilon(t, s, d);
                worst_oracle = worst_oracle.max((grid[a][b][c] - epsilon_oracle(t, s, d)).abs());
            }
        }
    }
    let at = |idx: [usize; 3]| grid[idx[0]][idx[1]][idx[2]];
    let mut mono = true;
    for (i, j, k) in (0..3).flat_map(|i| (0..3).flat_map(move |j| (0..2).map(move |k| (i, j, k)))) {
        mono &= at([k, i, j]) <= at([k + 1, i, j]); // nondecreasing in T
        mono &= at([i, k, j]) >= at([i, k + 1, j]); // nonincreasing in sigma
        mono &= at([i, j, k]) >= at([i, j, k + 1]); // nonincreasing in delta
    }
    checks.push(Check::new("monotone in T, sigma, delta on a 3x3x3 grid", mono, ""));
    checks.push(Check::new(
        "grid matches oracle",
        worst_oracle < 1e-9,
        format!("worst deviation {worst_oracle:.2e}"),
    ));

    let e100 = epsilon(100, 4.845, 1e-5);
    checks.push(Check::new("sublinear composition", e100 < 100.0 * e1, format!("eps(100) {e100:.3}")));

    let s1 = sigma_for_budget(1, 1.0, 1e-5, 1e4).unwrap();
    let s4 = sigma_for_budget(4, 1.0, 1e-5, 1e4).unwrap();
    let ratio = s4 / s1;
    checks.push(Check::new(
        "sigma_for_budget ratio T=4 vs T=1 in [1.8, 2.2]",
        (1.8..=2.2).contains(&ratio),
        format!("ratio {ratio:.4}"),
    ));
    let inv = sigma_for_budget(1, e1, 1e-5, 1e4).unwrap();
    checks.push(Check::new(
        "sigma_for_budget inverts eps at T=1",
        (inv - 4.845).abs() < 1e-3,
        format!("sigma {inv:.5}"),
    ));
    let edge = epsilon_oracle(1, inv, 1e-5);
    checks.push(Check::new("calibrated sigma meets the budget", edge <= e1 + 1e-12, format!("eps {edge:.6}")));
    checks
}
