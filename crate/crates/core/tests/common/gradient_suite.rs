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

//! Finite-difference checks for every layer kind and every training loss.
//!
//! Loss values on the oracle side are recomputed from their definitions in
//! `f64`; only the analytic side uses the library.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rona::losses;
use rona::models::{attach_adapter, build, Arch, ModelSpec};
use rona::nn::{softmax_temp, Gradients, Layer, Network, Tap, Taps};

use super::fd::{log_softmax, probe_params, random_tensor, Analytic, Batch, Probe, RefNet};

pub const PROBES: usize = 24;

fn grads_of(g: &Gradients) -> Analytic {
    g.layers
        .iter()
        .map(|l| l.as_ref().map(|p| (p.weight.data().to_vec(), p.bias.data().to_vec())))
        .collect()
}

fn param_layers(net: &Network, upto: usize) -> Vec<usize> {
    (0..=upto).filter(|&i| net.layers()[i].params().is_some()).collect()
}

/// Linear read-out `Σ g·y` of the final layer.
fn linear_case(net: Network, batch: usize, seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = vec![batch];
    shape.extend_from_slice(net.input_shape());
    let x = random_tensor(&shape, 1.0, &mut rng);
    let rec = net.forward(&x).unwrap();
    let g_out = random_tensor(rec.last().shape(), 1.0, &mut rng);
    let analytic = grads_of(&net.backward(&rec, &g_out).unwrap());
    let xb = Batch::from_tensor(&x);
    let objective = |n: &[RefNet]| {
        let (y, sig) = n[0].logits(&xb);
        (y.data.iter().zip(g_out.data()).map(|(a, &b)| a * b as f64).sum(), sig)
    };
    let layers = param_layers(&net, net.layers().len() - 1);
    probe_params(&[RefNet::of(&net)], 0, &layers, PROBES, &mut rng, &objective, &analytic)
}

pub fn dense_layer(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = Layer::dense(&[6], 5, &mut rng).unwrap();
    let l1 = Layer::dense(&[5], 3, &mut rng).unwrap();
    linear_case(Network::new("dense", &[6], vec![l0, l1], Taps::default()).unwrap(), 4, seed)
}

pub fn conv2d_layer(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = Layer::conv2d(&[2, 6, 5], 3, &mut rng).unwrap();
    let l1 = Layer::dense(&[3, 4, 3], 4, &mut rng).unwrap();
    linear_case(Network::new("conv2d", &[2, 6, 5], vec![l0, l1], Taps::default()).unwrap(), 3, seed)
}

pub fn conv1x1_layer(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = Layer::conv1x1(&[3, 4, 4], 5, &mut rng).unwrap();
    let l1 = Layer::dense(&[5, 4, 4], 2, &mut rng).unwrap();
    linear_case(Network::new("conv1x1", &[3, 4, 4], vec![l0, l1], Taps::default()).unwrap(), 3, seed)
}

pub fn maxpool_layer(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = Layer::conv2d(&[1, 7, 7], 2, &mut rng).unwrap();
    let l1 = Layer::max_pool(&[2, 5, 5]).unwrap();
    let l2 = Layer::dense(&[2, 2, 2], 3, &mut rng).unwrap();
    linear_case(Network::new("maxpool", &[1, 7, 7], vec![l0, l1, l2], Taps::default()).unwrap(), 3, seed)
}

pub fn relu_layer(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = Layer::dense(&[4], 8, &mut rng).unwrap();
    let l1 = Layer::relu(&[8]);
    let l2 = Layer::dense(&[8], 3, &mut rng).unwrap();
    linear_case(Network::new("relu", &[4], vec![l0, l1, l2], Taps::default()).unwrap(), 5, seed)
}

/// Random three-parameter-layer network mixing every layer kind.
pub fn random_three_layer(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l0 = Layer::conv2d(&[1, 8, 8], 3, &mut rng).unwrap();
    let l1 = Layer::relu(&[3, 6, 6]);
    let l2 = Layer::max_pool(&[3, 6, 6]).unwrap();
    let l3 = Layer::conv1x1(&[3, 3, 3], 4, &mut rng).unwrap();
    let l4 = Layer::relu(&[4, 3, 3]);
    let l5 = Layer::dense(&[4, 3, 3], 5, &mut rng).unwrap();
    let net = Network::new("random3", &[1, 8, 8], vec![l0, l1, l2, l3, l4, l5], Taps::default()).unwrap();
    linear_case(net, 4, seed)
}

fn micro_student(seed: u64) -> Network {
    build(&ModelSpec::new(Arch::StudentMicro, 4), seed).unwrap()
}

/// Hint loss through the adapter and the student up to the guided layer;
/// probes both the student (net 0) and the adapter (net 1).
pub fn hint_loss(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let student = micro_student(seed);
    let teacher = build(&ModelSpec::new(Arch::TeacherMicro, 4), seed + 1).unwrap();
    let adapter = attach_adapter(&student, &teacher, seed + 2).unwrap();
    let guided = student.tap_index(Tap::Guided).unwrap();
    let x = random_tensor(&[3, 1, 8, 8], 1.0, &mut rng);
    let mut zshape = vec![3];
    zshape.extend_from_slice(teacher.tap_shape(Tap::Hint).unwrap());
    let z_h = random_tensor(&zshape, 1.0, &mut rng);

    let srec = student.forward_through(&x, guided).unwrap();
    let arec = adapter.forward(srec.last()).unwrap();
    let g_adapt = losses::hint_loss_grad(arec.last(), &z_h, &[1.0; 3]).unwrap();
    let ag = adapter.backward(&arec, &g_adapt).unwrap();
    let sg = student.backward_from(&srec, guided, &ag.input).unwrap();

    let xb = Batch::from_tensor(&x);
    let objective = |n: &[RefNet]| {
        let (g, mut sig) = n[0].forward(&xb, guided);
        let (a, sig2) = n[1].logits(&g);
        sig.extend(sig2);
        let loss = a.data.iter().zip(z_h.data()).map(|(p, &q)| (p - q as f64).powi(2)).sum::<f64>() / 2.0;
        (loss, sig)
    };
    let nets = [RefNet::of(&student), RefNet::of(adapter.network())];
    let mut probes = probe_params(&nets, 0, &param_layers(&student, guided), PROBES, &mut rng, &objective, &grads_of(&sg));
    probes.extend(probe_params(&nets, 1, &[0], PROBES, &mut rng, &objective, &grads_of(&ag)));
    probes
}

pub fn distill_loss(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let student = micro_student(seed);
    let tau = 3.0;
    let x = random_tensor(&[4, 1, 8, 8], 1.0, &mut rng);
    let target = softmax_temp(&random_tensor(&[4, 4], 3.0, &mut rng), tau).unwrap();
    let rec = student.forward(&x).unwrap();
    let g = losses::distill_loss_grad(rec.last(), &target, tau, &[1.0; 4]).unwrap();
    let analytic = grads_of(&student.backward(&rec, &g).unwrap());
    let xb = Batch::from_tensor(&x);
    let objective = |n: &[RefNet]| {
        let (z, sig) = n[0].logits(&xb);
        let loss = (0..z.rows)
            .map(|i| {
                let lp = log_softmax(z.row(i), tau as f64);
                -target.row(i).iter().zip(&lp).map(|(&t, l)| t as f64 * l).sum::<f64>()
            })
            .sum();
        (loss, sig)
    };
    let layers = param_layers(&student, student.layers().len() - 1);
    probe_params(&[RefNet::of(&student)], 0, &layers, PROBES, &mut rng, &objective, &analytic)
}

pub fn self_loss(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let student = micro_student(seed);
    let x = random_tensor(&[4, 1, 8, 8], 1.0, &mut rng);
    let labels = [0usize, 3, 1, 3];
    let rec = student.forward(&x).unwrap();
    let g = losses::self_loss_grad(rec.last(), &labels, &[1.0; 4]).unwrap();
    let analytic = grads_of(&student.backward(&rec, &g).unwrap());
    let xb = Batch::from_tensor(&x);
    let objective = |n: &[RefNet]| {
        let (z, sig) = n[0].logits(&xb);
        let loss = labels.iter().enumerate().map(|(i, &y)| -log_softmax(z.row(i), 1.0)[y]).sum();
        (loss, sig)
    };
    let layers = param_layers(&student, student.layers().len() - 1);
    probe_params(&[RefNet::of(&student)], 0, &layers, PROBES, &mut rng, &objective, &analytic)
}

/// Every case of the suite with a label.
pub fn all_cases(seed: u64) -> Vec<(&'static str, Vec<Probe>)> {
    vec![
        ("dense", dense_layer(seed)),
        ("conv2d", conv2d_layer(seed)),
        ("conv1x1", conv1x1_layer(seed)),
        ("maxpool", maxpool_layer(seed)),
        ("relu", relu_layer(seed)),
        ("random_three_layer", random_three_layer(seed)),
        ("hint_loss", hint_loss(seed)),
        ("distill_loss", distill_loss(seed)),
        ("self_loss", self_loss(seed)),
    ]
}

pub fn max_rel_err(probes: &[Probe]) -> f64 {
    probes.iter().map(Probe::rel_err).fold(0.0, f64::max)
}
