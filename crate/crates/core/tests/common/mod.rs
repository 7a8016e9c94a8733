#![allow(dead_code)]

use multistep::data::Normalizer;
use multistep::model_io::{ModelKind, TrainedModel};
use multistep::nn::{Activation, Mlp, Mode};
use multistep::strategies::{DirectModelSet, MultiOutputModel, RecursiveModel, Strategy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Network with uniformly random weights and biases.
pub fn random_net(
    seed: u64,
    input: usize,
    hidden: &[usize],
    output: usize,
    hidden_act: Activation,
    out_act: Activation,
) -> Mlp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::new(input, hidden, output, hidden_act, out_act, 0.0, &mut rng).unwrap();
    for w in net.params_mut() {
        *w = rng.random_range(-1.0..1.0);
    }
    net
}

pub fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Largest relative disagreement between backprop and central differences
/// for the scalar loss `L = <r, net(x)>`. Relative errors are taken against
/// `max(|analytic|, |numeric|, 1e-6)` so vanishing gradients are compared
/// absolutely.
pub fn max_gradient_error(net: &Mlp, x: &[f64], r: &[f64], h: f64) -> f64 {
    let loss = |n: &Mlp| -> f64 {
        n.predict(x).unwrap().iter().zip(r).map(|(a, b)| a * b).sum()
    };
    let cache = net.forward(x, Mode::Eval).unwrap();
    let analytic = net.backward(&cache, r).unwrap();
    let mut probe = net.clone();
    let mut worst = 0.0f64;
    for i in 0..net.num_params() {
        let orig = probe.params()[i];
        probe.params_mut()[i] = orig + h;
        let up = loss(&probe);
        probe.params_mut()[i] = orig - h;
        let down = loss(&probe);
        probe.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let a = analytic.params[i];
        let scale = a.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((a - numeric).abs() / scale);
    }
    worst
}

/// Rolls a one-step network forward `n` times by explicit window shifting,
/// written independently of the library's rollout code.
pub fn manual_rollout(net: &Mlp, history: &[f64], n: usize) -> Vec<f64> {
    let mut window = history.to_vec();
    let mut out = Vec::new();
    for _ in 0..n {
        let y = net.predict(&window).unwrap()[0];
        out.push(y);
        window.remove(0);
        window.push(y);
    }
    out
}

/// Weights spread over many binades so a lossy float encoding would show.
pub fn scrambled_net(seed: u64, input: usize, output: usize) -> Mlp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net =
        Mlp::new(input, &[7, 5], output, Activation::Tanh, Activation::Linear, 0.1, &mut rng)
            .unwrap();
    for w in net.params_mut() {
        let m: f64 = rng.random_range(-1.0..1.0);
        *w = m * 2f64.powi(rng.random_range(-30..2));
    }
    net
}

/// A model of the right shape for `strategy`, with scrambled weights.
pub fn model_for(strategy: Strategy, seed: u64, p: usize, q: usize) -> TrainedModel {
    let norm = Some(Normalizer { min: -3.0 / 7.0, max: 1234.5678901 });
    let kind = match strategy {
        Strategy::Recursive | Strategy::Dad => {
            ModelKind::Recursive(RecursiveModel::new(scrambled_net(seed, p, 1), p).unwrap())
        }
        Strategy::Cdad => ModelKind::Recursive(
            RecursiveModel::augmented(scrambled_net(seed, p + 1, 1), p, q).unwrap(),
        ),
        Strategy::Direct | Strategy::Hybrid => {
            let hybrid = strategy == Strategy::Hybrid;
            let nets = (0..q)
                .map(|h| {
                    let extra = if hybrid { h } else { 0 };
                    scrambled_net(seed.wrapping_add(h as u64), p + extra, 1)
                })
                .collect();
            ModelKind::Direct(DirectModelSet::new(nets, p, hybrid).unwrap())
        }
        Strategy::Multi | Strategy::MultiNoise | Strategy::MultiCgan => {
            ModelKind::Multi(MultiOutputModel::new(scrambled_net(seed, p, q)).unwrap())
        }
    };
    TrainedModel::new(strategy, norm, q, kind).unwrap()
}
