mod common;

use common::{max_gradient_error, random_net, random_vec};
use multistep::nn::{fit, Activation, Mlp, Mode, Samples, TrainConfig};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ACTIVATIONS: [Activation; 4] = [
    Activation::Relu,
    Activation::Linear,
    Activation::Sigmoid,
    Activation::Tanh,
];

#[test]
fn gradients_match_finite_differences_for_every_activation() {
    for (k, &act) in ACTIVATIONS.iter().enumerate() {
        for seed in 0..20u64 {
            let net = random_net(seed * 7 + k as u64, 4, &[6, 5], 3, act, Activation::Linear);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let x = random_vec(&mut rng, 4);
            let r = random_vec(&mut rng, 3);
            let err = max_gradient_error(&net, &x, &r, 1e-5);
            assert!(err < 1e-4, "{act:?} seed {seed}: relative error {err:e}");
        }
    }
}

#[test]
fn sigmoid_output_gradients() {
    for seed in 0..20u64 {
        let net = random_net(seed, 3, &[5], 1, Activation::Tanh, Activation::Sigmoid);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_vec(&mut rng, 3);
        assert!(max_gradient_error(&net, &x, &[1.0], 1e-5) < 1e-4);
    }
}

#[test]
fn input_gradient_matches_finite_differences() {
    let net = random_net(3, 5, &[7, 4], 2, Activation::Tanh, Activation::Linear);
    let x = [0.3, -0.2, 0.9, 0.1, -0.7];
    let r = [0.5, -1.5];
    let cache = net.forward(&x, Mode::Eval).unwrap();
    let g = net.backward(&cache, &r).unwrap();
    let loss = |x: &[f64]| -> f64 {
        net.predict(x).unwrap().iter().zip(&r).map(|(a, b)| a * b).sum()
    };
    let h = 1e-5;
    for i in 0..x.len() {
        let mut up = x;
        let mut down = x;
        up[i] += h;
        down[i] -= h;
        let numeric = (loss(&up) - loss(&down)) / (2.0 * h);
        assert!((g.input[i] - numeric).abs() < 1e-8 * numeric.abs().max(1.0));
    }
}

#[test]
fn dropout_expectation_matches_eval_for_linear_net() {
    let mut net = random_net(11, 6, &[10], 3, Activation::Linear, Activation::Linear);
    net.set_dropout_rate(0.3).unwrap();
    let x = [0.4, -0.1, 0.8, 0.2, -0.6, 0.5];
    let eval = net.predict(&x).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 10_000;
    let samples: Vec<Vec<f64>> = (0..n)
        .map(|_| net.forward(&x, Mode::Train(&mut rng)).unwrap().into_output())
        .collect();
    for j in 0..3 {
        let mean = samples.iter().map(|s| s[j]).sum::<f64>() / n as f64;
        let var = samples.iter().map(|s| (s[j] - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!(
            (mean - eval[j]).abs() < 3.0 * se,
            "output {j}: mean {mean} vs eval {} (se {se})",
            eval[j]
        );
    }
}

#[test]
fn eval_forward_is_pure() {
    let net = random_net(5, 4, &[8], 2, Activation::Relu, Activation::Linear);
    let before = net.clone();
    let x = [0.1, 0.2, 0.3, 0.4];
    let a = net.predict(&x).unwrap();
    let b = net.predict(&x).unwrap();
    assert_eq!(a, b);
    assert_eq!(net, before);
}

#[test]
fn fit_is_deterministic_for_a_seed() {
    let mut data = Samples::new(2, 1);
    for i in 0..50 {
        let x = i as f64 / 50.0;
        data.push(&[x, 1.0 - x], &[x * x]).unwrap();
    }
    let cfg = TrainConfig {
        epochs: 15,
        batch_size: 8,
        seed: 4,
        ..Default::default()
    };
    let make = || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        Mlp::new(2, &[8], 1, Activation::Relu, Activation::Linear, 0.1, &mut rng).unwrap()
    };
    let (a, la) = fit(make(), &data, &cfg).unwrap();
    let (b, lb) = fit(make(), &data, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(la, lb);
    assert_eq!(la.len(), 15);
}

proptest! {
    // Fixed seed: a draw landing within `h` of a ReLU kink would make the
    // finite difference meaningless.
    #![proptest_config(ProptestConfig {
        cases: 32,
        rng_seed: RngSeed::Fixed(0x6EAD),
        ..ProptestConfig::default()
    })]

    #[test]
    fn gradient_check_over_random_shapes(
        seed in 0u64..10_000,
        input in 1usize..7,
        h1 in 1usize..13,
        h2 in 1usize..13,
        output in 1usize..5,
        act in 0usize..4,
    ) {
        let net = random_net(seed, input, &[h1, h2], output, ACTIVATIONS[act], Activation::Linear);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xF00D);
        let x = random_vec(&mut rng, input);
        let r = random_vec(&mut rng, output);
        let err = max_gradient_error(&net, &x, &r, 1e-5);
        prop_assert!(err < 1e-4, "relative error {err:e}");
    }
}
