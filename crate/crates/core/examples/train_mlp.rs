//! Fits a small network to a noisy sine and checks its gradients against
//! central differences before training.

use multistep::data::WindowedDataset;
use multistep::nn::{fit, Activation, Mlp, Mode, TrainConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> multistep::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net = Mlp::new(1, &[16, 16], 1, Activation::Tanh, Activation::Linear, 0.0, &mut rng)?;

    // Backprop vs finite differences on L = y.
    let x = [0.4];
    let cache = net.forward(&x, Mode::Eval)?;
    let grads = net.backward(&cache, &[1.0])?;
    let mut probe = net.clone();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..net.num_params() {
        let w = probe.params()[i];
        probe.params_mut()[i] = w + h;
        let up = probe.predict(&x)?[0];
        probe.params_mut()[i] = w - h;
        let down = probe.predict(&x)?[0];
        probe.params_mut()[i] = w;
        let numeric = (up - down) / (2.0 * h);
        let analytic = grads.params[i];
        worst = worst.max((analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6));
    }
    println!("{} parameters, worst relative gradient error {worst:.2e}", net.num_params());

    let mut data = WindowedDataset::empty(1, 1);
    for _ in 0..512 {
        let x: f64 = rng.random_range(-3.0..3.0);
        data.push(&[x], &[x.sin() + rng.random_range(-0.05..0.05)])?;
    }
    let cfg = TrainConfig {
        epochs: 150,
        batch_size: 32,
        dropout_rate: 0.0,
        learning_rate: 3e-3,
        seed: 1,
    };
    let (trained, losses) = fit(net, &data, &cfg)?;
    for (e, l) in losses.iter().enumerate().step_by(30) {
        println!("epoch {e:>3}  loss {l:.5}");
    }
    for x in [-2.0, -1.0, 0.0, 1.0, 2.0f64] {
        println!("sin({x:+.1}) = {:+.3}, net {:+.3}", x.sin(), trained.predict(&[x])?[0]);
    }
    Ok(())
}
