//! Dense feed-forward network with explicit backpropagation.
//!
//! Parameters live in one flat `Vec<f64>`: for each layer the row-major
//! weight block (`out_dim × in_dim`) followed by the bias. Gradients use the
//! same layout, so the optimizer can treat them as plain slices.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
    Sigmoid,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
            Activation::Sigmoid => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative given the pre-activation `z` and the activation `a = f(z)`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

/// Dense layer in owned, nested form. Used to build networks by hand and as
/// the serialized representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// `out_dim` rows of `in_dim` weights.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
struct LayerShape {
    in_dim: usize,
    out_dim: usize,
    activation: Activation,
    offset: usize,
}

impl LayerShape {
    fn weight_range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.in_dim * self.out_dim
    }

    fn bias_range(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.in_dim * self.out_dim;
        start..start + self.out_dim
    }

    fn end(&self) -> usize {
        self.offset + (self.in_dim + 1) * self.out_dim
    }
}

/// Borrowed view of one layer's parameters.
#[derive(Clone, Copy, Debug)]
pub struct LayerView<'a> {
    pub in_dim: usize,
    pub out_dim: usize,
    pub activation: Activation,
    /// Row-major `out_dim × in_dim`.
    pub weights: &'a [f64],
    pub bias: &'a [f64],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layers: Vec<LayerShape>,
    params: Vec<f64>,
    dropout_rate: f64,
}

/// Forward-pass mode. Training mode carries the random stream used to draw
/// dropout masks.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn RngCore),
}

/// Everything backprop needs from a forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    shape: Vec<(usize, usize)>,
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
    output: Vec<f64>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn into_output(self) -> Vec<f64> {
        self.output
    }
}

/// Parameter gradients (same layout as [`Mlp::params`]) plus the gradient
/// with respect to the network input.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub params: Vec<f64>,
    pub input: Vec<f64>,
}

fn check_dropout(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::config(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

impl Mlp {
    /// Builds a randomly initialized network.
    ///
    /// Weights are drawn from `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))`,
    /// biases start at zero.
    pub fn new<R: Rng + ?Sized>(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        hidden_activation: Activation,
        output_activation: Activation,
        dropout_rate: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(
            input_dim,
            hidden,
            output_dim,
            hidden_activation,
            output_activation,
            dropout_rate,
        )?;
        for layer in &net.layers {
            let bound = (6.0 / layer.in_dim as f64).sqrt();
            for w in &mut net.params[layer.weight_range()] {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    /// Network with every weight and bias set to zero.
    pub fn zeros(
        input_dim: usize,
        hidden: &[usize],
        output_dim: usize,
        hidden_activation: Activation,
        output_activation: Activation,
        dropout_rate: f64,
    ) -> Result<Self> {
        check_dropout(dropout_rate)?;
        let mut dims = Vec::with_capacity(hidden.len() + 2);
        dims.push(input_dim);
        dims.extend_from_slice(hidden);
        dims.push(output_dim);
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::config(format!(
                "layer dimensions must be positive, got {dims:?}"
            )));
        }
        let mut layers = Vec::with_capacity(dims.len() - 1);
        let mut offset = 0;
        for (i, pair) in dims.windows(2).enumerate() {
            let activation = if i + 2 == dims.len() {
                output_activation
            } else {
                hidden_activation
            };
            let shape = LayerShape {
                in_dim: pair[0],
                out_dim: pair[1],
                activation,
                offset,
            };
            offset = shape.end();
            layers.push(shape);
        }
        Ok(Self {
            layers,
            params: vec![0.0; offset],
            dropout_rate,
        })
    }

    /// Builds a network from explicit layers, checking that dimensions chain
    /// and every parameter is finite.
    pub fn from_layers(layers: Vec<DenseLayer>, dropout_rate: f64) -> Result<Self> {
        check_dropout(dropout_rate)?;
        if layers.is_empty() {
            return Err(Error::config("network needs at least one layer"));
        }
        let mut shapes = Vec::with_capacity(layers.len());
        let mut params = Vec::new();
        let mut prev_out: Option<usize> = None;
        for (idx, layer) in layers.into_iter().enumerate() {
            let out_dim = layer.weights.len();
            let in_dim = layer.weights.first().map_or(0, Vec::len);
            if out_dim == 0 || in_dim == 0 {
                return Err(Error::shape(format!("layer {idx} has an empty weight matrix")));
            }
            if layer.weights.iter().any(|row| row.len() != in_dim) {
                return Err(Error::shape(format!("layer {idx} weight rows are ragged")));
            }
            if layer.bias.len() != out_dim {
                return Err(Error::shape(format!(
                    "layer {idx}: bias length {} != out_dim {out_dim}",
                    layer.bias.len()
                )));
            }
            if let Some(prev) = prev_out {
                if prev != in_dim {
                    return Err(Error::shape(format!(
                        "layer {idx}: in_dim {in_dim} does not chain with previous out_dim {prev}"
                    )));
                }
            }
            let offset = params.len();
            for row in &layer.weights {
                params.extend_from_slice(row);
            }
            params.extend_from_slice(&layer.bias);
            shapes.push(LayerShape {
                in_dim,
                out_dim,
                activation: layer.activation,
                offset,
            });
            prev_out = Some(out_dim);
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("network parameters must be finite".into()));
        }
        Ok(Self {
            layers: shapes,
            params,
            dropout_rate,
        })
    }

    pub fn to_layers(&self) -> Vec<DenseLayer> {
        self.layers
            .iter()
            .map(|l| DenseLayer {
                weights: self.params[l.weight_range()]
                    .chunks(l.in_dim)
                    .map(<[f64]>::to_vec)
                    .collect(),
                bias: self.params[l.bias_range()].to_vec(),
                activation: l.activation,
            })
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn dropout_rate(&self) -> f64 {
        self.dropout_rate
    }

    pub fn set_dropout_rate(&mut self, rate: f64) -> Result<()> {
        check_dropout(rate)?;
        self.dropout_rate = rate;
        Ok(())
    }

    pub fn layer(&self, idx: usize) -> LayerView<'_> {
        let l = &self.layers[idx];
        LayerView {
            in_dim: l.in_dim,
            out_dim: l.out_dim,
            activation: l.activation,
            weights: &self.params[l.weight_range()],
            bias: &self.params[l.bias_range()],
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Sets every first-layer weight reading input `col` to zero.
    pub fn zero_input_column(&mut self, col: usize) -> Result<()> {
        let first = self.layers[0].clone();
        if col >= first.in_dim {
            return Err(Error::shape(format!(
                "input column {col} out of range for input_dim {}",
                first.in_dim
            )));
        }
        for row in 0..first.out_dim {
            self.params[first.offset + row * first.in_dim + col] = 0.0;
        }
        Ok(())
    }

    /// Copy of this network with input `col` removed from the first layer.
    pub fn without_input_column(&self, col: usize) -> Result<Mlp> {
        if self.input_dim() < 2 || col >= self.input_dim() {
            return Err(Error::shape(format!(
                "cannot remove input column {col} from input_dim {}",
                self.input_dim()
            )));
        }
        let mut layers = self.to_layers();
        for row in &mut layers[0].weights {
            row.remove(col);
        }
        Mlp::from_layers(layers, self.dropout_rate)
    }

    /// Eval-mode forward pass returning only the output.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(input, Mode::Eval)?.output)
    }

    /// Forward pass. Dropout (inverted scaling) is applied to hidden layer
    /// outputs in training mode only.
    pub fn forward(&self, input: &[f64], mut mode: Mode<'_>) -> Result<ForwardCache> {
        if input.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "input length {} != input_dim {}",
                input.len(),
                self.input_dim()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite network input".into()));
        }
        let n = self.layers.len();
        let keep = 1.0 - self.dropout_rate;
        let mut cache = ForwardCache {
            shape: self.shape(),
            inputs: Vec::with_capacity(n),
            pre: Vec::with_capacity(n),
            act: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
            output: Vec::new(),
        };
        let mut current = input.to_vec();
        for (idx, layer) in self.layers.iter().enumerate() {
            let w = &self.params[layer.weight_range()];
            let b = &self.params[layer.bias_range()];
            let mut z = Vec::with_capacity(layer.out_dim);
            for (row, bias) in w.chunks_exact(layer.in_dim).zip(b) {
                z.push(dot(row, &current) + bias);
            }
            let a: Vec<f64> = z.iter().map(|&v| layer.activation.apply(v)).collect();
            let is_hidden = idx + 1 < n;
            let mask = match &mut mode {
                Mode::Train(rng) if is_hidden && self.dropout_rate > 0.0 => Some(
                    (0..layer.out_dim)
                        .map(|_| {
                            if rng.random::<f64>() < keep {
                                1.0 / keep
                            } else {
                                0.0
                            }
                        })
                        .collect::<Vec<f64>>(),
                ),
                _ => None,
            };
            let next = match &mask {
                Some(m) => a.iter().zip(m).map(|(x, s)| x * s).collect(),
                None => a.clone(),
            };
            cache.inputs.push(std::mem::replace(&mut current, next));
            cache.pre.push(z);
            cache.act.push(a);
            cache.masks.push(mask);
        }
        cache.output = current;
        Ok(cache)
    }

    /// Backpropagates `loss_grad` (dL/d output) through the cached pass.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &[f64]) -> Result<Gradients> {
        let mut params = vec![0.0; self.params.len()];
        let input = self.backward_accumulate(cache, loss_grad, &mut params)?;
        Ok(Gradients { params, input })
    }

    /// Like [`Mlp::backward`] but adds the parameter gradient into `acc`.
    /// Returns the gradient with respect to the input.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        loss_grad: &[f64],
        acc: &mut [f64],
    ) -> Result<Vec<f64>> {
        if cache.shape != self.shape() {
            return Err(Error::shape("forward cache does not match this network"));
        }
        if loss_grad.len() != self.output_dim() {
            return Err(Error::shape(format!(
                "loss gradient length {} != output_dim {}",
                loss_grad.len(),
                self.output_dim()
            )));
        }
        if acc.len() != self.params.len() {
            return Err(Error::shape("gradient buffer does not match parameter count"));
        }
        let mut upstream = loss_grad.to_vec();
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            if let Some(mask) = &cache.masks[idx] {
                for (g, m) in upstream.iter_mut().zip(mask) {
                    *g *= m;
                }
            }
            let dz: Vec<f64> = upstream
                .iter()
                .zip(cache.pre[idx].iter().zip(&cache.act[idx]))
                .map(|(g, (&z, &a))| g * layer.activation.derivative(z, a))
                .collect();
            let x = &cache.inputs[idx];
            let (wr, br) = (layer.weight_range(), layer.bias_range());
            for (row, &d) in acc[wr.clone()].chunks_exact_mut(layer.in_dim).zip(&dz) {
                if d != 0.0 {
                    for (g, xi) in row.iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            for (g, d) in acc[br].iter_mut().zip(&dz) {
                *g += d;
            }
            let w = &self.params[wr];
            let mut down = vec![0.0; layer.in_dim];
            for (row, &d) in w.chunks_exact(layer.in_dim).zip(&dz) {
                if d != 0.0 {
                    for (g, wi) in down.iter_mut().zip(row) {
                        *g += d * wi;
                    }
                }
            }
            upstream = down;
        }
        Ok(upstream)
    }

    fn shape(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(|l| (l.in_dim, l.out_dim)).collect()
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn identity2() -> Mlp {
        Mlp::from_layers(
            vec![DenseLayer {
                weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                bias: vec![0.0, 0.0],
                activation: Activation::Linear,
            }],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Mlp::zeros(3, &[4, 4], 2, Activation::Relu, Activation::Linear, 0.1).unwrap();
        assert_eq!(net.predict(&[0.3, -1.0, 7.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_layer_passes_input_through() {
        assert_eq!(identity2().predict(&[1.5, -2.0]).unwrap(), vec![1.5, -2.0]);
    }

    #[test]
    fn eval_matches_hand_rolled_matrix_chain() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = Mlp::new(3, &[5], 2, Activation::Tanh, Activation::Linear, 0.2, &mut rng).unwrap();
        let layers = net.to_layers();
        let x = [0.2, -0.7, 1.1];
        let mut h = [0.0; 5];
        for (j, hj) in h.iter_mut().enumerate() {
            let mut s = layers[0].bias[j];
            for i in 0..3 {
                s += layers[0].weights[j][i] * x[i];
            }
            *hj = s.tanh();
        }
        let mut expected = [0.0; 2];
        for (k, ek) in expected.iter_mut().enumerate() {
            let mut s = layers[1].bias[k];
            for j in 0..5 {
                s += layers[1].weights[k][j] * h[j];
            }
            *ek = s;
        }
        let out = net.predict(&x).unwrap();
        for (a, b) in out.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let net = identity2();
        assert!(matches!(net.predict(&[1.0]), Err(Error::Shape(_))));
        assert!(matches!(net.predict(&[1.0, f64::NAN]), Err(Error::Numeric(_))));
    }

    #[test]
    fn rejects_non_chaining_layers() {
        let l1 = DenseLayer {
            weights: vec![vec![1.0, 1.0]; 3],
            bias: vec![0.0; 3],
            activation: Activation::Relu,
        };
        let l2 = DenseLayer {
            weights: vec![vec![1.0; 4]],
            bias: vec![0.0],
            activation: Activation::Linear,
        };
        assert!(matches!(Mlp::from_layers(vec![l1, l2], 0.0), Err(Error::Shape(_))));
    }

    #[test]
    fn zero_loss_grad_gives_zero_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Mlp::new(3, &[4], 2, Activation::Relu, Activation::Linear, 0.0, &mut rng).unwrap();
        let cache = net.forward(&[0.1, 0.2, 0.3], Mode::Eval).unwrap();
        let g = net.backward(&cache, &[0.0, 0.0]).unwrap();
        assert!(g.params.iter().all(|&v| v == 0.0));
        assert!(g.input.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Mlp::new(3, &[4], 2, Activation::Relu, Activation::Linear, 0.0, &mut rng).unwrap();
        let b = Mlp::new(3, &[5], 2, Activation::Relu, Activation::Linear, 0.0, &mut rng).unwrap();
        let cache = a.forward(&[0.1, 0.2, 0.3], Mode::Eval).unwrap();
        assert!(matches!(b.backward(&cache, &[1.0, 1.0]), Err(Error::Shape(_))));
    }

    #[test]
    fn single_layer_mse_gradient_matches_hand_arithmetic() {
        // y = w x + b, loss = (y - t)^2 => dL/dw = 2 (y - t) x
        let net = Mlp::from_layers(
            vec![DenseLayer {
                weights: vec![vec![0.5]],
                bias: vec![0.25],
                activation: Activation::Linear,
            }],
            0.0,
        )
        .unwrap();
        let cache = net.forward(&[2.0], Mode::Eval).unwrap();
        let y = cache.output()[0];
        assert_eq!(y, 1.25);
        let (_, grad) = crate::nn::mse_loss(cache.output(), &[3.0]).unwrap();
        let g = net.backward(&cache, &grad).unwrap();
        assert_eq!(g.params, vec![2.0 * (1.25 - 3.0) * 2.0, 2.0 * (1.25 - 3.0)]);
    }

    #[test]
    fn dropout_mask_is_respected_in_backward() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Mlp::new(2, &[64], 1, Activation::Linear, Activation::Linear, 0.5, &mut rng).unwrap();
        let cache = net.forward(&[1.0, 1.0], Mode::Train(&mut rng)).unwrap();
        let g = net.backward(&cache, &[1.0]).unwrap();
        let mask = cache.masks[0].as_ref().unwrap();
        let out = net.layer(1);
        let second_w = &g.params[out_offset(&net)..out_offset(&net) + 64];
        for (j, m) in mask.iter().enumerate() {
            if *m == 0.0 {
                assert_eq!(second_w[j], 0.0);
                let first_row = &g.params[j * 2..j * 2 + 2];
                assert_eq!(first_row, &[0.0, 0.0]);
            }
        }
        assert_eq!(out.in_dim, 64);
    }

    fn out_offset(net: &Mlp) -> usize {
        net.layers[1].offset
    }

    #[test]
    fn column_removal_keeps_outputs_when_column_is_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = Mlp::new(4, &[6], 1, Activation::Relu, Activation::Linear, 0.0, &mut rng).unwrap();
        net.zero_input_column(3).unwrap();
        let reduced = net.without_input_column(3).unwrap();
        let full = net.predict(&[0.1, 0.4, 0.9, 0.7]).unwrap();
        let short = reduced.predict(&[0.1, 0.4, 0.9]).unwrap();
        assert_eq!(full, short);
    }
}
