use ndarray::{Array1, Array2, Axis};

use crate::numerics::RngStream;

/// Fully connected layer `y = x Wᵀ + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `out × in`.
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Array2::zeros((fan_out, fan_in)),
            bias: Array1::zeros(fan_out),
        }
    }

    /// Uniform weights in `[-s, s]` with `s = scale / √fan_in`, zero bias.
    pub fn uniform(fan_in: usize, fan_out: usize, scale: f64, rng: &mut RngStream) -> Self {
        let s = scale / (fan_in as f64).sqrt();
        let weight = Array2::from_shape_fn((fan_out, fan_in), |_| rng.uniform_range(-s, s));
        Self {
            weight,
            bias: Array1::zeros(fan_out),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.nrows()
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        z
    }
}

/// Stack of layers with tanh on every hidden layer and optionally the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
    pub tanh_output: bool,
}

impl Mlp {
    pub fn new(dims: &[usize], tanh_output: bool, scale: f64, rng: &mut RngStream) -> Self {
        let layers = dims
            .windows(2)
            .map(|w| Layer::uniform(w[0], w[1], scale, rng))
            .collect();
        Self {
            layers,
            tanh_output,
        }
    }

    /// Activations `[x, a_1, …, a_L]` for a row-major batch.
    pub fn forward(&self, x: Array2<f64>) -> Vec<Array2<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x);
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut z = layer.forward(acts.last().expect("input"));
            if k < last || self.tanh_output {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        acts
    }

    /// Back-propagates `d_out` (gradient w.r.t. the final activation).
    /// Accumulates parameter gradients into `grads` and returns the input gradient.
    pub fn backward(
        &self,
        acts: &[Array2<f64>],
        d_out: Array2<f64>,
        grads: &mut Mlp,
    ) -> Array2<f64> {
        let last = self.layers.len() - 1;
        let mut delta = d_out;
        for k in (0..self.layers.len()).rev() {
            if k < last || self.tanh_output {
                let a = &acts[k + 1];
                ndarray::Zip::from(&mut delta)
                    .and(a)
                    .for_each(|d, &y| *d *= 1.0 - y * y);
            }
            let g = &mut grads.layers[k];
            g.weight += &delta.t().dot(&acts[k]);
            g.bias += &delta.sum_axis(Axis(0));
            delta = delta.dot(&self.layers[k].weight);
        }
        delta
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Layer::zeros(l.fan_in(), l.fan_out()))
                .collect(),
            tanh_output: self.tanh_output,
        }
    }
}
