//! Small fully-connected networks with ReLU hidden layers and a linear
//! output, stored as one flat parameter vector so optimizers and target
//! synchronization stay trivial.

use crate::env::source::SampleSource;

/// Feedforward net `dims[0] → dims[1] → … → dims.last()`. Hidden layers
/// apply ReLU; the output layer is linear. `dims.len() == 2` is a plain
/// linear model.
#[derive(Debug, Clone)]
pub struct Mlp {
    dims: Vec<usize>,
    /// Per layer: weights (out×in, row-major) then biases.
    params: Vec<f64>,
}

impl Mlp {
    /// Uniform fan-in scaled init: every weight and bias of a layer is
    /// drawn from `±1/√fan_in`. Consumes one draw per parameter.
    pub fn new(dims: &[usize], source: &mut SampleSource) -> Self {
        assert!(dims.len() >= 2, "need at least input and output dims");
        let mut params = Vec::with_capacity(Self::param_count(dims));
        for l in 0..dims.len() - 1 {
            let bound = 1.0 / (dims[l] as f64).sqrt();
            let layer_params = dims[l + 1] * dims[l] + dims[l + 1];
            for _ in 0..layer_params {
                params.push(source.next_range(-bound, bound));
            }
        }
        Mlp {
            dims: dims.to_vec(),
            params,
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Mlp {
            dims: dims.to_vec(),
            params: vec![0.0; Self::param_count(dims)],
        }
    }

    fn param_count(dims: &[usize]) -> usize {
        (0..dims.len() - 1)
            .map(|l| dims[l + 1] * dims[l] + dims[l + 1])
            .sum()
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

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    fn layer_offset(&self, layer: usize) -> usize {
        (0..layer)
            .map(|l| self.dims[l + 1] * self.dims[l] + self.dims[l + 1])
            .sum()
    }

    /// Post-activation values of every layer, input included. The last
    /// entry is the network output.
    pub fn forward(&self, input: &[f64]) -> Vec<Vec<f64>> {
        debug_assert_eq!(input.len(), self.input_dim());
        let n_layers = self.dims.len() - 1;
        let mut activations = Vec::with_capacity(n_layers + 1);
        activations.push(input.to_vec());
        for l in 0..n_layers {
            let (n_out, n_in) = (self.dims[l + 1], self.dims[l]);
            let base = self.layer_offset(l);
            let bias_base = base + n_out * n_in;
            let prev = &activations[l];
            let mut layer = Vec::with_capacity(n_out);
            for o in 0..n_out {
                let row = &self.params[base + o * n_in..base + (o + 1) * n_in];
                let mut v = self.params[bias_base + o];
                for (w, a) in row.iter().zip(prev) {
                    v += w * a;
                }
                if l + 1 < n_layers {
                    v = v.max(0.0);
                }
                layer.push(v);
            }
            activations.push(layer);
        }
        activations
    }

    pub fn output(&self, input: &[f64]) -> Vec<f64> {
        self.forward(input).pop().unwrap()
    }

    /// Backpropagates `∂L/∂output` through the cached forward pass,
    /// accumulating parameter gradients into `grad` (same layout as
    /// `params`).
    #[allow(clippy::needless_range_loop)]
    pub fn accumulate_gradients(
        &self,
        activations: &[Vec<f64>],
        output_grad: &[f64],
        grad: &mut [f64],
    ) {
        debug_assert_eq!(grad.len(), self.params.len());
        let n_layers = self.dims.len() - 1;
        let mut delta = output_grad.to_vec();
        for l in (0..n_layers).rev() {
            let (n_out, n_in) = (self.dims[l + 1], self.dims[l]);
            let base = self.layer_offset(l);
            let bias_base = base + n_out * n_in;
            let prev = &activations[l];
            for o in 0..n_out {
                let d = delta[o];
                if d != 0.0 {
                    let row = &mut grad[base + o * n_in..base + (o + 1) * n_in];
                    for (g, a) in row.iter_mut().zip(prev) {
                        *g += d * a;
                    }
                    grad[bias_base + o] += d;
                }
            }
            if l > 0 {
                // ReLU mask: the stored activation is already rectified.
                let mut prev_delta = vec![0.0; n_in];
                for o in 0..n_out {
                    let d = delta[o];
                    if d != 0.0 {
                        let row = &self.params[base + o * n_in..base + (o + 1) * n_in];
                        for (pd, w) in prev_delta.iter_mut().zip(row) {
                            *pd += d * w;
                        }
                    }
                }
                for (pd, a) in prev_delta.iter_mut().zip(prev) {
                    if *a <= 0.0 {
                        *pd = 0.0;
                    }
                }
                delta = prev_delta;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// First-order optimizer over a flat parameter vector. Adam uses the
/// standard constants β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    learning_rate: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Optimizer {
    pub const ADAM_BETA1: f64 = 0.9;
    pub const ADAM_BETA2: f64 = 0.999;
    pub const ADAM_EPS: f64 = 1e-8;

    pub fn new(kind: OptimizerKind, learning_rate: f64, num_params: usize) -> Self {
        let state = match kind {
            OptimizerKind::Sgd => 0,
            OptimizerKind::Adam => num_params,
        };
        Optimizer {
            kind,
            learning_rate,
            m: vec![0.0; state],
            v: vec![0.0; state],
            t: 0,
        }
    }

    #[allow(clippy::needless_range_loop)]
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.learning_rate * g;
                }
            }
            OptimizerKind::Adam => {
                self.t += 1;
                let b1t = 1.0 - Self::ADAM_BETA1.powi(self.t as i32);
                let b2t = 1.0 - Self::ADAM_BETA2.powi(self.t as i32);
                for i in 0..params.len() {
                    self.m[i] = Self::ADAM_BETA1 * self.m[i] + (1.0 - Self::ADAM_BETA1) * grad[i];
                    self.v[i] =
                        Self::ADAM_BETA2 * self.v[i] + (1.0 - Self::ADAM_BETA2) * grad[i] * grad[i];
                    let m_hat = self.m[i] / b1t;
                    let v_hat = self.v[i] / b2t;
                    params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + Self::ADAM_EPS);
                }
            }
        }
    }
}
