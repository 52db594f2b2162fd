//! A small multilayer perceptron written from scratch: sigmoid hidden
//! layers, forward traces, backpropagation, momentum SGD and Glorot
//! initialization.
//!
//! Every weight matrix carries its bias as the last column, i.e. each layer
//! sees its input with a constant 1 appended.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Row-major matrix of `rows × cols`; for a layer, `cols = fan_in + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `W · [input; 1]`.
    fn affine(&self, input: &[f64]) -> Vec<f64> {
        let fan_in = self.cols - 1;
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                row[..fan_in].iter().zip(input).map(|(w, v)| w * v).sum::<f64>() + row[fan_in]
            })
            .collect()
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Weights `W_0 … W_L` plus the layer widths they chain.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    /// Input width, hidden widths, output width.
    pub layer_sizes: Vec<usize>,
    pub weights: Vec<Matrix>,
}

impl MlpParams {
    pub fn new(layer_sizes: Vec<usize>, weights: Vec<Matrix>) -> Result<Self> {
        check_sizes(&layer_sizes)?;
        if weights.len() != layer_sizes.len() - 1 {
            return Err(Error::Shape(format!(
                "{} weight matrices for {} layers",
                weights.len(),
                layer_sizes.len()
            )));
        }
        for (i, w) in weights.iter().enumerate() {
            if w.rows != layer_sizes[i + 1] || w.cols != layer_sizes[i] + 1 || w.data.len() != w.rows * w.cols {
                return Err(Error::Shape(format!(
                    "layer {i} is {}x{}, expected {}x{}",
                    w.rows,
                    w.cols,
                    layer_sizes[i + 1],
                    layer_sizes[i] + 1
                )));
            }
            if w.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Shape(format!("non-finite weight in layer {i}")));
            }
        }
        Ok(Self { layer_sizes, weights })
    }

    pub fn zeros(layer_sizes: Vec<usize>) -> Result<Self> {
        check_sizes(&layer_sizes)?;
        let weights = layer_sizes
            .windows(2)
            .map(|w| Matrix::zeros(w[1], w[0] + 1))
            .collect();
        Ok(Self { layer_sizes, weights })
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    /// Number of hidden layers `L`.
    pub fn hidden_layers(&self) -> usize {
        self.layer_sizes.len() - 2
    }

    pub fn num_params(&self) -> usize {
        self.weights.iter().map(|w| w.data.len()).sum()
    }

    /// Flat view over every weight, layer by layer.
    pub fn param(&self, index: usize) -> f64 {
        let (l, i) = self.locate(index);
        self.weights[l].data[i]
    }

    pub fn param_mut(&mut self, index: usize) -> &mut f64 {
        let (l, i) = self.locate(index);
        &mut self.weights[l].data[i]
    }

    fn locate(&self, mut index: usize) -> (usize, usize) {
        for (l, w) in self.weights.iter().enumerate() {
            if index < w.data.len() {
                return (l, index);
            }
            index -= w.data.len();
        }
        panic!("parameter index out of range");
    }

    /// Zero-valued tensor with the same shapes, for gradients and velocities.
    pub fn zeros_like(&self) -> Self {
        Self {
            layer_sizes: self.layer_sizes.clone(),
            weights: self.weights.iter().map(|w| Matrix::zeros(w.rows, w.cols)).collect(),
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.layer_sizes == other.layer_sizes
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &Self, alpha: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += alpha * y;
            }
        }
    }

    pub fn squared_norm(&self) -> f64 {
        self.weights.iter().flat_map(|w| &w.data).map(|v| v * v).sum()
    }
}

fn check_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
        return Err(Error::Shape(format!("invalid layer sizes {layer_sizes:?}")));
    }
    Ok(())
}

/// Activations from one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub input: Vec<f64>,
    /// `h_1 … h_L`.
    pub hidden: Vec<Vec<f64>>,
    /// Output pre-activation `W_L · [h_L; 1]`.
    pub logits: Vec<f64>,
}

/// Hidden layers with sigmoid; the output layer is left linear.
pub fn forward_logits(input: &[f64], params: &MlpParams) -> Result<ForwardTrace> {
    if input.len() != params.input_size() {
        return Err(Error::Shape(format!(
            "input has {} values, network expects {}",
            input.len(),
            params.input_size()
        )));
    }
    let (last, hidden_weights) = params.weights.split_last().expect("at least one layer");
    let mut hidden = Vec::with_capacity(hidden_weights.len());
    for w in hidden_weights {
        let prev = hidden.last().map(Vec::as_slice).unwrap_or(input);
        let h: Vec<f64> = w.affine(prev).into_iter().map(sigmoid).collect();
        hidden.push(h);
    }
    let top = hidden.last().map(Vec::as_slice).unwrap_or(input);
    let logits = last.affine(top);
    Ok(ForwardTrace {
        input: input.to_vec(),
        hidden,
        logits,
    })
}

/// Scalar score `σ(W_L · h_L)` in `(0, 1)`.
pub fn mlp_forward(input: &[f64], params: &MlpParams) -> Result<(f64, ForwardTrace)> {
    if params.output_size() != 1 {
        return Err(Error::Shape(format!(
            "scorer must have one output, has {}",
            params.output_size()
        )));
    }
    let trace = forward_logits(input, params)?;
    Ok((sigmoid(trace.logits[0]), trace))
}

/// Score only; skips keeping the trace.
pub fn mlp_score(input: &[f64], params: &MlpParams) -> Result<f64> {
    mlp_forward(input, params).map(|(s, _)| s)
}

/// Which sigmoid derivative backpropagation uses. `Broken` exists only as a
/// negative control for gradient checking.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SigmoidDerivative {
    #[default]
    Exact,
    Broken,
}

impl SigmoidDerivative {
    fn apply(self, h: f64) -> f64 {
        match self {
            SigmoidDerivative::Exact => h * (1.0 - h),
            SigmoidDerivative::Broken => h * (1.0 - h) * 1.01 + 1e-3,
        }
    }
}

/// Weight gradients (same shapes as the parameters) and input gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: MlpParams,
    pub input: Vec<f64>,
}

/// Backpropagates a gradient over the output logits.
pub fn backward_from_logits(
    trace: &ForwardTrace,
    params: &MlpParams,
    grad_logits: &[f64],
    derivative: SigmoidDerivative,
) -> Result<Gradients> {
    if trace.hidden.len() != params.hidden_layers()
        || trace.input.len() != params.input_size()
        || grad_logits.len() != params.output_size()
        || trace.logits.len() != params.output_size()
    {
        return Err(Error::Shape("trace does not match parameters".into()));
    }
    let mut grads = params.zeros_like();
    let mut delta = grad_logits.to_vec();
    for l in (0..params.weights.len()).rev() {
        let w = &params.weights[l];
        let layer_input = if l == 0 { &trace.input } else { &trace.hidden[l - 1] };
        let fan_in = w.cols - 1;
        let g = &mut grads.weights[l];
        for (r, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &mut g.data[r * w.cols..(r + 1) * w.cols];
            for (gv, &v) in row[..fan_in].iter_mut().zip(layer_input) {
                *gv += d * v;
            }
            row[fan_in] += d;
        }
        let mut below = vec![0.0; fan_in];
        for (r, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            for (b, &wv) in below.iter_mut().zip(&w.row(r)[..fan_in]) {
                *b += d * wv;
            }
        }
        if l > 0 {
            for (b, &h) in below.iter_mut().zip(&trace.hidden[l - 1]) {
                *b *= derivative.apply(h);
            }
        }
        delta = below;
    }
    Ok(Gradients {
        weights: grads,
        input: delta,
    })
}

/// Gradient of `upstream · score` with respect to every weight and the input.
pub fn mlp_backward(trace: &ForwardTrace, params: &MlpParams, upstream: f64) -> Result<Gradients> {
    mlp_backward_with(trace, params, upstream, SigmoidDerivative::Exact)
}

pub fn mlp_backward_with(
    trace: &ForwardTrace,
    params: &MlpParams,
    upstream: f64,
    derivative: SigmoidDerivative,
) -> Result<Gradients> {
    if trace.logits.len() != 1 {
        return Err(Error::Shape("scorer trace must have one output".into()));
    }
    let s = sigmoid(trace.logits[0]);
    backward_from_logits(trace, params, &[upstream * derivative.apply(s)], derivative)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// Halve the learning rate when an epoch's relative loss improvement
    /// falls below this.
    pub halving_threshold: f64,
    pub l2_weight: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 4e-6,
            momentum: 0.9,
            halving_threshold: 1e-3,
            l2_weight: 1e-4,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning rate must be finite and >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        if !(self.l2_weight >= 0.0) {
            return Err(Error::Config("l2 weight must be >= 0".into()));
        }
        Ok(())
    }
}

/// `v ← μ v − lr (g + λ p)`, `p ← p + v`.
pub fn sgd_momentum_step(
    params: &mut MlpParams,
    grads: &MlpParams,
    velocity: &mut MlpParams,
    learning_rate: f64,
    config: &SgdConfig,
) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(velocity) {
        return Err(Error::Shape("parameter, gradient and velocity shapes differ".into()));
    }
    for ((p, g), v) in params
        .weights
        .iter_mut()
        .zip(&grads.weights)
        .zip(velocity.weights.iter_mut())
    {
        for ((pv, gv), vv) in p.data.iter_mut().zip(&g.data).zip(v.data.iter_mut()) {
            *vv = config.momentum * *vv - learning_rate * (gv + config.l2_weight * *pv);
            *pv += *vv;
        }
    }
    Ok(())
}

/// Learning-rate halving on stalled epochs.
#[derive(Clone, Debug)]
pub struct LearningRate {
    pub current: f64,
    threshold: f64,
    previous_loss: Option<f64>,
}

impl LearningRate {
    pub fn new(config: &SgdConfig) -> Self {
        Self {
            current: config.learning_rate,
            threshold: config.halving_threshold,
            previous_loss: None,
        }
    }

    /// Records an epoch loss; halves the rate if it improved by less than the
    /// threshold relative to the previous epoch. Returns whether it halved.
    pub fn end_epoch(&mut self, loss: f64) -> bool {
        let halve = match self.previous_loss {
            Some(prev) if prev > 0.0 => (prev - loss) / prev < self.threshold,
            Some(_) => false,
            None => false,
        };
        if halve {
            self.current *= 0.5;
        }
        self.previous_loss = Some(loss);
        halve
    }
}

/// Glorot-uniform weights in `±sqrt(6 / (fan_in + fan_out))`, zero biases.
pub fn init_weights(layer_sizes: &[usize], seed: u64) -> Result<MlpParams> {
    let mut params = MlpParams::zeros(layer_sizes.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for w in &mut params.weights {
        let fan_in = w.cols - 1;
        let bound = (6.0 / (fan_in + w.rows) as f64).sqrt();
        for r in 0..w.rows {
            for c in 0..fan_in {
                w.data[r * w.cols + c] = rng.gen_range(-bound..bound);
            }
        }
    }
    Ok(params)
}
