//! Dense feedforward ReLU regression networks.
//!
//! A network with hidden widths `Z_1..Z_N` maps `x ∈ R^d` to a scalar through
//! `T_{N+1} ∘ θ ∘ T_N ∘ … ∘ θ ∘ T_1` with `θ(h) = max(0, h)` and affine
//! `T_n(h) = W^n h + b_n`.
//!
//! All parameters live in one flat vector in canonical order: layer by layer
//! from the input side, each layer's weight matrix row-major (`W[i][k]`
//! couples input `k` to unit `i`) followed by its bias vector. Gradients,
//! Adam moments and Jacobians use the same order.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::data::Dataset;
use crate::error::{check_len, invalid, Error, Result};
use crate::masks::{sample_mask_with, Mask, MaskMode};
use crate::rng::{derive, rng_from_seed, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Activation {
    #[default]
    Relu,
}

/// Architecture of a single-output ReLU network.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetworkSpec {
    input_dim: usize,
    hidden_widths: Vec<usize>,
    #[cfg_attr(feature = "serde", serde(default))]
    activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerShape {
    /// Output units.
    pub rows: usize,
    /// Input units.
    pub cols: usize,
    /// Index of `W[0][0]` in the flat parameter vector.
    pub offset: usize,
}

impl LayerShape {
    #[inline]
    pub fn bias_offset(&self) -> usize {
        self.offset + self.rows * self.cols
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows * self.cols + self.rows
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl NetworkSpec {
    pub fn new(input_dim: usize, hidden_widths: Vec<usize>) -> Result<Self> {
        let spec = Self { input_dim, hidden_widths, activation: Activation::Relu };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(invalid("input dimension must be positive"));
        }
        if self.hidden_widths.is_empty() {
            return Err(invalid("a network needs at least one hidden layer"));
        }
        if self.hidden_widths.contains(&0) {
            return Err(invalid("hidden widths must be positive"));
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.hidden_widths
    }

    pub fn output_dim(&self) -> usize {
        1
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Number of hidden layers `N`.
    pub fn depth(&self) -> usize {
        self.hidden_widths.len()
    }

    /// Total hidden units `Z_tot`.
    pub fn size(&self) -> usize {
        self.hidden_widths.iter().sum()
    }

    /// Shapes of the `N + 1` affine maps.
    pub fn layer_shapes(&self) -> Vec<LayerShape> {
        let mut shapes = Vec::with_capacity(self.hidden_widths.len() + 1);
        let mut cols = self.input_dim;
        let mut offset = 0;
        for &rows in self.hidden_widths.iter().chain(core::iter::once(&1)) {
            let shape = LayerShape { rows, cols, offset };
            offset += shape.len();
            shapes.push(shape);
            cols = rows;
        }
        shapes
    }

    pub fn num_params(&self) -> usize {
        self.layer_shapes().iter().map(LayerShape::len).sum()
    }
}

/// Weights and biases of one network (or a gradient with the same layout).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "RawParameters", into = "RawParameters"))]
pub struct Parameters {
    spec: NetworkSpec,
    shapes: Vec<LayerShape>,
    values: Vec<f64>,
}

#[cfg(feature = "serde")]
#[derive(serde::Serialize, serde::Deserialize)]
struct RawParameters {
    spec: NetworkSpec,
    values: Vec<f64>,
}

#[cfg(feature = "serde")]
impl TryFrom<RawParameters> for Parameters {
    type Error = Error;

    fn try_from(raw: RawParameters) -> Result<Self> {
        Parameters::from_values(raw.spec, raw.values)
    }
}

#[cfg(feature = "serde")]
impl From<Parameters> for RawParameters {
    fn from(p: Parameters) -> Self {
        RawParameters { spec: p.spec, values: p.values }
    }
}

impl Parameters {
    pub fn zeros(spec: &NetworkSpec) -> Self {
        let shapes = spec.layer_shapes();
        let n = shapes.iter().map(LayerShape::len).sum();
        Self { spec: spec.clone(), shapes, values: vec![0.0; n] }
    }

    pub fn from_values(spec: NetworkSpec, values: Vec<f64>) -> Result<Self> {
        spec.validate()?;
        let shapes = spec.layer_shapes();
        check_len(shapes.iter().map(LayerShape::len).sum(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalOverflow);
        }
        Ok(Self { spec, shapes, values })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn shapes(&self) -> &[LayerShape] {
        &self.shapes
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Row-major weight matrix of layer `l` (0 = first hidden layer, `N` = output).
    pub fn weights(&self, l: usize) -> &[f64] {
        let s = self.shapes[l];
        &self.values[s.offset..s.bias_offset()]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let s = self.shapes[l];
        &mut self.values[s.offset..s.bias_offset()]
    }

    pub fn biases(&self, l: usize) -> &[f64] {
        let s = self.shapes[l];
        &self.values[s.bias_offset()..s.bias_offset() + s.rows]
    }

    pub fn biases_mut(&mut self, l: usize) -> &mut [f64] {
        let s = self.shapes[l];
        &mut self.values[s.bias_offset()..s.bias_offset() + s.rows]
    }

    /// `W^{l+1}[row][col]`.
    pub fn weight(&self, l: usize, row: usize, col: usize) -> f64 {
        self.weights(l)[row * self.shapes[l].cols + col]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Glorot-uniform weights (`U(-b, b)`, `b = √(6 / (fan_in + fan_out))`) and zero biases.
pub fn init_network(spec: &NetworkSpec, seed: u64) -> Parameters {
    let mut params = Parameters::zeros(spec);
    let mut rng = rng_from_seed(seed);
    for l in 0..params.shapes.len() {
        let s = params.shapes[l];
        let bound = libm::sqrt(6.0 / (s.rows + s.cols) as f64);
        for w in params.weights_mut(l) {
            *w = rng.random_range(-bound..bound);
        }
    }
    params
}

/// Result of a forward pass with the per-layer cache used by backpropagation.
#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    pub output: f64,
    /// Pre-activations `T_n(h_{n-1})` of every hidden layer.
    pub pre_activations: Vec<Vec<f64>>,
    /// Hidden outputs after ReLU, masking and scaling, i.e. what the next layer sees.
    pub activations: Vec<Vec<f64>>,
}

/// Reusable per-layer buffers for the hot training loop.
#[derive(Debug, Clone)]
pub(crate) struct Workspace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Workspace {
    pub(crate) fn new(spec: &NetworkSpec) -> Self {
        let bufs = || spec.hidden_widths().iter().map(|&w| vec![0.0; w]).collect::<Vec<_>>();
        Self { pre: bufs(), post: bufs(), delta: bufs() }
    }
}

#[inline]
fn unit_gain(mask: Option<&Mask>, layer: usize, unit: usize) -> f64 {
    match mask {
        None => 1.0,
        Some(m) if m.is_retained(layer, unit) => m.scale(),
        Some(_) => 0.0,
    }
}

fn check_inputs(params: &Parameters, x: &[f64], mask: Option<&Mask>) -> Result<()> {
    check_len(params.spec.input_dim, x.len())?;
    if let Some(m) = mask {
        if !m.fits(&params.spec) {
            return Err(invalid("mask does not match the network's hidden widths"));
        }
    }
    Ok(())
}

pub(crate) fn forward_into(params: &Parameters, x: &[f64], mask: Option<&Mask>, ws: &mut Workspace) -> Result<f64> {
    let hidden = params.shapes.len() - 1;
    for l in 0..hidden {
        let shape = params.shapes[l];
        let w = params.weights(l);
        let b = params.biases(l);
        let (done, rest) = ws.post.split_at_mut(l);
        let input: &[f64] = if l == 0 { x } else { &done[l - 1] };
        let pre = &mut ws.pre[l];
        let post = &mut rest[0];
        let mut finite = true;
        for i in 0..shape.rows {
            let row = &w[i * shape.cols..(i + 1) * shape.cols];
            let z = b[i] + row.iter().zip(input).map(|(a, v)| a * v).sum::<f64>();
            finite &= z.is_finite();
            pre[i] = z;
            post[i] = if z > 0.0 { z * unit_gain(mask, l, i) } else { 0.0 };
        }
        if !finite {
            return Err(Error::NumericalOverflow);
        }
    }
    let w = params.weights(hidden);
    let out = params.biases(hidden)[0] + w.iter().zip(&ws.post[hidden - 1]).map(|(a, v)| a * v).sum::<f64>();
    if out.is_finite() {
        Ok(out)
    } else {
        Err(Error::NumericalOverflow)
    }
}

/// Add `d_output · ∂f/∂ω` to `grad`, using the cache left by [`forward_into`] for `x`.
pub(crate) fn accumulate_gradient(
    params: &Parameters,
    x: &[f64],
    mask: Option<&Mask>,
    ws: &mut Workspace,
    d_output: f64,
    grad: &mut [f64],
) {
    let hidden = params.shapes.len() - 1;
    let out_shape = params.shapes[hidden];
    let w_out = params.weights(hidden);
    for (j, &h) in ws.post[hidden - 1].iter().enumerate() {
        grad[out_shape.offset + j] += d_output * h;
    }
    grad[out_shape.bias_offset()] += d_output;
    {
        let last = &mut ws.delta[hidden - 1];
        for j in 0..last.len() {
            let gate = if ws.pre[hidden - 1][j] > 0.0 { unit_gain(mask, hidden - 1, j) } else { 0.0 };
            last[j] = d_output * w_out[j] * gate;
        }
    }
    for l in (0..hidden).rev() {
        let shape = params.shapes[l];
        let input: &[f64] = if l == 0 { x } else { &ws.post[l - 1] };
        let delta = &ws.delta[l];
        for i in 0..shape.rows {
            let d = delta[i];
            if d == 0.0 {
                continue;
            }
            let g = &mut grad[shape.offset + i * shape.cols..shape.offset + (i + 1) * shape.cols];
            for (gk, &v) in g.iter_mut().zip(input) {
                *gk += d * v;
            }
            grad[shape.bias_offset() + i] += d;
        }
        if l > 0 {
            let w = params.weights(l);
            let (below, above) = ws.delta.split_at_mut(l);
            let delta = &above[0];
            let prev = &mut below[l - 1];
            for k in 0..shape.cols {
                let gate = if ws.pre[l - 1][k] > 0.0 { unit_gain(mask, l - 1, k) } else { 0.0 };
                prev[k] = if gate == 0.0 {
                    0.0
                } else {
                    gate * (0..shape.rows).map(|i| w[i * shape.cols + k] * delta[i]).sum::<f64>()
                };
            }
        }
    }
}

/// Evaluate the network at `x`.
///
/// With a mask, dropped units emit zero; retained units are scaled by
/// [`Mask::scale`] (`1/p` for dropout-style masks, `1` for structural masks).
pub fn forward(params: &Parameters, x: &[f64], mask: Option<&Mask>) -> Result<Forward> {
    check_inputs(params, x, mask)?;
    let mut ws = Workspace::new(&params.spec);
    let output = forward_into(params, x, mask, &mut ws)?;
    Ok(Forward { output, pre_activations: ws.pre, activations: ws.post })
}

/// Network output at `x` without a mask.
pub fn predict(params: &Parameters, x: &[f64]) -> Result<f64> {
    forward(params, x, None).map(|f| f.output)
}

/// Predictions for every row of `data`.
pub fn predict_all(params: &Parameters, data: &Dataset, mask: Option<&Mask>) -> Result<Vec<f64>> {
    check_len(params.spec.input_dim, data.dim())?;
    if mask.is_some_and(|m| !m.fits(&params.spec)) {
        return Err(invalid("mask does not match the network's hidden widths"));
    }
    let mut ws = Workspace::new(&params.spec);
    (0..data.len()).map(|i| forward_into(params, data.row(i), mask, &mut ws)).collect()
}

/// Mean squared error over the selected rows.
pub fn loss(params: &Parameters, data: &Dataset, rows: &[usize], mask: Option<&Mask>) -> Result<f64> {
    if rows.is_empty() {
        return Err(Error::Empty("batch"));
    }
    check_len(params.spec.input_dim, data.dim())?;
    let mut ws = Workspace::new(&params.spec);
    let mut total = 0.0;
    for &i in rows {
        let r = forward_into(params, data.row(i), mask, &mut ws)? - data.target(i);
        total += r * r;
    }
    Ok(total / rows.len() as f64)
}

/// Exact gradient of the batch MSE `(1/B) Σ (f(x_i) - y_i)²` over `rows`.
///
/// Per-example contributions are summed in sorted order for every
/// coordinate, so the result does not depend on the order of `rows`.
/// The ReLU derivative at exactly zero is taken as zero.
pub fn backward(params: &Parameters, data: &Dataset, rows: &[usize], mask: Option<&Mask>) -> Result<Parameters> {
    if rows.is_empty() {
        return Err(Error::Empty("batch"));
    }
    check_inputs(params, data.row(rows[0]), mask)?;
    let r = params.len();
    let scale = 2.0 / rows.len() as f64;
    let mut ws = Workspace::new(&params.spec);
    let mut per_example = vec![0.0; rows.len() * r];
    for (e, &i) in rows.iter().enumerate() {
        let x = data.row(i);
        let f = forward_into(params, x, mask, &mut ws)?;
        let g = &mut per_example[e * r..(e + 1) * r];
        accumulate_gradient(params, x, mask, &mut ws, scale * (f - data.target(i)), g);
    }
    let mut grad = Parameters::zeros(&params.spec);
    let mut column = vec![0.0; rows.len()];
    for (k, out) in grad.values.iter_mut().enumerate() {
        for (e, c) in column.iter_mut().enumerate() {
            *c = per_example[e * r + k];
        }
        column.sort_by(f64::total_cmp);
        *out = column.iter().sum();
    }
    if !grad.is_finite() {
        return Err(Error::NumericalOverflow);
    }
    Ok(grad)
}

/// `∇_ω f(x; ω)` in canonical parameter order, without a mask.
pub fn jacobian(params: &Parameters, x: &[f64]) -> Result<Vec<f64>> {
    jacobian_masked(params, x, None)
}

pub fn jacobian_masked(params: &Parameters, x: &[f64], mask: Option<&Mask>) -> Result<Vec<f64>> {
    check_inputs(params, x, mask)?;
    let mut ws = Workspace::new(&params.spec);
    let mut out = vec![0.0; params.len()];
    jacobian_into(params, x, mask, &mut ws, &mut out)?;
    Ok(out)
}

pub(crate) fn jacobian_into(
    params: &Parameters,
    x: &[f64],
    mask: Option<&Mask>,
    ws: &mut Workspace,
    out: &mut [f64],
) -> Result<f64> {
    out.iter_mut().for_each(|v| *v = 0.0);
    let f = forward_into(params, x, mask, ws)?;
    accumulate_gradient(params, x, mask, ws, 1.0, out);
    Ok(f)
}

/// Adam state: first and second moment accumulators plus hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl OptimizerState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPSILON: f64 = 1e-7;

    pub fn new(num_params: usize, learning_rate: f64) -> Self {
        Self::with_hyperparameters(num_params, learning_rate, Self::BETA1, Self::BETA2, Self::EPSILON)
    }

    pub fn with_hyperparameters(num_params: usize, learning_rate: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        Self {
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step: 0,
            learning_rate,
            beta1,
            beta2,
            epsilon,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(invalid("Adam needs lr > 0, beta1/beta2 in [0, 1) and epsilon >= 0"))
        }
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut Parameters, grads: &[f64], state: &mut OptimizerState) -> Result<()> {
    state.validate()?;
    check_len(params.len(), grads.len())?;
    check_len(params.len(), state.first_moment.len())?;
    if grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericalOverflow);
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - libm::pow(state.beta1, t as f64);
    let c2 = 1.0 - libm::pow(state.beta2, t as f64);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.learning_rate, state.epsilon);
    for (((w, &g), m), v) in
        params.values.iter_mut().zip(grads).zip(state.first_moment.iter_mut()).zip(state.second_moment.iter_mut())
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        let denom = libm::sqrt(v_hat) + eps;
        if denom > 0.0 {
            *w -= lr * m_hat / denom;
        }
    }
    if params.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalOverflow)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl TrainConfig {
    pub fn new(epochs: usize, batch_size: usize, learning_rate: f64, seed: u64) -> Self {
        Self { epochs, batch_size, learning_rate, seed, shuffle: true }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(invalid("epochs and batch size must be positive"));
        }
        if self.batch_size > n {
            return Err(invalid(alloc::format!("batch size {} exceeds the {n} training rows", self.batch_size)));
        }
        if !(self.learning_rate > 0.0) {
            return Err(invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

/// How hidden units are masked during training.
#[derive(Debug, Clone, PartialEq)]
pub enum Masking {
    None,
    /// Fresh Bernoulli(`p`) mask for every mini-batch, inverted scaling.
    Dropout {
        p: f64,
    },
    /// One structural mask for every step, no scaling.
    Fixed(Mask),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: Parameters,
    /// Mean mini-batch loss of every epoch.
    pub epoch_losses: Vec<f64>,
    /// How many times each training row entered a mini-batch.
    pub row_visits: Vec<u32>,
}

/// Initialize from `config.seed` and train.
pub fn train(spec: &NetworkSpec, data: &Dataset, config: &TrainConfig, masking: &Masking) -> Result<TrainOutcome> {
    spec.validate()?;
    let params = init_network(spec, init_seed(config.seed));
    train_from(params, data, config, masking)
}

/// Seed that [`train`] hands to [`init_network`].
pub fn init_seed(train_seed: u64) -> u64 {
    derive(train_seed, Stream::Init, 0)
}

/// Mini-batch Adam on the MSE loss starting from `params`.
///
/// Rows are reshuffled each epoch from a stream derived from `config.seed`;
/// the final batch of an epoch may be short. The run is a pure function of
/// its arguments.
pub fn train_from(
    mut params: Parameters,
    data: &Dataset,
    config: &TrainConfig,
    masking: &Masking,
) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    config.validate(data.len())?;
    check_len(params.spec.input_dim, data.dim())?;
    match masking {
        Masking::None => {}
        Masking::Dropout { p } => {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(invalid("dropout retention probability must lie in (0, 1]"));
            }
        }
        Masking::Fixed(mask) => {
            if mask.mode() != MaskMode::FixedStructural || !mask.fits(&params.spec) {
                return Err(invalid("fixed training needs a structural mask matching the network"));
            }
        }
    }

    let n = data.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut shuffle_rng = rng_from_seed(derive(config.seed, Stream::Shuffle, 0));
    let mut dropout_rng = rng_from_seed(derive(config.seed, Stream::Dropout, 0));
    let mut state = OptimizerState::new(params.len(), config.learning_rate);
    let mut ws = Workspace::new(&params.spec);
    let mut grad = vec![0.0; params.len()];
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut row_visits = vec![0u32; n];
    let mut step_mask;

    for _ in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut shuffle_rng);
        }
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let mask = match masking {
                Masking::None => None,
                Masking::Dropout { p } => {
                    step_mask = sample_mask_with(&mut dropout_rng, &params.spec, *p, MaskMode::PerStep);
                    Some(&step_mask)
                }
                Masking::Fixed(m) => Some(m),
            };
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 2.0 / batch.len() as f64;
            let mut batch_loss = 0.0;
            for &i in batch {
                row_visits[i] += 1;
                let x = data.row(i);
                let residual = forward_into(&params, x, mask, &mut ws)? - data.target(i);
                batch_loss += residual * residual;
                accumulate_gradient(&params, x, mask, &mut ws, scale * residual, &mut grad);
            }
            adam_step(&mut params, &grad, &mut state)?;
            epoch_loss += batch_loss / batch.len() as f64;
            batches += 1;
        }
        epoch_losses.push(epoch_loss / batches as f64);
    }
    Ok(TrainOutcome { params, epoch_losses, row_visits })
}
