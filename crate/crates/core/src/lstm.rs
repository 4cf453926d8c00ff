//! Single-layer LSTM regressor with a linear head, trained full-batch with Adam.
//!
//! Gate equations, with `z_t = W x_t + U h_{t-1} + b` split into four blocks of
//! `hidden` rows in the order input, forget, candidate, output:
//!
//! ```text
//! i = σ(z_i)   f = σ(z_f)   g = tanh(z_g)   o = σ(z_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ŷ   = w_out · h_T + b_out
//! ```
//!
//! The training objective is the mean squared error plus `l2_penalty` times the
//! squared norm of the weight matrices (`W`, `U`, `w_out`; biases are not
//! penalized).

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::transform::{DesignMatrix, StandardizationParams};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum LstmError {
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    LengthMismatch {
        predictions: usize,
        actuals: usize,
    },
    InsufficientData {
        samples: usize,
    },
    VariableOrderMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    InvalidHyperparams(&'static str),
    /// Training produced a NaN or infinite loss.
    NonFinite {
        epoch: usize,
    },
}

impl fmt::Display for LstmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LstmError::ShapeMismatch { expected, found } => {
                write!(f, "window shape {}x{} does not match expected {}x{}", found.0, found.1, expected.0, expected.1)
            }
            LstmError::LengthMismatch { predictions, actuals } => {
                write!(f, "{predictions} predictions for {actuals} actuals")
            }
            LstmError::InsufficientData { samples } => {
                write!(f, "training needs at least 2 samples, got {samples}")
            }
            LstmError::VariableOrderMismatch { expected, found } => {
                write!(f, "variables [{}] do not match model variables [{}]", found.join(","), expected.join(","))
            }
            LstmError::InvalidHyperparams(why) => write!(f, "invalid hyperparameters: {why}"),
            LstmError::NonFinite { epoch } => write!(f, "loss became non-finite at epoch {epoch}"),
        }
    }
}

impl core::error::Error for LstmError {}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Hyperparams {
    /// Window length in months.
    pub n_timesteps: usize,
    pub hidden_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub l2_penalty: f64,
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), LstmError> {
        if self.n_timesteps < 1 {
            return Err(LstmError::InvalidHyperparams("n_timesteps must be >= 1"));
        }
        if self.hidden_size < 1 {
            return Err(LstmError::InvalidHyperparams("hidden_size must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(LstmError::InvalidHyperparams("learning_rate must be positive"));
        }
        if self.epochs < 1 {
            return Err(LstmError::InvalidHyperparams("epochs must be >= 1"));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(LstmError::InvalidHyperparams("l2_penalty must be >= 0"));
        }
        Ok(())
    }
}

/// All trainable parameters in one flat buffer.
///
/// Layout: `W` (4H x V, row-major), `U` (4H x H), `b` (4H), `w_out` (H), `b_out`.
/// Gradients and optimizer moments reuse the same type and layout.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct LstmParams {
    hidden: usize,
    n_vars: usize,
    values: Vec<f64>,
}

impl LstmParams {
    pub fn zeros(hidden: usize, n_vars: usize) -> Self {
        let len = 4 * hidden * n_vars + 4 * hidden * hidden + 4 * hidden + hidden + 1;
        LstmParams { hidden, n_vars, values: vec![0.0; len] }
    }

    /// Rebuilds parameters from a flat buffer in the documented layout.
    pub fn from_flat(hidden: usize, n_vars: usize, values: Vec<f64>) -> Option<Self> {
        let p = Self::zeros(hidden, n_vars);
        (p.values.len() == values.len()).then_some(LstmParams { hidden, n_vars, values })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    fn offsets(&self) -> [usize; 5] {
        let h4 = 4 * self.hidden;
        let w = 0;
        let u = w + h4 * self.n_vars;
        let b = u + h4 * self.hidden;
        let w_out = b + h4;
        let b_out = w_out + self.hidden;
        [w, u, b, w_out, b_out]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn w(&self) -> &[f64] {
        let [w, u, ..] = self.offsets();
        &self.values[w..u]
    }

    pub fn u(&self) -> &[f64] {
        let [_, u, b, ..] = self.offsets();
        &self.values[u..b]
    }

    pub fn b(&self) -> &[f64] {
        let [_, _, b, w_out, _] = self.offsets();
        &self.values[b..w_out]
    }

    pub fn w_out(&self) -> &[f64] {
        let [.., w_out, b_out] = self.offsets();
        &self.values[w_out..b_out]
    }

    pub fn b_out(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn w_mut(&mut self) -> &mut [f64] {
        let [w, u, ..] = self.offsets();
        &mut self.values[w..u]
    }

    pub fn u_mut(&mut self) -> &mut [f64] {
        let [_, u, b, ..] = self.offsets();
        &mut self.values[u..b]
    }

    pub fn b_mut(&mut self) -> &mut [f64] {
        let [_, _, b, w_out, _] = self.offsets();
        &mut self.values[b..w_out]
    }

    pub fn w_out_mut(&mut self) -> &mut [f64] {
        let [.., w_out, b_out] = self.offsets();
        &mut self.values[w_out..b_out]
    }

    pub fn set_b_out(&mut self, v: f64) {
        let last = self.values.len() - 1;
        self.values[last] = v;
    }

    /// Indices of the penalized entries (`W`, `U`, `w_out`).
    fn is_weight(&self, index: usize) -> bool {
        let [_, _, b, w_out, b_out] = self.offsets();
        index < b || (w_out..b_out).contains(&index)
    }

    pub fn weight_norm_sq(&self) -> f64 {
        self.values.iter().enumerate().filter(|(i, _)| self.is_weight(*i)).map(|(_, v)| v * v).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Uniform weights on `[-1/sqrt(hidden), 1/sqrt(hidden)]`, zero biases except
/// the forget gate (1.0).
pub fn init_params(hyper: &Hyperparams, n_vars: usize) -> LstmParams {
    let h = hyper.hidden_size;
    let r = 1.0 / libm::sqrt(h as f64);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
    let mut p = LstmParams::zeros(h, n_vars);
    for v in p.w_mut().iter_mut() {
        *v = rng.random_range(-r..=r);
    }
    for v in p.u_mut().iter_mut() {
        *v = rng.random_range(-r..=r);
    }
    for v in p.w_out_mut().iter_mut() {
        *v = rng.random_range(-r..=r);
    }
    for v in &mut p.b_mut()[h..2 * h] {
        *v = 1.0;
    }
    p
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Activations kept for backpropagation.
struct Trace {
    /// Per step: i, f, g, o (4H).
    gates: Vec<f64>,
    /// c_0..c_T (T+1 blocks of H).
    cells: Vec<f64>,
    /// tanh(c_1)..tanh(c_T).
    cell_tanh: Vec<f64>,
    /// h_0..h_T.
    hidden: Vec<f64>,
    output: f64,
}

fn check_shape(params: &LstmParams, window: &DesignMatrix) -> Result<(), LstmError> {
    if window.n_vars() != params.n_vars {
        return Err(LstmError::ShapeMismatch {
            expected: (window.n_timesteps(), params.n_vars),
            found: (window.n_timesteps(), window.n_vars()),
        });
    }
    Ok(())
}

fn run(params: &LstmParams, window: &DesignMatrix) -> Trace {
    let h = params.hidden;
    let v = params.n_vars;
    let steps = window.n_timesteps();
    let (w, u, b) = (params.w(), params.u(), params.b());
    let mut gates = vec![0.0; steps * 4 * h];
    let mut cells = vec![0.0; (steps + 1) * h];
    let mut cell_tanh = vec![0.0; steps * h];
    let mut hidden = vec![0.0; (steps + 1) * h];
    let mut z = vec![0.0; 4 * h];
    for t in 0..steps {
        let x = window.row(t);
        let h_prev = &hidden[t * h..(t + 1) * h];
        for ((zr, wr), (ur, br)) in z.iter_mut().zip(w.chunks_exact(v)).zip(u.chunks_exact(h).zip(b)) {
            *zr = br + dot(wr, x) + dot(ur, h_prev);
        }
        let gt = &mut gates[t * 4 * h..(t + 1) * 4 * h];
        for j in 0..h {
            gt[j] = sigmoid(z[j]);
            gt[h + j] = sigmoid(z[h + j]);
            gt[2 * h + j] = libm::tanh(z[2 * h + j]);
            gt[3 * h + j] = sigmoid(z[3 * h + j]);
        }
        for j in 0..h {
            let c = gt[h + j] * cells[t * h + j] + gt[j] * gt[2 * h + j];
            let tc = libm::tanh(c);
            cells[(t + 1) * h + j] = c;
            cell_tanh[t * h + j] = tc;
            hidden[(t + 1) * h + j] = gt[3 * h + j] * tc;
        }
    }
    let h_last = &hidden[steps * h..];
    let output = params.b_out() + params.w_out().iter().zip(h_last).map(|(a, b)| a * b).sum::<f64>();
    Trace { gates, cells, cell_tanh, hidden, output }
}

/// Prediction for one window, starting from zero hidden and cell state.
pub fn forward(params: &LstmParams, window: &DesignMatrix) -> Result<f64, LstmError> {
    check_shape(params, window)?;
    Ok(run(params, window).output)
}

fn mse(predictions: &[f64], actuals: &[f64]) -> Result<f64, LstmError> {
    if predictions.len() != actuals.len() {
        return Err(LstmError::LengthMismatch { predictions: predictions.len(), actuals: actuals.len() });
    }
    if predictions.is_empty() {
        return Ok(0.0);
    }
    let sse: f64 = predictions.iter().zip(actuals).map(|(p, a)| (p - a) * (p - a)).sum();
    Ok(sse / predictions.len() as f64)
}

/// Mean squared error plus `l2_penalty · ‖weights‖²`.
pub fn loss(predictions: &[f64], actuals: &[f64], params: &LstmParams, l2_penalty: f64) -> Result<f64, LstmError> {
    Ok(mse(predictions, actuals)? + l2_penalty * params.weight_norm_sq())
}

/// Loss value and its gradient with respect to every parameter.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub loss: f64,
    pub grads: LstmParams,
}

/// Exact gradient of [`loss`] over `batch` by backpropagation through time.
pub fn backward(params: &LstmParams, batch: &[(DesignMatrix, f64)], l2_penalty: f64) -> Result<Gradients, LstmError> {
    for (window, _) in batch {
        check_shape(params, window)?;
    }
    let h = params.hidden;
    let v = params.n_vars;
    let mut grads = LstmParams::zeros(h, v);
    let [ow, ou, ob, owo, _] = grads.offsets();
    let n = batch.len().max(1) as f64;
    let mut sse = 0.0;

    let mut dh = vec![0.0; h];
    let mut dc = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    for (window, target) in batch {
        let tr = run(params, window);
        let resid = tr.output - target;
        sse += resid * resid;
        let dy = 2.0 * resid / n;
        let steps = window.n_timesteps();
        let g = grads.as_mut_slice();
        let last = &tr.hidden[steps * h..];
        for j in 0..h {
            g[owo + j] += dy * last[j];
        }
        let gl = g.len() - 1;
        g[gl] += dy;

        for (j, d) in dh.iter_mut().enumerate() {
            *d = dy * params.w_out()[j];
        }
        dc.iter_mut().for_each(|d| *d = 0.0);
        for t in (0..steps).rev() {
            let gt = &tr.gates[t * 4 * h..(t + 1) * 4 * h];
            let c_prev = &tr.cells[t * h..(t + 1) * h];
            let tanh_c = &tr.cell_tanh[t * h..(t + 1) * h];
            for j in 0..h {
                let (i, f, gg, o) = (gt[j], gt[h + j], gt[2 * h + j], gt[3 * h + j]);
                let tc = tanh_c[j];
                let d_o = dh[j] * tc;
                let dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
                dz[j] = dcj * gg * i * (1.0 - i);
                dz[h + j] = dcj * c_prev[j] * f * (1.0 - f);
                dz[2 * h + j] = dcj * i * (1.0 - gg * gg);
                dz[3 * h + j] = d_o * o * (1.0 - o);
                dc[j] = dcj * f;
            }
            let x = window.row(t);
            let h_prev = &tr.hidden[t * h..(t + 1) * h];
            let g = grads.as_mut_slice();
            let (gw, rest) = g[ow..].split_at_mut(ou - ow);
            let (gu, rest) = rest.split_at_mut(ob - ou);
            let gb = &mut rest[..4 * h];
            for (((&dzr, gwr), gur), gbr) in dz.iter().zip(gw.chunks_exact_mut(v)).zip(gu.chunks_exact_mut(h)).zip(gb) {
                if dzr == 0.0 {
                    continue;
                }
                for (gk, xk) in gwr.iter_mut().zip(x) {
                    *gk += dzr * xk;
                }
                for (gk, hk) in gur.iter_mut().zip(h_prev) {
                    *gk += dzr * hk;
                }
                *gbr += dzr;
            }
            dh.iter_mut().for_each(|d| *d = 0.0);
            for (&dzr, ur) in dz.iter().zip(params.u().chunks_exact(h)) {
                for (d, uk) in dh.iter_mut().zip(ur) {
                    *d += uk * dzr;
                }
            }
        }
    }

    if l2_penalty != 0.0 {
        for idx in 0..params.values.len() {
            if params.is_weight(idx) {
                grads.values[idx] += 2.0 * l2_penalty * params.values[idx];
            }
        }
    }
    let loss = sse / n + l2_penalty * params.weight_norm_sq();
    Ok(Gradients { loss, grads })
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPSILON: f64 = 1e-8;

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &LstmParams) -> Self {
        let n = params.values.len();
        AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut LstmParams, grads: &LstmParams, state: &mut AdamState, lr: f64) {
    state.t += 1;
    let t = state.t as f64;
    let c1 = 1.0 - libm::pow(ADAM_BETA1, t);
    let c2 = 1.0 - libm::pow(ADAM_BETA2, t);
    for (((p, &g), m), v) in params.values.iter_mut().zip(&grads.values).zip(&mut state.m).zip(&mut state.v) {
        *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
        *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr * m_hat / (libm::sqrt(v_hat) + ADAM_EPSILON);
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct TrainedModel {
    pub params: LstmParams,
    pub hyper: Hyperparams,
    pub variable_ids: Vec<String>,
    /// One entry per variable, in `variable_ids` order.
    pub standardization: Vec<StandardizationParams>,
    /// Full-batch loss before each epoch's update.
    pub training_loss_curve: Vec<f64>,
}

/// Full-batch Adam on `(window, target growth)` pairs.
pub fn train(
    dataset: &[(DesignMatrix, f64)],
    hyper: &Hyperparams,
    standardization: Vec<StandardizationParams>,
) -> Result<TrainedModel, LstmError> {
    hyper.validate()?;
    if dataset.len() < 2 {
        return Err(LstmError::InsufficientData { samples: dataset.len() });
    }
    let first = &dataset[0].0;
    for (window, _) in dataset {
        if window.n_timesteps() != first.n_timesteps() || window.n_vars() != first.n_vars() {
            return Err(LstmError::ShapeMismatch {
                expected: (first.n_timesteps(), first.n_vars()),
                found: (window.n_timesteps(), window.n_vars()),
            });
        }
        if window.variable_ids() != first.variable_ids() {
            return Err(LstmError::VariableOrderMismatch {
                expected: first.variable_ids().to_vec(),
                found: window.variable_ids().to_vec(),
            });
        }
    }
    if first.n_timesteps() != hyper.n_timesteps {
        return Err(LstmError::ShapeMismatch {
            expected: (hyper.n_timesteps, first.n_vars()),
            found: (first.n_timesteps(), first.n_vars()),
        });
    }

    let mut params = init_params(hyper, first.n_vars());
    let mut state = AdamState::new(&params);
    let mut curve = Vec::with_capacity(hyper.epochs);
    for epoch in 0..hyper.epochs {
        let Gradients { loss, grads } = backward(&params, dataset, hyper.l2_penalty)?;
        if !loss.is_finite() || !grads.is_finite() {
            return Err(LstmError::NonFinite { epoch });
        }
        curve.push(loss);
        adam_step(&mut params, &grads, &mut state, hyper.learning_rate);
    }
    if !params.is_finite() {
        return Err(LstmError::NonFinite { epoch: hyper.epochs });
    }
    Ok(TrainedModel {
        params,
        hyper: *hyper,
        variable_ids: first.variable_ids().to_vec(),
        standardization,
        training_loss_curve: curve,
    })
}

/// Nowcast for `matrix`, whose columns must be in the model's variable order.
pub fn predict(model: &TrainedModel, matrix: &DesignMatrix) -> Result<f64, LstmError> {
    if matrix.variable_ids() != model.variable_ids.as_slice() {
        return Err(LstmError::VariableOrderMismatch {
            expected: model.variable_ids.clone(),
            found: matrix.variable_ids().to_vec(),
        });
    }
    if matrix.n_timesteps() != model.hyper.n_timesteps {
        return Err(LstmError::ShapeMismatch {
            expected: (model.hyper.n_timesteps, model.variable_ids.len()),
            found: (matrix.n_timesteps(), matrix.n_vars()),
        });
    }
    forward(&model.params, matrix)
}
