//! Two-layer perceptron acting on bit strings, with hand-written
//! backpropagation and an Adam optimizer.
//!
//! The input bit string is encoded as a ±1 vector `x`. The network computes
//! `z = w2 . act(W1 x + b1) + b2` and squashes `z` according to its
//! [`OutputMode`].

use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::spin_encoding;
use crate::error::{Error, Result};

const POSITIVE_FLOOR: f64 = 1e-12;
const POSITIVE_CEIL: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    #[default]
    Tanh,
    Sigmoid,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative expressed through the pre-activation `x` and output `y`.
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            _ => Err(Error::InvalidArgument(format!("unknown activation {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputMode {
    /// `exp(ln(r) tanh z)`, inside `[1/r, r]`.
    AmpBounded { r: f64 },
    /// `exp(z)` clamped to `[1e-12, 1e12]`.
    AmpPositive,
    /// `pi tanh z`, inside `[-pi, pi]`.
    Phase,
}

impl OutputMode {
    pub fn is_amplitude(&self) -> bool {
        !matches!(self, OutputMode::Phase)
    }

    pub fn range_parameter(&self) -> Option<f64> {
        match self {
            OutputMode::AmpBounded { r } => Some(*r),
            _ => None,
        }
    }

    fn squash(&self, z: f64) -> f64 {
        match *self {
            OutputMode::AmpBounded { r } => (r.ln() * z.tanh()).exp(),
            OutputMode::AmpPositive => z.exp().clamp(POSITIVE_FLOOR, POSITIVE_CEIL),
            OutputMode::Phase => std::f64::consts::PI * z.tanh(),
        }
    }

    fn squash_derivative(&self, z: f64, out: f64) -> f64 {
        match *self {
            OutputMode::AmpBounded { r } => {
                let t = z.tanh();
                out * r.ln() * (1.0 - t * t)
            }
            OutputMode::AmpPositive => {
                let e = z.exp();
                if (POSITIVE_FLOOR..=POSITIVE_CEIL).contains(&e) {
                    e
                } else {
                    0.0
                }
            }
            OutputMode::Phase => {
                let t = z.tanh();
                std::f64::consts::PI * (1.0 - t * t)
            }
        }
    }
}

/// Parameters are stored flat in the order `W1` (row-major, `hidden x n_in`),
/// `b1`, `w2`, `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralNet {
    n_in: usize,
    hidden: usize,
    params: Vec<f64>,
    mode: OutputMode,
    activation: Activation,
}

struct ForwardCache {
    pre: Vec<f64>,
    act: Vec<f64>,
    z: f64,
    out: f64,
}

impl NeuralNet {
    /// All-zero network: constant output `f = 1` (amplitude modes) or `g = 0`.
    pub fn zeros(n_in: usize, hidden: usize, mode: OutputMode, activation: Activation) -> Result<Self> {
        if n_in == 0 || hidden == 0 {
            return Err(Error::InvalidSize("network widths must be positive".into()));
        }
        if let OutputMode::AmpBounded { r } = mode {
            if !(r >= 1.0 && r.is_finite()) {
                return Err(Error::InvalidArgument(format!("range parameter r must be >= 1, got {r}")));
            }
        }
        let count = hidden * n_in + 2 * hidden + 1;
        Ok(NeuralNet { n_in, hidden, params: vec![0.0; count], mode, activation })
    }

    /// Xavier-uniform hidden layer and a zero output layer, so training starts
    /// from the identity post-processing.
    pub fn new<R: Rng + ?Sized>(
        n_in: usize,
        hidden: usize,
        mode: OutputMode,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(n_in, hidden, mode, activation)?;
        let limit = (6.0 / (n_in + hidden) as f64).sqrt();
        for w in &mut net.params[..hidden * n_in] {
            *w = rng.random_range(-limit..limit);
        }
        Ok(net)
    }

    /// Xavier-uniform on both layers.
    pub fn xavier<R: Rng + ?Sized>(
        n_in: usize,
        hidden: usize,
        mode: OutputMode,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::new(n_in, hidden, mode, activation, rng)?;
        let limit = (6.0 / (hidden + 1) as f64).sqrt();
        let start = hidden * n_in + hidden;
        for w in &mut net.params[start..start + hidden] {
            *w = rng.random_range(-limit..limit);
        }
        Ok(net)
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn mode(&self) -> OutputMode {
        self.mode
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.params.len() {
            return Err(Error::ParamMismatch { expected: self.params.len(), actual: params.len() });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    fn w1_offset(&self) -> usize {
        0
    }
    fn b1_offset(&self) -> usize {
        self.hidden * self.n_in
    }
    fn w2_offset(&self) -> usize {
        self.b1_offset() + self.hidden
    }
    fn b2_offset(&self) -> usize {
        self.w2_offset() + self.hidden
    }

    fn run(&self, x: &[f64]) -> ForwardCache {
        let (b1, w2) = (self.b1_offset(), self.w2_offset());
        let mut pre = Vec::with_capacity(self.hidden);
        let mut act = Vec::with_capacity(self.hidden);
        let mut z = self.params[self.b2_offset()];
        for h in 0..self.hidden {
            let row = &self.params[h * self.n_in..(h + 1) * self.n_in];
            let a = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + self.params[b1 + h];
            let y = self.activation.apply(a);
            z += self.params[w2 + h] * y;
            pre.push(a);
            act.push(y);
        }
        ForwardCache { pre, act, out: self.mode.squash(z), z }
    }

    /// Network output for bit string `s` (an `n_in`-bit index).
    pub fn forward(&self, s: usize) -> f64 {
        self.run(&spin_encoding(s, self.n_in)).out
    }

    /// Scalar pre-activation of the output layer.
    pub fn logit(&self, s: usize) -> f64 {
        self.run(&spin_encoding(s, self.n_in)).z
    }

    /// Adds `upstream * d forward(s) / d params` into `grad`.
    pub fn accumulate_backward(&self, s: usize, upstream: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        if upstream == 0.0 {
            return;
        }
        let x = spin_encoding(s, self.n_in);
        let cache = self.run(&x);
        let dz = upstream * self.mode.squash_derivative(cache.z, cache.out);
        if dz == 0.0 {
            return;
        }
        let (b1, w2, b2) = (self.b1_offset(), self.w2_offset(), self.b2_offset());
        grad[b2] += dz;
        for h in 0..self.hidden {
            grad[w2 + h] += dz * cache.act[h];
            let da = dz * self.params[w2 + h] * self.activation.derivative(cache.pre[h], cache.act[h]);
            if da != 0.0 {
                grad[b1 + h] += da;
                let row = self.w1_offset() + h * self.n_in;
                for (g, xi) in grad[row..row + self.n_in].iter_mut().zip(&x) {
                    *g += da * xi;
                }
            }
        }
    }

    /// Gradient of `upstream * forward(s)` with respect to every parameter.
    pub fn backward(&self, s: usize, upstream: f64) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        self.accumulate_backward(s, upstream, &mut grad);
        grad
    }

    pub fn to_checkpoint_json(&self) -> String {
        serde_json::to_string_pretty(&Checkpoint::from(self)).expect("checkpoint serializes")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| Error::json("network checkpoint", e))?;
        ck.into_net()
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    mode: OutputMode,
    r: Option<f64>,
    activation: Activation,
    shapes: CheckpointShapes,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointShapes {
    w1: [usize; 2],
    b1: [usize; 1],
    w2: [usize; 1],
    b2: [usize; 1],
}

impl From<&NeuralNet> for Checkpoint {
    fn from(net: &NeuralNet) -> Self {
        let p = &net.params;
        Checkpoint {
            mode: net.mode,
            r: net.mode.range_parameter(),
            activation: net.activation,
            shapes: CheckpointShapes {
                w1: [net.hidden, net.n_in],
                b1: [net.hidden],
                w2: [net.hidden],
                b2: [1],
            },
            w1: p[..net.b1_offset()].to_vec(),
            b1: p[net.b1_offset()..net.w2_offset()].to_vec(),
            w2: p[net.w2_offset()..net.b2_offset()].to_vec(),
            b2: vec![p[net.b2_offset()]],
        }
    }
}

impl Checkpoint {
    fn into_net(self) -> Result<NeuralNet> {
        let [hidden, n_in] = self.shapes.w1;
        let mut net = NeuralNet::zeros(n_in, hidden, self.mode, self.activation)?;
        let flat: Vec<f64> = [self.w1, self.b1, self.w2, self.b2].concat();
        net.set_params(&flat)?;
        Ok(net)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn new(param_count: usize, config: AdamConfig) -> Self {
        AdamState { config, m: vec![0.0; param_count], v: vec![0.0; param_count], step: 0 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::ParamMismatch { expected: state.m.len(), actual: grads.len().min(params.len()) });
    }
    let AdamConfig { learning_rate, beta1, beta2, epsilon } = state.config;
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn random_net(mode: OutputMode, activation: Activation, seed: u64) -> NeuralNet {
        let mut rng = stream_rng(seed, "net");
        NeuralNet::xavier(4, 6, mode, activation, &mut rng).unwrap()
    }

    #[test]
    fn zero_network_is_identity_post_processing() {
        let f = NeuralNet::zeros(3, 8, OutputMode::AmpBounded { r: 3.0 }, Activation::Tanh).unwrap();
        let g = NeuralNet::zeros(3, 8, OutputMode::Phase, Activation::Tanh).unwrap();
        for s in 0..8 {
            assert_eq!(f.forward(s), 1.0);
            assert_eq!(g.forward(s), 0.0);
        }
    }

    #[test]
    fn bounded_range_limits() {
        let mut net = NeuralNet::zeros(2, 1, OutputMode::AmpBounded { r: 3.0 }, Activation::Tanh).unwrap();
        let b2 = net.param_count() - 1;
        net.params_mut()[b2] = 50.0;
        assert!((net.forward(0) - 3.0).abs() < 1e-12);
        net.params_mut()[b2] = -50.0;
        assert!((net.forward(0) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn backward_matches_central_differences() {
        let modes = [OutputMode::AmpBounded { r: 2.5 }, OutputMode::AmpPositive, OutputMode::Phase];
        let acts = [Activation::Tanh, Activation::Sigmoid, Activation::Relu];
        for seed in 0..30u64 {
            let mode = modes[seed as usize % 3];
            let act = acts[(seed / 3) as usize % 3];
            let net = random_net(mode, act, seed);
            let s = (seed % 16) as usize;
            let grad = net.backward(s, 1.7);
            let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            for i in 0..net.param_count() {
                let h = 1e-5;
                let mut plus = net.clone();
                plus.params_mut()[i] += h;
                let mut minus = net.clone();
                minus.params_mut()[i] -= h;
                let fd = 1.7 * (plus.forward(s) - minus.forward(s)) / (2.0 * h);
                assert!((fd - grad[i]).abs() <= 1e-4 * scale.max(1e-12), "param {i}: {fd} vs {}", grad[i]);
            }
        }
    }

    #[test]
    fn backward_is_linear_in_upstream() {
        let net = random_net(OutputMode::AmpPositive, Activation::Tanh, 3);
        assert!(net.backward(5, 0.0).iter().all(|&g| g == 0.0));
        let mut twice = vec![0.0; net.param_count()];
        net.accumulate_backward(5, 0.4, &mut twice);
        net.accumulate_backward(5, 0.4, &mut twice);
        let once = net.backward(5, 0.8);
        for (a, b) in twice.iter().zip(&once) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn adam_zero_gradient_is_a_no_op() {
        let mut params = vec![0.3, -1.2];
        let mut state = AdamState::new(2, AdamConfig::default());
        adam_step(&mut params, &[0.0, 0.0], &mut state).unwrap();
        assert_eq!(params, vec![0.3, -1.2]);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn adam_first_step_moves_by_learning_rate() {
        let mut params = vec![1.0, 1.0];
        let config = AdamConfig { learning_rate: 0.05, ..AdamConfig::default() };
        let mut state = AdamState::new(2, config);
        adam_step(&mut params, &[3.0, -0.2], &mut state).unwrap();
        assert!((params[0] - 0.95).abs() < 1e-8);
        assert!((params[1] - 1.05).abs() < 1e-6);
    }

    #[test]
    fn adam_minimizes_quadratic_bowl() {
        // f(x, y) = (x - 1.5)^2 + 4 (y + 0.5)^2, minimum at (1.5, -0.5).
        let mut params = vec![-2.0, 3.0];
        let config = AdamConfig { learning_rate: 0.01, ..AdamConfig::default() };
        let mut state = AdamState::new(2, config);
        for _ in 0..5000 {
            let grads = [2.0 * (params[0] - 1.5), 8.0 * (params[1] + 0.5)];
            adam_step(&mut params, &grads, &mut state).unwrap();
        }
        assert!((params[0] - 1.5).abs() < 1e-6, "{params:?}");
        assert!((params[1] + 0.5).abs() < 1e-6, "{params:?}");
    }

    #[test]
    fn adam_shape_mismatch() {
        let mut state = AdamState::new(2, AdamConfig::default());
        assert!(adam_step(&mut [0.0; 3], &[0.0; 3], &mut state).is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let net = random_net(OutputMode::AmpBounded { r: 3.0 }, Activation::Sigmoid, 11);
        let json = net.to_checkpoint_json();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(value["r"], 3.0);
        assert_eq!(value["shapes"]["w1"], serde_json::json!([6, 4]));
        assert_eq!(NeuralNet::from_checkpoint_json(&json).unwrap(), net);
    }
}
