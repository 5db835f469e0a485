//! One-hidden-layer tanh networks with hand-written backpropagation.

use serde::{Deserialize, Serialize};

use crate::rng::Stream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }
}

/// `y = act(W2 · tanh(W1 · x + b1) + b2)`.
///
/// Parameters are stored flat as `[W1 (hidden×inputs, row-major), b1,
/// W2 (outputs×hidden, row-major), b2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    inputs: usize,
    hidden: usize,
    outputs: usize,
    activation: Activation,
    params: Vec<f64>,
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    input: Vec<f64>,
    hidden: Vec<f64>,
    output: Vec<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

impl Mlp {
    pub fn param_count(inputs: usize, hidden: usize, outputs: usize) -> usize {
        hidden * inputs + hidden + outputs * hidden + outputs
    }

    /// Uniform initialization in `±1/sqrt(fan_in)`.
    pub fn new(inputs: usize, hidden: usize, outputs: usize, activation: Activation, rng: &mut Stream) -> Self {
        let mut params = Vec::with_capacity(Self::param_count(inputs, hidden, outputs));
        let a1 = 1.0 / (inputs as f64).sqrt();
        params.extend((0..hidden * inputs).map(|_| rng.uniform_in(-a1, a1)));
        params.extend(std::iter::repeat_n(0.0, hidden));
        let a2 = 1.0 / (hidden as f64).sqrt();
        params.extend((0..outputs * hidden).map(|_| rng.uniform_in(-a2, a2)));
        params.extend(std::iter::repeat_n(0.0, outputs));
        Self {
            inputs,
            hidden,
            outputs,
            activation,
            params,
        }
    }

    pub fn from_params(
        inputs: usize,
        hidden: usize,
        outputs: usize,
        activation: Activation,
        params: Vec<f64>,
    ) -> Option<Self> {
        (params.len() == Self::param_count(inputs, hidden, outputs)).then_some(Self {
            inputs,
            hidden,
            outputs,
            activation,
            params,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn outputs(&self) -> usize {
        self.outputs
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

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.inputs;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.outputs * self.hidden;
        (b1, w2, b2)
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.tape(x).output
    }

    pub fn tape(&self, x: &[f64]) -> Tape {
        debug_assert_eq!(x.len(), self.inputs);
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let hidden: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let row = &p[h * self.inputs..(h + 1) * self.inputs];
                let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p[b1 + h];
                z.tanh()
            })
            .collect();
        let output = (0..self.outputs)
            .map(|o| {
                let row = &p[w2 + o * self.hidden..w2 + (o + 1) * self.hidden];
                let z: f64 = row.iter().zip(&hidden).map(|(w, v)| w * v).sum::<f64>() + p[b2 + o];
                match self.activation {
                    Activation::Tanh => z.tanh(),
                    Activation::Identity => z,
                }
            })
            .collect();
        Tape {
            input: x.to_vec(),
            hidden,
            output,
        }
    }

    /// Backpropagates `grad_output` (dL/dy) through the pass recorded in
    /// `tape`. Parameter gradients are accumulated into `grad_params` when
    /// given; the gradient with respect to the input is returned.
    pub fn backward(&self, tape: &Tape, grad_output: &[f64], grad_params: Option<&mut [f64]>) -> Vec<f64> {
        let (b1, w2, b2) = self.offsets();
        let p = &self.params;
        let d_out: Vec<f64> = grad_output
            .iter()
            .zip(&tape.output)
            .map(|(g, y)| match self.activation {
                Activation::Tanh => g * (1.0 - y * y),
                Activation::Identity => *g,
            })
            .collect();
        let d_hidden: Vec<f64> = (0..self.hidden)
            .map(|h| {
                let back: f64 = (0..self.outputs).map(|o| p[w2 + o * self.hidden + h] * d_out[o]).sum();
                back * (1.0 - tape.hidden[h] * tape.hidden[h])
            })
            .collect();
        if let Some(g) = grad_params {
            for o in 0..self.outputs {
                g[b2 + o] += d_out[o];
                for h in 0..self.hidden {
                    g[w2 + o * self.hidden + h] += d_out[o] * tape.hidden[h];
                }
            }
            for h in 0..self.hidden {
                g[b1 + h] += d_hidden[h];
                for i in 0..self.inputs {
                    g[h * self.inputs + i] += d_hidden[h] * tape.input[i];
                }
            }
        }
        (0..self.inputs)
            .map(|i| (0..self.hidden).map(|h| p[h * self.inputs + i] * d_hidden[h]).sum())
            .collect()
    }
}

/// Per-coordinate affine map `(x - shift) / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Affine {
    pub fn identity(dim: usize) -> Self {
        Self {
            shift: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    /// Standardizes by the column means and standard deviations of `rows`.
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len().max(1) as f64;
        let shift: Vec<f64> = (0..dim).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..dim)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - shift[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd > 1e-8 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { shift, scale }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn denormalize(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.shift.iter().zip(&self.scale))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }
}

/// An [`Mlp`] between an input standardizer and an output de-standardizer.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub mlp: Mlp,
    pub input: Affine,
    pub output: Affine,
}

impl Network {
    pub fn new(mlp: Mlp) -> Self {
        let input = Affine::identity(mlp.inputs());
        let output = Affine::identity(mlp.outputs());
        Self { mlp, input, output }
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.output.denormalize(&self.mlp.forward(&self.input.normalize(x)))
    }

    /// Forward pass; returns the tape and the de-standardized output.
    pub fn tape(&self, x: &[f64]) -> (Tape, Vec<f64>) {
        let tape = self.mlp.tape(&self.input.normalize(x));
        let y = self.output.denormalize(tape.output());
        (tape, y)
    }

    /// Gradient of a scalar with respect to the raw input, given its gradient
    /// with respect to the raw output.
    pub fn backward(&self, tape: &Tape, grad_output: &[f64], grad_params: Option<&mut [f64]>) -> Vec<f64> {
        let g: Vec<f64> = grad_output.iter().zip(&self.output.scale).map(|(g, s)| g * s).collect();
        self.mlp
            .backward(tape, &g, grad_params)
            .into_iter()
            .zip(&self.input.scale)
            .map(|(g, s)| g / s)
            .collect()
    }
}

/// Heavy-ball momentum update.
#[derive(Clone, Debug)]
pub struct Momentum {
    velocity: Vec<f64>,
    pub learning_rate: f64,
    pub momentum: f64,
}

impl Momentum {
    pub fn new(len: usize, learning_rate: f64, momentum: f64) -> Self {
        Self {
            velocity: vec![0.0; len],
            learning_rate,
            momentum,
        }
    }

    /// Moves `params` along `direction` (pass the negated gradient to descend).
    pub fn apply(&mut self, params: &mut [f64], direction: &[f64]) {
        for ((p, v), d) in params.iter_mut().zip(&mut self.velocity).zip(direction) {
            *v = self.momentum * *v + d;
            *p += self.learning_rate * *v;
        }
    }
}

/// Settings for supervised regression.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SupervisedConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
}

impl Default for SupervisedConfig {
    fn default() -> Self {
        Self {
            hidden: 32,
            epochs: 150,
            learning_rate: 0.02,
            momentum: 0.9,
            batch_size: 32,
        }
    }
}

/// Minibatch momentum SGD on mean squared error in standardized units.
/// Returns the final epoch's training loss.
pub fn fit_regression(
    net: &mut Network,
    inputs: &[Vec<f64>],
    targets: &[Vec<f64>],
    config: &SupervisedConfig,
    rng: &mut Stream,
) -> f64 {
    let n = inputs.len();
    let xs: Vec<Vec<f64>> = inputs.iter().map(|x| net.input.normalize(x)).collect();
    let ys: Vec<Vec<f64>> = targets.iter().map(|y| net.output.normalize(y)).collect();
    let mut opt = Momentum::new(net.mlp.params().len(), config.learning_rate, config.momentum);
    let mut order: Vec<usize> = (0..n).collect();
    let mut grad = vec![0.0; net.mlp.params().len()];
    let mut last_loss = f64::INFINITY;
    for _ in 0..config.epochs {
        shuffle(&mut order, rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size.max(1)) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / (batch.len() * net.mlp.outputs()) as f64;
            for &i in batch {
                let tape = net.mlp.tape(&xs[i]);
                let err: Vec<f64> = tape.output().iter().zip(&ys[i]).map(|(p, t)| p - t).collect();
                epoch_loss += err.iter().map(|e| e * e).sum::<f64>();
                let g: Vec<f64> = err.iter().map(|e| -2.0 * e * scale).collect();
                net.mlp.backward(&tape, &g, Some(&mut grad));
            }
            opt.apply(net.mlp.params_mut(), &grad);
        }
        last_loss = epoch_loss / (n * net.mlp.outputs()).max(1) as f64;
    }
    last_loss
}

/// Fisher-Yates shuffle driven by `rng`.
pub fn shuffle<T>(items: &mut [T], rng: &mut Stream) {
    for i in (1..items.len()).rev() {
        let j = rng.index(i + 1);
        items.swap(i, j);
    }
}
