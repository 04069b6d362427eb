//! Fully connected ReLU regressor mapping a load vector to UC cost.
//!
//! Inputs are standardized with training-set statistics and the target is
//! scaled the same way; [`MlpModel::predict`] and [`MlpModel::input_gradient`]
//! work in raw units (MW in, $ out).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    fn forward(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.biases.iter().enumerate().map(|(o, b)| {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
        }));
    }

    /// `Wᵀ delta`
    fn backward(&self, delta: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.resize(self.inputs, 0.0);
        for (o, d) in delta.iter().enumerate() {
            if *d == 0.0 {
                continue;
            }
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            for (acc, w) in out.iter_mut().zip(row) {
                *acc += d * w;
            }
        }
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_dims: Vec<usize>,
    pub layers: Vec<Dense>,
    pub input_mean: Vec<f64>,
    pub input_std: Vec<f64>,
    pub output_mean: f64,
    pub output_std: f64,
    pub seed: u64,
}

impl MlpModel {
    /// Untrained network with He-uniform weights and identity normalization.
    pub fn new(layer_dims: &[usize], seed: u64) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) || *layer_dims.last().unwrap() != 1 {
            return Err(Error::Config(format!(
                "layer dims must be nonzero and end in 1, got {layer_dims:?}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_dims
            .windows(2)
            .map(|w| {
                let mut d = Dense::zeros(w[0], w[1]);
                let a = (6.0 / w[0] as f64).sqrt();
                for v in &mut d.weights {
                    *v = rng.gen_range(-a..a);
                }
                d
            })
            .collect();
        Ok(Self {
            layer_dims: layer_dims.to_vec(),
            layers,
            input_mean: vec![0.0; layer_dims[0]],
            input_std: vec![1.0; layer_dims[0]],
            output_mean: 0.0,
            output_std: 1.0,
            seed,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    /// Rejects models whose stored shapes disagree with `layer_dims`.
    pub fn check(&self) -> Result<()> {
        let ok = self.layers.len() + 1 == self.layer_dims.len()
            && self.layers.iter().zip(self.layer_dims.windows(2)).all(|(l, w)| {
                l.inputs == w[0]
                    && l.outputs == w[1]
                    && l.weights.len() == w[0] * w[1]
                    && l.biases.len() == w[1]
            })
            && self.layer_dims.last() == Some(&1)
            && self.input_mean.len() == self.input_dim()
            && self.input_std.len() == self.input_dim()
            && self.input_std.iter().all(|s| *s > 0.0)
            && self.output_std > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config("inconsistent model dimensions or scales".into()))
        }
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::Dimension {
                what: "model input",
                expected: self.input_dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.input_mean.iter().zip(&self.input_std))
            .map(|(v, (m, s))| v * s + m)
            .collect()
    }

    /// Pre-activations of every layer for a normalized input.
    fn trace(&self, z: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = z.to_vec();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::new();
            layer.forward(&act, &mut out);
            act = if i < last {
                out.iter().map(|v| v.max(0.0)).collect()
            } else {
                out.clone()
            };
            pre.push(out);
        }
        pre
    }

    fn raw_output(&self, z: &[f64]) -> f64 {
        self.trace(z).last().unwrap()[0]
    }

    /// Predicted cost in $.
    pub fn predict(&self, load: &[f64]) -> Result<f64> {
        self.check_input(load)?;
        Ok(self.raw_output(&self.normalize(load)) * self.output_std + self.output_mean)
    }

    /// Gradient of [`predict`](Self::predict) with respect to the raw load.
    /// A hidden unit with zero pre-activation counts as inactive.
    pub fn input_gradient(&self, load: &[f64]) -> Result<Vec<f64>> {
        self.check_input(load)?;
        let pre = self.trace(&self.normalize(load));
        let mut delta = vec![self.output_std];
        let mut buf = Vec::new();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            layer.backward(&delta, &mut buf);
            std::mem::swap(&mut delta, &mut buf);
            if i > 0 {
                for (d, z) in delta.iter_mut().zip(&pre[i - 1]) {
                    if *z <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
        }
        Ok(delta
            .iter()
            .zip(&self.input_std)
            .map(|(d, s)| d / s)
            .collect())
    }

    /// Accumulates d(loss)/d(params) for one normalized sample into `grads`,
    /// with loss `(out - target)^2`, and returns the loss.
    fn accumulate(&self, z: &[f64], target: f64, grads: &mut [Dense]) -> f64 {
        let pre = self.trace(z);
        let out = pre.last().unwrap()[0];
        let err = out - target;
        let mut delta = vec![2.0 * err];
        let mut buf = Vec::new();
        for i in (0..self.layers.len()).rev() {
            let g = &mut grads[i];
            let input: Vec<f64> = if i == 0 {
                z.to_vec()
            } else {
                pre[i - 1].iter().map(|v| v.max(0.0)).collect()
            };
            for (o, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                g.biases[o] += d;
                let row = &mut g.weights[o * g.inputs..(o + 1) * g.inputs];
                for (w, x) in row.iter_mut().zip(&input) {
                    *w += d * x;
                }
            }
            if i > 0 {
                self.layers[i].backward(&delta, &mut buf);
                std::mem::swap(&mut delta, &mut buf);
                for (d, p) in delta.iter_mut().zip(&pre[i - 1]) {
                    if *p <= 0.0 {
                        *d = 0.0;
                    }
                }
            }
        }
        err * err
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    #[default]
    Adam,
    /// Plain gradient descent with a fixed learning rate.
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub optimizer: Optimizer,
    /// Fraction held out as the test split.
    pub test_fraction: f64,
    /// Fraction of the training split used to monitor early stopping.
    pub monitor_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            batch: 64,
            max_epochs: 400,
            patience: 20,
            seed: 0,
            hidden: vec![50, 30, 30],
            optimizer: Optimizer::Adam,
            test_fraction: 0.2,
            monitor_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean squared error in $² over the training split.
    pub final_train_loss: f64,
    /// Mean `|pred - J| / J` over the test split.
    pub val_relative_error: f64,
    pub epochs: usize,
    pub best_epoch: usize,
    /// Mean normalized training loss after each epoch.
    pub loss_history: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
}

struct Adam {
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn step(&mut self, model: &mut MlpModel, grads: &mut [Dense], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for ((layer, g), (m, v)) in model
            .layers
            .iter_mut()
            .zip(grads.iter_mut())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for (((p, g), m), v) in layer
                .params_mut()
                .zip(g.params_mut())
                .zip(m.params_mut())
                .zip(v.params_mut())
            {
                *m = Self::B1 * *m + (1.0 - Self::B1) * *g;
                *v = Self::B2 * *v + (1.0 - Self::B2) * *g * *g;
                *p -= lr * (*m / c1) / ((*v / c2).sqrt() + Self::EPS);
            }
        }
    }
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count().max(1) as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    (mean, if std > 1e-12 * mean.abs().max(1.0) { std } else { 1.0 })
}

/// Train the cost regressor by minibatch descent on squared error, with
/// early stopping on a monitor slice of the training split.
pub fn mlp_train(dataset: &Dataset, config: &TrainConfig) -> Result<(MlpModel, TrainReport)> {
    let n = dataset.len();
    let dim = dataset.input_dim().ok_or(Error::EmptyDataset)?;
    if config.batch == 0 || config.lr <= 0.0 {
        return Err(Error::Config("batch must be > 0 and lr > 0".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_test = if n >= 2 {
        ((n as f64 * config.test_fraction).round() as usize).clamp(1, n - 1)
    } else {
        0
    };
    let (train_idx, test_idx) = order.split_at(n - n_test);
    let n_monitor = if train_idx.len() >= 10 {
        (train_idx.len() as f64 * config.monitor_fraction).round() as usize
    } else {
        0
    };
    let (fit_idx, monitor_idx) = train_idx.split_at(train_idx.len() - n_monitor);
    let monitor_idx = if monitor_idx.is_empty() { fit_idx } else { monitor_idx };

    let mut dims = vec![dim];
    dims.extend(&config.hidden);
    dims.push(1);
    let mut model = MlpModel::new(&dims, config.seed)?;
    model.input_mean.clear();
    model.input_std.clear();
    for d in 0..dim {
        let (m, s) = mean_std(train_idx.iter().map(|&i| dataset.samples[i].load.as_slice()[d]));
        model.input_mean.push(m);
        model.input_std.push(s);
    }
    let (om, os) = mean_std(train_idx.iter().map(|&i| dataset.samples[i].cost));
    model.output_mean = om;
    model.output_std = os;

    let inputs: Vec<Vec<f64>> = dataset
        .samples
        .iter()
        .map(|s| model.normalize(s.load.as_slice()))
        .collect();
    let targets: Vec<f64> = dataset
        .samples
        .iter()
        .map(|s| (s.cost - om) / os)
        .collect();
    let mse = |model: &MlpModel, idx: &[usize]| -> f64 {
        idx.iter()
            .map(|&i| {
                let e = model.raw_output(&inputs[i]) - targets[i];
                e * e
            })
            .sum::<f64>()
            / idx.len().max(1) as f64
    };

    let zero_grads: Vec<Dense> = model
        .layers
        .iter()
        .map(|l| Dense::zeros(l.inputs, l.outputs))
        .collect();
    let mut adam = Adam {
        m: zero_grads.clone(),
        v: zero_grads.clone(),
        t: 0,
    };
    let mut grads = zero_grads.clone();
    let mut fit_order = fit_idx.to_vec();
    let mut best = (mse(&model, monitor_idx), model.layers.clone(), 0usize);
    let mut history = Vec::new();
    let mut stale = 0;
    let mut epochs = 0;

    while epochs < config.max_epochs {
        epochs += 1;
        fit_order.shuffle(&mut rng);
        for chunk in fit_order.chunks(config.batch) {
            for g in &mut grads {
                for p in g.params_mut() {
                    *p = 0.0;
                }
            }
            for &i in chunk {
                model.accumulate(&inputs[i], targets[i], &mut grads);
            }
            let scale = 1.0 / chunk.len() as f64;
            for g in &mut grads {
                for p in g.params_mut() {
                    *p *= scale;
                }
            }
            match config.optimizer {
                Optimizer::Adam => adam.step(&mut model, &mut grads, config.lr),
                Optimizer::Sgd => {
                    for (layer, g) in model.layers.iter_mut().zip(grads.iter_mut()) {
                        for (p, g) in layer.params_mut().zip(g.params_mut()) {
                            *p -= config.lr * *g;
                        }
                    }
                }
            }
        }
        history.push(mse(&model, fit_idx));
        let monitor = mse(&model, monitor_idx);
        if monitor < best.0 {
            best = (monitor, model.layers.clone(), epochs);
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    model.layers = best.1;

    let final_train_loss = mse(&model, train_idx) * os * os;
    let eval_idx = if test_idx.is_empty() { train_idx } else { test_idx };
    let val_relative_error = eval_idx
        .iter()
        .map(|&i| {
            let s = &dataset.samples[i];
            let pred = model.raw_output(&inputs[i]) * os + om;
            (pred - s.cost).abs() / s.cost.abs().max(1e-12)
        })
        .sum::<f64>()
        / eval_idx.len() as f64;

    Ok((
        model,
        TrainReport {
            final_train_loss,
            val_relative_error,
            epochs,
            best_epoch: best.2,
            loss_history: history,
            n_train: train_idx.len(),
            n_test,
        },
    ))
}
