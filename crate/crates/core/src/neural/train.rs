//! Full-batch Adam training with best-validation checkpointing.

use ndarray::{Array2, ArrayView2};

use super::dataset::{Dataset, Split};
use super::mlp::{Affine, Gradient, MlpParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 2000, learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Per-epoch mean squared errors in normalized output units. Entry `e` is
/// the loss of the parameters before the `e`-th update. Empty subsets are
/// recorded as NaN.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LossHistory {
    pub train: Vec<f64>,
    pub val: Vec<f64>,
    pub test: Vec<f64>,
}

impl LossHistory {
    pub fn len(&self) -> usize {
        self.train.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train,val,test\n");
        for e in 0..self.len() {
            out.push_str(&format!("{e},{},{},{}\n", self.train[e], self.val[e], self.test[e]));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters with the lowest recorded validation loss.
    pub params: MlpParams,
    pub history: LossHistory,
    pub best_epoch: usize,
    /// Epoch at which a non-finite training loss stopped the run.
    pub aborted_at: Option<usize>,
}

impl TrainOutcome {
    pub fn best_train(&self) -> f64 {
        self.history.train[self.best_epoch]
    }

    pub fn best_val(&self) -> f64 {
        self.history.val[self.best_epoch]
    }

    pub fn best_test(&self) -> f64 {
        self.history.test[self.best_epoch]
    }
}

struct Subset {
    inputs: Array2<f64>,
    norm_targets: Array2<f64>,
}

impl Subset {
    fn mse(&self, m: &MlpParams) -> Result<f64> {
        if self.inputs.nrows() == 0 {
            return Ok(f64::NAN);
        }
        let n = (self.inputs.nrows() * self.norm_targets.ncols()) as f64;
        Ok(m.normalized_loss(self.inputs.view(), self.norm_targets.view())? / n)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam { m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            params[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
        }
    }
}

/// Fits input and output normalizations on the training rows of `ds`.
pub fn fit_normalizations(ds: &Dataset) -> (Affine, Affine) {
    let (x, y) = ds.subset(Split::Train);
    (Affine::fit(x.view()), Affine::fit(y.view()))
}

/// Trains `m0` on `ds`.
///
/// Normalizations are refitted on the training split before optimization;
/// the weights of `m0` are the starting point. The loss minimized is the
/// normalized-space mean squared error over the training rows.
pub fn train(m0: &MlpParams, ds: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome> {
    if cfg.epochs == 0 {
        return Err(Error::InvalidParams("epochs must be at least 1".into()));
    }
    if ds.inputs.ncols() != m0.in_dim() {
        return Err(Error::Dimension { expected: m0.in_dim(), got: ds.inputs.ncols() });
    }
    if ds.targets.ncols() != m0.out_dim() {
        return Err(Error::Dimension { expected: m0.out_dim(), got: ds.targets.ncols() });
    }
    if ds.count(Split::Train) == 0 {
        return Err(Error::InsufficientData("no training rows".into()));
    }
    let mut m = m0.clone();
    let (input, output) = fit_normalizations(ds);
    m.input = input;
    m.output = output;
    m.validate()?;

    let subset = |split| {
        let (x, y) = ds.subset(split);
        let norm_targets = m.normalize_targets(y.view());
        Subset { inputs: x, norm_targets }
    };
    let (train_set, val_set, test_set) = (subset(Split::Train), subset(Split::Val), subset(Split::Test));
    let has_val = val_set.inputs.nrows() > 0;
    let denom = (train_set.inputs.nrows() * train_set.norm_targets.ncols()) as f64;

    let mut history = LossHistory::default();
    let mut best: Option<(f64, usize, MlpParams)> = None;
    let mut adam = Adam::new(m.n_params());
    let mut flat = m.flat_params();
    let mut aborted_at = None;

    for epoch in 0..cfg.epochs {
        let (loss, grad) = normalized_step(&m, train_set.inputs.view(), train_set.norm_targets.view())?;
        let train_mse = loss / denom;
        if !train_mse.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            aborted_at = Some(epoch);
            break;
        }
        let val_mse = val_set.mse(&m)?;
        history.train.push(train_mse);
        history.val.push(val_mse);
        history.test.push(test_set.mse(&m)?);
        let score = if has_val { val_mse } else { train_mse };
        if best.as_ref().map_or(true, |b| score < b.0) {
            best = Some((score, epoch, m.clone()));
        }
        let grad: Vec<f64> = grad.iter().map(|g| g / denom).collect();
        adam.step(&mut flat, &grad, cfg);
        m.set_flat_params(&flat)?;
    }

    match best {
        Some((_, best_epoch, params)) => Ok(TrainOutcome { params, history, best_epoch, aborted_at }),
        None => Err(Error::NonFiniteLoss { epoch: aborted_at.unwrap_or(0) }),
    }
}

fn normalized_step(m: &MlpParams, x: ArrayView2<f64>, t: ArrayView2<f64>) -> Result<(f64, Vec<f64>)> {
    let (loss, g): (f64, Gradient) = m.normalized_loss_and_gradient(x, t)?;
    Ok((loss, g.flat()))
}

/// `sum |t - f|^2 / sum |t - mean(t)|^2` over the rows of one subset,
/// i.e. mean squared error relative to the target variance.
pub fn normalized_mse(m: &MlpParams, ds: &Dataset, split: Split) -> Result<f64> {
    let (x, y) = ds.subset(split);
    if x.nrows() == 0 {
        return Err(Error::InsufficientData("empty subset".into()));
    }
    let pred = m.predict(x.view())?;
    let mean = y.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let sse: f64 = (&y - &pred).iter().map(|r| r * r).sum();
    let sst: f64 = (&y - &mean).iter().map(|r| r * r).sum();
    Ok(if sst > 0.0 { sse / sst } else { sse })
}
