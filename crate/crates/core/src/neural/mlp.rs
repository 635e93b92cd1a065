use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::{Error, Result};

/// Hidden-layer shape: `layers` tanh layers of `width` neurons each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Arch {
    pub layers: usize,
    pub width: usize,
}

impl Arch {
    pub const fn new(layers: usize, width: usize) -> Self {
        Arch { layers, width }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.layers, self.width)
    }
}

impl FromStr for Arch {
    type Err = Error;

    /// Parses `LxP`, e.g. `1x5` or `5x20`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("architecture must look like LxP, got `{s}`"));
        let (l, p) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let layers: usize = l.trim().parse().map_err(|_| bad())?;
        let width: usize = p.trim().parse().map_err(|_| bad())?;
        if layers == 0 || width == 0 {
            return Err(bad());
        }
        Ok(Arch { layers, width })
    }
}

/// Per-component affine map between physical and normalized units:
/// `normalized = (physical - shift) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Affine {
    pub fn identity(dim: usize) -> Self {
        Affine { shift: vec![0.0; dim], scale: vec![1.0; dim] }
    }

    /// Mean-centering with the largest absolute deviation scaled to one.
    /// Constant columns keep scale 1.
    pub fn fit(rows: ArrayView2<f64>) -> Self {
        let n = rows.nrows().max(1) as f64;
        let shift: Vec<f64> = rows.axis_iter(Axis(1)).map(|c| c.sum() / n).collect();
        let scale = rows
            .axis_iter(Axis(1))
            .zip(&shift)
            .map(|(c, m)| {
                let dev = c.iter().map(|v| (v - m).abs()).fold(0.0, f64::max);
                if dev > 0.0 { dev } else { 1.0 }
            })
            .collect();
        Affine { shift, scale }
    }

    pub fn dim(&self) -> usize {
        self.shift.len()
    }
}

/// Dense layer `W h + b`, `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Layer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer { weights: Array2::zeros((n_out, n_in)), bias: Array1::zeros(n_out) }
    }

    pub fn n_in(&self) -> usize {
        self.weights.ncols()
    }

    pub fn n_out(&self) -> usize {
        self.weights.nrows()
    }
}

/// A tanh multilayer perceptron with affine input normalization and output
/// de-normalization:
///
/// ```text
/// u -> (u - s_in)/k_in -> tanh(W_1 . + b_1) -> ... -> tanh(W_L . + b_L) -> W_o . + b_o -> . * k_out + s_out
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub input: Affine,
    pub output: Affine,
    pub hidden: Vec<Layer>,
    pub readout: Layer,
}

impl MlpParams {
    /// All weights and biases zero, identity normalizations.
    pub fn zeros(arch: Arch, in_dim: usize, out_dim: usize) -> Self {
        let mut hidden = Vec::with_capacity(arch.layers);
        let mut n_in = in_dim;
        for _ in 0..arch.layers {
            hidden.push(Layer::zeros(n_in, arch.width));
            n_in = arch.width;
        }
        MlpParams {
            input: Affine::identity(in_dim),
            output: Affine::identity(out_dim),
            hidden,
            readout: Layer::zeros(n_in, out_dim),
        }
    }

    /// Glorot-uniform weights in `[-r, r]`, `r = sqrt(6 / (fan_in + fan_out))`,
    /// zero biases.
    pub fn glorot<R: Rng>(arch: Arch, in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let mut m = Self::zeros(arch, in_dim, out_dim);
        for layer in m.hidden.iter_mut().chain(std::iter::once(&mut m.readout)) {
            let r = (6.0 / (layer.n_in() + layer.n_out()) as f64).sqrt();
            layer.weights.mapv_inplace(|_| rng.random_range(-r..=r));
        }
        m
    }

    pub fn in_dim(&self) -> usize {
        self.input.dim()
    }

    pub fn out_dim(&self) -> usize {
        self.output.dim()
    }

    pub fn arch(&self) -> Arch {
        Arch { layers: self.hidden.len(), width: self.hidden.first().map_or(0, Layer::n_out) }
    }

    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.hidden.iter().chain(std::iter::once(&self.readout))
    }

    pub fn layers_mut(&mut self) -> impl Iterator<Item = &mut Layer> {
        self.hidden.iter_mut().chain(std::iter::once(&mut self.readout))
    }

    pub fn n_params(&self) -> usize {
        self.layers().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Checks shapes, positivity of scales and finiteness, and puts every
    /// weight matrix in row-major layout.
    pub fn validate(&mut self) -> Result<()> {
        let arch = self.arch();
        if arch.layers == 0 {
            return Err(Error::InvalidParams("network needs at least one hidden layer".into()));
        }
        let mut n_in = self.in_dim();
        for layer in self.layers() {
            if layer.n_in() != n_in || layer.bias.len() != layer.n_out() {
                return Err(Error::Dimension { expected: n_in, got: layer.n_in() });
            }
            n_in = layer.n_out();
        }
        if n_in != self.out_dim() {
            return Err(Error::Dimension { expected: self.out_dim(), got: n_in });
        }
        if self.hidden.iter().any(|l| l.n_out() != arch.width) {
            return Err(Error::InvalidParams("hidden layers must share one width".into()));
        }
        for aff in [&self.input, &self.output] {
            if aff.shift.len() != aff.scale.len() {
                return Err(Error::InvalidParams("normalization shift/scale length mismatch".into()));
            }
            if aff.scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) || aff.shift.iter().any(|s| !s.is_finite()) {
                return Err(Error::InvalidParams("normalization scales must be positive and finite".into()));
            }
        }
        if self.layers().any(|l| l.weights.iter().chain(&l.bias).any(|v| !v.is_finite())) {
            return Err(Error::InvalidParams("non-finite network parameter".into()));
        }
        for layer in self.layers_mut() {
            if !layer.weights.is_standard_layout() {
                layer.weights = layer.weights.as_standard_layout().into_owned();
            }
        }
        Ok(())
    }

    /// Evaluates the network on one input vector.
    pub fn forward(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.in_dim() {
            return Err(Error::Dimension { expected: self.in_dim(), got: u.len() });
        }
        let mut out = vec![0.0; self.out_dim()];
        let mut scratch = Scratch::default();
        self.forward_into(u, &mut out, &mut scratch);
        Ok(out)
    }

    /// Allocation-free evaluation for hot loops. Dimensions are the
    /// caller's responsibility.
    pub fn forward_into(&self, u: &[f64], out: &mut [f64], scratch: &mut Scratch) {
        let Scratch { a, b } = scratch;
        a.clear();
        a.extend(u.iter().zip(&self.input.shift).zip(&self.input.scale).map(|((v, s), k)| (v - s) / k));
        for layer in &self.hidden {
            dense(layer, a, b);
            b.iter_mut().for_each(|v| *v = v.tanh());
            std::mem::swap(a, b);
        }
        dense(&self.readout, a, b);
        for (o, ((v, s), k)) in out.iter_mut().zip(b.iter().zip(&self.output.shift).zip(&self.output.scale)) {
            *o = v * k + s;
        }
    }

    /// Raw (normalized-space) outputs and all hidden activations for a
    /// batch; `acts[0]` is the normalized input.
    fn forward_batch(&self, inputs: ArrayView2<f64>) -> (Vec<Array2<f64>>, Array2<f64>) {
        let shift = ndarray::ArrayView1::from(&self.input.shift[..]);
        let scale = ndarray::ArrayView1::from(&self.input.scale[..]);
        let mut acts = Vec::with_capacity(self.hidden.len() + 1);
        acts.push((&inputs - &shift) / &scale);
        for layer in &self.hidden {
            let z = acts.last().unwrap().dot(&layer.weights.t()) + &layer.bias;
            acts.push(z.mapv_into(f64::tanh));
        }
        let raw = acts.last().unwrap().dot(&self.readout.weights.t()) + &self.readout.bias;
        (acts, raw)
    }

    /// Batch evaluation in physical units.
    pub fn predict(&self, inputs: ArrayView2<f64>) -> Result<Array2<f64>> {
        if inputs.ncols() != self.in_dim() {
            return Err(Error::Dimension { expected: self.in_dim(), got: inputs.ncols() });
        }
        let (_, raw) = self.forward_batch(inputs);
        let shift = ndarray::ArrayView1::from(&self.output.shift[..]);
        let scale = ndarray::ArrayView1::from(&self.output.scale[..]);
        Ok(raw * &scale + &shift)
    }

    /// Maps physical targets into the network's normalized output space.
    pub fn normalize_targets(&self, targets: ArrayView2<f64>) -> Array2<f64> {
        let shift = ndarray::ArrayView1::from(&self.output.shift[..]);
        let scale = ndarray::ArrayView1::from(&self.output.scale[..]);
        (&targets - &shift) / &scale
    }

    /// Summed squared error `sum_rows |t - f(u)|^2` (physical units) and its
    /// exact gradient with respect to every weight and bias.
    pub fn loss_and_gradient(&self, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<(f64, Gradient)> {
        self.check_batch(inputs, targets)?;
        let (acts, raw) = self.forward_batch(inputs);
        let scale = ndarray::ArrayView1::from(&self.output.scale[..]);
        let shift = ndarray::ArrayView1::from(&self.output.shift[..]);
        let residual = &targets - &(&raw * &scale + &shift);
        let loss = residual.iter().map(|r| r * r).sum();
        let d_raw = residual * &scale * -2.0;
        Ok((loss, self.backward(&acts, d_raw)))
    }

    /// Summed squared error in normalized output space against targets
    /// already passed through [`normalize_targets`](Self::normalize_targets).
    pub fn normalized_loss_and_gradient(
        &self,
        inputs: ArrayView2<f64>,
        norm_targets: ArrayView2<f64>,
    ) -> Result<(f64, Gradient)> {
        self.check_batch(inputs, norm_targets)?;
        let (acts, raw) = self.forward_batch(inputs);
        let residual = &norm_targets - &raw;
        let loss = residual.iter().map(|r| r * r).sum();
        Ok((loss, self.backward(&acts, residual * -2.0)))
    }

    /// Normalized-space summed squared error only.
    pub fn normalized_loss(&self, inputs: ArrayView2<f64>, norm_targets: ArrayView2<f64>) -> Result<f64> {
        self.check_batch(inputs, norm_targets)?;
        let (_, raw) = self.forward_batch(inputs);
        Ok((&norm_targets - &raw).iter().map(|r| r * r).sum())
    }

    fn check_batch(&self, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<()> {
        if inputs.ncols() != self.in_dim() {
            return Err(Error::Dimension { expected: self.in_dim(), got: inputs.ncols() });
        }
        if targets.ncols() != self.out_dim() {
            return Err(Error::Dimension { expected: self.out_dim(), got: targets.ncols() });
        }
        if targets.nrows() != inputs.nrows() {
            return Err(Error::Dimension { expected: inputs.nrows(), got: targets.nrows() });
        }
        Ok(())
    }

    fn backward(&self, acts: &[Array2<f64>], d_raw: Array2<f64>) -> Gradient {
        let mut grads = Vec::with_capacity(self.hidden.len() + 1);
        let last = acts.last().unwrap();
        grads.push(Layer { weights: d_raw.t().dot(last), bias: d_raw.sum_axis(Axis(0)) });
        let mut d_act = d_raw.dot(&self.readout.weights);
        for (k, layer) in self.hidden.iter().enumerate().rev() {
            let h = &acts[k + 1];
            let dz = d_act * &h.mapv(|v| 1.0 - v * v);
            grads.push(Layer { weights: dz.t().dot(&acts[k]), bias: dz.sum_axis(Axis(0)) });
            d_act = dz.dot(&layer.weights);
        }
        grads.reverse();
        let readout = grads.pop().unwrap();
        Gradient { hidden: grads, readout }
    }

    /// All weights and biases, layer by layer (weights row-major, then bias).
    pub fn flat_params(&self) -> Vec<f64> {
        self.layers().flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied().collect::<Vec<_>>()).collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::Dimension { expected: self.n_params(), got: flat.len() });
        }
        let mut it = flat.iter().copied();
        for layer in self.layers_mut() {
            layer.weights.iter_mut().chain(layer.bias.iter_mut()).for_each(|v| *v = it.next().unwrap());
        }
        Ok(())
    }
}

fn dense(layer: &Layer, input: &[f64], out: &mut Vec<f64>) {
    let w = layer.weights.as_slice().expect("row-major weights");
    let n_in = layer.n_in();
    out.clear();
    out.extend(w.chunks_exact(n_in).zip(layer.bias.iter()).map(|(row, b)| {
        let mut acc = *b;
        for (wi, xi) in row.iter().zip(input) {
            acc += wi * xi;
        }
        acc
    }));
}

/// Reusable buffers for [`MlpParams::forward_into`].
#[derive(Debug, Default, Clone)]
pub struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Gradient with the same shape as the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub hidden: Vec<Layer>,
    pub readout: Layer,
}

impl Gradient {
    pub fn layers(&self) -> impl Iterator<Item = &Layer> {
        self.hidden.iter().chain(std::iter::once(&self.readout))
    }

    pub fn flat(&self) -> Vec<f64> {
        self.layers().flat_map(|l| l.weights.iter().chain(l.bias.iter()).copied().collect::<Vec<_>>()).collect()
    }
}

/// Gradient of the summed squared error over a batch, physical units.
pub fn mlp_gradient(m: &MlpParams, inputs: ArrayView2<f64>, targets: ArrayView2<f64>) -> Result<Gradient> {
    if inputs.nrows() == 0 {
        return Err(Error::InsufficientData("empty batch".into()));
    }
    m.loss_and_gradient(inputs, targets).map(|(_, g)| g)
}

/// Single-input evaluation.
pub fn mlp_forward(m: &MlpParams, u: &[f64]) -> Result<Vec<f64>> {
    m.forward(u)
}
