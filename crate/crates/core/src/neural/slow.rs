//! Building datasets from trajectories and fitting the two kinds of
//! parameterization.
//!
//! The slow pair is learnt in two consecutive fits. First `Z: y -> z` with
//! `y` unfiltered and `z` low-pass filtered; then, with `Z` frozen,
//! `X: (y, Z(y)) -> x` against filtered `x`. The vanilla map `V: y -> x`
//! is a single fit with nothing filtered.

use ndarray::{concatenate, Array2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::{split_dataset, Dataset, SplitMode};
use super::mlp::{Arch, MlpParams};
use super::parameterization::Parameterization;
use super::train::{train, TrainConfig, TrainOutcome};
use crate::error::{Error, Result};
use crate::signal::{moving_average, FilterSpec};
use crate::trajectory::Trajectory;

/// Everything a fit needs apart from the data.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub arch: Arch,
    pub split: SplitMode,
    /// Seed of the weight initialization.
    pub init_seed: u64,
    pub train: TrainConfig,
    /// Length of the training record in days, measured from its first
    /// usable sample. `None` uses everything.
    pub span_days: Option<f64>,
    /// Keep every n-th usable sample.
    pub sample_stride: usize,
}

impl FitConfig {
    pub fn new(arch: Arch, split: SplitMode, init_seed: u64) -> Self {
        FitConfig { arch, split, init_seed, train: TrainConfig::default(), span_days: None, sample_stride: 1 }
    }
}

#[derive(Debug, Clone)]
pub struct SlowPairFit {
    pub param: Parameterization,
    pub z_stage: TrainOutcome,
    pub x_stage: TrainOutcome,
    pub z_data: Dataset,
    pub x_data: Dataset,
}

#[derive(Debug, Clone)]
pub struct VanillaFit {
    pub param: Parameterization,
    pub stage: TrainOutcome,
    pub data: Dataset,
}

/// Aligned rows drawn from a nine-component trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Pairs {
    pub times: Vec<f64>,
    pub y: Array2<f64>,
    pub x: Array2<f64>,
    pub z: Array2<f64>,
}

fn check_full(traj: &Trajectory) -> Result<()> {
    if traj.n_components() != 9 {
        return Err(Error::Dimension { expected: 9, got: traj.n_components() });
    }
    Ok(())
}

fn gather(
    times: impl Iterator<Item = f64>,
    rows: impl Iterator<Item = ([f64; 3], [f64; 3], [f64; 3])>,
    span_days: Option<f64>,
    stride: usize,
    available_days: f64,
    dt: f64,
) -> Result<Pairs> {
    if let Some(span) = span_days {
        if span > available_days + 0.5 * dt {
            return Err(Error::InsufficientData(format!(
                "training span of {span} days requested but only {available_days:.3} days are usable"
            )));
        }
    }
    let mut t_out = Vec::new();
    let (mut ys, mut xs, mut zs) = (Vec::new(), Vec::new(), Vec::new());
    let mut t_first = None;
    for (i, (t, (y, x, z))) in times.zip(rows).enumerate() {
        let first = *t_first.get_or_insert(t);
        if let Some(span) = span_days {
            if t - first > span + 0.5 * dt {
                break;
            }
        }
        if i % stride.max(1) != 0 {
            continue;
        }
        t_out.push(t);
        ys.extend(y);
        xs.extend(x);
        zs.extend(z);
    }
    let n = t_out.len();
    let arr = |v: Vec<f64>| Array2::from_shape_vec((n, 3), v).expect("three columns");
    Ok(Pairs { times: t_out, y: arr(ys), x: arr(xs), z: arr(zs) })
}

fn triple(s: &[f64], at: usize) -> [f64; 3] {
    [s[at], s[at + 1], s[at + 2]]
}

/// Unfiltered `y` paired with filtered `x` and `z` at the same instants.
pub fn filtered_pairs(traj: &Trajectory, filter: &FilterSpec, span_days: Option<f64>, stride: usize) -> Result<Pairs> {
    check_full(traj)?;
    let slow = moving_average(traj, filter)?;
    let offset = filter.window_samples(traj.dt())? / 2;
    let rows = slow
        .samples()
        .enumerate()
        .map(|(i, s)| (triple(traj.sample(i + offset), 3), triple(s, 0), triple(s, 6)));
    let times = (0..slow.len()).map(|i| slow.time(i));
    gather(times, rows, span_days, stride, slow.span(), traj.dt())
}

/// Unfiltered `y`, `x` and `z`.
pub fn unfiltered_pairs(traj: &Trajectory, span_days: Option<f64>, stride: usize) -> Result<Pairs> {
    check_full(traj)?;
    let rows = traj.samples().map(|s| (triple(s, 3), triple(s, 0), triple(s, 6)));
    let times = (0..traj.len()).map(|i| traj.time(i));
    gather(times, rows, span_days, stride, traj.span(), traj.dt())
}

fn fit_stage(inputs: Array2<f64>, targets: Array2<f64>, times: Vec<f64>, cfg: &FitConfig, seed: u64) -> Result<(TrainOutcome, Dataset)> {
    let (d_in, d_out) = (inputs.ncols(), targets.ncols());
    let ds = split_dataset(Dataset::new(inputs, targets, times)?, cfg.split)?;
    let m0 = MlpParams::glorot(cfg.arch, d_in, d_out, &mut ChaCha8Rng::seed_from_u64(seed));
    Ok((train(&m0, &ds, &cfg.train)?, ds))
}

/// Fits the slow pair `(Z, X)` on `traj` (nine components).
pub fn train_slow_pair(traj: &Trajectory, filter: &FilterSpec, cfg: &FitConfig) -> Result<SlowPairFit> {
    let pairs = filtered_pairs(traj, filter, cfg.span_days, cfg.sample_stride)?;
    fit_slow_pair_on(pairs, cfg)
}

/// Slow-pair fit on precomputed rows.
pub fn fit_slow_pair_on(pairs: Pairs, cfg: &FitConfig) -> Result<SlowPairFit> {
    let (z_stage, z_data) = fit_stage(pairs.y.clone(), pairs.z, pairs.times.clone(), cfg, cfg.init_seed)?;
    let z_net = &z_stage.params;
    let mut z_hat = Array2::zeros((pairs.y.nrows(), 3));
    let mut scratch = Default::default();
    for (row, mut out) in pairs.y.rows().into_iter().zip(z_hat.rows_mut()) {
        let y = [row[0], row[1], row[2]];
        let mut z = [0.0; 3];
        z_net.forward_into(&y, &mut z, &mut scratch);
        out.assign(&ndarray::ArrayView1::from(&z));
    }
    let inputs = concatenate(Axis(1), &[pairs.y.view(), z_hat.view()]).expect("equal row counts");
    let (x_stage, x_data) = fit_stage(inputs, pairs.x, pairs.times, cfg, cfg.init_seed.wrapping_add(1))?;
    let param = Parameterization::slow_pair(z_stage.params.clone(), x_stage.params.clone())?;
    Ok(SlowPairFit { param, z_stage, x_stage, z_data, x_data })
}

/// Fits the vanilla map `V: y -> x` on unfiltered data.
pub fn train_vanilla(traj: &Trajectory, cfg: &FitConfig) -> Result<VanillaFit> {
    let pairs = unfiltered_pairs(traj, cfg.span_days, cfg.sample_stride)?;
    fit_vanilla_on(pairs, cfg)
}

pub fn fit_vanilla_on(pairs: Pairs, cfg: &FitConfig) -> Result<VanillaFit> {
    let (stage, data) = fit_stage(pairs.y, pairs.x, pairs.times, cfg, cfg.init_seed)?;
    let param = Parameterization::vanilla(stage.params.clone())?;
    Ok(VanillaFit { param, stage, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::dataset::Split;
    use crate::neural::train::normalized_mse;

    /// z = A y and x = B (y, z) exactly, smooth slow y.
    // amplitudes on the scale of the slow-regime rotational modes
    fn linear_system(n: usize, dt: f64) -> Trajectory {
        const AMP: f64 = 0.15;
        let a = [[0.5, -0.2, 0.1], [0.3, 0.4, -0.6], [-0.1, 0.2, 0.7]];
        let b = [[0.2, 0.1, 0.0, 0.3, -0.1, 0.05], [0.0, -0.3, 0.2, 0.1, 0.2, 0.0], [0.1, 0.0, 0.4, -0.2, 0.0, 0.3]];
        let mut data = Vec::with_capacity(n * 9);
        for i in 0..n {
            let t = i as f64 * dt;
            let y = [AMP * (t / 7.0).sin(), AMP * (t / 11.0 + 1.0).cos(), AMP * (t / 5.0).sin() * 0.5];
            let z: Vec<f64> = a.iter().map(|r| r.iter().zip(&y).map(|(c, v)| c * v).sum()).collect();
            let yz = [y[0], y[1], y[2], z[0], z[1], z[2]];
            let x: Vec<f64> = b.iter().map(|r| r.iter().zip(&yz).map(|(c, v)| c * v).sum()).collect();
            data.extend(&x);
            data.extend(&y);
            data.extend(&z);
        }
        Trajectory::new(0.0, dt, 9, data).unwrap()
    }

    #[test]
    fn stage_two_takes_six_inputs() {
        let traj = linear_system(200, 0.1);
        let mut cfg = FitConfig::new(Arch::new(1, 3), SplitMode::Predefined, 1);
        cfg.train.epochs = 5;
        let fit = train_slow_pair(&traj, &FilterSpec::from_t_gw(0.01), &cfg).unwrap();
        assert_eq!(fit.x_stage.params.in_dim(), 6);
        assert_eq!(fit.z_stage.params.in_dim(), 3);
        assert_eq!(fit.x_data.labels, fit.z_data.labels);
    }

    #[test]
    fn realizable_linear_slow_pair() {
        let traj = linear_system(2000, 0.05);
        let mut cfg = FitConfig::new(Arch::new(1, 8), SplitMode::Random { seed: 3 }, 7);
        cfg.train = TrainConfig { epochs: 40_000, ..Default::default() };
        cfg.sample_stride = 4;
        // window shorter than one sample: filtering is the identity
        let fit = train_slow_pair(&traj, &FilterSpec::from_t_gw(0.01), &cfg).unwrap();
        let mse = |ds: &Dataset, m: &MlpParams| {
            let (x, y) = ds.subset(Split::Train);
            let p = m.predict(x.view()).unwrap();
            (&y - &p).iter().map(|r| r * r).sum::<f64>() / y.len() as f64
        };
        let mz = mse(&fit.z_data, &fit.z_stage.params);
        let mx = mse(&fit.x_data, &fit.x_stage.params);
        assert!(mz <= 1e-8, "z stage {mz}");
        assert!(mx <= 1e-8, "x stage {mx}");
        assert!(normalized_mse(&fit.x_stage.params, &fit.x_data, Split::Test).unwrap() < 1e-5);
    }

    #[test]
    fn identity_filter_makes_slow_targets_raw() {
        let traj = linear_system(300, 0.1);
        let f = filtered_pairs(&traj, &FilterSpec::from_t_gw(0.01), Some(20.0), 2).unwrap();
        let u = unfiltered_pairs(&traj, Some(20.0), 2).unwrap();
        assert_eq!(f, u);
        assert_eq!(u.times.len(), 101);
    }

    #[test]
    fn filtered_targets_align_with_raw_inputs() {
        let traj = linear_system(300, 0.1);
        let filter = FilterSpec::from_t_gw(0.5); // 5 samples
        let f = filtered_pairs(&traj, &filter, None, 1).unwrap();
        assert_eq!(f.times.len(), 296);
        assert!((f.times[0] - 0.2).abs() < 1e-12);
        assert_eq!(f.y.row(0).to_vec(), traj.sample(2)[3..6].to_vec());
        let mean_z1: f64 = (0..5).map(|i| traj.sample(i)[6]).sum::<f64>() / 5.0;
        assert!((f.z[[0, 0]] - mean_z1).abs() < 1e-15);
    }

    #[test]
    fn span_longer_than_record_is_rejected() {
        let traj = linear_system(100, 0.1);
        assert!(matches!(unfiltered_pairs(&traj, Some(50.0), 1), Err(Error::InsufficientData(_))));
        assert!(matches!(
            filtered_pairs(&traj, &FilterSpec::from_t_gw(0.5), Some(9.9), 1),
            Err(Error::InsufficientData(_))
        ));
        assert!(unfiltered_pairs(&traj.select(&[0, 1, 2]).unwrap(), None, 1).is_err());
    }
}
