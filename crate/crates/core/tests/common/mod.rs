#![allow(dead_code)]

use l80::neural::{mlp_gradient, Affine, Arch, MlpParams};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Single pass over the samples with an explicit state machine: slope sign
/// tracking finds extrema (a plateau is dated at its first sample), the
/// last armed extremum is remembered, and the first sign change after it
/// is kept as the pending crossing. Returns transition times.
pub fn brute_force_transitions(s: &[f64], t0: f64, dt: f64, y_b: f64) -> Vec<f64> {
    #[derive(PartialEq, Clone, Copy)]
    enum Armed {
        None,
        High,
        Low,
    }
    let mut out = Vec::new();
    let mut armed = Armed::None;
    let mut crossing: Option<f64> = None;
    let mut trend = 0i8;
    let mut plateau_start = 0usize;
    for i in 1..s.len() {
        let d = s[i] - s[i - 1];
        if d != 0.0 {
            let p = plateau_start;
            let new_armed = if d < 0.0 && trend > 0 && s[p] > y_b {
                Armed::High
            } else if d > 0.0 && trend < 0 && s[p] < -y_b {
                Armed::Low
            } else {
                Armed::None
            };
            if new_armed != Armed::None {
                if armed != Armed::None && armed != new_armed {
                    out.push(crossing.expect("opposite armed extrema imply a sign change"));
                }
                armed = new_armed;
                crossing = None;
            }
            trend = if d > 0.0 { 1 } else { -1 };
            plateau_start = i;
        }
        let crossed = match armed {
            Armed::High => s[i] < 0.0,
            Armed::Low => s[i] > 0.0,
            Armed::None => false,
        };
        if crossed && crossing.is_none() {
            let (a, b) = (s[i - 1], s[i]);
            crossing = Some(t0 + dt * ((i - 1) as f64 + a / (a - b)));
        }
    }
    out
}

/// Smooth random series: a few random sinusoids, sometimes quantized so
/// plateaus appear.
pub fn synthetic_series(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(50..2000);
    let k = rng.random_range(1..5);
    let waves: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| (rng.random_range(0.05..0.6), rng.random_range(0.002..0.2), rng.random_range(0.0..6.3)))
        .collect();
    let noise = if rng.random_bool(0.5) { rng.random_range(0.0..0.05) } else { 0.0 };
    let quantum = if rng.random_bool(0.3) { Some(rng.random_range(0.01..0.1)) } else { None };
    (0..n)
        .map(|i| {
            let t = i as f64;
            let mut v: f64 = waves.iter().map(|(a, f, ph)| a * (f * t + ph).sin()).sum();
            v += noise * rng.random_range(-1.0..1.0);
            if let Some(q) = quantum {
                v = (v / q).round() * q;
            }
            v
        })
        .collect()
}

pub fn random_net(seed: u64, arch: Arch, n_in: usize, n_out: usize) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = MlpParams::glorot(arch, n_in, n_out, &mut rng);
    for layer in m.layers_mut() {
        layer.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
    }
    m.input = Affine {
        shift: (0..n_in).map(|_| rng.random_range(-0.3..0.3)).collect(),
        scale: (0..n_in).map(|_| rng.random_range(0.5..2.0)).collect(),
    };
    m.output = Affine {
        shift: (0..n_out).map(|_| rng.random_range(-0.3..0.3)).collect(),
        scale: (0..n_out).map(|_| rng.random_range(0.5..2.0)).collect(),
    };
    m
}

pub fn random_batch(seed: u64, rows: usize, cols: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

pub fn sse(m: &MlpParams, x: &Array2<f64>, t: &Array2<f64>) -> f64 {
    let p = m.predict(x.view()).unwrap();
    (t - &p).iter().map(|r| r * r).sum()
}

/// Central differences with step 1e-6 against the analytic gradient.
/// Returns the number of entries checked and the worst mismatch.
pub fn fd_check(m: &MlpParams, x: &Array2<f64>, t: &Array2<f64>) -> (usize, f64) {
    let g = mlp_gradient(m, x.view(), t.view()).unwrap().flat();
    let theta = m.flat_params();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let mut probe = m.clone();
        let mut tp = theta.clone();
        tp[i] = theta[i] + h;
        probe.set_flat_params(&tp).unwrap();
        let fp = sse(&probe, x, t);
        tp[i] = theta[i] - h;
        probe.set_flat_params(&tp).unwrap();
        let fm = sse(&probe, x, t);
        let fd = (fp - fm) / (2.0 * h);
        // absolute floor for entries that vanish analytically
        let err = (fd - g[i]).abs() / g[i].abs().max(fd.abs()).max(1e-3);
        worst = worst.max(err);
    }
    (theta.len(), worst)
}
