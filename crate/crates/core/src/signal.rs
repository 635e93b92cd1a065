//! Slow/fast separation of trajectories.
//!
//! The slow part of a series is its centered boxcar average over one
//! gravity-wave period `T_GW`; a boxcar has a zero in its frequency response
//! at exactly the window period, so a wave of that period is removed while
//! slower motion passes almost unchanged. Edges are trimmed, never padded.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::trajectory::Trajectory;

/// `T_GW` implied by a 500-year run spanning about 730000 wave periods.
pub const DEFAULT_T_GW_DAYS: f64 = 500.0 * 365.25 / 730_000.0;

/// Gravity-wave search band: periods strictly shorter than this.
pub const GW_MAX_PERIOD_DAYS: f64 = 1.0;

/// Minimum number of longest-candidate periods a series must span before
/// a spectral peak search is attempted.
pub const MIN_SPAN_PERIODS: f64 = 100.0;

/// Centered moving-average filter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub window_days: f64,
    /// Gravity-wave period the window was derived from.
    pub t_gw_days: f64,
}

impl FilterSpec {
    /// A window of exactly one gravity-wave period.
    pub fn from_t_gw(t_gw_days: f64) -> Self {
        FilterSpec { window_days: t_gw_days, t_gw_days }
    }

    /// Window length in samples: the odd integer nearest to
    /// `window_days / dt` (ties go up).
    pub fn window_samples(&self, dt: f64) -> Result<usize> {
        if !(self.window_days > 0.0) || !(dt > 0.0) {
            return Err(Error::InvalidParams("filter window and sample step must be positive".into()));
        }
        let exact = self.window_days / dt;
        let lower = ((exact - 1.0) / 2.0).floor() * 2.0 + 1.0;
        let n = if exact - lower < lower + 2.0 - exact { lower } else { lower + 2.0 };
        Ok(n.max(1.0) as usize)
    }
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self::from_t_gw(DEFAULT_T_GW_DAYS)
    }
}

/// Centered average over `w` (odd) samples; the output has
/// `series.len() - w + 1` values, output `i` centered on input `i + w/2`.
///
/// Deviations from the centre sample are averaged and added back, so a
/// constant passes bit for bit.
pub fn moving_average_series(series: &[f64], w: usize) -> Result<Vec<f64>> {
    if w % 2 == 0 || w == 0 {
        return Err(Error::InvalidParams(format!("window must be odd, got {w}")));
    }
    if w > series.len() {
        return Err(Error::WindowTooLong { window: w, len: series.len() });
    }
    let inv = 1.0 / w as f64;
    Ok(series
        .windows(w)
        .map(|win| {
            let c = win[w / 2];
            c + win.iter().map(|v| v - c).sum::<f64>() * inv
        })
        .collect())
}

/// Component-wise centered moving average, trimmed to the fully covered
/// samples.
pub fn moving_average(traj: &Trajectory, spec: &FilterSpec) -> Result<Trajectory> {
    let w = spec.window_samples(traj.dt())?;
    if w > traj.len() {
        return Err(Error::WindowTooLong { window: w, len: traj.len() });
    }
    let nc = traj.n_components();
    let n_out = traj.len() - w + 1;
    let inv = 1.0 / w as f64;
    let src = traj.data();
    let mut data = vec![0.0; n_out * nc];
    for (i, out) in data.chunks_exact_mut(nc).enumerate() {
        let centre = &src[(i + w / 2) * nc..(i + w / 2 + 1) * nc];
        for row in src[i * nc..(i + w) * nc].chunks_exact(nc) {
            for ((o, v), c) in out.iter_mut().zip(row).zip(centre) {
                *o += v - c;
            }
        }
        for (o, c) in out.iter_mut().zip(centre) {
            *o = c + *o * inv;
        }
    }
    Trajectory::new(traj.time(w / 2), traj.dt(), nc, data)
}

/// One-sided periodogram.
///
/// `frequencies` are in cycles per day. `power` is normalized so that its
/// sum equals the variance of the series (Parseval), with a rectangular
/// taper: a sinusoid sitting exactly on a bin puts all of its power
/// `A^2 / 2` into that bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }

    /// Power in `fmin <= f <= fmax`.
    pub fn band_power(&self, fmin: f64, fmax: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.power)
            .filter(|(f, _)| **f >= fmin && **f <= fmax)
            .map(|(_, p)| p)
            .sum()
    }

    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    pub fn nyquist(&self) -> f64 {
        self.frequencies.last().copied().unwrap_or(0.0)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_per_day,power\n");
        for (f, p) in self.frequencies.iter().zip(&self.power) {
            out.push_str(&format!("{f},{p}\n"));
        }
        out
    }
}

pub fn power_spectrum(series: &[f64], dt: f64) -> Result<Spectrum> {
    let n = series.len();
    if n < 16 {
        return Err(Error::InsufficientData(format!("power spectrum needs at least 16 samples, got {n}")));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("sample step must be positive, got {dt}")));
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series.iter().map(|v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let half = n / 2;
    let norm = 1.0 / (n as f64 * n as f64);
    let mut power = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        let mirrored = k != 0 && !(n % 2 == 0 && k == half);
        power.push(c.norm_sqr() * norm * if mirrored { 2.0 } else { 1.0 });
    }
    let df = 1.0 / (n as f64 * dt);
    let frequencies = (0..=half).map(|k| k as f64 * df).collect();
    Ok(Spectrum { frequencies, power })
}

/// Dominant gravity-wave period (days) of a nine-component trajectory:
/// the peak of the summed `x`-component periodograms among periods
/// shorter than one day.
///
/// A peak only counts if the band holds at least 0.1% of the `x` variance
/// and the peak bin exceeds ten times the band's median power.
pub fn estimate_t_gw(traj: &Trajectory) -> Result<f64> {
    if traj.n_components() != 9 {
        return Err(Error::Dimension { expected: 9, got: traj.n_components() });
    }
    if traj.span() < MIN_SPAN_PERIODS * GW_MAX_PERIOD_DAYS {
        return Err(Error::InsufficientData(format!(
            "gravity-wave search needs at least {} days, got {}",
            MIN_SPAN_PERIODS * GW_MAX_PERIOD_DAYS,
            traj.span()
        )));
    }
    let mut total: Option<Spectrum> = None;
    for c in 0..3 {
        let s = power_spectrum(&traj.component(c), traj.dt())?;
        total = Some(match total {
            None => s,
            Some(mut acc) => {
                acc.power.iter_mut().zip(&s.power).for_each(|(a, b)| *a += b);
                acc
            }
        });
    }
    let spec = total.expect("three components");
    let band: Vec<(f64, f64)> = spec
        .frequencies
        .iter()
        .zip(&spec.power)
        .filter(|(f, _)| **f > 1.0 / GW_MAX_PERIOD_DAYS)
        .map(|(f, p)| (*f, *p))
        .collect();
    if band.len() < 3 {
        return Err(Error::NoGravityWavePeak);
    }
    let band_total: f64 = band.iter().map(|b| b.1).sum();
    let all = spec.total();
    let (f_peak, p_peak) = band.iter().copied().fold((0.0, -1.0), |m, b| if b.1 > m.1 { b } else { m });
    let mut sorted: Vec<f64> = band.iter().map(|b| b.1).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    if !(all > 0.0) || band_total < 1e-3 * all || p_peak <= 10.0 * median {
        return Err(Error::NoGravityWavePeak);
    }
    Ok(1.0 / f_peak)
}
