//! Offline quality measures for parameterizations and closure runs.

use crate::error::{Error, Result};
use crate::neural::Parameterization;
use crate::signal::power_spectrum;
use crate::trajectory::Trajectory;

/// Column range of `y1..y3` in a full (9), closure (3) or closure-with-x
/// (6) trajectory.
pub fn y_columns(n_components: usize) -> Result<[usize; 3]> {
    match n_components {
        9 => Ok([3, 4, 5]),
        3 | 6 => Ok([0, 1, 2]),
        n => Err(Error::Dimension { expected: 9, got: n }),
    }
}

/// `E_j(t) = x_j(t) - map_j(y(t))` on unfiltered data.
#[derive(Debug, Clone, PartialEq)]
pub struct HfResidual {
    pub times: Vec<f64>,
    pub residual: [Vec<f64>; 3],
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl HfResidual {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E1,E2,E3\n");
        for (i, t) in self.times.iter().enumerate() {
            out.push_str(&format!("{t},{},{},{}\n", self.residual[0][i], self.residual[1][i], self.residual[2][i]));
        }
        out
    }
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt())
}

pub fn hf_residual(traj: &Trajectory, map: &Parameterization) -> Result<HfResidual> {
    if traj.n_components() != 9 {
        return Err(Error::Dimension { expected: 9, got: traj.n_components() });
    }
    if traj.is_empty() {
        return Err(Error::InsufficientData("empty trajectory".into()));
    }
    let mut eval = map.evaluator();
    let mut residual: [Vec<f64>; 3] = Default::default();
    for s in traj.samples() {
        let est = eval.x(&[s[3], s[4], s[5]]);
        for j in 0..3 {
            residual[j].push(s[j] - est[j]);
        }
    }
    let stats = [mean_std(&residual[0]), mean_std(&residual[1]), mean_std(&residual[2])];
    Ok(HfResidual {
        times: (0..traj.len()).map(|i| traj.time(i)).collect(),
        mean: stats.map(|s| s.0),
        std: stats.map(|s| s.1),
        residual,
    })
}

/// Frequency band in cycles per day, both ends inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub fmin: f64,
    pub fmax: f64,
}

impl Band {
    /// Periods between `short` and `long` days.
    pub fn periods(short: f64, long: f64) -> Self {
        Band { fmin: 1.0 / long, fmax: 1.0 / short }
    }

    /// Frequencies within 10% of `1 / t_gw`.
    pub fn around_t_gw(t_gw: f64) -> Self {
        Band { fmin: 0.9 / t_gw, fmax: 1.1 / t_gw }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDeficit {
    pub band: Band,
    /// Closure band power over truth band power, per `y` component.
    pub ratio: [f64; 3],
    pub truth_power: [f64; 3],
    pub closure_power: [f64; 3],
}

impl SpectralDeficit {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("component,fmin,fmax,truth_power,closure_power,ratio\n");
        for j in 0..3 {
            out.push_str(&format!(
                "y{},{},{},{},{},{}\n",
                j + 1,
                self.band.fmin,
                self.band.fmax,
                self.truth_power[j],
                self.closure_power[j],
                self.ratio[j]
            ));
        }
        out
    }
}

/// Band power of each closure `y` component relative to the truth's.
/// Both periodograms are normalized to the series variance, so runs of
/// different length compare directly.
pub fn spectral_deficit(truth: &Trajectory, closure: &Trajectory, band: Band) -> Result<SpectralDeficit> {
    let (ct, cc) = (y_columns(truth.n_components())?, y_columns(closure.n_components())?);
    if (truth.dt() - closure.dt()).abs() > 1e-9 * truth.dt() {
        return Err(Error::InvalidParams(format!("sample intervals differ: {} vs {}", truth.dt(), closure.dt())));
    }
    let nyquist = 0.5 / truth.dt();
    if !(band.fmin >= 0.0) || !(band.fmax > band.fmin) || band.fmax > nyquist {
        return Err(Error::InvalidParams(format!(
            "band [{}, {}] per day must lie within [0, {nyquist}]",
            band.fmin, band.fmax
        )));
    }
    let mut out = SpectralDeficit { band, ratio: [0.0; 3], truth_power: [0.0; 3], closure_power: [0.0; 3] };
    for j in 0..3 {
        let pt = power_spectrum(&truth.component(ct[j]), truth.dt())?.band_power(band.fmin, band.fmax);
        let pc = power_spectrum(&closure.component(cc[j]), closure.dt())?.band_power(band.fmin, band.fmax);
        out.truth_power[j] = pt;
        out.closure_power[j] = pc;
        out.ratio[j] = pc / pt;
    }
    Ok(out)
}

/// Half the peak-to-peak range.
pub fn amplitude(series: &[f64]) -> f64 {
    let max = series.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = series.iter().cloned().fold(f64::INFINITY, f64::min);
    0.5 * (max - min)
}

/// Share of the variance in the strongest spectral line. The line is the
/// largest periodogram bin together with its two neighbours, which absorb
/// the leakage of a frequency falling between bins.
pub fn top_peak_fraction(series: &[f64], dt: f64) -> Result<f64> {
    let s = power_spectrum(series, dt)?;
    let total = s.total();
    if !(total > 0.0) {
        return Ok(0.0);
    }
    let (k, _) = s.power.iter().enumerate().skip(1).fold((1, f64::NEG_INFINITY), |m, (i, p)| if *p > m.1 { (i, *p) } else { m });
    let line: f64 = s.power[k.saturating_sub(1).max(1)..(k + 2).min(s.power.len())].iter().sum();
    Ok(line / total)
}

/// Equal-area sampling of the sphere `|y| = r`: `n_lat` bands of equal
/// height in `y3`, `n_lon` points per band.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereGrid {
    pub r: f64,
    pub n_lat: usize,
    pub n_lon: usize,
    pub points: Vec<[f64; 3]>,
}

pub const DEFAULT_SPHERE_RESOLUTION: usize = 200;

impl SphereGrid {
    pub fn new(r: f64, n_lat: usize, n_lon: usize) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::InvalidParams(format!("sphere radius must be non-negative, got {r}")));
        }
        if n_lat == 0 || n_lon == 0 {
            return Err(Error::InvalidParams("sphere grid needs at least one band and one point".into()));
        }
        if r == 0.0 {
            return Ok(SphereGrid { r, n_lat, n_lon, points: vec![[0.0; 3]] });
        }
        let mut points = Vec::with_capacity(n_lat * n_lon);
        for k in 0..n_lat {
            let u = 1.0 - 2.0 * (k as f64 + 0.5) / n_lat as f64;
            let rho = (1.0 - u * u).sqrt();
            for m in 0..n_lon {
                let phi = std::f64::consts::TAU * (m as f64 + 0.5) / n_lon as f64;
                points.push([r * rho * phi.cos(), r * rho * phi.sin(), r * u]);
            }
        }
        Ok(SphereGrid { r, n_lat, n_lon, points })
    }

    pub fn with_default_resolution(r: f64) -> Result<Self> {
        Self::new(r, DEFAULT_SPHERE_RESOLUTION, DEFAULT_SPHERE_RESOLUTION)
    }

    /// Root-mean-square `|y|` of a trajectory.
    pub fn rms_radius(traj: &Trajectory) -> Result<f64> {
        let cols = y_columns(traj.n_components())?;
        if traj.is_empty() {
            return Err(Error::InsufficientData("empty trajectory".into()));
        }
        let ss: f64 = traj.samples().map(|s| cols.iter().map(|&c| s[c] * s[c]).sum::<f64>()).sum();
        Ok((ss / traj.len() as f64).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapOutput {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub y1: f64,
    pub y2: f64,
    /// Sign of `y3`: +1 upper, -1 lower hemisphere.
    pub hemisphere: i8,
    pub value: f64,
}

/// Evaluates component `j` of the map's `x` (or `z`) output on every grid
/// point.
pub fn sphere_level_set(map: &Parameterization, output: MapOutput, j: usize, grid: &SphereGrid) -> Result<Vec<SurfacePoint>> {
    if j >= 3 {
        return Err(Error::Dimension { expected: 3, got: j + 1 });
    }
    let mut eval = map.evaluator();
    grid.points
        .iter()
        .map(|y| {
            let v = match output {
                MapOutput::X => eval.x(y),
                MapOutput::Z => eval.z(y).ok_or_else(|| Error::InvalidParams("map has no z output".into()))?,
            };
            Ok(SurfacePoint { y1: y[0], y2: y[1], hemisphere: if y[2] >= 0.0 { 1 } else { -1 }, value: v[j] })
        })
        .collect()
}

pub fn surface_csv(points: &[SurfacePoint]) -> String {
    let mut out = String::from("y1,y2,hemisphere,value\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.y1, p.y2, p.hemisphere, p.value));
    }
    out
}

/// Upward crossings of `y[axis] = level`, returning the other two `y`
/// components (in index order) linearly interpolated at each crossing.
pub fn poincare_section(traj: &Trajectory, axis: usize, level: f64) -> Result<Vec<[f64; 2]>> {
    let cols = y_columns(traj.n_components())?;
    if axis >= 3 {
        return Err(Error::Dimension { expected: 3, got: axis + 1 });
    }
    let others: Vec<usize> = (0..3).filter(|&k| k != axis).map(|k| cols[k]).collect();
    let c = cols[axis];
    let mut out = Vec::new();
    for i in 1..traj.len() {
        let (a, b) = (traj.sample(i - 1), traj.sample(i));
        if a[c] < level && b[c] >= level {
            let w = (level - a[c]) / (b[c] - a[c]);
            out.push([a[others[0]] + w * (b[others[0]] - a[others[0]]), a[others[1]] + w * (b[others[1]] - a[others[1]])]);
        }
    }
    Ok(out)
}

/// Symmetric Hausdorff distance between two planar point sets; infinite
/// when exactly one of them is empty.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    let directed = |p: &[[f64; 2]], q: &[[f64; 2]]| {
        p.iter()
            .map(|u| q.iter().map(|v| (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
            .sqrt()
    };
    directed(a, b).max(directed(b, a))
}
