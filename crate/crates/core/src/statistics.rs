//! Lobe transitions and sojourn-time statistics of the `y3` signal.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::Regime;
use crate::trajectory::Trajectory;

/// Default lobe threshold for the high-low-frequency regime.
pub const HLF_Y_B: f64 = 0.2;
/// Default lobe threshold for the slow regime, whose `y3` swings are
/// roughly four times smaller.
pub const SLOW_Y_B: f64 = 0.05;
pub const DEFAULT_BIN_DAYS: f64 = 5.0;
pub const DEFAULT_MIN_COUNT: f64 = 5.0;
/// Sojourns shorter than this form a separate population of quick
/// back-and-forth switches and are left out of the tail fit.
pub const DEFAULT_FIT_FROM_DAYS: f64 = 10.0;

/// Thresholds `y_b` and `y_a = -y_b` on one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobeSpec {
    pub y_b: f64,
    /// Component index within the series' trajectory (5 = `y3` of a full
    /// state, 2 = `y3` of a closure run).
    pub component: usize,
}

impl LobeSpec {
    pub fn new(y_b: f64, component: usize) -> Result<Self> {
        if !(y_b > 0.0) || !y_b.is_finite() {
            return Err(Error::InvalidParams(format!("lobe threshold must be positive, got {y_b}")));
        }
        Ok(LobeSpec { y_b, component })
    }

    pub fn for_regime(regime: Regime, component: usize) -> Self {
        let y_b = match regime {
            Regime::Hlf => HLF_Y_B,
            Regime::Slow => SLOW_Y_B,
        };
        LobeSpec { y_b, component }
    }

    pub fn y_a(&self) -> f64 {
        -self.y_b
    }

    /// `y3` index for a trajectory with this many components.
    pub fn y3_index(n_components: usize) -> Result<usize> {
        match n_components {
            9 => Ok(5),
            3 | 6 => Ok(2),
            1 => Ok(0),
            n => Err(Error::Dimension { expected: 9, got: n }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lobe {
    /// `y3 < 0`
    Left,
    /// `y3 > 0`
    Right,
}

impl fmt::Display for Lobe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Lobe::Left => "left",
            Lobe::Right => "right",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SojournRecord {
    pub lobe: Lobe,
    pub t_enter: f64,
    pub t_exit: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub time: f64,
    /// Lobe entered.
    pub into: Lobe,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transitions {
    pub transitions: Vec<Transition>,
    /// Complete sojourns between consecutive transitions. The censored
    /// stretches before the first and after the last transition are
    /// left out.
    pub records: Vec<SojournRecord>,
    pub t_start: f64,
    pub t_end: f64,
}

impl Transitions {
    pub fn times(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.time).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Max,
    Min,
}

/// Interior local extrema by strict neighbour comparison. A plateau that
/// is strictly higher (lower) than both neighbouring values counts once,
/// at its first sample.
pub fn local_extrema(s: &[f64]) -> Vec<(usize, ExtremumKind)> {
    let mut out = Vec::new();
    let n = s.len();
    let mut i = 1;
    while i + 1 < n {
        let mut j = i;
        while j + 1 < n && s[j + 1] == s[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        if s[i - 1] < s[i] && s[j + 1] < s[i] {
            out.push((i, ExtremumKind::Max));
        } else if s[i - 1] > s[i] && s[j + 1] > s[i] {
            out.push((i, ExtremumKind::Min));
        }
        i = j + 1;
    }
    out
}

/// Finds lobe transitions in a uniformly sampled series.
///
/// Only maxima above `y_b` and minima below `y_a` count. When such a
/// maximum is immediately followed by such a minimum, the transition
/// happens the first time the series goes below zero in between (and
/// symmetrically for a minimum followed by a maximum). The crossing time is
/// linearly interpolated between the bracketing samples.
pub fn detect_transitions(series: &[f64], t0: f64, dt: f64, spec: &LobeSpec) -> Result<Transitions> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParams(format!("sample interval must be positive, got {dt}")));
    }
    let t_end = if series.is_empty() { t0 } else { t0 + dt * (series.len() - 1) as f64 };
    let armed: Vec<(usize, ExtremumKind)> = local_extrema(series)
        .into_iter()
        .filter(|&(i, k)| match k {
            ExtremumKind::Max => series[i] > spec.y_b,
            ExtremumKind::Min => series[i] < spec.y_a(),
        })
        .collect();
    let mut transitions = Vec::new();
    for pair in armed.windows(2) {
        let ((i0, k0), (i1, k1)) = (pair[0], pair[1]);
        if k0 == k1 {
            continue;
        }
        let downward = k0 == ExtremumKind::Max;
        let crossed = |v: f64| if downward { v < 0.0 } else { v > 0.0 };
        let k = (i0 + 1..=i1).find(|&k| crossed(series[k])).expect("armed extrema straddle zero");
        let (a, b) = (series[k - 1], series[k]);
        let time = t0 + dt * ((k - 1) as f64 + a / (a - b));
        let into = if downward { Lobe::Left } else { Lobe::Right };
        transitions.push(Transition { time, into });
    }
    let records = transitions
        .windows(2)
        .map(|w| SojournRecord { lobe: w[0].into, t_enter: w[0].time, t_exit: w[1].time, duration: w[1].time - w[0].time })
        .collect();
    Ok(Transitions { transitions, records, t_start: t0, t_end })
}

/// [`detect_transitions`] on one component of a trajectory.
pub fn trajectory_transitions(traj: &Trajectory, spec: &LobeSpec) -> Result<Transitions> {
    if spec.component >= traj.n_components() {
        return Err(Error::Dimension { expected: spec.component + 1, got: traj.n_components() });
    }
    detect_transitions(&traj.component(spec.component), traj.t0(), traj.dt(), spec)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    /// Bin `k` covers `[k w, (k + 1) w)`.
    pub centers: Vec<f64>,
    pub counts: Vec<f64>,
}

impl Histogram {
    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Histogram {
        Histogram { counts: self.counts.iter().map(|c| c * factor).collect(), ..self.clone() }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,count\n");
        for (c, n) in self.centers.iter().zip(&self.counts) {
            out.push_str(&format!("{c},{n}\n"));
        }
        out
    }
}

/// Pools both lobes into one duration histogram.
pub fn sojourn_histogram(records: &[SojournRecord], bin_width: f64) -> Result<Histogram> {
    if !(bin_width > 0.0) || !bin_width.is_finite() {
        return Err(Error::InvalidParams(format!("bin width must be positive, got {bin_width}")));
    }
    if records.is_empty() {
        return Err(Error::InsufficientData("no sojourn records".into()));
    }
    let max = max_sojourn(records);
    let n_bins = (max / bin_width).floor() as usize + 1;
    let mut counts = vec![0.0; n_bins];
    for r in records {
        counts[((r.duration / bin_width).floor() as usize).min(n_bins - 1)] += 1.0;
    }
    let centers = (0..n_bins).map(|k| (k as f64 + 0.5) * bin_width).collect();
    Ok(Histogram { bin_width, centers, counts })
}

/// `f(t) = a exp(b t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpFit {
    pub a: f64,
    pub b: f64,
    /// Smallest and largest bin centre used.
    pub range: (f64, f64),
    pub n_bins: usize,
    /// Coefficient of determination of the log-linear fit.
    pub r2: f64,
}

impl ExpFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.a * (self.b * t).exp()
    }
}

/// Which histogram bins enter the exponential fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub min_count: f64,
    /// Only bins whose lower edge is at or beyond this duration.
    pub from_days: f64,
}

impl FitOptions {
    /// Every nonzero bin.
    pub fn all_nonzero() -> Self {
        FitOptions { min_count: 0.0, from_days: 0.0 }
    }
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions { min_count: DEFAULT_MIN_COUNT, from_days: DEFAULT_FIT_FROM_DAYS }
    }
}

/// Least squares of `ln(count)` against bin centre over the nonzero bins
/// selected by `opts`.
pub fn fit_exponential(hist: &Histogram, opts: &FitOptions) -> Result<ExpFit> {
    let half = 0.5 * hist.bin_width;
    let (t, c): (Vec<f64>, Vec<f64>) = hist
        .centers
        .iter()
        .zip(&hist.counts)
        .filter(|(&t, &n)| n > 0.0 && n >= opts.min_count && t - half >= opts.from_days - 1e-9 * half)
        .map(|(&t, &n)| (t, n))
        .unzip();
    fit_log_linear(&t, &c)
}

pub fn fit_log_linear(t: &[f64], counts: &[f64]) -> Result<ExpFit> {
    let n = t.len();
    if n < 3 || counts.len() != n {
        return Err(Error::TooFewBins(n));
    }
    let logs: Vec<f64> = counts.iter().map(|c| c.ln()).collect();
    let tm = t.iter().sum::<f64>() / n as f64;
    let lm = logs.iter().sum::<f64>() / n as f64;
    let stt: f64 = t.iter().map(|v| (v - tm).powi(2)).sum();
    let stl: f64 = t.iter().zip(&logs).map(|(v, l)| (v - tm) * (l - lm)).sum();
    let sll: f64 = logs.iter().map(|l| (l - lm).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(Error::TooFewBins(1));
    }
    let b = stl / stt;
    let intercept = lm - b * tm;
    let sse: f64 = t.iter().zip(&logs).map(|(v, l)| (l - intercept - b * v).powi(2)).sum();
    let r2 = if sll > 0.0 { 1.0 - sse / sll } else { 1.0 };
    let range = (t.iter().cloned().fold(f64::INFINITY, f64::min), t.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    Ok(ExpFit { a: intercept.exp(), b, range, n_bins: n, r2 })
}

/// Longest duration; 0 for no records.
pub fn max_sojourn(records: &[SojournRecord]) -> f64 {
    records.iter().map(|r| r.duration).fold(0.0, f64::max)
}

pub fn records_csv(records: &[SojournRecord]) -> String {
    let mut out = String::from("lobe,t_enter,t_exit,duration\n");
    for r in records {
        out.push_str(&format!("{},{},{},{}\n", r.lobe, r.t_enter, r.t_exit, r.duration));
    }
    out
}

/// Headline numbers of one lobe analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct LobeSummary {
    pub y_b: f64,
    pub span_days: f64,
    pub n_transitions: usize,
    pub n_records: usize,
    pub max_sojourn: f64,
    pub fit: Option<ExpFit>,
}

impl LobeSummary {
    pub fn new(spec: &LobeSpec, tr: &Transitions, fit: Option<ExpFit>) -> Self {
        LobeSummary {
            y_b: spec.y_b,
            span_days: tr.t_end - tr.t_start,
            n_transitions: tr.transitions.len(),
            n_records: tr.records.len(),
            max_sojourn: max_sojourn(&tr.records),
            fit,
        }
    }

    pub fn to_text(&self) -> String {
        let mut w = crate::kv::KvWriter::new();
        w.entry("y_b", self.y_b)
            .entry("span_days", self.span_days)
            .entry("transitions", self.n_transitions)
            .entry("sojourns", self.n_records)
            .entry("max_sojourn_days", self.max_sojourn);
        if let Some(f) = &self.fit {
            w.entry("fit_a", f.a)
                .entry("fit_b_per_day", f.b)
                .entry("fit_r2", f.r2)
                .entry("fit_bins", f.n_bins)
                .entry("fit_from_days", f.range.0)
                .entry("fit_to_days", f.range.1);
        }
        w.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> LobeSpec {
        LobeSpec::new(0.2, 0).unwrap()
    }

    #[test]
    fn extrema_and_plateaus() {
        let s = [0.0, 1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 0.5, 0.5];
        assert_eq!(local_extrema(&s), vec![(1, ExtremumKind::Max), (5, ExtremumKind::Min)]);
        // a shelf is not an extremum
        assert!(local_extrema(&[0.0, 1.0, 1.0, 2.0]).is_empty());
        assert!(local_extrema(&[1.0, 0.0]).is_empty());
    }

    #[test]
    fn square_wave_gives_equal_sojourns() {
        // +1 for 10 days, -1 for 10 days, sampled every 0.5 day with
        // short linear ramps through zero
        let dt = 0.5;
        let s: Vec<f64> = (0..400)
            .map(|i| {
                let t = i as f64 * dt;
                let phase = t % 20.0;
                let tri = if phase < 10.0 { 1.0 } else { -1.0 };
                // bump inside each half period so every plateau has one strict extremum
                let bump = 0.1 * (-((phase % 10.0 - 5.0) / 1.0).powi(2)).exp();
                tri * (1.0 + bump)
            })
            .collect();
        let tr = detect_transitions(&s, 0.0, dt, &spec()).unwrap();
        assert!(tr.records.len() >= 15);
        for r in &tr.records {
            assert!((r.duration - 10.0).abs() < 1e-9, "{r:?}");
        }
        assert!(tr.records.windows(2).all(|w| w[0].lobe != w[1].lobe));
    }

    #[test]
    fn below_threshold_never_arms() {
        let s: Vec<f64> = (0..1000).map(|i| 0.15 * (i as f64 * 0.1).sin()).collect();
        let tr = detect_transitions(&s, 0.0, 0.1, &spec()).unwrap();
        assert!(tr.transitions.is_empty() && tr.records.is_empty());
    }

    #[test]
    fn same_type_extrema_do_not_transition() {
        // two armed maxima separated by a dip that crosses zero
        let s = [0.0, 0.5, 0.1, -0.1, 0.1, 0.6, 0.0, -0.5, 0.0];
        let tr = detect_transitions(&s, 0.0, 1.0, &spec()).unwrap();
        assert_eq!(tr.transitions.len(), 1);
        // crossing between samples 5 (0.6) and 7 (-0.5): first value below zero is sample 7
        assert!((tr.transitions[0].time - 6.0).abs() < 1e-12);
        assert_eq!(tr.transitions[0].into, Lobe::Left);
    }

    #[test]
    fn crossing_interpolated() {
        let s = [0.0, 0.4, 0.3, -0.1, -0.5, 0.0];
        let tr = detect_transitions(&s, 10.0, 2.0, &spec()).unwrap();
        assert_eq!(tr.transitions.len(), 1);
        assert!((tr.transitions[0].time - (10.0 + 2.0 * (2.0 + 0.75))).abs() < 1e-12);
    }

    #[test]
    fn histogram_conserves_counts() {
        let recs: Vec<SojournRecord> = [1.0, 4.9, 5.0, 12.0, 12.5]
            .iter()
            .map(|&d| SojournRecord { lobe: Lobe::Left, t_enter: 0.0, t_exit: d, duration: d })
            .collect();
        let h = sojourn_histogram(&recs, 5.0).unwrap();
        assert_eq!(h.counts, vec![2.0, 1.0, 2.0]);
        assert_eq!(h.centers, vec![2.5, 7.5, 12.5]);
        assert_eq!(h.total(), 5.0);
        assert!(sojourn_histogram(&[], 5.0).is_err());
        assert_eq!(max_sojourn(&recs[..1]), 1.0);
    }

    #[test]
    fn exact_exponential_recovered() {
        let centers: Vec<f64> = (0..20).map(|k| 2.5 + 5.0 * k as f64).collect();
        let counts: Vec<f64> = centers.iter().map(|t| 100.0 * (-0.05 * t).exp()).collect();
        let h = Histogram { bin_width: 5.0, centers, counts };
        let f = fit_exponential(&h, &FitOptions::all_nonzero()).unwrap();
        assert!((f.a - 100.0).abs() < 1e-8 && (f.b + 0.05).abs() < 1e-8, "{f:?}");
        let g = fit_exponential(&h.scaled(7.0), &FitOptions::all_nonzero()).unwrap();
        assert!((g.a / f.a - 7.0).abs() < 1e-10 && (g.b - f.b).abs() < 1e-12);
        let strict = FitOptions { min_count: 1e9, from_days: 0.0 };
        assert!(matches!(fit_exponential(&h, &strict), Err(Error::TooFewBins(0))));
        // the default skips the first two 5-day bins
        let tail = fit_exponential(&h, &FitOptions::default()).unwrap();
        assert_eq!(tail.range.0, 12.5);
        assert!((tail.b + 0.05).abs() < 1e-8);
    }

    #[test]
    fn summary_text() {
        let tr = Transitions { t_end: 10.0, ..Default::default() };
        let text = LobeSummary::new(&spec(), &tr, None).to_text();
        assert!(text.contains("transitions = 0") || text.contains("transitions=0"), "{text}");
    }
}
