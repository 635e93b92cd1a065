//! The nine-variable Lorenz (1980) truncation of the primitive equations.
//!
//! The state is three triples: divergent-flow amplitudes `x`, rotational
//! amplitudes `y` and thermal amplitudes `z`. Each equation is written once
//! and applied to the three cyclic index triples `(i, j, k)`.
//!
//! Flattened states always use the order `(x1, x2, x3, y1, y2, y3, z1, z2, z3)`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kv::{KvDoc, KvWriter};

/// Cyclic index triples `(i, j, k)` (zero-based).
pub const CYCLIC: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

/// Components in a flat state.
pub const STATE_DIM: usize = 9;

const HLF_PRESET: &str = include_str!("../presets/hlf.params");
const SLOW_PRESET: &str = include_str!("../presets/slow.params");

/// Coefficients of the model.
///
/// `time_unit_days` is the length in days of one nondimensional model time
/// unit. It is stored under the key `dt_model_days` in preset files.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub c: f64,
    pub nu0: f64,
    pub kappa0: f64,
    pub g0: f64,
    pub forcing: [f64; 3],
    pub topography: [f64; 3],
    pub time_unit_days: f64,
}

/// Named parameter presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `F1 = 0.3027`: slow motion punctuated by bursts of inertia-gravity waves.
    Hlf,
    /// `F1 = 0.0697`: slow chaotic regime without fast oscillations.
    Slow,
}

impl Regime {
    pub fn params(self) -> ModelParams {
        let text = match self {
            Regime::Hlf => HLF_PRESET,
            Regime::Slow => SLOW_PRESET,
        };
        ModelParams::from_preset_str(text).expect("bundled preset is valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            Regime::Hlf => "hlf",
            Regime::Slow => "slow",
        }
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hlf" => Ok(Regime::Hlf),
            "slow" => Ok(Regime::Slow),
            other => Err(Error::Config(format!("unknown regime `{other}` (expected hlf or slow)"))),
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let all = self
            .a
            .iter()
            .chain(&self.b)
            .chain(&self.forcing)
            .chain(&self.topography)
            .chain([&self.c, &self.nu0, &self.kappa0, &self.g0, &self.time_unit_days]);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("non-finite coefficient".into()));
        }
        if self.a.iter().any(|&a| a <= 0.0) {
            return Err(Error::InvalidParams("a_i must be strictly positive".into()));
        }
        if self.time_unit_days <= 0.0 {
            return Err(Error::InvalidParams("dt_model_days must be positive".into()));
        }
        if self.nu0 < 0.0 || self.kappa0 < 0.0 {
            return Err(Error::InvalidParams("damping coefficients must be non-negative".into()));
        }
        Ok(())
    }

    /// Parses the flat preset format. Every key is required and unknown keys
    /// are rejected.
    pub fn from_preset_str(text: &str) -> Result<Self> {
        let mut doc = KvDoc::parse(text)?;
        let p = Self::from_doc(&mut doc, "")?;
        doc.reject_unknown()?;
        Ok(p)
    }

    pub fn from_preset_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_preset_str(&std::fs::read_to_string(path)?)
    }

    pub(crate) fn from_doc(doc: &mut KvDoc, prefix: &str) -> Result<Self> {
        let mut get = |k: &str| doc.require::<f64>(&format!("{prefix}{k}"));
        let p = ModelParams {
            a: [get("a1")?, get("a2")?, get("a3")?],
            b: [get("b1")?, get("b2")?, get("b3")?],
            c: get("c")?,
            nu0: get("nu0")?,
            kappa0: get("kappa0")?,
            g0: get("g0")?,
            forcing: [get("F1")?, get("F2")?, get("F3")?],
            topography: [get("h1")?, get("h2")?, get("h3")?],
            time_unit_days: get("dt_model_days")?,
        };
        p.validate()?;
        Ok(p)
    }

    pub(crate) fn write_entries(&self, w: &mut KvWriter) {
        for (i, v) in self.a.iter().enumerate() {
            w.entry(&format!("a{}", i + 1), v);
        }
        for (i, v) in self.b.iter().enumerate() {
            w.entry(&format!("b{}", i + 1), v);
        }
        w.entry("c", self.c)
            .entry("nu0", self.nu0)
            .entry("kappa0", self.kappa0)
            .entry("g0", self.g0);
        for (i, v) in self.forcing.iter().enumerate() {
            w.entry(&format!("F{}", i + 1), v);
        }
        for (i, v) in self.topography.iter().enumerate() {
            w.entry(&format!("h{}", i + 1), v);
        }
        w.entry("dt_model_days", self.time_unit_days);
    }

    pub fn to_preset_string(&self) -> String {
        let mut w = KvWriter::new();
        self.write_entries(&mut w);
        w.finish()
    }

    /// Converts a duration in days into model time units.
    pub fn days_to_model(&self, days: f64) -> f64 {
        days / self.time_unit_days
    }
}

/// One model state.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct State9 {
    pub x: [f64; 3],
    pub y: [f64; 3],
    pub z: [f64; 3],
}

impl State9 {
    /// The documented starting point used when no initial condition is given.
    pub const SEED: State9 = State9 {
        x: [0.0; 3],
        y: [0.1, -0.1, 0.2],
        z: [0.0; 3],
    };

    pub fn to_flat(&self) -> [f64; STATE_DIM] {
        let mut s = [0.0; STATE_DIM];
        s[0..3].copy_from_slice(&self.x);
        s[3..6].copy_from_slice(&self.y);
        s[6..9].copy_from_slice(&self.z);
        s
    }

    pub fn from_flat(s: &[f64; STATE_DIM]) -> Self {
        State9 {
            x: [s[0], s[1], s[2]],
            y: [s[3], s[4], s[5]],
            z: [s[6], s[7], s[8]],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_flat().iter().all(|v| v.is_finite())
    }
}

/// Tendency of the full model in model time units. No input checks; the
/// integrator screens states for blow-up itself.
#[inline]
pub fn tendency(s: &[f64; STATE_DIM], p: &ModelParams) -> [f64; STATE_DIM] {
    let (x, y, z) = (&s[0..3], &s[3..6], &s[6..9]);
    let (a, b, c, h) = (&p.a, &p.b, p.c, &p.topography);
    let mut out = [0.0; STATE_DIM];
    for &(i, j, k) in &CYCLIC {
        out[i] = (-p.nu0 * a[i] * a[i] * x[i] - c * (a[i] - a[k]) * x[j] * y[k]
            + c * (a[i] - a[j]) * y[j] * x[k]
            + a[i] * b[i] * x[j] * x[k]
            - 2.0 * c * c * y[j] * y[k]
            + a[i] * (y[i] - z[i]))
            / a[i];
        out[6 + i] = p.g0 * a[i] * x[i] - b[k] * x[j] * (z[k] - h[k]) - b[j] * (z[j] - h[j]) * x[k]
            + c * y[j] * (z[k] - h[k])
            - c * (z[j] - h[j]) * y[k]
            - p.kappa0 * a[i] * z[i]
            + p.forcing[i];
    }
    let xs = [x[0], x[1], x[2]];
    let ys = [y[0], y[1], y[2]];
    out[3..6].copy_from_slice(&y_tendency(&ys, &xs, p));
    out
}

#[inline]
pub(crate) fn y_tendency(y: &[f64; 3], x: &[f64; 3], p: &ModelParams) -> [f64; 3] {
    let (a, b, c) = (&p.a, &p.b, p.c);
    let mut out = [0.0; 3];
    for &(i, j, k) in &CYCLIC {
        out[i] = (-a[k] * b[k] * x[j] * y[k] - a[j] * b[j] * y[j] * x[k] + c * (a[k] - a[j]) * y[j] * y[k]
            - a[i] * x[i]
            - p.nu0 * a[i] * a[i] * y[i])
            / a[i];
    }
    out
}

/// Right-hand side `ds/dt` of the full model, in model time units.
pub fn l80_rhs(s: &State9, p: &ModelParams) -> Result<State9> {
    if !s.is_finite() {
        return Err(Error::NonFiniteState);
    }
    Ok(State9::from_flat(&tendency(&s.to_flat(), p)))
}

/// Rotational (`y`) tendency with the divergent amplitudes `x` supplied
/// from outside, e.g. by a parameterization.
pub fn y_equation_rhs(y: &[f64; 3], x: &[f64; 3], p: &ModelParams) -> Result<[f64; 3]> {
    if y.iter().chain(x).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    Ok(y_tendency(y, x, p))
}

/// The quadratic invariant `sum_i a_i y_i^2` of the inviscid, uncoupled
/// rotational equation.
pub fn y_energy(y: &[f64], p: &ModelParams) -> f64 {
    p.a.iter().zip(y).map(|(a, v)| a * v * v).sum()
}
