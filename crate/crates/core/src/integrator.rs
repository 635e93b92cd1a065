//! Fixed-step classical Runge–Kutta integration.
//!
//! Every stepper here works on fixed-size arrays so the inner loop stays
//! allocation-free over the 10^7–10^8 steps of a multi-decade run.

use crate::error::{Error, Result};
use crate::model::{tendency, ModelParams, State9, STATE_DIM};
use crate::trajectory::Trajectory;

/// Any component beyond this magnitude is treated as divergence.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

/// The production step: 0.75 minutes.
pub const DEFAULT_DT_DAYS: f64 = 0.75 / (24.0 * 60.0);

/// Default recording stride (15 min at the production step).
pub const DEFAULT_STRIDE: usize = 20;

/// One RK4 step of size `dt`.
#[inline]
pub fn rk4_step<const N: usize, F>(rhs: &mut F, s: &[f64; N], dt: f64) -> Result<[f64; N]>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |base: &[f64; N], k: &[f64; N], h: f64| -> [f64; N] {
        let mut out = *base;
        for (o, kv) in out.iter_mut().zip(k) {
            *o += h * kv;
        }
        out
    };
    let k1 = rhs(s)?;
    let k2 = rhs(&axpy(s, &k1, 0.5 * dt))?;
    let k3 = rhs(&axpy(s, &k2, 0.5 * dt))?;
    let k4 = rhs(&axpy(s, &k3, dt))?;
    let mut out = *s;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

fn diverged(s: &[f64]) -> bool {
    s.iter().any(|v| !(v.abs() <= BLOW_UP_THRESHOLD))
}

/// Result of an integration that may have stopped early. On failure `traj`
/// holds every sample recorded before the offending step.
#[derive(Debug)]
pub struct Integration {
    pub traj: Option<Trajectory>,
    pub error: Option<Error>,
}

impl Integration {
    pub fn into_result(self) -> Result<Trajectory> {
        match self.error {
            Some(e) => Err(e),
            None => Ok(self.traj.expect("successful integration has samples")),
        }
    }
}

/// Integrates `ds/dt = rhs(s)` from `s0` with `n_steps` RK4 steps of size
/// `dt`, keeping every `stride`-th state (the initial one included). The
/// returned trajectory starts at `t0 = 0` with sample interval
/// `dt * stride`; it has `n_steps / stride + 1` samples.
pub fn integrate<const N: usize, F>(rhs: F, s0: [f64; N], dt: f64, n_steps: u64, stride: usize) -> Result<Trajectory>
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    integrate_partial(rhs, s0, 0.0, dt, n_steps, stride).into_result()
}

/// Like [`integrate`], but keeps the recorded prefix when the run fails.
pub fn integrate_partial<const N: usize, F>(
    mut rhs: F,
    s0: [f64; N],
    t0: f64,
    dt: f64,
    n_steps: u64,
    stride: usize,
) -> Integration
where
    F: FnMut(&[f64; N]) -> Result<[f64; N]>,
{
    let fail = |e| Integration { traj: None, error: Some(e) };
    if !(dt > 0.0) || !dt.is_finite() {
        return fail(Error::InvalidParams(format!("step must be positive, got {dt}")));
    }
    if stride == 0 {
        return fail(Error::InvalidParams("stride must be at least 1".into()));
    }
    if diverged(&s0) {
        return fail(Error::NonFiniteState);
    }
    let n_out = (n_steps / stride as u64) as usize + 1;
    let mut data = Vec::with_capacity(n_out * N);
    data.extend_from_slice(&s0);
    let mut s = s0;
    let mut error = None;
    for step in 1..=n_steps {
        match rk4_step(&mut rhs, &s, dt) {
            Ok(next) if !diverged(&next) => s = next,
            Ok(_) => {
                error = Some(Error::BlowUp { step });
                break;
            }
            Err(e) => {
                error = Some(e.at_step(step));
                break;
            }
        }
        if step % stride as u64 == 0 {
            data.extend_from_slice(&s);
        }
    }
    let traj = Trajectory::new(t0, dt * stride as f64, N, data).ok();
    Integration { traj, error }
}

impl Error {
    /// Attaches the failing step to step-carrying errors.
    pub(crate) fn at_step(self, step: u64) -> Error {
        match self {
            Error::BlowUp { .. } | Error::NonFiniteState => Error::BlowUp { step },
            Error::ParameterizationBlowUp { .. } => Error::ParameterizationBlowUp { step },
            other => other,
        }
    }
}

/// Full-model tendency per day (the model's own time unit rescaled).
pub fn l80_rhs_per_day(p: &ModelParams) -> impl Fn(&[f64; STATE_DIM]) -> Result<[f64; STATE_DIM]> + '_ {
    let per_day = 1.0 / p.time_unit_days;
    move |s| {
        let mut d = tendency(s, p);
        for v in &mut d {
            *v *= per_day;
        }
        Ok(d)
    }
}

/// Number of steps of size `dt` that cover `days`.
pub fn steps_for(days: f64, dt: f64) -> u64 {
    (days / dt).round() as u64
}

/// Integrates through `spinup_days`, discards that transient, and records
/// the following `record_days`. Times in the result are absolute, i.e. the
/// first sample sits at `t = spinup_days`.
pub fn spinup_then_record(
    p: &ModelParams,
    s0: &State9,
    spinup_days: f64,
    record_days: f64,
    dt: f64,
    stride: usize,
) -> Result<Trajectory> {
    spinup_then_record_partial(p, s0, spinup_days, record_days, dt, stride).into_result()
}

pub fn spinup_then_record_partial(
    p: &ModelParams,
    s0: &State9,
    spinup_days: f64,
    record_days: f64,
    dt: f64,
    stride: usize,
) -> Integration {
    let fail = |e| Integration { traj: None, error: Some(e) };
    if let Err(e) = p.validate() {
        return fail(e);
    }
    if !(spinup_days >= 0.0) || !(record_days >= 0.0) {
        return fail(Error::InvalidParams("spinup and record lengths must be non-negative".into()));
    }
    if !(dt > 0.0) {
        return fail(Error::InvalidParams(format!("step must be positive, got {dt}")));
    }
    let mut rhs = l80_rhs_per_day(p);
    let mut s = s0.to_flat();
    if diverged(&s) {
        return fail(Error::NonFiniteState);
    }
    let n_spin = steps_for(spinup_days, dt);
    for step in 1..=n_spin {
        match rk4_step(&mut rhs, &s, dt) {
            Ok(next) if !diverged(&next) => s = next,
            _ => return fail(Error::BlowUp { step }),
        }
    }
    let t0 = n_spin as f64 * dt;
    let mut run = integrate_partial(rhs, s, t0, dt, steps_for(record_days, dt), stride);
    if let Some(Error::BlowUp { step }) = run.error {
        run.error = Some(Error::BlowUp { step: step + n_spin });
    }
    run
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{y_energy, Regime};

    #[test]
    fn zero_rhs_keeps_state() {
        let s0 = [0.3, -1.0, 2.5];
        let t = integrate(|_: &[f64; 3]| Ok([0.0; 3]), s0, 0.1, 50, 7).unwrap();
        assert_eq!(t.len(), 50 / 7 + 1);
        assert!(t.samples().all(|s| s == s0));
    }

    #[test]
    fn exponential_decay_fourth_order() {
        let run = |dt: f64, n: u64| integrate(|s: &[f64; 1]| Ok([-s[0]]), [1.0], dt, n, 1).unwrap().last()[0];
        let expected = (-1.0f64).exp();
        let e1 = (run(0.01, 100) - expected).abs();
        let e2 = (run(0.005, 200) - expected).abs();
        assert!(e1 < 1e-9, "{e1}");
        let c = e1 / 0.01f64.powi(4);
        // the error constant measured by halving must agree
        let c2 = e2 / 0.005f64.powi(4);
        assert!((c / c2 - 1.0).abs() < 0.1, "{c} vs {c2}");
        let ratio = e1 / e2;
        assert!((12.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn output_length() {
        for (n, stride) in [(0u64, 1usize), (10, 1), (10, 3), (10, 10), (10, 11)] {
            let t = integrate(|s: &[f64; 1]| Ok([-s[0]]), [1.0], 0.1, n, stride).unwrap();
            assert_eq!(t.len(), (n / stride as u64) as usize + 1);
        }
    }

    #[test]
    fn blow_up_reports_step_and_keeps_prefix() {
        // ds/dt = s^2 from s=1 blows up at t=1
        let run = integrate_partial(|s: &[f64; 1]| Ok([s[0] * s[0]]), [1.0], 0.0, 0.01, 1000, 10);
        match run.error {
            Some(Error::BlowUp { step }) => assert!((95..=101).contains(&step), "{step}"),
            other => panic!("{other:?}"),
        }
        let prefix = run.traj.unwrap();
        assert!(prefix.len() >= 9);
        assert!(integrate(|s: &[f64; 1]| Ok([s[0] * s[0]]), [1.0], 0.01, 1000, 1).is_err());
    }

    #[test]
    fn bad_arguments() {
        assert!(integrate(|_: &[f64; 1]| Ok([0.0]), [1.0], 0.0, 1, 1).is_err());
        assert!(integrate(|_: &[f64; 1]| Ok([0.0]), [1.0], 0.1, 1, 0).is_err());
        assert!(integrate(|_: &[f64; 1]| Ok([0.0]), [f64::NAN], 0.1, 1, 1).is_err());
    }

    #[test]
    fn spinup_zero_equals_plain_integration() {
        let p = Regime::Hlf.params();
        let dt = DEFAULT_DT_DAYS;
        let a = spinup_then_record(&p, &State9::SEED, 0.0, 0.5, dt, 4).unwrap();
        let b = integrate(l80_rhs_per_day(&p), State9::SEED.to_flat(), dt, steps_for(0.5, dt), 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn record_zero_gives_post_spinup_state() {
        let p = Regime::Hlf.params();
        let dt = DEFAULT_DT_DAYS;
        let a = spinup_then_record(&p, &State9::SEED, 0.5, 0.0, dt, 4).unwrap();
        assert_eq!(a.len(), 1);
        let b = spinup_then_record(&p, &State9::SEED, 0.0, 0.5, dt, 1).unwrap();
        assert_eq!(a.sample(0), b.last());
        assert!((a.t0() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let p = Regime::Hlf.params();
        let a = spinup_then_record(&p, &State9::SEED, 1.0, 2.0, DEFAULT_DT_DAYS, 20).unwrap();
        let b = spinup_then_record(&p, &State9::SEED, 1.0, 2.0, DEFAULT_DT_DAYS, 20).unwrap();
        assert_eq!(a.data(), b.data());
    }

    #[test]
    fn one_day_sample_count() {
        let p = Regime::Hlf.params();
        let t = spinup_then_record(&p, &State9::SEED, 0.0, 1.0, DEFAULT_DT_DAYS, 1).unwrap();
        assert_eq!(t.len(), 1921);
    }

    #[test]
    fn conservative_y_system_drift() {
        let p = ModelParams { nu0: 0.0, ..Regime::Hlf.params() };
        let rhs = |y: &[f64; 3]| Ok(crate::model::y_tendency(y, &[0.0; 3], &p));
        let y0 = [0.4, -0.3, 0.25];
        let t = integrate(rhs, y0, 0.01, 100_000, 1000).unwrap();
        let e0 = y_energy(&y0, &p);
        let worst = t.samples().map(|y| (y_energy(y, &p) / e0 - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-8, "{worst}");
    }
}
