//! Reduced models: the rotational equation closed by a parameterization
//! of the divergent amplitudes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::integrator::{integrate_partial, Integration};
use crate::model::{y_tendency, ModelParams};
use crate::neural::{Parameterization, ParameterizationKind};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone)]
pub struct ClosureSystem {
    pub params: ModelParams,
    pub map: Parameterization,
}

impl ClosureSystem {
    pub fn new(params: ModelParams, map: Parameterization) -> Result<Self> {
        params.validate()?;
        Ok(ClosureSystem { params, map })
    }

    pub fn kind(&self) -> ParameterizationKind {
        self.map.kind()
    }
}

/// Closed tendency `dy/dt` in model time units.
pub fn closure_rhs(y: &[f64; 3], sys: &ClosureSystem) -> Result<[f64; 3]> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteState);
    }
    let x = sys.map.x_estimate(y);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::ParameterizationBlowUp { step: 0 });
    }
    Ok(y_tendency(y, &x, &sys.params))
}

/// Integrates the closed system with RK4, `dt_days` per step, recording
/// every `stride`-th state. With `with_x` the diagnosed `x = map(y)` is
/// appended as components 3..6. On blow-up the recorded prefix is kept,
/// cut (with `with_x`) before the first sample whose diagnosed `x` is not
/// finite.
pub fn run_closure(
    sys: &ClosureSystem,
    y0: [f64; 3],
    dt_days: f64,
    n_steps: u64,
    stride: usize,
    with_x: bool,
) -> Integration {
    let per_day = 1.0 / sys.params.time_unit_days;
    let mut eval = sys.map.evaluator();
    let rhs = |y: &[f64; 3]| -> Result<[f64; 3]> {
        let x = eval.x(y);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParameterizationBlowUp { step: 0 });
        }
        let mut d = y_tendency(y, &x, &sys.params);
        d.iter_mut().for_each(|v| *v *= per_day);
        Ok(d)
    };
    let mut run = integrate_partial(rhs, y0, 0.0, dt_days, n_steps, stride);
    if with_x {
        run.traj = run.traj.and_then(|t| append_x(&t, &sys.map));
    }
    run
}

fn append_x(traj: &Trajectory, map: &Parameterization) -> Option<Trajectory> {
    let mut eval = map.evaluator();
    let mut data = Vec::with_capacity(traj.len() * 6);
    for s in traj.samples() {
        let y = [s[0], s[1], s[2]];
        let x = eval.x(&y);
        if x.iter().any(|v| !v.is_finite()) {
            break;
        }
        data.extend_from_slice(&y);
        data.extend_from_slice(&x);
    }
    if data.is_empty() {
        return None;
    }
    Some(Trajectory::new(traj.t0(), traj.dt(), 6, data).expect("finite samples"))
}

/// `y0` with every component perturbed by a seeded uniform relative
/// offset of at most `rel`.
pub fn perturbed(y0: [f64; 3], seed: u64, rel: f64) -> [f64; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    y0.map(|v| v * (1.0 + rel * rng.random_range(-1.0..1.0)))
}
