use std::fmt;
use std::sync::Arc;

use super::mlp::{MlpParams, Scratch};
use crate::error::{Error, Result};

pub type MapFn = dyn Fn(&[f64; 3]) -> [f64; 3] + Send + Sync;

/// A user-supplied mapping `y -> x` (and optionally `y -> z`), e.g. an
/// analytic balance manifold.
#[derive(Clone)]
pub struct ExternalMap {
    pub name: String,
    pub x_map: Arc<MapFn>,
    pub z_map: Option<Arc<MapFn>>,
}

impl ExternalMap {
    pub fn new(name: impl Into<String>, x_map: impl Fn(&[f64; 3]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        ExternalMap { name: name.into(), x_map: Arc::new(x_map), z_map: None }
    }

    pub fn with_z(mut self, z_map: impl Fn(&[f64; 3]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        self.z_map = Some(Arc::new(z_map));
        self
    }
}

impl fmt::Debug for ExternalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternalMap").field("name", &self.name).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParameterizationKind {
    SlowPair,
    Vanilla,
    External,
}

impl ParameterizationKind {
    pub fn name(self) -> &'static str {
        match self {
            ParameterizationKind::SlowPair => "slow_pair",
            ParameterizationKind::Vanilla => "vanilla",
            ParameterizationKind::External => "external",
        }
    }
}

impl std::str::FromStr for ParameterizationKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slow_pair" => Ok(Self::SlowPair),
            "vanilla" => Ok(Self::Vanilla),
            "external" => Ok(Self::External),
            other => Err(Error::Config(format!("unknown parameterization kind `{other}`"))),
        }
    }
}

/// Expresses the divergent amplitudes `x` through the rotational ones `y`.
#[derive(Debug, Clone)]
pub enum Parameterization {
    /// `x = X(y, Z(y))` with `Z: y -> z` fitted first and `X` conditioned on it.
    SlowPair { z_net: MlpParams, x_net: MlpParams },
    /// `x = V(y)` fitted directly on unfiltered data.
    Vanilla(MlpParams),
    External(ExternalMap),
}

impl Parameterization {
    pub fn slow_pair(mut z_net: MlpParams, mut x_net: MlpParams) -> Result<Self> {
        z_net.validate()?;
        x_net.validate()?;
        check_dims(&z_net, 3, 3)?;
        check_dims(&x_net, 6, 3)?;
        Ok(Parameterization::SlowPair { z_net, x_net })
    }

    pub fn vanilla(mut net: MlpParams) -> Result<Self> {
        net.validate()?;
        check_dims(&net, 3, 3)?;
        Ok(Parameterization::Vanilla(net))
    }

    pub fn kind(&self) -> ParameterizationKind {
        match self {
            Parameterization::SlowPair { .. } => ParameterizationKind::SlowPair,
            Parameterization::Vanilla(_) => ParameterizationKind::Vanilla,
            Parameterization::External(_) => ParameterizationKind::External,
        }
    }

    pub fn evaluator(&self) -> Evaluator<'_> {
        Evaluator { map: self, scratch: Scratch::default(), joined: [0.0; 6] }
    }

    /// Estimate of `x` at `y`. May be non-finite for a badly behaved map.
    pub fn x_estimate(&self, y: &[f64; 3]) -> [f64; 3] {
        self.evaluator().x(y)
    }

    /// Estimate of `z` at `y`, for maps that provide one.
    pub fn z_estimate(&self, y: &[f64; 3]) -> Option<[f64; 3]> {
        self.evaluator().z(y)
    }
}

fn check_dims(m: &MlpParams, i: usize, o: usize) -> Result<()> {
    if m.in_dim() != i {
        return Err(Error::Dimension { expected: i, got: m.in_dim() });
    }
    if m.out_dim() != o {
        return Err(Error::Dimension { expected: o, got: m.out_dim() });
    }
    Ok(())
}

/// Reusable evaluation state for one [`Parameterization`].
pub struct Evaluator<'a> {
    map: &'a Parameterization,
    scratch: Scratch,
    joined: [f64; 6],
}

impl Evaluator<'_> {
    pub fn x(&mut self, y: &[f64; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        match self.map {
            Parameterization::SlowPair { z_net, x_net } => {
                let mut z = [0.0; 3];
                z_net.forward_into(y, &mut z, &mut self.scratch);
                self.joined[..3].copy_from_slice(y);
                self.joined[3..].copy_from_slice(&z);
                x_net.forward_into(&self.joined, &mut out, &mut self.scratch);
            }
            Parameterization::Vanilla(net) => net.forward_into(y, &mut out, &mut self.scratch),
            Parameterization::External(ext) => out = (ext.x_map)(y),
        }
        out
    }

    pub fn z(&mut self, y: &[f64; 3]) -> Option<[f64; 3]> {
        match self.map {
            Parameterization::SlowPair { z_net, .. } => {
                let mut z = [0.0; 3];
                z_net.forward_into(y, &mut z, &mut self.scratch);
                Some(z)
            }
            Parameterization::Vanilla(_) => None,
            Parameterization::External(ext) => ext.z_map.as_ref().map(|f| f(y)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::mlp::Arch;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn slow_pair_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = MlpParams::glorot(Arch::new(1, 5), 3, 3, &mut rng);
        let x = MlpParams::glorot(Arch::new(1, 5), 6, 3, &mut rng);
        let p = Parameterization::slow_pair(z.clone(), x.clone()).unwrap();
        let y = [0.2, -0.1, 0.4];
        let zy = z.forward(&y).unwrap();
        let expect = x.forward(&[y[0], y[1], y[2], zy[0], zy[1], zy[2]]).unwrap();
        assert_eq!(p.x_estimate(&y).to_vec(), expect);
        assert_eq!(p.z_estimate(&y).unwrap().to_vec(), zy);
    }

    #[test]
    fn dimension_checks() {
        let z = MlpParams::zeros(Arch::new(1, 5), 3, 3);
        assert!(Parameterization::slow_pair(z.clone(), z.clone()).is_err());
        assert!(Parameterization::vanilla(MlpParams::zeros(Arch::new(1, 5), 6, 3)).is_err());
        assert!(Parameterization::vanilla(z).is_ok());
    }

    #[test]
    fn external_plug_in() {
        let p = Parameterization::External(ExternalMap::new("neg", |y| [-y[0], -y[1], -y[2]]).with_z(|y| *y));
        assert_eq!(p.x_estimate(&[1.0, 2.0, 3.0]), [-1.0, -2.0, -3.0]);
        assert_eq!(p.z_estimate(&[1.0, 2.0, 3.0]), Some([1.0, 2.0, 3.0]));
        assert_eq!(p.kind(), ParameterizationKind::External);
    }
}
