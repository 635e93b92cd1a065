//! Uniformly sampled multi-component time series and their file formats.
//!
//! Binary layout (little-endian):
//!
//! ```text
//! "L80T" | u32 version = 1 | u64 n | f64 t0 | f64 dt | u8 n_components | n * n_components f64 (row-major)
//! ```
//!
//! Times are in days.

use std::io::{self, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"L80T";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    n_components: usize,
    data: Vec<f64>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, n_components: usize, data: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !t0.is_finite() || !dt.is_finite() {
            return Err(Error::InvalidParams(format!("trajectory needs dt > 0, got {dt}")));
        }
        if n_components == 0 || n_components > u8::MAX as usize {
            return Err(Error::InvalidParams(format!("bad component count {n_components}")));
        }
        if data.is_empty() || data.len() % n_components != 0 {
            return Err(Error::InvalidParams(format!(
                "{} values do not form whole samples of {n_components} components",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteState);
        }
        Ok(Trajectory { t0, dt, n_components, data })
    }

    /// Builds a trajectory from per-component series of equal length.
    pub fn from_columns(t0: f64, dt: f64, columns: &[Vec<f64>]) -> Result<Self> {
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidParams("columns of unequal length".into()));
        }
        let mut data = Vec::with_capacity(n * columns.len());
        for i in 0..n {
            data.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(t0, dt, columns.len(), data)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.n_components
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Time covered from the first to the last sample.
    pub fn span(&self) -> f64 {
        (self.len() - 1) as f64 * self.dt
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_components..(i + 1) * self.n_components]
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.n_components)
    }

    pub fn last(&self) -> &[f64] {
        self.sample(self.len() - 1)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.samples().map(|s| s[c]).collect()
    }

    /// Keeps only the listed components, in the listed order.
    pub fn select(&self, components: &[usize]) -> Result<Trajectory> {
        if let Some(&bad) = components.iter().find(|&&c| c >= self.n_components) {
            return Err(Error::Dimension { expected: self.n_components, got: bad + 1 });
        }
        let data = self.samples().flat_map(|s| components.iter().map(move |&c| s[c])).collect();
        Trajectory::new(self.t0, self.dt, components.len(), data)
    }

    /// Samples `start..end`, with `t0` shifted accordingly.
    pub fn slice(&self, start: usize, end: usize) -> Result<Trajectory> {
        if start >= end || end > self.len() {
            return Err(Error::InvalidParams(format!("bad slice {start}..{end} of {}", self.len())));
        }
        let w = self.n_components;
        Trajectory::new(self.time(start), self.dt, w, self.data[start * w..end * w].to_vec())
    }

    /// Every `step`-th sample starting from the first.
    pub fn decimate(&self, step: usize) -> Result<Trajectory> {
        let step = step.max(1);
        let data = self.samples().step_by(step).flatten().copied().collect();
        Trajectory::new(self.t0, self.dt * step as f64, self.n_components, data)
    }

    /// Component labels used in CSV headers.
    pub fn component_names(&self) -> Vec<String> {
        const FULL: [&str; 9] = ["x1", "x2", "x3", "y1", "y2", "y3", "z1", "z2", "z3"];
        const CLOSURE: [&str; 6] = ["y1", "y2", "y3", "x1", "x2", "x3"];
        match self.n_components {
            9 => FULL.iter().map(|s| s.to_string()).collect(),
            3 | 6 => CLOSURE[..self.n_components].iter().map(|s| s.to_string()).collect(),
            n => (1..=n).map(|i| format!("c{i}")).collect(),
        }
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        w.write_all(&self.t0.to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&[self.n_components as u8])?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not an L80T trajectory".into()));
        }
        let version = read_u32(&mut r)?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported trajectory version {version}")));
        }
        let n = read_u64(&mut r)? as usize;
        let t0 = read_f64(&mut r)?;
        let dt = read_f64(&mut r)?;
        let mut nc = [0u8; 1];
        r.read_exact(&mut nc)?;
        let nc = nc[0] as usize;
        let mut data = Vec::with_capacity(n.saturating_mul(nc).min(1 << 28));
        for _ in 0..n * nc {
            data.push(read_f64(&mut r)?);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after trajectory".into()));
        }
        Trajectory::new(t0, dt, nc, data).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::with_capacity(33 + 8 * self.data.len());
        self.write_binary(&mut buf)?;
        crate::fsutil::write_atomic(path, &buf)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_binary(io::BufReader::new(f))
    }

    /// CSV with header `t,<component names>`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,{}", self.component_names().join(","))?;
        for (i, s) in self.samples().enumerate() {
            write!(w, "{}", self.time(i))?;
            for v in s {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        crate::fsutil::write_atomic(path, &buf)
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> io::Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
