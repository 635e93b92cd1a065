//! Network files.
//!
//! One network per file, little-endian:
//!
//! ```text
//! "L80N" | u32 version = 1 | u32 in_dim | u32 out_dim | u32 L | u32 p
//! | f64 in_shift[in_dim] | f64 in_scale[in_dim] | f64 out_shift[out_dim] | f64 out_scale[out_dim]
//! | for each of the L hidden layers, then the readout: f64 W (row-major, out x in) | f64 b[out]
//! ```

use std::io::{self, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::mlp::{Affine, Arch, Layer, MlpParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"L80N";
const VERSION: u32 = 1;

pub fn write_mlp<W: Write>(m: &MlpParams, mut w: W) -> io::Result<()> {
    let arch = m.arch();
    w.write_all(MAGIC)?;
    for v in [VERSION, m.in_dim() as u32, m.out_dim() as u32, arch.layers as u32, arch.width as u32] {
        w.write_all(&v.to_le_bytes())?;
    }
    let affine = [&m.input.shift, &m.input.scale, &m.output.shift, &m.output.scale];
    for v in affine.into_iter().flatten() {
        w.write_all(&v.to_le_bytes())?;
    }
    for layer in m.layers() {
        for (_, v) in layer.weights.indexed_iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &layer.bias {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_vec<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

pub fn read_mlp<R: Read>(mut r: R) -> Result<MlpParams> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not an L80N network file".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported network file version {version}")));
    }
    let in_dim = read_u32(&mut r)? as usize;
    let out_dim = read_u32(&mut r)? as usize;
    let layers = read_u32(&mut r)? as usize;
    let width = read_u32(&mut r)? as usize;
    if in_dim == 0 || out_dim == 0 || layers == 0 || width == 0 || layers > 1024 || width > 1 << 16 {
        return Err(Error::Format("implausible network dimensions".into()));
    }
    let input = Affine { shift: read_vec(&mut r, in_dim)?, scale: read_vec(&mut r, in_dim)? };
    let output = Affine { shift: read_vec(&mut r, out_dim)?, scale: read_vec(&mut r, out_dim)? };
    let mut read_layer = |n_in: usize, n_out: usize| -> Result<Layer> {
        let w = read_vec(&mut r, n_in * n_out)?;
        let b = read_vec(&mut r, n_out)?;
        Ok(Layer {
            weights: Array2::from_shape_vec((n_out, n_in), w).expect("sized"),
            bias: Array1::from(b),
        })
    };
    let mut hidden = Vec::with_capacity(layers);
    let mut n_in = in_dim;
    for _ in 0..layers {
        hidden.push(read_layer(n_in, width)?);
        n_in = width;
    }
    let readout = read_layer(n_in, out_dim)?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after network".into()));
    }
    let mut m = MlpParams { input, output, hidden, readout };
    m.validate().map_err(|e| Error::Format(e.to_string()))?;
    debug_assert_eq!(m.arch(), Arch::new(layers, width));
    Ok(m)
}

pub fn save_mlp(m: &MlpParams, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_mlp(m, &mut buf)?;
    crate::fsutil::write_atomic(path, &buf)
}

pub fn load_mlp(path: impl AsRef<Path>) -> Result<MlpParams> {
    let f = std::fs::File::open(path)?;
    read_mlp(io::BufReader::new(f))
}
