//! Flat binary layout: `dr: f64, dt: f64, J: u64, Nt: u64` (little-endian),
//! then `(Nt + 1)·(J + 1)` doubles in row-major (time-major) order.
//! `J` and `Nt` are the last radial and time indices.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use super::field::{Parity, SpaceTimeField};
use super::grid::GridSpec;
use crate::{Error, Result};

pub fn write_field<W: Write>(f: &SpaceTimeField, mut out: W) -> Result<()> {
    if !f.is_full() {
        return Err(Error::Format("only full-grid fields can be serialized".into()));
    }
    let g = f.grid();
    out.write_all(&g.dr.to_le_bytes())?;
    out.write_all(&g.dt.to_le_bytes())?;
    out.write_all(&(g.j_max() as u64).to_le_bytes())?;
    out.write_all(&(g.n_max() as u64).to_le_bytes())?;
    for v in f.values().iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

/// Reads a field; the file carries no parity, so the caller supplies it.
pub fn read_field<R: Read>(mut input: R, parity: Parity) -> Result<SpaceTimeField> {
    let dr = read_f64(&mut input)?;
    let dt = read_f64(&mut input)?;
    let j = read_u64(&mut input)? as usize;
    let nt = read_u64(&mut input)? as usize;
    if !(dr > 0.0 && dt > 0.0) || j > 1 << 28 || nt > 1 << 28 {
        return Err(Error::Format(format!("implausible header dr={dr} dt={dt} J={j} Nt={nt}")));
    }
    let grid = GridSpec::new(dr, dt / dr, j as f64 * dr, nt as f64 * dt)?;
    if grid.j_max() != j || grid.n_max() != nt {
        return Err(Error::Format("header extents do not round-trip".into()));
    }
    let count = (nt + 1) * (j + 1);
    let mut bytes = vec![0u8; count * 8];
    input.read_exact(&mut bytes)?;
    let mut extra = [0u8; 1];
    if input.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after field data".into()));
    }
    let data: Vec<f64> =
        bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let values = Array2::from_shape_vec((nt + 1, j + 1), data).map_err(|e| Error::Format(e.to_string()))?;
    SpaceTimeField::from_values(grid, values, parity)
}

pub fn save_field(f: &SpaceTimeField, path: &Path) -> Result<()> {
    write_field(f, BufWriter::new(File::create(path)?))
}

pub fn load_field(path: &Path, parity: Parity) -> Result<SpaceTimeField> {
    read_field(BufReader::new(File::open(path)?), parity)
}

/// Debug export: one `t,r,value` line per sample.
pub fn write_csv<W: Write>(f: &SpaceTimeField, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "t,r,value")?;
    for n in 0..f.nt() {
        let t = f.t(n);
        for j in 0..f.nr() {
            writeln!(out, "{:.17e},{:.17e},{:.17e}", t, f.r(j), f.get(n, j))?;
        }
    }
    out.flush()?;
    Ok(())
}
