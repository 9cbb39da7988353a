//! Binary cube container, mask sidecars and CSV export.
//!
//! Cube format (little-endian): magic `WFC1`, u32 nx, u32 ny, u32 T,
//! f64 dx, dy, origin_x, origin_y, dt, then `nx*ny*T` f64 samples in
//! point-major order (all T samples of point 0, then point 1, ...).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::binio::Reader;
use crate::error::{Error, Result};
use super::{GridSpec, WavefieldCube};

pub(crate) const CUBE_MAGIC: &[u8; 4] = b"WFC1";

/// Writes a cube to the binary container; round-trips bit-exactly.
pub fn save_cube(cube: &WavefieldCube, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    // Re-validate so a cube mutated into an invalid state is never persisted.
    let checked = WavefieldCube::new(cube.grid, cube.dt, cube.data.clone())?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(CUBE_MAGIC).map_err(io_err)?;
    w.write_all(&(checked.grid.nx as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(checked.grid.ny as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(checked.t() as u32).to_le_bytes()).map_err(io_err)?;
    for v in [
        checked.grid.dx,
        checked.grid.dy,
        checked.grid.origin_x,
        checked.grid.origin_y,
        checked.dt,
    ] {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    // Row-major N x T iteration is exactly point-major sample order.
    let data = checked.data.as_standard_layout();
    for v in data.iter() {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// Loads a cube written by [`save_cube`].
pub fn load_cube(path: impl AsRef<Path>) -> Result<WavefieldCube> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader::new(BufReader::new(file), "cube");
    r.magic(CUBE_MAGIC)?;
    let nx = r.u32("nx")? as usize;
    let ny = r.u32("ny")? as usize;
    let t = r.u32("t")? as usize;
    if nx < 2 {
        return Err(Error::Format { kind: "cube", field: "nx", detail: format!("must be >= 2, got {nx}") });
    }
    if ny < 2 {
        return Err(Error::Format { kind: "cube", field: "ny", detail: format!("must be >= 2, got {ny}") });
    }
    if t == 0 {
        return Err(Error::Format { kind: "cube", field: "t", detail: "must be >= 1".into() });
    }
    let dx = r.f64("dx")?;
    let dy = r.f64("dy")?;
    let origin_x = r.f64("origin_x")?;
    let origin_y = r.f64("origin_y")?;
    let dt = r.f64("dt")?;
    let grid = GridSpec::new(nx, ny, dx, dy, origin_x, origin_y).map_err(|e| Error::Format {
        kind: "cube",
        field: "grid",
        detail: e.to_string(),
    })?;
    let values = r.payload(nx as u64 * ny as u64 * t as u64)?;
    let data = Array2::from_shape_vec((nx * ny, t), values).expect("payload length checked");
    WavefieldCube::new(grid, dt, data)
}

/// Writes an active-row mask as a length-N byte vector (1 = active).
pub fn save_mask(active: &[bool], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = active.iter().map(|&a| a as u8).collect();
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads a mask sidecar, checking it holds exactly `expected_n` bytes.
pub fn load_mask(path: impl AsRef<Path>, expected_n: usize) -> Result<Vec<bool>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != expected_n {
        return Err(Error::Format {
            kind: "mask",
            field: "length",
            detail: format!("expected {} bytes, found {}", expected_n, bytes.len()),
        });
    }
    bytes
        .into_iter()
        .map(|b| match b {
            0 => Ok(false),
            1 => Ok(true),
            other => Err(Error::Format {
                kind: "mask",
                field: "entry",
                detail: format!("mask bytes must be 0 or 1, found {other}"),
            }),
        })
        .collect()
}

/// Exports a cube as CSV: one row per grid point with `x, y, s0, s1, ...`.
pub fn export_csv(cube: &WavefieldCube, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    for idx in 0..cube.n() {
        let (x, y) = cube.grid.coords(idx);
        write!(w, "{x},{y}").map_err(io_err)?;
        for v in cube.data.row(idx).iter() {
            write!(w, ",{v}").map_err(io_err)?;
        }
        writeln!(w).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}
