//! Dictionary and coefficient containers, sharing the cube file layout.
//!
//! `DIC1`: magic, u32 rows, u32 k, u8 constraint kind (0 = l2 ball,
//! 1 = elastic-net ball), f64 gamma, k retired-flag bytes, then `rows*k`
//! f64 values atom by atom. `COF1`: magic, u32 k, u32 t, then `k*t` f64
//! values row-major (one activation row per atom).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::binio::Reader;
use crate::error::{Error, Result};
use super::{CoefficientMatrix, Constraint, Dictionary};

const DICT_MAGIC: &[u8; 4] = b"DIC1";
const COEF_MAGIC: &[u8; 4] = b"COF1";

pub fn save_dictionary(dict: &Dictionary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(DICT_MAGIC).map_err(io_err)?;
    w.write_all(&(dict.rows() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(dict.k() as u32).to_le_bytes()).map_err(io_err)?;
    let kind: u8 = match dict.constraint {
        Constraint::L2Ball => 0,
        Constraint::ElasticNetBall { .. } => 1,
    };
    w.write_all(&[kind]).map_err(io_err)?;
    w.write_all(&dict.constraint.gamma().to_le_bytes()).map_err(io_err)?;
    for &r in &dict.retired {
        w.write_all(&[r as u8]).map_err(io_err)?;
    }
    for j in 0..dict.k() {
        for &v in dict.atoms.column(j).iter() {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Dictionary> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader::new(BufReader::new(file), "dictionary");
    r.magic(DICT_MAGIC)?;
    let rows = r.u32("rows")? as usize;
    let k = r.u32("k")? as usize;
    if rows == 0 || k == 0 {
        return Err(Error::Format {
            kind: "dictionary",
            field: "dims",
            detail: format!("rows={rows}, k={k} must both be >= 1"),
        });
    }
    let kind = r.u8("constraint")?;
    let gamma = r.f64("gamma")?;
    let constraint = match kind {
        0 => Constraint::L2Ball,
        1 => {
            if !(gamma >= 0.0) || !gamma.is_finite() {
                return Err(Error::Format {
                    kind: "dictionary",
                    field: "gamma",
                    detail: format!("must be finite and >= 0, got {gamma}"),
                });
            }
            Constraint::ElasticNetBall { gamma }
        }
        other => {
            return Err(Error::Format {
                kind: "dictionary",
                field: "constraint",
                detail: format!("unknown constraint kind {other}"),
            })
        }
    };
    let retired: Vec<bool> = r
        .bytes(k, "retired")?
        .into_iter()
        .map(|b| b != 0)
        .collect();
    let values = r.payload(rows as u64 * k as u64)?;
    let mut atoms = Array2::zeros((rows, k));
    for j in 0..k {
        for i in 0..rows {
            atoms[[i, j]] = values[j * rows + i];
        }
    }
    Ok(Dictionary { atoms, constraint, retired })
}

pub fn save_coefficients(coef: &CoefficientMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(COEF_MAGIC).map_err(io_err)?;
    w.write_all(&(coef.k() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(coef.t() as u32).to_le_bytes()).map_err(io_err)?;
    let data = coef.coeffs.as_standard_layout();
    for v in data.iter() {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn load_coefficients(path: impl AsRef<Path>) -> Result<CoefficientMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader::new(BufReader::new(file), "coefficients");
    r.magic(COEF_MAGIC)?;
    let k = r.u32("k")? as usize;
    let t = r.u32("t")? as usize;
    if k == 0 || t == 0 {
        return Err(Error::Format {
            kind: "coefficients",
            field: "dims",
            detail: format!("k={k}, t={t} must both be >= 1"),
        });
    }
    let values = r.payload(k as u64 * t as u64)?;
    let coeffs = Array2::from_shape_vec((k, t), values).expect("payload length checked");
    Ok(CoefficientMatrix { coeffs })
}
