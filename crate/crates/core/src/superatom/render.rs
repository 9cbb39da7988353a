//! Grayscale PGM rendering of grid fields and super-atom maps.

use std::path::Path;

use crate::error::{Error, Result};
use crate::wavefield::GridSpec;
use super::DetectionReport;

/// Writes a binary PGM (P5) image, one pixel per grid point, min-max
/// normalized to 0..255. Image row 0 is grid row 0. A constant field
/// renders as uniform mid-gray.
pub fn render_heatmap(field: &[f64], grid: &GridSpec, path: impl AsRef<Path>) -> Result<()> {
    render_heatmap_with(field, grid, None, path)
}

/// As [`render_heatmap`]; when a report is supplied, the borders of its
/// flagged partitions are drawn at maximum intensity.
pub fn render_heatmap_with(
    field: &[f64],
    grid: &GridSpec,
    report: Option<&DetectionReport>,
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    if field.len() != grid.n() {
        return Err(Error::arg(format!(
            "field length {} does not match the grid point count {}",
            field.len(),
            grid.n()
        )));
    }
    if !field.iter().all(|v| v.is_finite()) {
        return Err(Error::arg("field contains non-finite entries"));
    }

    let min = field.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let mut pixels: Vec<u8> = if span > 0.0 {
        field.iter().map(|&v| ((v - min) / span * 255.0).round() as u8).collect()
    } else {
        vec![128u8; field.len()]
    };

    if let Some(report) = report {
        for fp in &report.partitions {
            let [c0, c1] = fp.col_range;
            let [r0, r1] = fp.row_range;
            for ix in c0..=c1 {
                pixels[grid.flat(ix, r0)] = 255;
                pixels[grid.flat(ix, r1)] = 255;
            }
            for iy in r0..=r1 {
                pixels[grid.flat(c0, iy)] = 255;
                pixels[grid.flat(c1, iy)] = 255;
            }
        }
    }

    let mut bytes = format!("P5\n{} {}\n255\n", grid.nx, grid.ny).into_bytes();
    bytes.extend_from_slice(&pixels);
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
