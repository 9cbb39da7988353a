//! Wavefield data model and the preprocessing applied before learning.
//!
//! A wavefield is a data cube: `N = nx*ny` spatial samples by `T` time
//! snapshots, stored as an `N x T` matrix whose rows follow the flattened
//! grid (row-major, y is the slow axis). Preprocessing never deletes rows;
//! excluded points are carried in a mask so downstream maps can be drawn
//! on the full grid.

mod filter;
mod io;

pub use filter::bandpass_time;
pub use io::{export_csv, load_cube, load_mask, save_cube, save_mask};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular scan grid: point counts, spacing and physical origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Grid spacing along x in meters.
    pub dx: f64,
    /// Grid spacing along y in meters.
    pub dy: f64,
    /// Physical coordinates of grid point (0, 0) in meters.
    pub origin_x: f64,
    pub origin_y: f64,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, dx: f64, dy: f64, origin_x: f64, origin_y: f64) -> Result<Self> {
        let spec = GridSpec { nx, ny, dx, dy, origin_x, origin_y };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::Invariant(format!(
                "grid must be at least 2x2, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.dx > 0.0) || !(self.dy > 0.0) {
            return Err(Error::Invariant(format!(
                "grid spacing must be positive, got dx={}, dy={}",
                self.dx, self.dy
            )));
        }
        if !self.origin_x.is_finite() || !self.origin_y.is_finite() {
            return Err(Error::Invariant("grid origin must be finite".into()));
        }
        Ok(())
    }

    /// Total point count `N = nx * ny`.
    pub fn n(&self) -> usize {
        self.nx * self.ny
    }

    /// Flat index of grid point (ix, iy); y is the slow axis.
    pub fn flat(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        iy * self.nx + ix
    }

    /// Inverse of [`GridSpec::flat`].
    pub fn unflat(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    /// Physical x coordinate of column `ix`.
    pub fn x(&self, ix: usize) -> f64 {
        self.origin_x + ix as f64 * self.dx
    }

    /// Physical y coordinate of row `iy`.
    pub fn y(&self, iy: usize) -> f64 {
        self.origin_y + iy as f64 * self.dy
    }

    /// Physical coordinates of a flat point index.
    pub fn coords(&self, idx: usize) -> (f64, f64) {
        let (ix, iy) = self.unflat(idx);
        (self.x(ix), self.y(iy))
    }

    /// Domain extent along x, `(nx-1)*dx`.
    pub fn extent_x(&self) -> f64 {
        (self.nx - 1) as f64 * self.dx
    }

    /// Domain extent along y, `(ny-1)*dy`.
    pub fn extent_y(&self) -> f64 {
        (self.ny - 1) as f64 * self.dy
    }
}

/// Space-time response data: `N x T` out-of-plane samples on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefieldCube {
    pub grid: GridSpec,
    /// Sampling interval between snapshots in seconds.
    pub dt: f64,
    /// Row = flattened grid point, column = snapshot.
    pub data: Array2<f64>,
}

impl WavefieldCube {
    pub fn new(grid: GridSpec, dt: f64, data: Array2<f64>) -> Result<Self> {
        grid.validate()?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Invariant(format!("dt must be positive and finite, got {dt}")));
        }
        if data.nrows() != grid.n() {
            return Err(Error::Invariant(format!(
                "data has {} rows but grid has {} points",
                data.nrows(),
                grid.n()
            )));
        }
        if data.ncols() == 0 {
            return Err(Error::Invariant("cube must hold at least one snapshot".into()));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Invariant("cube data contains non-finite entries".into()));
        }
        Ok(WavefieldCube { grid, dt, data })
    }

    /// Number of grid points N.
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Number of snapshots T.
    pub fn t(&self) -> usize {
        self.data.ncols()
    }
}

/// Edge of the rectangular domain, used for boundary-layer exclusion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl std::str::FromStr for Edge {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Edge::Left),
            "right" => Ok(Edge::Right),
            "bottom" => Ok(Edge::Bottom),
            "top" => Ok(Edge::Top),
            other => Err(Error::arg(format!(
                "unknown edge `{other}` (expected left|right|bottom|top)"
            ))),
        }
    }
}

/// A cube plus the bookkeeping of which rows and snapshots are retained
/// for learning. Inactive rows stay in the data; they are simply skipped
/// by every downstream norm and solve.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedCube {
    pub cube: WavefieldCube,
    /// `active[i]` marks row i as retained for learning.
    pub active: Vec<bool>,
    /// First retained snapshot index.
    pub t_start: usize,
}

impl MaskedCube {
    /// Wraps a cube with every row and snapshot retained.
    pub fn all_active(cube: WavefieldCube) -> Self {
        let n = cube.n();
        MaskedCube { cube, active: vec![true; n], t_start: 0 }
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Flat indices of the active rows, in grid order.
    pub fn active_indices(&self) -> Vec<usize> {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
            .collect()
    }

    /// Retained snapshot count `T - t_start`.
    pub fn active_snapshots(&self) -> usize {
        self.cube.t() - self.t_start
    }

    /// Extracts the `N_active x T_active` submatrix the solvers operate on.
    pub fn active_block(&self) -> Array2<f64> {
        let rows = self.active_indices();
        let t = self.cube.t();
        let mut block = Array2::zeros((rows.len(), t - self.t_start));
        for (r, &idx) in rows.iter().enumerate() {
            for (c, tt) in (self.t_start..t).enumerate() {
                block[[r, c]] = self.cube.data[[idx, tt]];
            }
        }
        block
    }

    /// Scatters an `N_active x K` matrix back onto the full grid, writing
    /// zeros at inactive rows.
    pub fn expand_rows(&self, m: &Array2<f64>) -> Array2<f64> {
        let rows = self.active_indices();
        assert_eq!(m.nrows(), rows.len(), "row count must match active count");
        let mut full = Array2::zeros((self.active.len(), m.ncols()));
        for (r, &idx) in rows.iter().enumerate() {
            full.row_mut(idx).assign(&m.row(r));
        }
        full
    }

    /// Applies the time-truncation rule to an already-masked cube. The
    /// cut is computed on the full cube length; composing truncations
    /// keeps the larger cut.
    pub fn truncate_early(mut self, fraction: f64) -> Result<Self> {
        let cut = truncation_index(self.cube.t(), fraction)?;
        self.t_start = self.t_start.max(cut);
        Ok(self)
    }

    /// Deactivates every row whose distance to `edge` is below `thickness`
    /// meters. Never reactivates a row.
    pub fn exclude_boundary_layer(mut self, edge: Edge, thickness: f64) -> Result<Self> {
        let grid = self.cube.grid;
        if !(thickness >= 0.0) || !thickness.is_finite() {
            return Err(Error::arg(format!("exclusion thickness must be >= 0, got {thickness}")));
        }
        let extent = match edge {
            Edge::Left | Edge::Right => grid.extent_x(),
            Edge::Bottom | Edge::Top => grid.extent_y(),
        };
        if thickness >= extent {
            return Err(Error::arg(format!(
                "exclusion thickness {thickness} m covers the whole domain extent {extent} m"
            )));
        }
        for idx in 0..grid.n() {
            let (x, y) = grid.coords(idx);
            let dist = match edge {
                Edge::Left => x - grid.origin_x,
                Edge::Right => grid.origin_x + grid.extent_x() - x,
                Edge::Bottom => y - grid.origin_y,
                Edge::Top => grid.origin_y + grid.extent_y() - y,
            };
            if dist < thickness {
                self.active[idx] = false;
            }
        }
        if self.active_count() == 0 {
            return Err(Error::Invariant("boundary exclusion deactivated every row".into()));
        }
        Ok(self)
    }
}

fn truncation_index(t: usize, fraction: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::arg(format!("truncation fraction must lie in [0, 1), got {fraction}")));
    }
    let cut = (fraction * t as f64).floor() as usize;
    debug_assert!(cut < t);
    Ok(cut)
}

/// Drops the leading `floor(fraction * T)` snapshots from analysis.
pub fn truncate_early(cube: WavefieldCube, fraction: f64) -> Result<MaskedCube> {
    MaskedCube::all_active(cube).truncate_early(fraction)
}

/// Deactivates the rows within `thickness` meters of `edge`.
pub fn exclude_boundary_layer(masked: MaskedCube, edge: Edge, thickness: f64) -> Result<MaskedCube> {
    masked.exclude_boundary_layer(edge, thickness)
}
