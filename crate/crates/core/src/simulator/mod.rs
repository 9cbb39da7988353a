//! Transient flexural wavefield simulator for a thin rectangular plate.
//!
//! Classical (Kirchhoff) thin-plate dynamics with spatially varying bending
//! stiffness and density are integrated by explicit central differences on
//! the scan grid. The biharmonic term is built as two passes of a symmetric
//! graph Laplacian, so the spatial operator is symmetric positive
//! semidefinite: discrete energy stays bounded below the stability limit and
//! source/receiver reciprocity holds on homogeneous plates. Plate edges are
//! zero-flux (freely suspended approximation).

mod scenario;

pub use scenario::{Scenario, SimRun};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavefield::{GridSpec, WavefieldCube};

/// Plate geometry and material constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateSpec {
    /// Plate dimensions in meters.
    pub lx: f64,
    pub ly: f64,
    /// Thickness in meters.
    pub h: f64,
    /// Young's modulus in Pa.
    pub youngs: f64,
    /// Poisson ratio.
    pub poisson: f64,
    /// Density in kg/m^3.
    pub density: f64,
    pub grid: GridSpec,
}

impl PlateSpec {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        for (name, v) in [
            ("lx", self.lx),
            ("ly", self.ly),
            ("h", self.h),
            ("youngs", self.youngs),
            ("density", self.density),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Invariant(format!("plate {name} must be positive, got {v}")));
            }
        }
        if !(self.poisson > 0.0 && self.poisson < 0.5) {
            return Err(Error::Invariant(format!(
                "poisson ratio must lie in (0, 0.5), got {}",
                self.poisson
            )));
        }
        let ex = self.grid.extent_x();
        let ey = self.grid.extent_y();
        if (ex - self.lx).abs() > 1e-9 * self.lx || (ey - self.ly).abs() > 1e-9 * self.ly {
            return Err(Error::Invariant(format!(
                "grid extent ({ex} x {ey}) m does not span the plate ({} x {}) m",
                self.lx, self.ly
            )));
        }
        Ok(())
    }

    /// Builds the grid from point counts, spanning the plate exactly.
    pub fn with_grid_points(
        lx: f64,
        ly: f64,
        h: f64,
        youngs: f64,
        poisson: f64,
        density: f64,
        nx: usize,
        ny: usize,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::arg(format!("plate grid must be at least 2x2, got {nx}x{ny}")));
        }
        let grid = GridSpec::new(nx, ny, lx / (nx - 1) as f64, ly / (ny - 1) as f64, 0.0, 0.0)?;
        let plate = PlateSpec { lx, ly, h, youngs, poisson, density, grid };
        plate.validate()?;
        Ok(plate)
    }

    /// Pristine bending stiffness `E h^3 / (12 (1 - nu^2))`.
    pub fn bending_stiffness(&self) -> f64 {
        self.youngs * self.h.powi(3) / (12.0 * (1.0 - self.poisson * self.poisson))
    }

    /// Flexural wavelength at `freq` from the thin-plate dispersion
    /// `omega = sqrt(D / (rho h)) k^2`.
    pub fn flexural_wavelength(&self, freq: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * freq;
        let c = (self.bending_stiffness() / (self.density * self.h)).sqrt();
        let k = (omega / c).sqrt();
        2.0 * std::f64::consts::PI / k
    }
}

/// Geometry of an anomaly: a disc around a point or a band around a segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AnomalyKind {
    Point { x: f64, y: f64 },
    Line { x0: f64, y0: f64, x1: f64, y1: f64 },
}

/// A localized perturbation of the plate's material properties.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalySpec {
    #[serde(flatten)]
    pub kind: AnomalyKind,
    /// Disc radius or band halfwidth in meters.
    pub radius: f64,
    /// Multiplier on Young's modulus inside the footprint, in (0, 1].
    pub stiffness_factor: f64,
    /// Multiplier on density inside the footprint, in (0, 1].
    pub density_factor: f64,
}

impl AnomalySpec {
    pub fn point(x: f64, y: f64, radius: f64, stiffness_factor: f64, density_factor: f64) -> Self {
        AnomalySpec {
            kind: AnomalyKind::Point { x, y },
            radius,
            stiffness_factor,
            density_factor,
        }
    }

    fn validate(&self, plate: &PlateSpec) -> Result<()> {
        for (name, f) in [
            ("stiffness_factor", self.stiffness_factor),
            ("density_factor", self.density_factor),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::arg(format!("anomaly {name} must lie in (0, 1], got {f}")));
            }
        }
        if !(self.radius >= 0.0) || !self.radius.is_finite() {
            return Err(Error::arg(format!("anomaly radius must be >= 0, got {}", self.radius)));
        }
        let inside = |x: f64, y: f64| x >= 0.0 && x <= plate.lx && y >= 0.0 && y <= plate.ly;
        let ok = match self.kind {
            AnomalyKind::Point { x, y } => inside(x, y),
            AnomalyKind::Line { x0, y0, x1, y1 } => inside(x0, y0) && inside(x1, y1),
        };
        if !ok {
            return Err(Error::arg(format!("anomaly geometry {:?} lies outside the plate", self.kind)));
        }
        Ok(())
    }

    /// Distance from a point to the anomaly's center geometry.
    fn distance(&self, px: f64, py: f64) -> f64 {
        match self.kind {
            AnomalyKind::Point { x, y } => ((px - x).powi(2) + (py - y).powi(2)).sqrt(),
            AnomalyKind::Line { x0, y0, x1, y1 } => {
                let (vx, vy) = (x1 - x0, y1 - y0);
                let len2 = vx * vx + vy * vy;
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    (((px - x0) * vx + (py - y0) * vy) / len2).clamp(0.0, 1.0)
                };
                let (cx, cy) = (x0 + t * vx, y0 + t * vy);
                ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
            }
        }
    }

    /// A grid cell belongs to the footprint when its center lies strictly
    /// within the radius (halfwidth for line anomalies).
    pub fn covers(&self, px: f64, py: f64) -> bool {
        self.distance(px, py) < self.radius
    }
}

/// Out-of-plane tone-burst excitation applied at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationSpec {
    /// Position in meters (applied at the nearest grid node).
    pub x: f64,
    pub y: f64,
    /// Carrier frequency in Hz.
    pub carrier_f: f64,
    /// Number of carrier cycles inside the burst.
    pub cycles: u32,
    /// Force amplitude; the problem is linear so units are arbitrary.
    pub amplitude: f64,
}

impl ExcitationSpec {
    fn validate(&self, plate: &PlateSpec) -> Result<()> {
        if !(self.carrier_f > 0.0) {
            return Err(Error::arg(format!("carrier frequency must be > 0, got {}", self.carrier_f)));
        }
        if self.cycles < 1 {
            return Err(Error::arg("tone burst must contain at least one cycle"));
        }
        if !(self.x >= 0.0 && self.x <= plate.lx && self.y >= 0.0 && self.y <= plate.ly) {
            return Err(Error::arg(format!(
                "excitation position ({}, {}) lies outside the plate",
                self.x, self.y
            )));
        }
        Ok(())
    }

    /// Burst duration `cycles / carrier_f` in seconds.
    pub fn burst_len(&self) -> f64 {
        self.cycles as f64 / self.carrier_f
    }
}

/// Hann-windowed tone burst: `A sin(2 pi f t) w(t)` for `0 <= t <= cycles/f`,
/// zero afterwards; continuous at both endpoints.
pub fn tone_burst(t: f64, spec: &ExcitationSpec) -> f64 {
    debug_assert!(t >= 0.0);
    let burst = spec.burst_len();
    if t < 0.0 || t > burst {
        return 0.0;
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let window = 0.5 * (1.0 - (two_pi * t / burst).cos());
    spec.amplitude * (two_pi * spec.carrier_f * t).sin() * window
}

/// Builds a crack as a line anomaly with halfwidth of one grid cell,
/// applying `factor` to both stiffness and density. A zero-length segment
/// degenerates to a point anomaly of the same radius.
pub fn crack_spec(plate: &PlateSpec, x0: f64, x1: f64, y: f64, factor: f64) -> Result<AnomalySpec> {
    if x0 > x1 {
        return Err(Error::arg(format!("crack endpoints must satisfy x0 <= x1, got {x0} > {x1}")));
    }
    let spec = AnomalySpec {
        kind: AnomalyKind::Line { x0, y0: y, x1, y1: y },
        radius: plate.grid.dx.max(plate.grid.dy),
        stiffness_factor: factor,
        density_factor: factor,
    };
    spec.validate(plate)?;
    Ok(spec)
}

/// The spatially discretized plate operator and its per-point property maps.
pub(crate) struct PlateOperator {
    grid: GridSpec,
    /// Bending stiffness per point.
    dmap: Vec<f64>,
    /// rho * h per point.
    rho_h: Vec<f64>,
    inv_dx2: f64,
    inv_dy2: f64,
}

impl PlateOperator {
    pub(crate) fn build(plate: &PlateSpec, anomalies: &[AnomalySpec]) -> Result<Self> {
        plate.validate()?;
        for a in anomalies {
            a.validate(plate)?;
        }
        let grid = plate.grid;
        let d0 = plate.bending_stiffness();
        let mut dmap = vec![d0; grid.n()];
        let mut rho_h = vec![plate.density * plate.h; grid.n()];
        for idx in 0..grid.n() {
            let (x, y) = grid.coords(idx);
            for a in anomalies {
                if a.covers(x, y) {
                    // Overlapping anomalies compound multiplicatively.
                    dmap[idx] *= a.stiffness_factor;
                    rho_h[idx] *= a.density_factor;
                }
            }
        }
        Ok(PlateOperator {
            grid,
            dmap,
            rho_h,
            inv_dx2: 1.0 / (grid.dx * grid.dx),
            inv_dy2: 1.0 / (grid.dy * grid.dy),
        })
    }

    /// Symmetric zero-flux graph Laplacian; boundary points simply have
    /// fewer neighbors. Fixed summation order: left, right, down, up.
    fn laplacian(&self, w: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        for iy in 0..ny {
            for ix in 0..nx {
                let i = iy * nx + ix;
                let c = w[i];
                let mut acc = 0.0;
                if ix > 0 {
                    acc += (w[i - 1] - c) * self.inv_dx2;
                }
                if ix + 1 < nx {
                    acc += (w[i + 1] - c) * self.inv_dx2;
                }
                if iy > 0 {
                    acc += (w[i - nx] - c) * self.inv_dy2;
                }
                if iy + 1 < ny {
                    acc += (w[i + nx] - c) * self.inv_dy2;
                }
                out[i] = acc;
            }
        }
    }

    /// Applies the full spatial operator `A w = L (D . (L w))`.
    fn apply(&self, w: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.laplacian(w, scratch);
        for (s, d) in scratch.iter_mut().zip(&self.dmap) {
            *s *= d;
        }
        self.laplacian(scratch, out);
    }

    /// Explicit-scheme stability limit on dt.
    pub(crate) fn dt_max(&self) -> f64 {
        let lap_bound = 2.0 * (2.0 * self.inv_dx2 + 2.0 * self.inv_dy2);
        let d_max = self.dmap.iter().cloned().fold(0.0_f64, f64::max);
        let m_min = self.rho_h.iter().cloned().fold(f64::INFINITY, f64::min);
        2.0 / (d_max / m_min).sqrt() / lap_bound
    }

    /// Discrete leapfrog energy; conserved once the forcing has ended.
    #[cfg(test)]
    pub(crate) fn energy(&self, w_cur: &[f64], w_next: &[f64], dt: f64) -> f64 {
        let n = w_cur.len();
        let mut scratch = vec![0.0; n];
        let mut aw = vec![0.0; n];
        self.apply(w_cur, &mut scratch, &mut aw);
        let mut kinetic = 0.0;
        let mut potential = 0.0;
        for i in 0..n {
            let v = (w_next[i] - w_cur[i]) / dt;
            kinetic += 0.5 * self.rho_h[i] * v * v;
            potential += 0.5 * w_next[i] * aw[i];
        }
        kinetic + potential
    }

    #[cfg(test)]
    pub(crate) fn footprint_changed(&self, pristine: &PlateOperator) -> Vec<usize> {
        (0..self.dmap.len())
            .filter(|&i| self.dmap[i] != pristine.dmap[i] || self.rho_h[i] != pristine.rho_h[i])
            .collect()
    }
}

/// Runs the time-marching scheme, recording every `stride`-th step as a
/// snapshot. The returned cube's sampling interval is `stride * dt`.
/// Passing `dt = 0` selects 0.9x the stability limit automatically.
pub fn simulate_strided(
    plate: &PlateSpec,
    anomalies: &[AnomalySpec],
    excitation: &ExcitationSpec,
    duration: f64,
    dt: f64,
    stride: usize,
) -> Result<WavefieldCube> {
    if !(duration > 0.0) {
        return Err(Error::arg(format!("duration must be > 0, got {duration}")));
    }
    if stride == 0 {
        return Err(Error::arg("snapshot stride must be >= 1"));
    }
    let op = PlateOperator::build(plate, anomalies)?;
    excitation.validate(plate)?;

    let wavelength = plate.flexural_wavelength(excitation.carrier_f);
    let spacing = plate.grid.dx.max(plate.grid.dy);
    let ppw = wavelength / spacing;
    if ppw < 10.0 {
        return Err(Error::arg(format!(
            "grid resolves the excitation wavelength with only {ppw:.1} points per wavelength (need >= 10); \
             wavelength {wavelength:.4} m, spacing {spacing:.4} m"
        )));
    }

    let dt_max = op.dt_max();
    let dt = if dt == 0.0 { 0.9 * dt_max } else { dt };
    if dt > dt_max {
        return Err(Error::Unstable { dt, dt_max });
    }
    if !(dt > 0.0) {
        return Err(Error::arg(format!("dt must be positive, got {dt}")));
    }

    let steps = (duration / dt).ceil() as usize;
    let snapshots = steps / stride;
    if snapshots == 0 {
        return Err(Error::arg("duration too short: no snapshot would be recorded"));
    }

    let grid = plate.grid;
    let n = grid.n();
    let src = nearest_node(&grid, excitation.x, excitation.y);
    let cell_area = grid.dx * grid.dy;

    let mut w_prev = vec![0.0; n];
    let mut w_cur = vec![0.0; n];
    let mut w_next = vec![0.0; n];
    let mut scratch = vec![0.0; n];
    let mut aw = vec![0.0; n];
    let mut data = Array2::zeros((n, snapshots));
    let mut recorded = 0;

    for step in 0..steps {
        let t_cur = step as f64 * dt;
        op.apply(&w_cur, &mut scratch, &mut aw);
        let force = tone_burst(t_cur, excitation);
        for i in 0..n {
            let mut accel = -aw[i] / op.rho_h[i];
            if i == src {
                accel += force / (cell_area * op.rho_h[i]);
            }
            w_next[i] = 2.0 * w_cur[i] - w_prev[i] + dt * dt * accel;
        }
        std::mem::swap(&mut w_prev, &mut w_cur);
        std::mem::swap(&mut w_cur, &mut w_next);
        // w_cur now holds the field at (step + 1) * dt
        if (step + 1) % stride == 0 && recorded < snapshots {
            for i in 0..n {
                data[[i, recorded]] = w_cur[i];
            }
            recorded += 1;
        }
    }

    WavefieldCube::new(grid, dt * stride as f64, data)
}

/// Time-marches the plate model, recording every step.
pub fn simulate(
    plate: &PlateSpec,
    anomalies: &[AnomalySpec],
    excitation: &ExcitationSpec,
    duration: f64,
    dt: f64,
) -> Result<WavefieldCube> {
    simulate_strided(plate, anomalies, excitation, duration, dt, 1)
}

pub(crate) fn nearest_node(grid: &GridSpec, x: f64, y: f64) -> usize {
    let ix = ((x - grid.origin_x) / grid.dx).round().clamp(0.0, (grid.nx - 1) as f64) as usize;
    let iy = ((y - grid.origin_y) / grid.dy).round().clamp(0.0, (grid.ny - 1) as f64) as usize;
    grid.flat(ix, iy)
}

#[cfg(test)]
mod tests;
