//! Scenario description files: plate, excitation, anomalies and run length
//! in one JSON document.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::wavefield::WavefieldCube;
use super::{crack_spec, simulate_strided, AnomalyKind, AnomalySpec, ExcitationSpec, PlateSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlateBlock {
    lx: f64,
    ly: f64,
    h: f64,
    youngs: f64,
    poisson: f64,
    density: f64,
    nx: usize,
    ny: usize,
}

/// One anomaly entry; `crack` is shorthand for a horizontal line anomaly
/// with one-cell halfwidth and a shared stiffness/density factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum AnomalyEntry {
    Point {
        x: f64,
        y: f64,
        radius: f64,
        stiffness_factor: f64,
        density_factor: f64,
    },
    Line {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
        halfwidth: f64,
        stiffness_factor: f64,
        density_factor: f64,
    },
    Crack {
        x0: f64,
        x1: f64,
        y: f64,
        factor: f64,
    },
}

/// Integration length, step and snapshot decimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    /// Simulated time span in seconds.
    pub duration: f64,
    /// Integration step in seconds; 0 selects 0.9x the stability limit.
    #[serde(default)]
    pub dt: f64,
    /// Record every `snapshot_stride`-th step.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

fn default_stride() -> usize {
    1
}

/// A parsed scenario file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    plate: PlateBlock,
    excitation: ExcitationSpec,
    #[serde(default)]
    anomalies: Vec<AnomalyEntry>,
    duration: f64,
    #[serde(default)]
    dt: f64,
    #[serde(default = "default_stride")]
    snapshot_stride: usize,
}

impl Scenario {
    pub fn from_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            kind: "scenario",
            field: "json",
            detail: e.to_string(),
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str(&text)
    }

    pub fn plate(&self) -> Result<PlateSpec> {
        let p = &self.plate;
        PlateSpec::with_grid_points(p.lx, p.ly, p.h, p.youngs, p.poisson, p.density, p.nx, p.ny)
    }

    pub fn excitation(&self) -> ExcitationSpec {
        self.excitation
    }

    pub fn anomalies(&self) -> Result<Vec<AnomalySpec>> {
        let plate = self.plate()?;
        self.anomalies
            .iter()
            .map(|entry| match *entry {
                AnomalyEntry::Point { x, y, radius, stiffness_factor, density_factor } => {
                    Ok(AnomalySpec::point(x, y, radius, stiffness_factor, density_factor))
                }
                AnomalyEntry::Line { x0, y0, x1, y1, halfwidth, stiffness_factor, density_factor } => {
                    Ok(AnomalySpec {
                        kind: AnomalyKind::Line { x0, y0, x1, y1 },
                        radius: halfwidth,
                        stiffness_factor,
                        density_factor,
                    })
                }
                AnomalyEntry::Crack { x0, x1, y, factor } => crack_spec(&plate, x0, x1, y, factor),
            })
            .collect()
    }

    pub fn run_params(&self) -> SimRun {
        SimRun { duration: self.duration, dt: self.dt, snapshot_stride: self.snapshot_stride }
    }

    /// Simulates the scenario end to end.
    pub fn run(&self) -> Result<WavefieldCube> {
        let plate = self.plate()?;
        let anomalies = self.anomalies()?;
        simulate_strided(
            &plate,
            &anomalies,
            &self.excitation,
            self.duration,
            self.dt,
            self.snapshot_stride,
        )
    }
}
