//! Super-atom construction and anomaly triangulation.
//!
//! The scan domain is tiled into `m1 x m2` rectangular partitions. For each
//! partition the sparse atoms are swept: if at least `persistence_min`
//! atoms have some nonzero entry inside it, the partition's super-atom
//! entries are set to the per-point count of atoms nonzero there,
//! otherwise the partition is zeroed. Entries at or below `amplitude_min`
//! are then dropped. Partitions that keep a positive aggregate score are
//! flagged; ranking them by that score triangulates the anomalies.

mod render;

pub use render::{render_heatmap, render_heatmap_with};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::{Dictionary, NNZ_EPS};
use crate::wavefield::GridSpec;

/// Rectangular tiling of the grid; partitions at the far edges absorb the
/// remainder when the point counts do not divide evenly.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionGrid {
    pub m1: usize,
    pub m2: usize,
    nx: usize,
    ny: usize,
    /// Flat point index to partition index `py * m1 + px`.
    assignment: Vec<usize>,
}

impl PartitionGrid {
    pub fn new(grid: &GridSpec, m1: usize, m2: usize) -> Result<Self> {
        if m1 < 1 || m2 < 1 {
            return Err(Error::arg(format!("partition counts must be >= 1, got {m1} x {m2}")));
        }
        if m1 > grid.nx || m2 > grid.ny {
            return Err(Error::arg(format!(
                "partition counts {m1} x {m2} exceed the grid {} x {}",
                grid.nx, grid.ny
            )));
        }
        let base_w = grid.nx / m1;
        let base_h = grid.ny / m2;
        let assignment = (0..grid.n())
            .map(|idx| {
                let (ix, iy) = grid.unflat(idx);
                let px = (ix / base_w).min(m1 - 1);
                let py = (iy / base_h).min(m2 - 1);
                py * m1 + px
            })
            .collect();
        Ok(PartitionGrid { m1, m2, nx: grid.nx, ny: grid.ny, assignment })
    }

    /// Total partition count `M = m1 * m2`.
    pub fn m(&self) -> usize {
        self.m1 * self.m2
    }

    pub fn partition_of(&self, idx: usize) -> usize {
        self.assignment[idx]
    }

    /// Inclusive column index range of partition `k`.
    pub fn col_range(&self, k: usize) -> (usize, usize) {
        let px = k % self.m1;
        let base_w = self.nx / self.m1;
        let start = px * base_w;
        let end = if px + 1 == self.m1 { self.nx - 1 } else { (px + 1) * base_w - 1 };
        (start, end)
    }

    /// Inclusive row index range of partition `k`.
    pub fn row_range(&self, k: usize) -> (usize, usize) {
        let py = k / self.m1;
        let base_h = self.ny / self.m2;
        let start = py * base_h;
        let end = if py + 1 == self.m2 { self.ny - 1 } else { (py + 1) * base_h - 1 };
        (start, end)
    }

    /// Flat indices of the points in partition `k`, in grid order.
    pub fn points_in(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.assignment
            .iter()
            .enumerate()
            .filter_map(move |(idx, &p)| (p == k).then_some(idx))
    }
}

/// Thresholds of the aggregation step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuperAtomParams {
    pub m1: usize,
    pub m2: usize,
    /// Minimum number of atoms that must be active in a partition.
    pub persistence_min: usize,
    /// Per-entry threshold applied to the aggregated counts.
    pub amplitude_min: f64,
    /// Number of most-anomalous partitions to report.
    pub top_q: usize,
}

impl SuperAtomParams {
    pub fn validate(&self) -> Result<()> {
        if self.persistence_min < 1 {
            return Err(Error::arg("persistence_min must be >= 1"));
        }
        if !(self.amplitude_min >= 0.0) {
            return Err(Error::arg(format!("amplitude_min must be >= 0, got {}", self.amplitude_min)));
        }
        let m = self.m1 * self.m2;
        if self.top_q < 1 || self.top_q > m {
            return Err(Error::arg(format!("top_q must lie in [1, {m}], got {}", self.top_q)));
        }
        Ok(())
    }
}

/// The aggregated persistence map and the partitions it flags.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperAtom {
    /// Per grid point: number of atoms nonzero there, gated by partition
    /// persistence and amplitude thresholding. Zero at masked points.
    pub scores: Vec<u32>,
    /// Sum of scores per partition.
    pub partition_scores: Vec<u64>,
    /// Partitions with a positive aggregate score, ascending.
    pub flagged: Vec<usize>,
    /// Partitions with no active points, skipped by the sweep.
    pub skipped: Vec<usize>,
}

/// Builds the super-atom from a full-grid sparse dictionary.
///
/// `d1` must be expanded to the full grid (one row per grid point; masked
/// rows all zero). Masked points count as zero entries and cannot
/// contribute to persistence.
pub fn build_superatom(
    d1: &Dictionary,
    grid: &GridSpec,
    active: &[bool],
    params: &SuperAtomParams,
) -> Result<SuperAtom> {
    params.validate()?;
    if d1.rows() != grid.n() || active.len() != grid.n() {
        return Err(Error::arg(format!(
            "dictionary rows ({}) and mask length ({}) must equal the grid point count ({})",
            d1.rows(),
            active.len(),
            grid.n()
        )));
    }
    let partitions = PartitionGrid::new(grid, params.m1, params.m2)?;
    let m = partitions.m();
    let k1 = d1.k();

    let mut scores = vec![0u32; grid.n()];
    let mut skipped = Vec::new();

    for k in 0..m {
        let points: Vec<usize> = partitions.points_in(k).filter(|&p| active[p]).collect();
        if points.is_empty() {
            skipped.push(k);
            continue;
        }
        // Persistence: how many atoms have at least one nonzero here.
        let mut active_atoms = 0usize;
        for j in 0..k1 {
            if points.iter().any(|&p| d1.atoms[[p, j]].abs() > NNZ_EPS) {
                active_atoms += 1;
            }
        }
        if active_atoms < params.persistence_min {
            continue;
        }
        // Aggregate: per point, the count of atoms nonzero there.
        for &p in &points {
            let mut count = 0u32;
            for j in 0..k1 {
                if d1.atoms[[p, j]].abs() > NNZ_EPS {
                    count += 1;
                }
            }
            scores[p] = count;
        }
    }

    // Amplitude thresholding acts on the aggregated integer counts.
    for s in &mut scores {
        if (*s as f64) <= params.amplitude_min {
            *s = 0;
        }
    }

    let mut partition_scores = vec![0u64; m];
    for (idx, &s) in scores.iter().enumerate() {
        partition_scores[partitions.partition_of(idx)] += s as u64;
    }
    let flagged: Vec<usize> = (0..m).filter(|&k| partition_scores[k] > 0).collect();

    Ok(SuperAtom { scores, partition_scores, flagged, skipped })
}

/// Verdict of a detection run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Anomalous,
    Pristine,
}

/// One reported partition with its physical extent and centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedPartition {
    /// Partition index `py * m1 + px` (0-based).
    pub partition: usize,
    /// Inclusive grid column range [first, last].
    pub col_range: [usize; 2],
    /// Inclusive grid row range [first, last].
    pub row_range: [usize; 2],
    /// Physical bounding box in meters: [x0, y0, x1, y1].
    pub bbox_m: [f64; 4],
    /// Score-weighted centroid in meters.
    pub centroid_m: [f64; 2],
    /// Aggregate super-atom score of the partition.
    pub score: u64,
}

/// Parameters echoed into a detection report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub version: String,
    pub verdict: Verdict,
    /// Most anomalous partitions, strongest first.
    pub partitions: Vec<FlaggedPartition>,
    /// Partitions that contained no active points.
    pub skipped_partitions: Vec<usize>,
    pub params: SuperAtomParams,
}

/// Ranks the flagged partitions by aggregate score and reports the top
/// `top_q` with physical coordinates. An empty flagged set gives the
/// pristine verdict.
pub fn detect(
    superatom: &SuperAtom,
    partitions: &PartitionGrid,
    grid: &GridSpec,
    top_q: usize,
    params: &SuperAtomParams,
) -> DetectionReport {
    let mut ranked: Vec<usize> = superatom.flagged.clone();
    ranked.sort_by(|&a, &b| {
        superatom.partition_scores[b]
            .cmp(&superatom.partition_scores[a])
            .then(a.cmp(&b))
    });
    ranked.truncate(top_q);

    let reported: Vec<FlaggedPartition> = ranked
        .iter()
        .map(|&k| {
            let (c0, c1) = partitions.col_range(k);
            let (r0, r1) = partitions.row_range(k);
            let mut wsum = 0.0;
            let mut cx = 0.0;
            let mut cy = 0.0;
            for p in partitions.points_in(k) {
                let w = superatom.scores[p] as f64;
                if w > 0.0 {
                    let (x, y) = grid.coords(p);
                    wsum += w;
                    cx += w * x;
                    cy += w * y;
                }
            }
            debug_assert!(wsum > 0.0, "flagged partition has zero score mass");
            FlaggedPartition {
                partition: k,
                col_range: [c0, c1],
                row_range: [r0, r1],
                bbox_m: [grid.x(c0), grid.y(r0), grid.x(c1), grid.y(r1)],
                centroid_m: [cx / wsum, cy / wsum],
                score: superatom.partition_scores[k],
            }
        })
        .collect();

    DetectionReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        verdict: if reported.is_empty() { Verdict::Pristine } else { Verdict::Anomalous },
        partitions: reported,
        skipped_partitions: superatom.skipped.clone(),
        params: *params,
    }
}

/// Writes a report as pretty-printed JSON.
pub fn save_report(report: &DetectionReport, path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Invariant(format!("report serialization failed: {e}")))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_report(path: impl AsRef<std::path::Path>) -> Result<DetectionReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format {
        kind: "report",
        field: "json",
        detail: e.to_string(),
    })
}
