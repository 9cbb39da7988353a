//! End-to-end pipeline: simulate or load, preprocess, learn, detect,
//! render, with one JSON config and a run manifest.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::learner::{expand_dictionary, learn_two_dict, IterationRecord, TwoDictParams, TwoDictResult};
use crate::simulator::Scenario;
use crate::sparse::{save_coefficients, save_dictionary};
use crate::superatom::{
    build_superatom, detect, render_heatmap_with, save_report, DetectionReport, PartitionGrid,
    SuperAtomParams,
};
use crate::wavefield::{
    bandpass_time, load_cube, load_mask, save_cube, save_mask, Edge, MaskedCube, WavefieldCube,
};

/// Where the wavefield comes from: a scenario to simulate or a cube file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    Scenario(PathBuf),
    Cube(PathBuf),
}

/// One boundary-layer exclusion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionConfig {
    pub side: Edge,
    /// Layer thickness in meters.
    pub thickness: f64,
}

/// Optional temporal band-pass applied before learning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassConfig {
    pub center: f64,
    pub bandwidth: f64,
    pub taps: usize,
}

/// Preprocessing applied between ingestion and learning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    pub truncate_fraction: f64,
    pub exclusions: Vec<ExclusionConfig>,
    pub bandpass: Option<BandpassConfig>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig { truncate_fraction: 0.25, exclusions: Vec::new(), bandpass: None }
    }
}

impl Default for TwoDictParams {
    fn default() -> Self {
        TwoDictParams {
            k1: 100,
            k2: 16,
            lambda: defaults::LAMBDA,
            gamma0: defaults::GAMMA0,
            delta: defaults::DELTA,
            epsilon_nnz: defaults::EPSILON_NNZ,
            max_outer_iters: 12,
            max_alt_iters: 8,
            tol: 1e-4,
            seed: 0,
        }
    }
}

impl Default for SuperAtomParams {
    fn default() -> Self {
        SuperAtomParams {
            m1: 10,
            m2: 5,
            persistence_min: defaults::PERSISTENCE_MIN,
            amplitude_min: defaults::AMPLITUDE_MIN,
            top_q: 1,
        }
    }
}

/// Reference defaults, calibrated on the bundled synthetic scenarios.
pub mod defaults {
    /// l1 weight relative to unit-energy snapshots.
    pub const LAMBDA: f64 = 0.06;
    /// Initial elastic-net weight.
    pub const GAMMA0: f64 = 0.05;
    /// Elastic-net weight increment per outer iteration.
    pub const DELTA: f64 = 0.15;
    /// Sparsity target: mean nonzero entries per sparse atom.
    pub const EPSILON_NNZ: f64 = 20.0;
    /// Minimum atoms active in a partition before it may score.
    pub const PERSISTENCE_MIN: usize = 30;
    /// Aggregated counts at or below this are dropped.
    pub const AMPLITUDE_MIN: f64 = 2.0;
}

/// Fully validated pipeline configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: InputSource,
    pub preprocess: PreprocessConfig,
    pub learn: TwoDictParams,
    pub detect: SuperAtomParams,
    pub out_dir: PathBuf,
}

#[derive(Debug, Default, Deserialize)]
struct RawConfig {
    scenario: Option<PathBuf>,
    cube: Option<PathBuf>,
    #[serde(default)]
    preprocess: Option<RawPreprocess>,
    #[serde(default)]
    learn: Option<RawLearn>,
    #[serde(default)]
    detect: Option<RawDetect>,
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
struct RawPreprocess {
    truncate_fraction: Option<f64>,
    exclusions: Option<Vec<ExclusionConfig>>,
    bandpass: Option<BandpassConfig>,
}

#[derive(Debug, Default, Deserialize)]
struct RawLearn {
    k1: Option<usize>,
    k2: Option<usize>,
    lambda: Option<f64>,
    gamma0: Option<f64>,
    delta: Option<f64>,
    epsilon_nnz: Option<f64>,
    max_outer_iters: Option<usize>,
    max_alt_iters: Option<usize>,
    tol: Option<f64>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
struct RawDetect {
    m1: Option<usize>,
    m2: Option<usize>,
    persistence_min: Option<usize>,
    amplitude_min: Option<f64>,
    top_q: Option<usize>,
}

/// Known keys per config block, used to name every unknown key at once.
fn known_keys(block: &str) -> &'static [&'static str] {
    match block {
        "" => &["scenario", "cube", "preprocess", "learn", "detect", "out_dir"],
        "preprocess" => &["truncate_fraction", "exclusions", "bandpass"],
        "preprocess.bandpass" => &["center", "bandwidth", "taps"],
        "learn" => &[
            "k1", "k2", "lambda", "gamma0", "delta", "epsilon_nnz", "max_outer_iters",
            "max_alt_iters", "tol", "seed",
        ],
        "detect" => &["m1", "m2", "persistence_min", "amplitude_min", "top_q"],
        _ => &[],
    }
}

fn collect_unknown_keys(value: &Value, block: &str, violations: &mut Vec<String>) {
    let Value::Object(map) = value else { return };
    let known: BTreeSet<&str> = known_keys(block).iter().copied().collect();
    for (key, child) in map {
        if !known.contains(key.as_str()) {
            let path = if block.is_empty() { key.clone() } else { format!("{block}.{key}") };
            violations.push(format!("unknown key `{path}`"));
            continue;
        }
        let child_block = if block.is_empty() { key.clone() } else { format!("{block}.{key}") };
        if !known_keys(&child_block).is_empty() {
            collect_unknown_keys(child, &child_block, violations);
        }
    }
}

/// Parses and validates a pipeline config, reporting every violation at
/// once rather than just the first.
pub fn validate_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    validate_config_str(&text)
}

/// As [`validate_config`], from an in-memory JSON document.
pub fn validate_config_str(text: &str) -> Result<PipelineConfig> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Config(vec![format!("JSON syntax: {e}")]))?;

    let mut violations = Vec::new();
    collect_unknown_keys(&value, "", &mut violations);

    let raw: RawConfig = match serde_json::from_value(value) {
        Ok(raw) => raw,
        Err(e) => {
            violations.push(format!("type error: {e}"));
            return Err(Error::Config(violations));
        }
    };

    // Input exclusivity and existence.
    let input = match (&raw.scenario, &raw.cube) {
        (Some(_), Some(_)) => {
            violations.push("exactly one of `scenario` and `cube` must be set, found both".into());
            None
        }
        (None, None) => {
            violations.push("exactly one of `scenario` and `cube` must be set, found neither".into());
            None
        }
        (Some(s), None) => Some(InputSource::Scenario(s.clone())),
        (None, Some(c)) => Some(InputSource::Cube(c.clone())),
    };
    if let Some(src) = &input {
        let (name, p) = match src {
            InputSource::Scenario(p) => ("scenario", p),
            InputSource::Cube(p) => ("cube", p),
        };
        if !p.exists() {
            violations.push(format!("{name} file `{}` does not exist", p.display()));
        }
    }
    if raw.out_dir.is_none() {
        violations.push("`out_dir` is required".into());
    }

    let rp = raw.preprocess.unwrap_or_default();
    let pre_defaults = PreprocessConfig::default();
    let preprocess = PreprocessConfig {
        truncate_fraction: rp.truncate_fraction.unwrap_or(pre_defaults.truncate_fraction),
        exclusions: rp.exclusions.unwrap_or_default(),
        bandpass: rp.bandpass,
    };
    if !(0.0..1.0).contains(&preprocess.truncate_fraction) {
        violations.push(format!(
            "preprocess.truncate_fraction must lie in [0, 1), got {}",
            preprocess.truncate_fraction
        ));
    }
    for (i, ex) in preprocess.exclusions.iter().enumerate() {
        if !(ex.thickness >= 0.0) {
            violations.push(format!(
                "preprocess.exclusions[{i}].thickness must be >= 0, got {}",
                ex.thickness
            ));
        }
    }
    if let Some(bp) = &preprocess.bandpass {
        if bp.taps < 3 || bp.taps % 2 == 0 {
            violations.push(format!("preprocess.bandpass.taps must be odd and >= 3, got {}", bp.taps));
        }
        if !(bp.center > 0.0) || !(bp.bandwidth > 0.0) || bp.center - bp.bandwidth / 2.0 <= 0.0 {
            violations.push(format!(
                "preprocess.bandpass band [{}, {}] Hz must be positive",
                bp.center - bp.bandwidth / 2.0,
                bp.center + bp.bandwidth / 2.0
            ));
        }
    }

    let rl = raw.learn.unwrap_or_default();
    let learn_defaults = TwoDictParams::default();
    let learn = TwoDictParams {
        k1: rl.k1.unwrap_or(learn_defaults.k1),
        k2: rl.k2.unwrap_or(learn_defaults.k2),
        lambda: rl.lambda.unwrap_or(learn_defaults.lambda),
        gamma0: rl.gamma0.unwrap_or(learn_defaults.gamma0),
        delta: rl.delta.unwrap_or(learn_defaults.delta),
        epsilon_nnz: rl.epsilon_nnz.unwrap_or(learn_defaults.epsilon_nnz),
        max_outer_iters: rl.max_outer_iters.unwrap_or(learn_defaults.max_outer_iters),
        max_alt_iters: rl.max_alt_iters.unwrap_or(learn_defaults.max_alt_iters),
        tol: rl.tol.unwrap_or(learn_defaults.tol),
        seed: rl.seed.unwrap_or(learn_defaults.seed),
    };
    if learn.k1 < 1 || learn.k2 < 1 {
        violations.push(format!("learn.k1 and learn.k2 must be >= 1, got {} and {}", learn.k1, learn.k2));
    }
    if !(learn.lambda > 0.0) {
        violations.push(format!("learn.lambda must be > 0, got {}", learn.lambda));
    }
    if !(learn.gamma0 >= 0.0) {
        violations.push(format!("learn.gamma0 must be >= 0, got {}", learn.gamma0));
    }
    if !(learn.delta > 0.0) {
        violations.push(format!("learn.delta must be > 0, got {}", learn.delta));
    }
    if !(learn.epsilon_nnz >= 1.0) {
        violations.push(format!("learn.epsilon_nnz must be >= 1, got {}", learn.epsilon_nnz));
    }
    if !(learn.tol > 0.0) {
        violations.push(format!("learn.tol must be > 0, got {}", learn.tol));
    }
    if learn.max_outer_iters < 1 || learn.max_alt_iters < 1 {
        violations.push("learn.max_outer_iters and learn.max_alt_iters must be >= 1".into());
    }

    let rd = raw.detect.unwrap_or_default();
    let detect_defaults = SuperAtomParams::default();
    let detect = SuperAtomParams {
        m1: rd.m1.unwrap_or(detect_defaults.m1),
        m2: rd.m2.unwrap_or(detect_defaults.m2),
        persistence_min: rd.persistence_min.unwrap_or(detect_defaults.persistence_min),
        amplitude_min: rd.amplitude_min.unwrap_or(detect_defaults.amplitude_min),
        top_q: rd.top_q.unwrap_or(detect_defaults.top_q),
    };
    if detect.m1 < 1 || detect.m2 < 1 {
        violations.push(format!("detect.m1 and detect.m2 must be >= 1, got {} and {}", detect.m1, detect.m2));
    }
    if detect.persistence_min < 1 {
        violations.push("detect.persistence_min must be >= 1".into());
    }
    if !(detect.amplitude_min >= 0.0) {
        violations.push(format!("detect.amplitude_min must be >= 0, got {}", detect.amplitude_min));
    }
    if detect.m1 >= 1 && detect.m2 >= 1 && (detect.top_q < 1 || detect.top_q > detect.m1 * detect.m2) {
        violations.push(format!(
            "detect.top_q must lie in [1, {}], got {}",
            detect.m1 * detect.m2,
            detect.top_q
        ));
    }

    if !violations.is_empty() {
        return Err(Error::Config(violations));
    }
    Ok(PipelineConfig {
        input: input.expect("validated above"),
        preprocess,
        learn,
        detect,
        out_dir: raw.out_dir.expect("validated above"),
    })
}

/// Applies the configured preprocessing chain to a cube.
pub fn preprocess_cube(cube: WavefieldCube, config: &PreprocessConfig) -> Result<MaskedCube> {
    let cube = match &config.bandpass {
        Some(bp) => bandpass_time(&cube, bp.center, bp.bandwidth, bp.taps)?,
        None => cube,
    };
    let mut masked = MaskedCube::all_active(cube).truncate_early(config.truncate_fraction)?;
    for ex in &config.exclusions {
        masked = masked.exclude_boundary_layer(ex.side, ex.thickness)?;
    }
    Ok(masked)
}

/// Run manifest: every effective parameter plus the stage outcomes, written
/// deterministically (no timestamps) so identical runs hash identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: PipelineConfig,
    pub preprocess: PreprocessSummary,
    pub learn: LearnSummary,
    pub verdict: crate::superatom::Verdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PreprocessSummary {
    pub t_start: usize,
    pub snapshots_retained: usize,
    pub active_rows: usize,
    pub total_rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnSummary {
    pub gamma_final: f64,
    pub outer_iters: usize,
    pub rel_error: f64,
    pub truncated: bool,
    pub iterations: Vec<IterationRecord>,
}

fn stage<T>(name: &'static str, result: Result<T>) -> Result<T> {
    result.map_err(|e| {
        log::error!("{name} stage failed: {e}");
        Error::Stage { stage: name, source: Box::new(e) }
    })
}

/// Executes simulate/load, preprocess, learn, detect and render, writing
/// every artifact into `config.out_dir`. Deterministic for a fixed seed
/// and independent of `threads`.
pub fn run_pipeline(config: &PipelineConfig, threads: Option<usize>) -> Result<DetectionReport> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Argument(format!("thread pool: {e}")))?;
            pool.install(|| run_pipeline_inner(config))
        }
        None => run_pipeline_inner(config),
    }
}

fn run_pipeline_inner(config: &PipelineConfig) -> Result<DetectionReport> {
    let out = &config.out_dir;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;

    let cube = stage("input", match &config.input {
        InputSource::Scenario(path) => {
            log::info!("simulating scenario {}", path.display());
            let scenario = Scenario::from_path(path)?;
            let cube = scenario.run()?;
            save_cube(&cube, out.join("cube.wfc"))?;
            Ok(cube)
        }
        InputSource::Cube(path) => {
            log::info!("loading cube {}", path.display());
            load_cube(path)
        }
    })?;

    let masked = stage("preprocess", preprocess_cube(cube, &config.preprocess))?;
    let pre_summary = PreprocessSummary {
        t_start: masked.t_start,
        snapshots_retained: masked.active_snapshots(),
        active_rows: masked.active_count(),
        total_rows: masked.active.len(),
    };
    let pre_path = out.join("preprocessed.wfc");
    stage("preprocess", write_preprocessed(&masked, &pre_path, &mask_path_for(&pre_path)))?;

    log::info!(
        "learning on {} active rows x {} snapshots",
        pre_summary.active_rows,
        pre_summary.snapshots_retained
    );
    let result = stage("learn", learn_two_dict(&masked, &config.learn))?;
    let learn_summary = LearnSummary {
        gamma_final: result.gamma_final,
        outer_iters: result.outer_iters,
        rel_error: result.rel_error,
        truncated: result.truncated,
        iterations: result.iterations.clone(),
    };
    let bundle_dir = out.join("bundle");
    stage("learn", save_bundle(&bundle_dir, &result, &masked, &config.learn))?;

    let grid = masked.cube.grid;
    let d1_full = expand_dictionary(&result.d1, &masked.active);
    let superatom = stage("detect", build_superatom(&d1_full, &grid, &masked.active, &config.detect))?;
    let partitions = stage("detect", PartitionGrid::new(&grid, config.detect.m1, config.detect.m2))?;
    let report = detect(&superatom, &partitions, &grid, config.detect.top_q, &config.detect);
    stage("detect", save_report(&report, out.join("report.json")))?;

    let score_field: Vec<f64> = superatom.scores.iter().map(|&s| s as f64).collect();
    stage("render", render_heatmap_with(&score_field, &grid, Some(&report), out.join("superatom.pgm")))?;
    let last = masked.cube.data.column(masked.cube.t() - 1).to_vec();
    stage("render", render_heatmap_with(&last, &grid, None, out.join("snapshot_final.pgm")))?;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        preprocess: pre_summary,
        learn: learn_summary,
        verdict: report.verdict,
    };
    let manifest_text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Invariant(format!("manifest serialization failed: {e}")))?;
    std::fs::write(out.join("manifest.json"), manifest_text + "\n")
        .map_err(|e| Error::io(out.join("manifest.json"), e))?;

    log::info!("verdict: {:?}", report.verdict);
    Ok(report)
}

/// Writes the preprocessed cube (time-truncated in the file) plus its
/// active-row mask sidecar.
pub fn write_preprocessed(masked: &MaskedCube, cube_path: &Path, mask_path: &Path) -> Result<()> {
    let t = masked.cube.t();
    let cols: Vec<usize> = (masked.t_start..t).collect();
    let data = masked.cube.data.select(ndarray::Axis(1), &cols);
    let truncated = WavefieldCube::new(masked.cube.grid, masked.cube.dt, data)?;
    save_cube(&truncated, cube_path)?;
    save_mask(&masked.active, mask_path)
}

/// Appends `.mask` to a cube path, naming its sidecar.
pub fn mask_path_for(cube_path: &Path) -> PathBuf {
    let mut os = cube_path.as_os_str().to_owned();
    os.push(".mask");
    PathBuf::from(os)
}

/// Reads back a cube + mask pair written by [`write_preprocessed`].
pub fn read_preprocessed(cube_path: &Path, mask_path: Option<&Path>) -> Result<MaskedCube> {
    let cube = load_cube(cube_path)?;
    let n = cube.n();
    let mut masked = MaskedCube::all_active(cube);
    if let Some(mp) = mask_path {
        masked.active = load_mask(mp, n)?;
    }
    Ok(masked)
}

/// Writes the result bundle: expanded dictionaries, coefficients, the
/// active mask and a learn manifest.
pub fn save_bundle(
    dir: &Path,
    result: &TwoDictResult,
    masked: &MaskedCube,
    params: &TwoDictParams,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let d1_full = expand_dictionary(&result.d1, &masked.active);
    let d2_full = expand_dictionary(&result.d2, &masked.active);
    save_dictionary(&d1_full, dir.join("d1.dict"))?;
    save_dictionary(&d2_full, dir.join("d2.dict"))?;
    save_coefficients(&result.a1, dir.join("a1.coef"))?;
    save_coefficients(&result.a2, dir.join("a2.coef"))?;
    save_mask(&masked.active, dir.join("active.mask"))?;
    let manifest = serde_json::json!({
        "params": params,
        "gamma_final": result.gamma_final,
        "outer_iters": result.outer_iters,
        "rel_error": result.rel_error,
        "truncated": result.truncated,
        "iterations": result.iterations,
    });
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Invariant(format!("bundle manifest serialization failed: {e}")))?;
    std::fs::write(dir.join("manifest.json"), text + "\n")
        .map_err(|e| Error::io(dir.join("manifest.json"), e))
}
