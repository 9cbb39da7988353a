//! Command-line frontend: simulate, preprocess, learn, detect, render, or
//! run the whole pipeline from one config file.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};

use wavesift::learner::{learn_two_dict, tune_lambda, TwoDictParams};
use wavesift::pipeline::{
    self, defaults, mask_path_for, read_preprocessed, run_pipeline, save_bundle, validate_config,
    write_preprocessed, BandpassConfig, ExclusionConfig, PreprocessConfig,
};
use wavesift::simulator::Scenario;
use wavesift::sparse::load_dictionary;
use wavesift::superatom::{
    build_superatom, detect, render_heatmap, render_heatmap_with, save_report, DetectionReport,
    PartitionGrid, SuperAtomParams, Verdict,
};
use wavesift::wavefield::{export_csv, load_cube, load_mask, save_cube, Edge};

#[derive(Parser)]
#[command(name = "wavesift", version, about = "Wavefield dictionary learning and anomaly detection")]
struct Cli {
    /// Worker threads (default: physical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a plate scenario into a wavefield cube.
    Simulate {
        /// Scenario description file (JSON).
        #[arg(long)]
        scenario: PathBuf,
        /// Output cube path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Truncate, exclude boundary layers and optionally band-pass a cube.
    Preprocess {
        #[arg(long)]
        cube: PathBuf,
        /// Fraction of leading snapshots to drop.
        #[arg(long, default_value_t = 0.25)]
        truncate_fraction: f64,
        /// Boundary exclusion as `side:thickness_m`; repeatable.
        #[arg(long = "exclude", value_parser = parse_exclusion)]
        exclusions: Vec<ExclusionConfig>,
        /// Band-pass as `center_hz:bandwidth_hz:taps`.
        #[arg(long, value_parser = parse_bandpass)]
        bandpass: Option<BandpassConfig>,
        /// Output cube path; the mask sidecar gets a `.mask` suffix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Learn the sparse + diffuse decomposition of a preprocessed cube.
    Learn {
        #[arg(long)]
        cube: PathBuf,
        /// Active-row mask sidecar; all rows active when omitted.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        k1: usize,
        #[arg(long, default_value_t = 16)]
        k2: usize,
        #[arg(long, default_value_t = defaults::LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = defaults::GAMMA0)]
        gamma0: f64,
        #[arg(long, default_value_t = defaults::DELTA)]
        delta: f64,
        #[arg(long = "eps-nnz", default_value_t = defaults::EPSILON_NNZ)]
        epsilon_nnz: f64,
        #[arg(long, default_value_t = 12)]
        max_outer_iters: usize,
        #[arg(long, default_value_t = 8)]
        max_alt_iters: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Tune lambda by bisection until the decomposition's relative
        /// error is within 0.02 of this target, instead of using --lambda.
        #[arg(long)]
        tune_lambda_to: Option<f64>,
        /// Output bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the super-atom from a sparse dictionary and report anomalies.
    Detect {
        /// Sparse dictionary file (full-grid rows).
        #[arg(long)]
        dict: PathBuf,
        /// Cube file providing the grid geometry.
        #[arg(long)]
        grid: PathBuf,
        /// Active-row mask; all rows active when omitted.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        m1: usize,
        #[arg(long, default_value_t = 5)]
        m2: usize,
        #[arg(long, default_value_t = defaults::PERSISTENCE_MIN)]
        persistence_min: usize,
        #[arg(long, default_value_t = defaults::AMPLITUDE_MIN)]
        amplitude_min: f64,
        #[arg(long, default_value_t = 1)]
        top_q: usize,
        /// Report output path (JSON).
        #[arg(long)]
        out: PathBuf,
        /// Optional super-atom heatmap (PGM).
        #[arg(long)]
        heatmap: Option<PathBuf>,
    },
    /// Run the full pipeline from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the learn seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output directory from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Render a cube snapshot as a PGM image or export the cube as CSV.
    Render {
        #[arg(long)]
        cube: PathBuf,
        /// Snapshot index (default: last).
        #[arg(long)]
        snapshot: Option<usize>,
        /// PGM output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// CSV export path (x, y, then all samples per row).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn parse_exclusion(s: &str) -> Result<ExclusionConfig, String> {
    let (side, thickness) = s
        .split_once(':')
        .ok_or_else(|| format!("expected side:thickness_m, got `{s}`"))?;
    let side: Edge = side.parse().map_err(|e| format!("{e}"))?;
    let thickness: f64 = thickness.parse().map_err(|e| format!("bad thickness: {e}"))?;
    Ok(ExclusionConfig { side, thickness })
}

fn parse_bandpass(s: &str) -> Result<BandpassConfig, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected center_hz:bandwidth_hz:taps, got `{s}`"));
    }
    Ok(BandpassConfig {
        center: parts[0].parse().map_err(|e| format!("bad center: {e}"))?,
        bandwidth: parts[1].parse().map_err(|e| format!("bad bandwidth: {e}"))?,
        taps: parts[2].parse().map_err(|e| format!("bad taps: {e}"))?,
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let threads = cli.threads.unwrap_or_else(num_cpus::get_physical);
    if let Err(e) = rayon_pool(threads) {
        eprintln!("error: {e}");
        return ExitCode::from(3);
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .downcast_ref::<wavesift::Error>()
                .is_some_and(|err| matches!(err, wavesift::Error::Config(_)));
            ExitCode::from(if config_error { 2 } else { 3 })
        }
    }
}

fn rayon_pool(threads: usize) -> Result<()> {
    wavesift::rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| anyhow!("failed to build thread pool: {e}"))
}

fn print_report(report: &DetectionReport) {
    match report.verdict {
        Verdict::Pristine => println!("verdict: pristine (no partition flagged)"),
        Verdict::Anomalous => {
            println!("verdict: anomalous; top partitions:");
            for fp in &report.partitions {
                println!(
                    "  partition {:>3}  score {:>6}  centroid ({:.4}, {:.4}) m",
                    fp.partition, fp.score, fp.centroid_m[0], fp.centroid_m[1]
                );
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate { scenario, out } => {
            let scenario = Scenario::from_path(&scenario)?;
            let cube = scenario.run()?;
            save_cube(&cube, &out)?;
            println!(
                "wrote {} ({} points x {} snapshots, dt = {:.3e} s)",
                out.display(),
                cube.n(),
                cube.t(),
                cube.dt
            );
            Ok(())
        }
        Command::Preprocess { cube, truncate_fraction, exclusions, bandpass, out } => {
            let cube = load_cube(&cube)?;
            let config = PreprocessConfig { truncate_fraction, exclusions, bandpass };
            let masked = pipeline::preprocess_cube(cube, &config)?;
            write_preprocessed(&masked, &out, &mask_path_for(&out))?;
            println!(
                "wrote {} ({} active rows, {} snapshots retained)",
                out.display(),
                masked.active_count(),
                masked.active_snapshots()
            );
            Ok(())
        }
        Command::Learn {
            cube,
            mask,
            k1,
            k2,
            lambda,
            gamma0,
            delta,
            epsilon_nnz,
            max_outer_iters,
            max_alt_iters,
            tol,
            seed,
            tune_lambda_to,
            out,
        } => {
            let masked = read_preprocessed(&cube, mask.as_deref())?;
            let params = TwoDictParams {
                k1,
                k2,
                lambda,
                gamma0,
                delta,
                epsilon_nnz,
                max_outer_iters,
                max_alt_iters,
                tol,
                seed,
            };
            let (params, result) = match tune_lambda_to {
                Some(target) => {
                    let (tuned, result) = tune_lambda(&masked, &params, target, 0.02, 12)?;
                    println!("tuned lambda = {tuned:.6}");
                    (TwoDictParams { lambda: tuned, ..params }, result)
                }
                None => (params, learn_two_dict(&masked, &params)?),
            };
            save_bundle(&out, &result, &masked, &params)?;
            println!(
                "wrote bundle {} (gamma_final = {:.4}, outer iters = {}, rel_error = {:.4}{})",
                out.display(),
                result.gamma_final,
                result.outer_iters,
                result.rel_error,
                if result.truncated { ", truncated" } else { "" }
            );
            Ok(())
        }
        Command::Detect {
            dict,
            grid,
            mask,
            m1,
            m2,
            persistence_min,
            amplitude_min,
            top_q,
            out,
            heatmap,
        } => {
            let d1 = load_dictionary(&dict)?;
            let gspec = load_cube(&grid)?.grid;
            let active = match mask {
                Some(mp) => load_mask(&mp, gspec.n())?,
                None => vec![true; gspec.n()],
            };
            let params = SuperAtomParams { m1, m2, persistence_min, amplitude_min, top_q };
            let superatom = build_superatom(&d1, &gspec, &active, &params)?;
            let partitions = PartitionGrid::new(&gspec, m1, m2)?;
            let report = detect(&superatom, &partitions, &gspec, top_q, &params);
            save_report(&report, &out)?;
            if let Some(hp) = heatmap {
                let field: Vec<f64> = superatom.scores.iter().map(|&s| s as f64).collect();
                render_heatmap_with(&field, &gspec, Some(&report), &hp)?;
            }
            print_report(&report);
            Ok(())
        }
        Command::Run { config, seed, out_dir } => {
            let mut config = validate_config(&config)?;
            if let Some(seed) = seed {
                config.learn.seed = seed;
            }
            if let Some(dir) = out_dir {
                config.out_dir = dir;
            }
            let report = run_pipeline(&config, None)?;
            print_report(&report);
            println!("artifacts in {}", config.out_dir.display());
            Ok(())
        }
        Command::Render { cube, snapshot, out, csv } => {
            if out.is_none() && csv.is_none() {
                return Err(anyhow!("render needs --out and/or --csv"));
            }
            let cube = load_cube(&cube)?;
            if let Some(csv_path) = csv {
                export_csv(&cube, &csv_path)?;
                println!("wrote {}", csv_path.display());
            }
            if let Some(out) = out {
                let t = snapshot.unwrap_or(cube.t() - 1);
                if t >= cube.t() {
                    return Err(anyhow!("snapshot {t} out of range (cube has {})", cube.t()));
                }
                let field = cube.data.column(t).to_vec();
                render_heatmap(&field, &cube.grid, &out)?;
                println!("wrote {} (snapshot {t})", out.display());
            }
            Ok(())
        }
    }
}
