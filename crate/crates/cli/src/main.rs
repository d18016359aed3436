//! Experiment harness for the sampling-based low-rank arithmetic library.

mod config;
mod experiment;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;

use config::ExperimentConfig;
use sqla::io::Manifest;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    GuaranteeFailure(String),
    Io(String),
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn validation_from(e: impl fmt::Display) -> Self {
        CliError::Validation(e.to_string())
    }

    pub fn io_from(e: impl fmt::Display) -> Self {
        CliError::Io(e.to_string())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::GuaranteeFailure(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::GuaranteeFailure(m) => write!(f, "guarantee check failed: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "sqla",
    about = "Sampling-based sublinear low-rank matrix arithmetic: experiments and verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic matrix with a prescribed spectrum and write it
    /// to disk (Matrix Market + binary + manifest).
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        rows: usize,
        #[arg(long, default_value_t = 200)]
        cols: usize,
        #[arg(long, default_value_t = 4)]
        rank: usize,
        #[arg(long, default_value_t = 1.0)]
        sigma_min: f64,
        #[arg(long, default_value_t = 2.0)]
        sigma_max: f64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Generate a Hermitian matrix (spectrum = eigenvalues).
        #[arg(long, default_value_t = false)]
        hermitian: bool,
    },
    /// Run an experiment described by a key=value config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Oracle verification: on | off.
        #[arg(long)]
        oracle: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Double sketch sizes until the oracle pass-rate target is reached on
    /// ten calibration instances; write the resulting constants map.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 0.9)]
        target_rate: f64,
        #[arg(long, default_value_t = 12)]
        max_doublings: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate trial CSVs under a directory into a human-readable summary.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen {
            out,
            rows,
            cols,
            rank,
            sigma_min,
            sigma_max,
            noise,
            seed,
            hermitian,
        } => cmd_gen(out, rows, cols, rank, sigma_min, sigma_max, noise, seed, hermitian),
        Command::Run {
            config,
            seed,
            trials,
            jobs,
            oracle,
            out,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(t) = trials {
                cfg.trials = t.max(1);
            }
            if let Some(j) = jobs {
                cfg.jobs = j.max(1);
            }
            if let Some(o) = oracle {
                cfg.oracle = o != "off";
            }
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            cmd_run(&cfg)
        }
        Command::Calibrate {
            config,
            target_rate,
            max_doublings,
            out,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(dir) = out {
                cfg.out_dir = dir;
            }
            cmd_calibrate(&cfg, target_rate, max_doublings)
        }
        Command::Report { dir } => report::cmd_report(&dir),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    out: PathBuf,
    rows: usize,
    cols: usize,
    rank: usize,
    sigma_min: f64,
    sigma_max: f64,
    noise: f64,
    seed: u64,
    hermitian: bool,
) -> Result<(), CliError> {
    if rank == 0 || sigma_min <= 0.0 || sigma_max < sigma_min {
        return Err(CliError::validation(
            "need rank >= 1 and 0 < sigma_min <= sigma_max",
        ));
    }
    std::fs::create_dir_all(&out).map_err(CliError::io_from)?;
    let spectrum = config::geometric_spectrum(rank, sigma_min, sigma_max);
    let mut rng = sqla::rng::rng_for(seed, 0);
    let a = if hermitian {
        sqla::synth::gen_hermitian(rows, &spectrum, false, &mut rng)
    } else {
        let spec = sqla::synth::SynthSpec {
            rows,
            cols,
            spectrum: spectrum.clone(),
            noise,
            complex_field: false,
        };
        sqla::synth::gen_matrix(&spec, &mut rng)
    };
    sqla::io::write_matrix_market(&out.join("matrix.mtx"), &a).map_err(CliError::io_from)?;
    sqla::io::write_binary_matrix(&out.join("matrix.sqla"), &a).map_err(CliError::io_from)?;
    let mut manifest = Manifest::new();
    manifest.insert("rows".into(), rows.to_string());
    manifest.insert("cols".into(), cols.to_string());
    manifest.insert("rank".into(), rank.to_string());
    manifest.insert("seed".into(), seed.to_string());
    manifest.insert("noise".into(), noise.to_string());
    manifest.insert("hermitian".into(), hermitian.to_string());
    manifest.insert(
        "spectrum".into(),
        spectrum
            .iter()
            .map(|s| format!("{s}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    manifest.insert("frobenius".into(), format!("{}", a.norm()));
    sqla::io::write_manifest(&out.join("matrix.manifest"), &manifest).map_err(CliError::io_from)?;
    println!(
        "wrote {rows}x{cols} matrix (rank {rank}, ||A||_F = {:.4}) to {}",
        a.norm(),
        out.display()
    );
    let _ = Complex64::new(0.0, 0.0);
    Ok(())
}

fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<experiment::TrialRow>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(CliError::validation_from)?;
    let mut rows: Vec<(usize, Result<experiment::TrialRow, CliError>)> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| (t, experiment::run_trial(cfg, t)))
            .collect()
    });
    rows.sort_by_key(|(t, _)| *t);
    rows.into_iter().map(|(_, r)| r).collect()
}

fn cmd_run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(CliError::io_from)?;
    let rows = run_trials(cfg)?;
    let mut csv = String::from(experiment::CSV_HEADER);
    csv.push('\n');
    let mut timings = String::from(experiment::TIMING_HEADER);
    timings.push('\n');
    for row in &rows {
        csv.push_str(&row.csv_line());
        csv.push('\n');
        timings.push_str(&row.timing_line());
        timings.push('\n');
    }
    std::fs::write(cfg.out_dir.join("trials.csv"), &csv).map_err(CliError::io_from)?;
    std::fs::write(cfg.out_dir.join("timings.csv"), &timings).map_err(CliError::io_from)?;

    let passes = rows.iter().filter(|r| r.pass).count();
    let rate = passes as f64 / rows.len() as f64;
    let delta = cfg.param("delta", 0.1);
    let slack = 3.0 * (delta / rows.len() as f64).sqrt();
    let mut manifest = Manifest::new();
    manifest.insert("pipeline".into(), cfg.pipeline.clone());
    manifest.insert("trials".into(), rows.len().to_string());
    manifest.insert("seed".into(), cfg.seed.to_string());
    manifest.insert("pass_rate".into(), format!("{rate}"));
    manifest.insert("required_rate".into(), format!("{}", 1.0 - delta - slack));
    manifest.insert("oracle".into(), cfg.oracle.to_string());
    sqla::io::write_manifest(&cfg.out_dir.join("summary.manifest"), &manifest)
        .map_err(CliError::io_from)?;

    println!(
        "{}: {passes}/{} trials passed (rate {rate:.3})",
        cfg.pipeline,
        rows.len()
    );
    if cfg.oracle && rate < 1.0 - delta - slack {
        return Err(CliError::GuaranteeFailure(format!(
            "pass rate {rate:.3} below 1 - delta - slack = {:.3}",
            1.0 - delta - slack
        )));
    }
    Ok(())
}

fn cmd_calibrate(
    cfg: &ExperimentConfig,
    target_rate: f64,
    max_doublings: usize,
) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out_dir).map_err(CliError::io_from)?;
    let mut calib = cfg.clone();
    calib.trials = 10;
    calib.oracle = true;
    let mut multiplier = calib.constant("size_multiplier", 1.0);
    for round in 0..=max_doublings {
        calib
            .constants
            .insert("size_multiplier".into(), multiplier);
        let rows = run_trials(&calib)?;
        let rate = rows.iter().filter(|r| r.pass).count() as f64 / rows.len() as f64;
        println!("calibrate round {round}: multiplier {multiplier} -> pass rate {rate:.2}");
        if rate >= target_rate {
            let mut manifest = Manifest::new();
            manifest.insert("pipeline".into(), cfg.pipeline.clone());
            manifest.insert("constant_size_multiplier".into(), format!("{multiplier}"));
            manifest.insert("pass_rate".into(), format!("{rate}"));
            manifest.insert("rounds".into(), round.to_string());
            sqla::io::write_manifest(&cfg.out_dir.join("constants.manifest"), &manifest)
                .map_err(CliError::io_from)?;
            println!("calibrated: size_multiplier = {multiplier}");
            return Ok(());
        }
        multiplier *= 2.0;
    }
    Err(CliError::GuaranteeFailure(format!(
        "calibration did not converge after {max_doublings} doublings"
    )))
}
