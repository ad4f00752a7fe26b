//! `mts`: command-line driver for the moving-target sensing simulator.
//!
//! Every subcommand reads an optional JSON config, writes its outputs and a
//! `manifest.json` into `--out-dir`, and prints a one-line JSON summary. On
//! failure it prints `{"error": {"kind": ..., "message": ...}}` to stderr and
//! exits nonzero.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mts_core::experiments::{self, ExperimentConfig, Manifest, Until};
use mts_core::scene::snr_to_noise_var;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "mts", version, about = "Moving-target sensing in clutter: simulation and experiments")]
struct Cli {
    /// JSON experiment config (or a run manifest to replay)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the run seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the noise level as SNR in dB (SNR = 1/σ²)
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Target false-alarm probability for the calibrated threshold
    #[arg(long, global = true)]
    p_fa: Option<f64>,
    /// Explicit detection threshold, overriding --p-fa
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Draw a scene and write it with the raw echo of every scan
    Simulate,
    /// Beam scan and clutter-filtered spectrum
    Scan,
    /// Scan, peak search and root-MUSIC estimates
    Estimate,
    /// Full pipeline including GLRT detection
    Detect,
    /// Monte-Carlo ROC curves
    Roc,
    /// Cramér-Rao bound at the configured noise level
    Crb,
    /// Estimation MSE against the bound over an SNR sweep
    SweepSnr,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Scan => "scan",
            Command::Estimate => "estimate",
            Command::Detect => "detect",
            Command::Roc => "roc",
            Command::Crb => "crb",
            Command::SweepSnr => "sweep-snr",
        }
    }
}

fn error_json(kind: &str, message: &str) -> String {
    json!({ "error": { "kind": kind, "message": message } }).to_string()
}

fn load_config(cli: &Cli) -> mts_core::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(snr) = cli.snr_db {
        cfg.system.noise_var = snr_to_noise_var(snr);
    }
    if let Some(p) = cli.p_fa {
        cfg.detector.p_fa = p;
    }
    if cli.gamma.is_some() {
        cfg.detector.gamma = cli.gamma;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> mts_core::Result<serde_json::Value> {
    let cfg = load_config(cli)?;
    let out = &cli.out_dir;
    let summary = |m: &Manifest, extra: serde_json::Value| {
        json!({ "command": m.command, "out_dir": out, "config_hash": m.config_hash, "outputs": m.outputs, "result": extra })
    };
    let pipeline = |until| -> mts_core::Result<serde_json::Value> {
        let (r, m) = experiments::run_and_write(&cfg, until, cli.command.name(), out)?;
        let detected = r.detected().len();
        Ok(summary(&m, json!({ "candidates": r.candidates, "estimates": r.estimates.len(), "detected": detected, "errors": r.errors.len() })))
    };
    match cli.command {
        Command::Simulate => {
            let m = experiments::simulate(&cfg, out)?;
            Ok(summary(&m, json!({})))
        }
        Command::Scan => pipeline(Until::Spectrum),
        Command::Estimate => pipeline(Until::Estimates),
        Command::Detect => pipeline(Until::Detections),
        Command::Roc => {
            let (curves, m) = experiments::write_roc(&cfg, out)?;
            let auc: Vec<_> = curves.iter().map(|c| json!({ "snr_db": c.snr_db, "p_d_at_0.1": c.detection_at(0.1) })).collect();
            Ok(summary(&m, json!(auc)))
        }
        Command::Crb => {
            let (rec, m) = experiments::write_crb(&cfg, out)?;
            Ok(summary(&m, serde_json::to_value(rec)?))
        }
        Command::SweepSnr => {
            let (rep, m) = experiments::write_sweep(&cfg, out)?;
            Ok(summary(&m, json!({ "rows": rep.rows.len(), "failed_trials": rep.failures.iter().map(|f| f.2).sum::<usize>() })))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", error_json("usage", e.to_string().trim()));
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("{}", error_json("threads", &e.to_string()));
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
