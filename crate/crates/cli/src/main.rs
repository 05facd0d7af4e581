//! `colorblend`: simulate, analyze and correct color blending on optical
//! see-through displays.
//!
//! Exit codes: 0 success, 1 runtime or pipeline failure, 2 usage or
//! configuration error.

// `!(x > 0.0)` is used on purpose: it rejects NaN along with the rest.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod failure;
mod manifest;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::failure::{CmdResult, Failure};

#[derive(Parser)]
#[command(name = "colorblend", version, about = "Color blending on optical see-through displays")]
struct Cli {
    /// Manifest timestamp, seconds since the Unix epoch.
    /// Defaults to $SOURCE_DATE_EPOCH, else 0, so reruns stay byte-identical.
    #[arg(long, global = true, value_name = "SECONDS")]
    timestamp: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the 27-color test palette with its display-only XYZ.
    Palette {
        /// Display model file (default: sRGB corners, D65 white at 100 cd/m², gamma 2.2).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Write a display model with sRGB corners balanced to D65.
    Model {
        #[arg(long, short)]
        output: PathBuf,
        /// Luminance of full white, cd/m².
        #[arg(long, default_value_t = 100.0)]
        white_luminance: f64,
        #[arg(long, default_value_t = colorblend::display::DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long)]
        force: bool,
    },
    /// Generate synthetic colorimeter readings for the full test grid.
    Simulate {
        /// Simulator config (default: the built-in configuration).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Readings CSV; a manifest is written next to it.
        #[arg(long, short)]
        output: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        force: bool,
    },
    /// Aggregate readings, compare all background pairs and export the
    /// categorized small multiples.
    ///
    /// Output directory layout: cells.csv, shifts.csv, categories.csv,
    /// report.txt, index.html, panels/*.svg, manifest.json.
    Analyze {
        #[arg(long)]
        readings: PathBuf,
        /// Output directory.
        #[arg(long, short)]
        output: PathBuf,
        /// Classifier thresholds (default: built-in).
        #[arg(long)]
        classifier: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Find display commands that best reproduce target colors against a
    /// background. Prints one CSV row per target.
    Correct {
        #[arg(long)]
        model: Option<PathBuf>,
        /// `none`, a background id (looked up in --config) or `xyY:x,y,Y`.
        #[arg(long)]
        background: String,
        /// Simulator config providing background ids (default: built-in).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Palette name or `luv:L,u,v`; repeatable.
        #[arg(long = "target", required = true)]
        targets: Vec<String>,
        /// Residual ΔE at or below which a match counts as exact.
        #[arg(long, default_value_t = 1e-6)]
        tolerance: f64,
        /// Also write the CSV (with a manifest) here.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Achievable perceived gamut against a background.
    Gamut {
        #[arg(long)]
        model: Option<PathBuf>,
        /// `none`, a background id (looked up in --config) or `xyY:x,y,Y`.
        #[arg(long)]
        background: String,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Command levels per channel.
        #[arg(long, default_value_t = 17)]
        samples: usize,
        /// Write the full L*u*v* point cloud as CSV.
        #[arg(long)]
        cloud: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

fn timestamp(flag: Option<u64>) -> CmdResult<u64> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v.trim().parse().map_err(|_| Failure::usage(format!("SOURCE_DATE_EPOCH is not an integer: '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> CmdResult<()> {
    let ts = timestamp(cli.timestamp)?;
    match cli.command {
        Command::Palette { model } => print!("{}", commands::palette_table(model.as_deref())?),
        Command::Model { output, white_luminance, gamma, force } => {
            let report = commands::model(commands::ModelArgs { output, white_luminance, gamma, force, timestamp: ts })?;
            print!("{report}");
        }
        Command::Simulate { config, output, seed, force } => {
            let n = commands::simulate(commands::SimulateArgs {
                config,
                output: output.clone(),
                seed,
                force,
                timestamp: ts,
            })?;
            eprintln!("wrote {n} readings to {}", output.display());
        }
        Command::Analyze { readings, output, classifier, force } => {
            let s = commands::analyze(commands::AnalyzeArgs {
                readings,
                output: output.clone(),
                classifier,
                force,
                timestamp: ts,
            })?;
            for w in &s.warnings {
                eprintln!("warning: {w}");
            }
            eprintln!("{} cells, {} pairs written to {}", s.cells, s.pairs, output.display());
        }
        Command::Correct { model, background, config, targets, tolerance, output, force } => {
            let csv = commands::correct(commands::CorrectArgs {
                model,
                config,
                background,
                targets,
                tolerance,
                output,
                force,
                timestamp: ts,
            })?;
            print!("{csv}");
        }
        Command::Gamut { model, background, config, samples, cloud, force } => {
            let summary = commands::gamut(commands::GamutArgs {
                model,
                config,
                background,
                samples,
                cloud,
                force,
                timestamp: ts,
            })?;
            print!("{summary}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            f.exit_code()
        }
    }
}
