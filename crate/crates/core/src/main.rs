//! Thin command-line front end; all logic lives in the library.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vibrovitals::commands::{self, RunOptions};
use vibrovitals::error::{Error, Result};

#[derive(Parser)]
#[command(
    name = "vibrovitals",
    version,
    about = "Heart and respiratory rate estimation from floor-vibration recordings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-sensor scene with ground truth.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the seed from the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Analyze a directory of sensor waveforms into per-minute vital series.
    Run {
        /// Directory holding pen<P>_sensor<S>.wav files plus layout.json.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Posture annotation CSV; defaults to <data>/annotations.csv.
        #[arg(long)]
        annotations: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Error out when annotations are missing instead of assuming lying.
        #[arg(long)]
        strict_annotations: bool,
        /// Disable behavior compensation (ablation baseline).
        #[arg(long)]
        no_compensation: bool,
    },
    /// Synthesize + analyze across seeds and report aggregate errors.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Comma list ("1,2,3") or range ("0..20") of seeds.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the attenuation coefficient from two simultaneous recordings.
    EstimateAlpha {
        #[arg(long)]
        near: PathBuf,
        #[arg(long)]
        near_distance_m: f64,
        #[arg(long)]
        far: PathBuf,
        #[arg(long)]
        far_distance_m: f64,
    },
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let start: u64 = a
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad seed range start '{a}'")))?;
        let end: u64 = b
            .trim()
            .parse()
            .map_err(|_| Error::config(format!("bad seed range end '{b}'")))?;
        if end <= start {
            return Err(Error::config("seed range end must exceed start"));
        }
        return Ok((start..end).collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<u64>()
                .map_err(|_| Error::config(format!("bad seed '{s}'")))
        })
        .collect()
}

fn command_echo() -> String {
    std::env::args().collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth { config, out, seed } => {
            let summary = commands::cmd_synth(&config, &out, seed, &command_echo())?;
            println!("wrote {} waveform(s) to {}", summary.waveforms.len(), out.display());
        }
        Command::Run {
            data,
            config,
            annotations,
            out,
            strict_annotations,
            no_compensation,
        } => {
            let options = RunOptions {
                annotations_path: annotations,
                strict_annotations,
                no_compensation,
            };
            let summary = commands::cmd_run(&data, &config, &out, &options, &command_echo())?;
            for w in &summary.warnings {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", summary.csv_path.display());
        }
        Command::Bench { config, seeds, out } => {
            let seeds = parse_seeds(&seeds)?;
            let report = commands::cmd_bench(&config, &seeds, &out, &command_echo())?;
            println!(
                "seeds {}: HR MAPE {:.2}% MAE {:.2}/min | RR MAPE {:.2}% MAE {:.2}/min | ablation x{:.2} (HR)",
                report.seeds.len(),
                100.0 * report.hr_mape,
                report.hr_mae,
                100.0 * report.rr_mape,
                report.rr_mae,
                report.ablation.hr_error_ratio
            );
            println!("report in {}", out.display());
        }
        Command::EstimateAlpha {
            near,
            near_distance_m,
            far,
            far_distance_m,
        } => {
            let alpha =
                commands::cmd_estimate_alpha(&near, near_distance_m, &far, far_distance_m)?;
            println!("alpha = {alpha:.6} s/m");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
