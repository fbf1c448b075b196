use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tactile_core::calibration::{CalibratedModel, CalibrationDataset};
use tactile_core::commands::{
    cmd_calibrate_to_file, cmd_estimate, cmd_protocol, cmd_report, cmd_simulate, parse_orders,
    CalibrateOptions,
};
use tactile_core::io::ToolkitConfig;
use tactile_core::physics::LoadScenario;
use tactile_core::{Error, Result};

/// Simulate, calibrate and run a dual-layer soft tactile sensor.
#[derive(Debug, Parser)]
#[command(name = "tactile", version)]
struct Cli {
    /// Flat key = value configuration file; defaults reproduce the prototype.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the amplifier gain (sensing range follows it).
    #[arg(long, global = true)]
    gain: Option<f64>,
    /// Overrides the moving-average window.
    #[arg(long, global = true)]
    window: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a load scenario through the sensor model and emit the ADC stream.
    Simulate {
        /// Load scenario CSV with columns t,force_n,quadrants.
        #[arg(long)]
        scenario: PathBuf,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Emit a simulated 100-press calibration dataset.
    Protocol {
        /// Output file; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Cross-validate polynomial models and persist the best one.
    Calibrate {
        /// Calibration CSV with columns v,force_n and optional weight_gw.
        #[arg(long)]
        dataset: PathBuf,
        /// Candidate orders, e.g. `1..5` or `1,2,4`.
        #[arg(long, default_value = "1..5")]
        orders: String,
        /// Number of shuffled CV repeats.
        #[arg(long)]
        repeats: Option<usize>,
        /// Test on the first fold only in each repeat.
        #[arg(long = "strict-paper-cv")]
        first_fold_only: bool,
        /// Model file to write (TOML).
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Convert a sample stream (file or stdin) into estimate frames.
    Estimate {
        /// Model file written by `calibrate`.
        #[arg(long)]
        model: PathBuf,
        /// Sample stream; `-` or absent reads stdin.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Output file; stdout when absent.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Summarize a frame stream, optionally against a truth scenario.
    Report {
        /// Frame stream; `-` or absent reads stdin.
        #[arg(long)]
        frames: Option<PathBuf>,
        /// Scenario the frames were simulated from.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Require RMSE against the truth scenario.
        #[arg(long)]
        rmse: bool,
    },
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => {
            Box::new(BufWriter::new(File::create(p).map_err(|source| {
                Error::Io {
                    path: Some(p.to_path_buf()),
                    source,
                }
            })?))
        }
        _ => Box::new(io::stdout().lock()),
    })
}

fn open_in(path: Option<&Path>) -> Result<Box<dyn io::BufRead>> {
    Ok(match path {
        Some(p) if p != Path::new("-") => {
            Box::new(BufReader::new(File::open(p).map_err(|source| {
                Error::Io {
                    path: Some(p.to_path_buf()),
                    source,
                }
            })?))
        }
        _ => Box::new(io::stdin().lock()),
    })
}

fn load_config(cli: &Cli) -> Result<ToolkitConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ToolkitConfig::load(p)?,
        None => ToolkitConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(gain) = cli.gain {
        cfg.bridge.amplifier_gain = gain;
    }
    if let Some(w) = cli.window {
        cfg.filter_window = w;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Simulate { scenario, out } => {
            let scenario = LoadScenario::from_csv_path(scenario)?;
            cmd_simulate(&cfg, &scenario, &mut open_out(out.as_deref())?)?;
        }
        Command::Protocol { out } => {
            cmd_protocol(&cfg, &mut open_out(out.as_deref())?)?;
        }
        Command::Calibrate {
            dataset,
            orders,
            repeats,
            first_fold_only,
            out,
        } => {
            let dataset = CalibrationDataset::from_csv_path(dataset)?;
            let opts = CalibrateOptions {
                orders: parse_orders(orders)?,
                repeats: *repeats,
                first_fold_only: *first_fold_only,
                ..CalibrateOptions::default()
            };
            let cal = cmd_calibrate_to_file(&cfg, &dataset, &opts, out)?;
            print!("{}", cal.report.to_table());
            println!("selected: {}", cal.model.model);
        }
        Command::Estimate { model, input, out } => {
            let model = CalibratedModel::load(model)?;
            cmd_estimate(
                &cfg,
                &model,
                open_in(input.as_deref())?,
                &mut open_out(out.as_deref())?,
            )?;
        }
        Command::Report {
            frames,
            truth,
            rmse,
        } => {
            let truth = truth
                .as_deref()
                .map(LoadScenario::from_csv_path)
                .transpose()?;
            let (range, _) = cfg.range_and_resolution()?;
            let summary = cmd_report(open_in(frames.as_deref())?, truth.as_ref(), *rmse, range)?;
            print!("{}", summary.to_text());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
