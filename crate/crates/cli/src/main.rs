//! `pap`: runs shaped-field adiabatic passage experiments from a JSON config.
//!
//! The config file is the source of truth. Flags override single scalar
//! fields of it (flag > config > built-in default), and the resolved config
//! is what lands in each output manifest.

mod commands;
mod error;
mod session;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pap::analysis::report::Format;
use pap::dynamics::Frame;

use crate::error::CliResult;

#[derive(Parser)]
#[command(name = "pap", version, about = "Piecewise adiabatic passage into a chosen superposition")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the shaped spectrum, synthesize its field and compare with the analytic train.
    Shape {
        #[command(flatten)]
        common: Common,
        /// Zero the spectral window of this target level.
        #[arg(long, value_name = "LABEL")]
        block: Option<String>,
    },
    /// Propagate the configured pulse and report transfer metrics.
    Propagate {
        #[command(flatten)]
        common: Common,
        /// Propagator (overrides propagator.frame).
        #[arg(long, value_enum)]
        frame: Option<FrameArg>,
    },
    /// Husimi spectrogram of the shaped field on the configured grids.
    Spectrogram {
        #[command(flatten)]
        common: Common,
    },
    /// Chirp/amplitude scan, plus the window-width scan when configured.
    Scan {
        #[command(flatten)]
        common: Common,
        /// Worker threads; defaults to the available parallelism.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Piecewise rotation picture on the Bloch sphere.
    Bloch {
        #[command(flatten)]
        common: Common,
        /// Number of pulses of the reconstructed schedule (overrides bloch.pulses).
        #[arg(long)]
        pulses: Option<usize>,
    },
    /// Check a config and its model without running anything.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
pub struct Common {
    /// Run configuration (JSON).
    pub config: PathBuf,
    /// Output directory (overrides `output`); relative paths sit under the output root.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Root for relative output directories.
    #[arg(long, env = "PAP_OUTPUT_ROOT", default_value = ".")]
    pub output_root: PathBuf,
    /// Use fixed-step RK4 with this step in fs (overrides propagator.stepping).
    #[arg(long, value_name = "DT")]
    pub fixed_step: Option<f64>,
    /// Overrides pulse.scale.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Overrides pulse.alpha_w (fs²).
    #[arg(long, allow_negative_numbers = true)]
    pub alpha_w: Option<f64>,
    /// Overrides pulse.sigma_w (rad/fs).
    #[arg(long)]
    pub sigma_w: Option<f64>,
    #[arg(long, value_enum, default_value = "both")]
    pub format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Rwa,
    Modal,
    Bare,
}

impl From<FrameArg> for Frame {
    fn from(f: FrameArg) -> Self {
        match f {
            FrameArg::Rwa => Frame::RwaAveraged,
            FrameArg::Modal => Frame::Modal,
            FrameArg::Bare => Frame::Bare,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Svg,
    Both,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Svg => Format::Svg,
            FormatArg::Both => Format::Both,
        }
    }
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Shape { common, block } => commands::shape(&common, block.as_deref()),
        Command::Propagate { common, frame } => commands::propagate(&common, frame.map(Frame::from)),
        Command::Spectrogram { common } => commands::spectrogram(&common),
        Command::Scan { common, workers } => commands::scan(&common, workers),
        Command::Bloch { common, pulses } => commands::bloch(&common, pulses),
        Command::Validate { common } => commands::validate(&common),
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
