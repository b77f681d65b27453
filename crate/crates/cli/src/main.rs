//! `corrnet`: correlation-network analysis of asset price panels.
//!
//! Exit codes: 0 success, 1 config/input error, 2 numerical failure,
//! 3 partial (some windows failed, others completed).

mod artifacts;
mod config;
mod export;
mod manifest;
mod stages;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use corrnet_core::market_data::synthesize_panel;
use stages::Stage;

/// CLI failure classes, mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Configuration or input-data problem (exit code 1).
    Input(String),
    /// Numerical failure in the analysis (exit code 2).
    Numerical(String),
}

impl CliError {
    pub fn from_core(e: corrnet_core::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Input(e.to_string())
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "corrnet",
    version,
    about = "Correlation-network analysis of asset price panels"
)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed override (Louvain shuffles; `synth` generation).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate inputs and write the filtered per-window panels.
    IngestCheck,
    /// Returns, correlation matrices, and RMT spectra per window.
    Rmt,
    /// Distance matrices and minimum spanning trees per window.
    Graph,
    /// Louvain communities over each window's MST.
    Communities,
    /// Per-community PCA reports and the cross-window consistency table.
    Report,
    /// Full pipeline over all windows, finishing with the run manifest.
    Run,
    /// Generate a synthetic factor-model price panel CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Number of assets.
    #[arg(long)]
    assets: usize,
    /// Number of return days (the panel gets days + 1 dates).
    #[arg(long)]
    days: usize,
    /// Number of shared Gaussian factors (0 = i.i.d. returns).
    #[arg(long, default_value_t = 0)]
    factors: usize,
    /// Factor loading scale; loadings are drawn from [0.8, 1.2] x scale.
    #[arg(long, default_value_t = 0.75)]
    scale: f64,
    /// Output CSV path.
    #[arg(long, default_value = "synthetic_panel.csv")]
    output: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<u8, CliError> {
    if let Command::Synth(args) = &cli.command {
        return synth(args, cli.seed.unwrap_or(0));
    }

    let config_path = cli.config.as_deref().ok_or_else(|| {
        CliError::Input("this subcommand needs --config <path> (TOML pipeline config)".into())
    })?;
    let cfg = config::load_config(config_path, cli.out.as_deref(), cli.seed)?;

    let stage = match cli.command {
        Command::IngestCheck => Stage::Ingest,
        Command::Rmt => Stage::Rmt,
        Command::Graph => Stage::Graph,
        Command::Communities => Stage::Communities,
        Command::Report => Stage::Report,
        Command::Run => Stage::Run,
        Command::Synth(_) => unreachable!("handled above"),
    };
    let code = stages::execute(&cfg, stage)?;
    Ok(code as u8)
}

fn synth(args: &SynthArgs, seed: u64) -> Result<u8, CliError> {
    let panel = synthesize_panel(seed, args.assets, args.days, args.factors, args.scale)
        .map_err(CliError::from_core)?;
    let mut buf = Vec::new();
    panel.write_csv(&mut buf).map_err(CliError::from_core)?;
    artifacts::write_atomic(&args.output, &buf)?;
    // Round-trip check: the file must load back as a valid panel.
    let n = stages::verify_panel_loadable(&args.output)?;
    eprintln!(
        "wrote {} ({n} assets, {} dates)",
        args.output.display(),
        args.days + 1
    );
    Ok(0)
}
