use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand};

use collective_recoil::config::load_config;
use collective_recoil::output::{exit_code, run, RunOptions, Subcommand};

#[derive(Parser)]
#[command(name = "recoil", version, about = "Momentum-ladder recoil gain simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for independent parameter points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Suppress the summary on success.
    #[arg(long)]
    quiet: bool,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Steady-state gain at fixed detunings.
    Spectrum(Common),
    /// Chirped sweep in both directions.
    Sweep(Common),
    /// Peak-gain ratio against chirp rate.
    Hysteresis(Common),
    /// Peak-gain ratio against probe power.
    Power(Common),
    /// Strong/weak probe relaxation and its pump-detuning scaling.
    Thermalize(Common),
    /// Photon number of a switching pulse.
    Metrics(Common),
    /// Linear-response gain spectrum.
    Oracle(Common),
}

impl Command {
    fn split(self) -> (Subcommand, Common) {
        match self {
            Command::Spectrum(c) => (Subcommand::Spectrum, c),
            Command::Sweep(c) => (Subcommand::Sweep, c),
            Command::Hysteresis(c) => (Subcommand::Hysteresis, c),
            Command::Power(c) => (Subcommand::Power, c),
            Command::Thermalize(c) => (Subcommand::Thermalize, c),
            Command::Metrics(c) => (Subcommand::Metrics, c),
            Command::Oracle(c) => (Subcommand::Oracle, c),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let (sub, common) = cli.command.split();
    let cfg = match load_config(&common.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions {
        out_dir: common.out_dir.clone(),
        jobs: common.jobs,
    };
    match run(sub, &cfg, &opts) {
        Ok(report) => {
            if !common.quiet {
                for line in &report.summary {
                    println!("{line}");
                }
                println!("wrote {} files to {}", report.files.len(), report.out_dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
