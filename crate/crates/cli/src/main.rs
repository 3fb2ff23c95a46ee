use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use biphoton_cli::config::ExperimentConfig;
use biphoton_cli::error::CliError;
use biphoton_cli::{presets, scenario};

/// Environment variable consulted for the default output directory.
const OUT_ENV: &str = "BIPHOTON_OUT";

#[derive(Parser)]
#[command(
    name = "biphoton",
    version,
    about = "Simulates a fiber-coupled source of polarization-entangled photon \
             pairs and its measurement bench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute a configuration and write its outputs
    Run {
        /// Path of a TOML experiment configuration
        #[arg(long)]
        config: PathBuf,
        /// Override the configured RNG seed
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (default: $BIPHOTON_OUT, else the working directory)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List or print the published configurations
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
    /// Parse and validate a configuration without running it
    Validate {
        /// Path of a TOML experiment configuration
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum PresetAction {
    /// One line per published preset
    List,
    /// Print a preset's fully resolved configuration
    Show { name: String },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let mut experiment = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                experiment.seed = Some(seed);
            }
            experiment.validate()?;
            let out_dir = out
                .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let (written, summary) = scenario::write_run(&experiment, &out_dir)?;
            for line in &summary {
                println!("{line}");
            }
            for path in &written {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::Preset {
            action: PresetAction::List,
        } => {
            for (name, description) in presets::PRESETS {
                println!("{name:<14} {description}");
            }
            Ok(())
        }
        Command::Preset {
            action: PresetAction::Show { name },
        } => {
            let config = presets::preset(&name)?;
            print!("{}", config.to_toml_string()?);
            Ok(())
        }
        Command::Validate { config } => {
            let experiment = ExperimentConfig::load(&config)?;
            experiment.validate()?;
            println!("configuration OK");
            Ok(())
        }
    }
}
