//! nvforge: reproducible NV-ensemble creation and quantum-memory design
//! runs from one configuration file.

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};
use commands::{OutputFormat, Scenario, SweepAxis, SweepSpec};
use config::RunConfig;
use error::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "nvforge",
    version,
    about = "NV color-center ensemble creation and quantum-memory design toolkit"
)]
struct Cli {
    /// JSON run configuration (strict schema).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the global RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file, or directory to place the default file name in.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format of tabular results.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the implantation-damage Monte Carlo and write a depth profile.
    Damage {
        /// Projectile species (He or H).
        #[arg(long)]
        ion: Option<String>,
        /// Beam energy in MeV.
        #[arg(long)]
        energy_mev: Option<f64>,
        /// Number of simulated ions.
        #[arg(long)]
        ions: Option<u64>,
        /// Implanted fluence, ions/cm^2 (used for the density summary).
        #[arg(long)]
        fluence: Option<f64>,
    },
    /// Anneal a vacancy/nitrogen layer into NV and GR1 populations.
    Anneal {
        /// Pre-anneal vacancy density, cm^-3.
        #[arg(long)]
        vacancy_density: f64,
        /// Substitutional nitrogen density, cm^-3 (default from config).
        #[arg(long)]
        nitrogen_density: Option<f64>,
    },
    /// Sweep fluence or excitation power and tabulate the observables.
    Sweep {
        #[arg(long, value_enum, default_value_t = SweepAxis::Fluence)]
        axis: SweepAxis,
        /// Comma-separated axis values.
        #[arg(long)]
        values: Option<String>,
        /// Log-spaced axis values as lo:hi:n.
        #[arg(long)]
        log_range: Option<String>,
        /// Named value grid (paper-fig4).
        #[arg(long)]
        preset: Option<String>,
        /// Fixed fluence for power sweeps, ions/cm^2.
        #[arg(long)]
        fluence: Option<f64>,
    },
    /// Fit emission lines to a spectrum CSV.
    Fit {
        /// Spectrum CSV with columns wavelength_nm,counts.
        #[arg(long)]
        spectrum: PathBuf,
        /// JSON array of initial line guesses.
        #[arg(long)]
        initial: PathBuf,
    },
    /// Evaluate the quantum-memory figures of merit.
    QmemReport {
        /// Ensemble scenario overriding the config.
        #[arg(long, value_enum)]
        scenario: Option<Scenario>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.rng_seed = seed;
    }

    match cli.command {
        Command::Damage { ion, energy_mev, ions, fluence } => {
            if let Some(ion) = ion {
                config.beam.species = ion;
            }
            if let Some(mev) = energy_mev {
                config.beam.energy_ev = mev * 1e6;
            }
            if let Some(f) = fluence {
                config.beam.fluence_cm2 = f;
            }
            if let Some(n) = ions {
                config.transport.ion_count = n;
            }
            commands::cmd_damage(&config, cli.out.as_deref(), cli.format)
        }
        Command::Anneal { vacancy_density, nitrogen_density } => {
            commands::cmd_anneal(&config, vacancy_density, nitrogen_density, cli.out.as_deref())
        }
        Command::Sweep { axis, values, log_range, preset, fluence } => {
            let points = commands::sweep_values(
                axis,
                values.as_deref(),
                log_range.as_deref(),
                preset.as_deref(),
            )?;
            let spec = SweepSpec::new(axis, points)?;
            commands::cmd_sweep(&config, &spec, fluence, cli.out.as_deref(), cli.format)
        }
        Command::Fit { spectrum, initial } => {
            commands::cmd_fit(&config, &spectrum, &initial, cli.out.as_deref())
        }
        Command::QmemReport { scenario } => {
            commands::cmd_qmem_report(&config, scenario, cli.out.as_deref())
        }
    }
}

fn init_thread_pool() {
    if let Ok(value) = std::env::var("NVFORGE_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(1);
                }
            }
        }
    };
    init_thread_pool();
    if let Err(e) = run(cli) {
        eprintln!("nvforge: {e}");
        std::process::exit(e.exit_code());
    }
}
