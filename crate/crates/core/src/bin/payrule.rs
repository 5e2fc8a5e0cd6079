use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use payrule::bidder::{best_response_constant, Strategy};
use payrule::center::PaymentRule;
use payrule::experiment::{self, ExperimentConfig, PresetOptions};
use payrule::rules::diagnose;
use payrule::Error;

#[derive(Parser)]
#[command(name = "payrule", version, about = "Payment rules for budget-balanced exchanges")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the experiment described by a JSON config.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a built-in experiment; see `list-presets`.
    Preset {
        name: String,
        #[arg(long, allow_hyphen_values = true)]
        shape: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        k: Option<f64>,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        w_sigma: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a tabulated rule against the config's distribution.
    Diagnose {
        #[arg(long)]
        rule: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Bidder blinding stddev; the config's mu_sigma, else 1000.
        #[arg(long)]
        mu_sigma: Option<f64>,
    },
    ListPresets,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_infeasible() { 2 } else { 1 })
        }
    }
}

fn dispatch(command: Command) -> payrule::Result<ExitCode> {
    match command {
        Command::Solve { config, out } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(out) = out {
                config.output_dir = out;
            }
            solve(&config)
        }
        Command::Preset {
            name,
            shape,
            gamma,
            c,
            k,
            sigma,
            w_sigma,
            out,
        } => {
            let opts = PresetOptions {
                gamma,
                shape,
                c,
                k,
                sigma,
                w_sigma,
                output_dir: out,
            };
            solve(&experiment::preset(&name, &opts)?)
        }
        Command::Diagnose { rule, config, mu_sigma } => {
            let config = ExperimentConfig::load(&config)?;
            let grid = config.grid()?;
            let f = config.distribution.build(&grid)?;
            let rule = PaymentRule::read_csv(File::open(&rule)?, grid)?;
            let mu_sigma = mu_sigma.or(config.mu_sigma).unwrap_or(1000.0);
            if !(mu_sigma > 0.0) {
                return Err(Error::Config(format!("mu_sigma must be positive, got {mu_sigma}")));
            }
            let strategy = Strategy::constant(best_response_constant(&rule, &f, &grid))?;
            let d = diagnose(&rule, &f, mu_sigma, &strategy, &grid)?;
            println!("{}", serde_json::to_string_pretty(&d)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::ListPresets => {
            print!("{}", experiment::list_presets());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn solve(config: &ExperimentConfig) -> payrule::Result<ExitCode> {
    let outcome = experiment::run_experiment(config)?;
    print!("{}", outcome.trace.report());
    println!("wrote {}", config.output_dir.display());
    if outcome.summary.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("did not converge within {} rounds", config.max_rounds);
        Ok(ExitCode::from(3))
    }
}
