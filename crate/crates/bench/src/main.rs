use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use drss::crlb::crlb_all;
use drss::scenario::{clustered_scenario, fig1_scenario, Placement, Scenario};
use drss_bench::output::write_rows;
use drss_bench::{run_experiment, BenchError, ExperimentConfig, Family, Format, Overrides};

#[derive(Parser)]
#[command(name = "bench", version, about = "Monte Carlo benchmarks for DRSS localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment family and write one row per estimator and sweep point.
    Run {
        /// placement, noise_sweep, ple_sweep, ple_uncertainty, anchor_uncertainty or bcd.
        #[arg(long)]
        family: Option<String>,
        /// TOML experiment configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Write a preset scenario as TOML.
    Scenario {
        #[arg(long, value_enum)]
        preset: Preset,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the four Cramér-Rao bounds of a scenario.
    Crlb {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        gamma: f64,
        #[arg(long = "sigma-n2")]
        sigma_n2: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Fig1,
    Good,
    Bad,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, BenchError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| BenchError::Runtime(format!("cannot create {}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn run(command: Command) -> Result<(), BenchError> {
    match command {
        Command::Run { family, config, trials, seed, out, format } => {
            let overrides = Overrides { family: family.as_deref().map(str::parse::<Family>).transpose()?, trials, seed };
            let cfg = match config {
                Some(path) => ExperimentConfig::load(&path, &overrides)?,
                None => ExperimentConfig::from_toml_str("", &overrides)?,
            };
            let rows = run_experiment(&cfg)?;
            let mut w = open_out(out.as_deref())?;
            write_rows(&mut w, format, &cfg, &rows)?;
            w.flush().map_err(|e| BenchError::Runtime(e.to_string()))
        }
        Command::Scenario { preset, out } => {
            let s = match preset {
                Preset::Fig1 => fig1_scenario(),
                Preset::Good => clustered_scenario(Placement::Good),
                Preset::Bad => clustered_scenario(Placement::Bad),
            };
            let mut w = open_out(out.as_deref())?;
            w.write_all(s.to_toml_string().as_bytes())
                .and_then(|_| w.flush())
                .map_err(|e| BenchError::Runtime(e.to_string()))
        }
        Command::Crlb { scenario, gamma, sigma_n2 } => {
            let s = Scenario::load(&scenario).map_err(|e| BenchError::Config(format!("{}: {e}", scenario.display())))?;
            let b = crlb_all(&s, gamma, sigma_n2).map_err(|e| match e {
                drss::Error::NonPositiveGamma(_) | drss::Error::InvalidArgument(_) => BenchError::Config(e.to_string()),
                e => BenchError::Runtime(e.to_string()),
            })?;
            println!("joint_location = {}", b.joint_location);
            println!("joint_ple = {}", b.joint_ple);
            println!("location_known_ple = {}", b.location_known_ple);
            println!("ple_known_location = {}", b.ple_known_location);
            Ok(())
        }
    }
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
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
