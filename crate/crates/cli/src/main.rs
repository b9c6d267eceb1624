use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmcast_core::experiment::{self, write_metrics_csv, write_sweep_csv, ExperimentError, SweepSpec};
use mmcast_core::{RateMode, RunOptions, ScenarioConfig, Scheme, SchemeOptions, V2ITermination};

/// Schedule mmWave content distribution on a highway segment.
#[derive(Parser, Debug)]
#[command(name = "mmcast", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and print its metrics as a CSV row.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        scheme: Scheme,
        #[arg(long)]
        seed: u64,
        /// Check the schedule against every constraint; exit 2 on a violation.
        #[arg(long)]
        audit: bool,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run a parameter sweep and write one CSV row per (value, scheme, replica).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Config key to vary.
        #[arg(long)]
        axis: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        schemes: Vec<Scheme>,
        #[arg(long, default_value_t = 1)]
        replicas: u32,
        #[arg(long, default_value_t = 1)]
        base_seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Print the default highway configuration in config-file format.
    DefaultConfig,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Relays forward no more than they have received so far.
    #[arg(long)]
    strict_causality: bool,
    #[arg(long, default_value = "midpoint")]
    rate_mode: RateMode,
    #[arg(long, default_value = "coverage")]
    v2i_termination: V2ITermination,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            rate_mode: self.rate_mode,
            scheme: SchemeOptions {
                termination: self.v2i_termination,
                strict_causality: self.strict_causality,
            },
        }
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_AUDIT: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors, which would read as an audit failure
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, ExperimentError> {
    match command {
        Command::Simulate { config, scheme, seed, audit, run } => {
            let cfg = ScenarioConfig::load(&config)?.validate()?;
            let outcome = experiment::run_scenario(&cfg, seed, scheme, run.options())?;
            let report = audit.then_some(&outcome.audit);
            write_metrics_csv(&outcome.metrics, report, io::stdout().lock())?;
            if audit && !outcome.audit.passed() {
                eprint!("{}", outcome.audit);
                return Ok(ExitCode::from(EXIT_AUDIT));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, axis, values, schemes, replicas, base_seed, out, run } => {
            let base = ScenarioConfig::load(&config)?;
            let spec = SweepSpec { axis, values, schemes, replicas, base_seed };
            let rows = experiment::sweep(&base, &spec, run.options())?;
            write_sweep_csv(&rows, BufWriter::new(File::create(&out)?))?;
            eprintln!("wrote {} rows to {}", rows.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::DefaultConfig => {
            print!("{}", ScenarioConfig::highway_default().to_config_text());
            Ok(ExitCode::SUCCESS)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use mmcast_core::ConfigError;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn comma_lists_parse() {
        let cli = Cli::try_parse_from([
            "mmcast", "sweep", "--config", "c", "--axis", "seed", "--values", "1,2", "--schemes",
            "proposed,serial-tdma", "--out", "o.csv",
        ])
        .unwrap();
        let Command::Sweep { values, schemes, .. } = cli.command else { panic!() };
        assert_eq!(values, ["1", "2"]);
        assert_eq!(schemes, [Scheme::Proposed, Scheme::SerialTdma]);
    }

    #[test]
    fn config_errors_are_not_audit_failures() {
        let err = run(Command::Simulate {
            config: "/nonexistent/mmcast.cfg".into(),
            scheme: Scheme::Proposed,
            seed: 1,
            audit: true,
            run: RunArgs {
                strict_causality: false,
                rate_mode: RateMode::Midpoint,
                v2i_termination: V2ITermination::Coverage,
            },
        })
        .unwrap_err();
        assert!(matches!(err, ExperimentError::Config(ConfigError::Io(_))));
    }
}
