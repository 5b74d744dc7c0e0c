use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use posteriorlab_cli::api::{self, ApiConfig};
use posteriorlab_cli::commands::{self, EdVisitsArgs, ElicitBetaArgs, FacebookArgs, StormsArgs, SynthesizeArgs};
use posteriorlab_cli::{to_json, CliError};

#[derive(Debug, Parser)]
#[command(name = "posteriorlab", version, about = "Posterior computation for small worked examples")]
struct Cli {
    /// Seed for every random draw; generated and echoed when omitted.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    /// Only for `synthesize-storms`.
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Gamma-Poisson analysis of emergency department arrivals.
    EdVisits(EdVisitsArgs),
    /// Two-group logistic model fitted by normal approximation and/or grid.
    Facebook(FacebookArgs),
    /// Change-point analysis of yearly counts.
    Storms(StormsArgs),
    /// Beta prior from a median and 90th percentile.
    ElicitBeta(ElicitBetaArgs),
    /// Simulated change-point counts as `year,count` CSV or JSON.
    SynthesizeStorms(SynthesizeArgs),
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "POSTERIORLAB_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "POSTERIORLAB_BIND", default_value = "127.0.0.1")]
        bind: String,
        /// Largest sampler run a request may ask for.
        #[arg(long, default_value_t = api::DEFAULT_STEP_BUDGET)]
        step_budget: usize,
    },
}

fn emit(text: &str, output: Option<&PathBuf>) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(CliError::Write),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(CliError::Write),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed.unwrap_or_else(rand::random);
    let json_only = |name: &str| {
        if cli.format == Format::Json {
            Ok(())
        } else {
            Err(CliError::input("format", format!("{name} only writes json")))
        }
    };
    let text = match &cli.command {
        Command::EdVisits(a) => {
            json_only("ed-visits")?;
            to_json(&commands::ed_visits(a, seed)?)
        }
        Command::Facebook(a) => {
            json_only("facebook")?;
            to_json(&commands::facebook(a, seed)?)
        }
        Command::Storms(a) => {
            json_only("storms")?;
            to_json(&commands::storms(a, seed)?)
        }
        Command::ElicitBeta(a) => {
            json_only("elicit-beta")?;
            to_json(&commands::elicit_beta(a)?)
        }
        Command::SynthesizeStorms(a) => {
            let r = commands::synthesize(a, seed)?;
            match cli.format {
                Format::Json => to_json(&r),
                Format::Csv => {
                    let mut buf = Vec::new();
                    r.series.write_csv(&mut buf)?;
                    String::from_utf8(buf).expect("csv is utf-8")
                }
            }
        }
        Command::Serve { port, bind, step_budget } => {
            let addr = format!("{bind}:{port}");
            let rt = tokio::runtime::Runtime::new().map_err(CliError::Write)?;
            return rt.block_on(api::serve(&addr, ApiConfig { step_budget: *step_budget }));
        }
    };
    emit(&text, cli.output.as_ref())
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
