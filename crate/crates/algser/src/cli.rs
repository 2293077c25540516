//! Argument parsing and dispatch.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{self, Options, Report, ValuationCommand};
use crate::spec::load_seeds;
use crate::{CliError, EXIT_ERROR};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "algser", version, about = "Exact algebraicity checks for power series with coefficients in field towers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Truncation budget (terms consulted).
    #[arg(long, global = true, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    pub trunc: u64,
    /// Number of coefficient-tower steps examined (i_max).
    #[arg(long, global = true, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    /// Largest Frobenius twist tried (r_max).
    #[arg(long, global = true, default_value_t = 2)]
    pub twists: u32,
    /// Largest order read off truncations when computing values.
    #[arg(long = "value-budget", global = true, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub value_budget: u64,
    /// Blowup frames or valuation frames computed eagerly.
    #[arg(long, global = true, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    pub frames: u64,
    /// Multivariate fibers are probed below this total degree.
    #[arg(long = "probe-bound", global = true, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub probe_bound: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// JSON array of element expressions tried first as residue roots.
    #[arg(long = "seed-roots", global = true)]
    pub seed_roots: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide algebraicity of a series (univariate, or multivariate when the spec has `vars`).
    Check { spec: String },
    /// Reconstruct an annihilating polynomial from a prefix.
    Annpoly { spec: String },
    /// Expand the branch of a polynomial and print its blowup chain.
    Expand { spec: String },
    /// Print the blowup chain of a branch, one line per frame.
    Resolve { spec: String },
    /// Valuation chains along an arc.
    Valuation {
        #[command(subcommand)]
        command: ValuationCli,
    },
}

#[derive(Debug, Subcommand)]
pub enum ValuationCli {
    Build { spec: String },
    Value {
        spec: String,
        /// Polynomial in `u` and `v`.
        #[arg(long)]
        poly: String,
    },
    Classify { spec: String },
    Witness {
        spec: String,
        #[arg(long)]
        budget: u64,
    },
    Corollary {
        #[arg(long)]
        schedule: String,
    },
}

impl Cli {
    pub fn options(&self) -> Result<Options, CliError> {
        Ok(Options {
            trunc: self.trunc as usize,
            i_max: self.steps as usize,
            r_max: self.twists,
            value_budget: self.value_budget,
            seeds: load_seeds(self.seed_roots.as_deref())?,
            frames: self.frames as usize,
            probe_bound: self.probe_bound,
        })
    }
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let opts = cli.options()?;
    match &cli.command {
        Command::Check { spec } => commands::check(spec, &opts),
        Command::Annpoly { spec } => commands::annpoly(spec, &opts),
        Command::Expand { spec } => commands::expand(spec, &opts),
        Command::Resolve { spec } => commands::resolve(spec, &opts),
        Command::Valuation { command } => match command {
            ValuationCli::Build { spec } => commands::valuation(&ValuationCommand::Build, spec, &opts),
            ValuationCli::Value { spec, poly } => {
                commands::valuation(&ValuationCommand::Value { poly: poly.clone() }, spec, &opts)
            }
            ValuationCli::Classify { spec } => commands::valuation(&ValuationCommand::Classify, spec, &opts),
            ValuationCli::Witness { spec, budget } => {
                commands::valuation(&ValuationCommand::Witness { budget: *budget }, spec, &opts)
            }
            ValuationCli::Corollary { schedule } => commands::corollary(schedule, &opts),
        },
    }
}

/// Runs a full argument vector and returns the exit code with the rendered output.
/// Errors are rendered as a JSON object or an `error:` line, depending on the format.
pub fn run_args<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            return (code, e.to_string());
        }
    };
    match run(&cli) {
        Ok(r) => (r.code, render(&r, cli.format)),
        Err(e) => {
            let out = match cli.format {
                Format::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({ "error": e.to_string() })).expect("serializable") + "\n"
                }
                Format::Text => format!("error: {e}\n"),
            };
            (EXIT_ERROR, out)
        }
    }
}

pub fn render(r: &Report, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(&r.json).expect("serializable") + "\n",
        Format::Text => r.text.clone(),
    }
}
