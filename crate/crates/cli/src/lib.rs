//! `hadflow`: run registry instances, write trajectories, sharpness reports,
//! plot scripts and property-suite tables.
//!
//! Exit codes: 0 ok, 1 some check failed, 2 configuration error, 3 numerical
//! failure. Errors are printed to stderr as one JSON object.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{Layer, RunConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    UnknownInstance,
    InvalidConfig,
    Hypothesis,
    Io,
    Numerical,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::UnknownInstance => "unknown_instance",
            ErrorKind::InvalidConfig => "invalid_config",
            ErrorKind::Hypothesis => "hypothesis_violated",
            ErrorKind::Io => "io_error",
            ErrorKind::Numerical => "numerical_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            kind: ErrorKind::InvalidConfig,
            message: message.into(),
        }
    }

    pub fn unknown_instance(id: &str, e: hadamard_flow::Error) -> Self {
        CliError {
            kind: ErrorKind::UnknownInstance,
            message: format!("{id}: {e}"),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError {
            kind: ErrorKind::Io,
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Numerical => 3,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> String {
        json!({ "error": self.kind.as_str(), "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind.as_str(), self.message)
    }
}

impl From<hadamard_flow::Error> for CliError {
    fn from(e: hadamard_flow::Error) -> Self {
        use hadamard_flow::Error as E;
        let kind = match e {
            E::Input(_) => ErrorKind::InvalidConfig,
            E::Hypothesis(_) => ErrorKind::Hypothesis,
            E::Domain { .. } | E::Numerical { .. } | E::Step { .. } | E::NonStabilizing { .. } => ErrorKind::Numerical,
        };
        CliError {
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hadflow",
    version,
    about = "Proximal gradient flows and destabilizing rays on Hadamard spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the flow of an instance and write its trajectory (CSV and JSON).
    Flow(RunArgs),
    /// Classify the flow, extract the limiting ray and write a sharpness report.
    Destabilize(RunArgs),
    /// Run property suites and print a pass/fail table.
    Check(CheckArgs),
    /// List the canonical instances.
    List,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Instance id(s), comma separated or repeated.
    #[arg(long, value_delimiter = ',')]
    instance: Vec<String>,
    /// Start point literal (instance specific, e.g. "1,2", "2:1.5", "sin:0.1").
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Number of starts for the destabilizer; more than one adds the uniqueness probe.
    #[arg(long)]
    starts: Option<usize>,
    /// Flow horizon.
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Largest number of resolvent steps per flow.
    #[arg(long = "m-cap")]
    m_cap: Option<usize>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// key=value file; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Suites to run (cat0, evi, sandwich, moment-weight, bind); all by default.
    #[arg(long, value_delimiter = ',')]
    suite: Vec<String>,
}

fn build_config(args: RunArgs, suites: Vec<String>) -> Result<RunConfig, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError {
                kind: ErrorKind::InvalidConfig,
                message: format!("{}: {e}", path.display()),
            })?;
            Layer::from_text(&text)?
        }
        None => Layer::default(),
    };
    let flags = Layer {
        instances: args.instance,
        x0: args.x0,
        starts: args.starts,
        horizon: args.horizon,
        tol: args.tol,
        m_cap: args.m_cap,
        jobs: args.jobs,
        out: args.out,
        seed: args.seed,
        suites,
    };
    RunConfig::from_layer(flags.over(file))
}

fn dispatch(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Flow(a) => commands::cmd_flow(&build_config(a, Vec::new())?),
        Command::Destabilize(a) => commands::cmd_destabilize(&build_config(a, Vec::new())?),
        Command::Check(a) => commands::cmd_check(&build_config(a.run, a.suite)?),
        Command::List => commands::cmd_list(),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let err = CliError::config(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
