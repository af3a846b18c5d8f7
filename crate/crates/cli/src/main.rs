//! `dephasing`: command-line front end of the precision-bound library.
//!
//! Every command writes one table (CSV by default, JSON with
//! `--format json`) whose header records the command and the effective
//! parameters. Exit codes: 0 on success, 1 when a validation check fails,
//! 2 on invalid input.

mod commands;
mod config;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::{Format, Params};

/// Failures of a command.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Invalid input or a model error.
    #[error("{0}")]
    Input(String),
    /// Output could not be written.
    #[error("output error: {0}")]
    Io(String),
}

#[derive(Debug, Parser)]
#[command(name = "dephasing", version, about = "Precision bounds for quantum sensing under collective dephasing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    params: Params,
}

/// Input family of the `oats` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OatsFamily {
    /// Twist minimizing the squeezing parameter.
    Ku,
    /// Perfect-echo twist `mu = N^(-1/2)`, `beta = -pi/2`.
    Pe,
    /// Untwisted coherent state.
    Css,
}

/// Figure or table whose data `figures` emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureKind {
    /// GHZ precision against `N`.
    #[value(name = "fig1_left")]
    Fig1Left,
    /// Perfect-echo twisted-state precision against `N`.
    #[value(name = "fig1_right")]
    Fig1Right,
    /// `K_Q'` and the precision floor against the pulse number.
    #[value(name = "fig2")]
    Fig2,
    /// Fitted scaling table.
    #[value(name = "table1")]
    Table1,
}

/// Options of the `validate` command.
#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    /// Also run the table-reproduction checks.
    #[arg(long)]
    all: bool,
    /// Run only these checks.
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Perturb the reference values of this check (fault injection).
    #[arg(long)]
    corrupt: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decoherence function in the time and frequency domains.
    Chi,
    /// State-independent precision bound against N.
    Bound,
    /// GHZ optimum against N.
    Ghz,
    /// Twisted-state optimum against N.
    Oats {
        /// Twist family used when --mu/--beta are absent.
        #[arg(long, value_enum, default_value = "pe")]
        family: OatsFamily,
    },
    /// Fitted scaling exponents and prefactors.
    Table1,
    /// Controlled bound of a pulse sequence.
    Control,
    /// Short-time constant K_Q' by three routes.
    Kq,
    /// Monte Carlo phase variances against chi(t).
    McValidate {
        /// Also write the sampled ensemble to this CSV file.
        #[arg(long)]
        ensemble: Option<PathBuf>,
    },
    /// Data behind a figure or table.
    Figures {
        /// Which figure or table.
        #[arg(value_enum)]
        which: FigureKind,
    },
    /// Cross-module validation suites with a JSON report.
    Validate(ValidateArgs),
}

fn write_output(p: &Params, bytes: &[u8]) -> Result<(), CliError> {
    match &p.out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn run(cli: Cli) -> Result<bool, CliError> {
    let p = cli.params.resolve()?;
    p.check_output()?;
    let (table, ok) = match &cli.command {
        Command::Chi => (commands::chi(&p)?, true),
        Command::Bound => (commands::bound(&p)?, true),
        Command::Ghz => (commands::ghz(&p)?, true),
        Command::Oats { family } => (commands::oats(&p, *family)?, true),
        Command::Table1 => (commands::table1(&p, "table1")?, true),
        Command::Control => (commands::control(&p)?, true),
        Command::Kq => (commands::kq(&p)?, true),
        Command::McValidate { ensemble } => commands::mc_validate(&p, ensemble.as_deref())?,
        Command::Figures { which } => (commands::figures(&p, *which)?, true),
        Command::Validate(args) => {
            let (table, report, ok) = commands::validate(&p, args)?;
            // The report is JSON unless CSV is requested explicitly.
            if p.format == Some(Format::Csv) {
                write_output(&p, &table.render(Format::Csv)?)?;
            } else {
                let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
                bytes.push(b'\n');
                write_output(&p, &bytes)?;
            }
            if !ok {
                let failing: Vec<&str> = report["failing"].as_array().into_iter().flatten().filter_map(|v| v.as_str()).collect();
                eprintln!("validation failed: {}", failing.join(", "));
            }
            return Ok(ok);
        }
    };
    write_output(&p, &table.render(p.output_format())?)?;
    Ok(ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
