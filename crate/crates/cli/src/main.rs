use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use daestruct::scheme::SchemeMode;
use daestruct_cli::{analyze, parse_stages, solve, text, to_json, CliError, Format};

#[derive(Parser)]
#[command(name = "daestruct", version, about = "Structural analysis of DAE systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Basic,
    Block,
}

#[derive(Subcommand)]
enum Command {
    /// Structural analysis: signature matrix, offsets, blocks, quasilinearity,
    /// initialization sets and the stage schedule.
    Analyze {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long, value_enum, default_value = "block")]
        scheme: SchemeArg,
        /// Stage range `a..b` of the printed schedule (default: first stage to 0).
        #[arg(long, allow_hyphen_values = true)]
        stages: Option<String>,
    },
    /// Compute Taylor coefficients of a consistent solution at one point.
    Solve {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: FormatArg,
        #[arg(long, value_enum, default_value = "block")]
        scheme: SchemeArg,
        /// Last stage to run.
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        order: i64,
        /// Initialization file with `[guess] name order value` lines.
        #[arg(long)]
        init: Option<PathBuf>,
        /// Residual tolerance of the nonlinear solves.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn mode(s: SchemeArg) -> SchemeMode {
    match s {
        SchemeArg::Basic => SchemeMode::Basic,
        SchemeArg::Block => SchemeMode::Block,
    }
}

fn format(f: FormatArg) -> Format {
    match f {
        FormatArg::Text => Format::Text,
        FormatArg::Json => Format::Json,
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Analyze {
            path,
            format: f,
            scheme,
            stages,
        } => {
            let stages = stages.as_deref().map(parse_stages).transpose()?;
            let report = analyze(&read(&path)?, mode(scheme), stages)?;
            Ok(match format(f) {
                Format::Text => text::render_analysis(&report),
                Format::Json => to_json(&report),
            })
        }
        Command::Solve {
            path,
            format: f,
            scheme,
            order,
            init,
            tol,
        } => {
            let source = read(&path)?;
            let init_text = match &init {
                Some(p) => read(p)?,
                None => String::new(),
            };
            let report = solve(&source, &init_text, mode(scheme), order, tol)?;
            Ok(match format(f) {
                Format::Text => text::render_solve(&report),
                Format::Json => to_json(&report),
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
