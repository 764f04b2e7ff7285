//! `vparab`: runs experiments from TOML configs and writes reports.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 malformed config or usage,
//! 3 numerical failure. Failures print one JSON error record on stderr.

mod config;
mod output;
mod run;

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{Experiment, ExperimentConfig, Overrides};
use run::Failure;

#[derive(Parser)]
#[command(name = "vparab", version, about = "Operators along variable parabolas: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Partition-of-unity, plateau and support checks of the bump functions.
    ValidateBumps(Overrides),
    /// Empirical operator norm of one operator.
    Opnorm(Overrides),
    /// Norms of the pieces T_l over a range of l, with a decay fit.
    DecayScan(Overrides),
    /// Sup of |m^u_k| against lambda = u 4^k eta.
    VdcScan(Overrides),
    /// Norms of an operator composed with P_k across k.
    Uniformity(Overrides),
    /// Maximal-operator ratios on growing boxes.
    ProbeUnbounded(Overrides),
    /// Error of the high-part plus pieces reconstruction of H.
    Reconstruct(Overrides),
    /// Operator ids and their parameters.
    ListOps {
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    exit_code: i32,
    message: String,
}

fn fail(f: &Failure) -> ExitCode {
    let rec = ErrorRecord {
        error: ErrorBody {
            kind: f.kind(),
            exit_code: f.exit_code(),
            message: f.message(),
        },
    };
    eprintln!("{}", serde_json::to_string(&rec).expect("error record serializes"));
    ExitCode::from(f.exit_code() as u8)
}

fn load(kind: Experiment, ov: &Overrides) -> Result<ExperimentConfig, Failure> {
    let base = match &ov.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentConfig::parse(&text)?
        }
        None if kind == Experiment::ValidateBumps => ExperimentConfig::bare(0),
        None => return Err(Failure::Usage(format!("`{}` needs --config", kind.name()))),
    };
    Ok(base.resolve(kind, ov)?)
}

fn list_ops(format: Format) -> Result<(), Failure> {
    let cat = vparab::normlab::catalog();
    match format {
        Format::Json => print!("{}", output::to_json(&cat)?),
        Format::Text => {
            for op in cat {
                println!("{}  {}", op.id, op.summary);
                for p in op.params {
                    println!("    {} : {}{}", p.name, p.kind, if p.required { "" } else { " (optional)" });
                }
            }
        }
    }
    Ok(())
}

fn execute(cmd: Command) -> Result<(), Failure> {
    let (kind, ov) = match cmd {
        Command::ListOps { format } => return list_ops(format),
        Command::ValidateBumps(o) => (Experiment::ValidateBumps, o),
        Command::Opnorm(o) => (Experiment::Opnorm, o),
        Command::DecayScan(o) => (Experiment::DecayScan, o),
        Command::VdcScan(o) => (Experiment::VdcScan, o),
        Command::Uniformity(o) => (Experiment::Uniformity, o),
        Command::ProbeUnbounded(o) => (Experiment::ProbeUnbounded, o),
        Command::Reconstruct(o) => (Experiment::Reconstruct, o),
    };
    let cfg = load(kind, &ov)?;
    let files = run::run(kind, &cfg)?.write()?;
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.render().to_string();
            return fail(&Failure::Usage(msg.trim_end().to_string()));
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(&f),
    }
}
