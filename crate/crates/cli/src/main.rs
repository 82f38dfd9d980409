//! `weyl`: evaluate Weyl functions, classify L-systems and run the
//! verification suites.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage/input error, 3 solver
//! failure. Errors are also written as `{"error": {"kind", "message"}}`.

mod commands;
mod expr;
mod run;

use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::{ClassifyArgs, Outcome, Suite};
use run::{Common, Context_};

#[derive(Parser)]
#[command(
    name = "weyl",
    version,
    about = "Weyl functions and sectorial L-systems"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate m_alpha (m_infinity for alpha = pi) at points z
    MEval {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<String>,
        /// Spectral point, e.g. i, -1, 0.5+2i; repeatable
        #[arg(long, allow_hyphen_values = true)]
        z: Vec<String>,
    },
    /// Classify the L-system with boundary parameters mu and h
    Classify {
        /// mu=...,h=... (defaults mu=inf, h=i)
        #[arg(long)]
        system: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        mu: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        h: Option<String>,
        /// Random point sets for the kernel test at beta2
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Run verification checks
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Trial count (kernel point sets, duality systems, random forms)
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn execute(cli: &Cli) -> anyhow::Result<Outcome> {
    let ctx = Context_::new(cli.common.clone())?;
    let outcome = match &cli.command {
        Command::MEval { alpha, z } => commands::m_eval(&ctx, alpha.as_deref(), z)?,
        Command::Classify {
            system,
            mu,
            h,
            trials,
        } => commands::classify(
            &ctx,
            ClassifyArgs {
                system: system.as_deref(),
                mu: mu.as_deref(),
                h: h.as_deref(),
                trials: *trials,
            },
        )?,
        Command::Verify { suite, trials } => commands::verify(&ctx, *suite, *trials)?,
    };
    emit(&ctx, &outcome.body)?;
    Ok(outcome)
}

fn emit(ctx: &Context_, body: &str) -> anyhow::Result<()> {
    match ctx.out() {
        Some(p) => std::fs::write(&p, body)?,
        None => std::io::stdout().lock().write_all(body.as_bytes())?,
    }
    Ok(())
}

/// The error chain joined by ": ", skipping causes already spelled out by
/// the message before them.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(o) if o.pass => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(err) => {
            let solver = err
                .chain()
                .find_map(|e| e.downcast_ref::<weyl_core::Error>())
                .is_some_and(|e| e.is_solver_error());
            let kind = if solver { "solver" } else { "usage" };
            let message = describe(&err);
            let record = json!({ "error": { "kind": kind, "message": message } });
            println!(
                "{}",
                serde_json::to_string_pretty(&record).unwrap_or_default()
            );
            eprintln!("error: {message}");
            ExitCode::from(if solver { 3 } else { 2 })
        }
    }
}
