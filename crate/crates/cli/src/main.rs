// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod output;
mod setup;

use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use args::{Cli, Command};
use output::{OutDir, RunManifest, ToleranceSet};
use setup::Failure;

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    if !(g.tol > 0.0) {
        return Err(Failure::usage("--tol must be positive"));
    }
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::usage(e.to_string()))?;
    }
    let start = Instant::now();
    let mut out = OutDir::create(&g.out)?;
    let result = match &cli.command {
        Command::Speeds => commands::speeds(g, &mut out),
        Command::Profile(a) => commands::profile(g, a, &mut out),
        Command::Sweep(a) => commands::sweep(g, a, &mut out),
        Command::Validate(a) => commands::validate(g, a, &mut out),
        Command::Example(a) => commands::example(g, a, &mut out),
    };
    // Failed runs still leave a manifest naming the error.
    let outcome = result.unwrap_or_else(|f| commands::Outcome {
        config: None,
        summary: serde_json::json!({ "error": f.message, "exit_code": f.code }),
        failure: Some(f),
    });
    let manifest = RunManifest {
        tool: "satwave",
        version: env!("CARGO_PKG_VERSION"),
        command: cli.command.name().into(),
        argv: std::env::args().skip(1).collect(),
        config: outcome.config.as_ref().map(|c| serde_json::to_value(c).expect("config serializes")),
        tolerances: ToleranceSet::with_sigma(g.tol),
        seed: g.seed,
        threads: g.threads,
        outputs: Vec::new(),
        summary: outcome.summary,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    out.finish(manifest)?;
    outcome.failure.map_or(Ok(()), Err)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
