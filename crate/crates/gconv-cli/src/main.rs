// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, RunConfig};
use commands::Failure;

fn resolve(cli: Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match (&cli.config, cli.command) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?
        }
        (Some(_), Some(_)) => {
            return Err(Failure::Usage(
                "give either --config or a subcommand, not both".into(),
            ))
        }
        (None, Some(command)) => RunConfig {
            seed: 0,
            threads: None,
            out: PathBuf::from("out"),
            command,
        },
        (None, None) => {
            return Err(Failure::Usage(
                "a subcommand or --config is required".into(),
            ))
        }
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = resolve(cli).and_then(|cfg| {
        if let Some(n) = cfg.threads {
            gconv::par::set_threads(n).map_err(Failure::Usage)?;
        }
        commands::run(&cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("gconv: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
