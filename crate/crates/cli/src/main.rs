mod args;
mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command, TableFormat};
use commands::{run, Context};
use report::{Provenance, Report};

const EXIT_USAGE: u8 = 2;
const EXIT_PROPERTY: u8 = 3;

/// The subcommand path and its arguments, e.g. `forbidden cert` and `{k, l}`.
fn echo(cmd: &Command) -> (String, Value) {
    let mut names = Vec::new();
    let mut v = serde_json::to_value(cmd).expect("arguments serialize");
    loop {
        match v {
            Value::Object(m) if m.len() == 1 && !matches!(m.values().next(), Some(Value::Null) | None) => {
                let (k, inner) = m.into_iter().next().expect("one entry");
                let nested = matches!(&inner, Value::Object(o) if o.len() == 1 && o.values().all(Value::is_object));
                names.push(k);
                v = inner;
                if !nested {
                    break;
                }
            }
            Value::String(s) => {
                names.push(s);
                v = json!({});
                break;
            }
            other => {
                v = other;
                break;
            }
        }
    }
    (names.join(" "), v)
}

/// Writes to stdout, treating a closed pipe as success.
fn emit(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn fail(json_mode: bool, msg: &str) -> ExitCode {
    if json_mode {
        emit(&format!("{}\n", json!({ "error": msg })));
    } else {
        eprintln!("error: {msg}");
    }
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let json_mode = std::env::args().any(|a| a == "--json");
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            if json_mode {
                return fail(true, e.to_string().trim());
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let ctx = Context {
        threads: cli.threads,
        seed: cli.seed,
    };
    let start = Instant::now();
    let outcome = match run(&cli.command, &ctx) {
        Ok(o) => o,
        Err(e) => return fail(cli.json, &e.to_string()),
    };
    match &outcome.table {
        Some((table, Some(TableFormat::Csv))) => emit(&table.to_csv()),
        Some((table, Some(TableFormat::Json))) => {
            emit(&format!("{}\n", serde_json::to_string_pretty(&table.to_json()).expect("json")))
        }
        _ if cli.json => {
            let (command, parameters) = echo(&cli.command);
            let report = Report {
                command,
                parameters,
                results: outcome.results,
                provenance: Provenance {
                    version: env!("CARGO_PKG_VERSION"),
                    seed: cli.seed,
                    threads: cli.threads,
                    elapsed_ms: start.elapsed().as_millis(),
                },
            };
            emit(&format!("{}\n", serde_json::to_string_pretty(&report).expect("json")));
        }
        _ => emit(&format!("{}\n", outcome.text)),
    }
    if outcome.property_holds {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PROPERTY)
    }
}
