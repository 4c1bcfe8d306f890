//! `loctens`: runs one construction or check per process and emits a JSON
//! summary plus an optional CSV series.
//!
//! Exit codes: 0 success, 1 numerical failure or failed check, 2 invalid input.

mod args;
mod commands;
mod report;

use std::fs;
use std::process::{Command as Process, ExitCode};

use clap::Parser;
use serde_json::json;

use args::Cli;

const THREADS_VAR: &str = "LOCTENS_THREADS";
const CORETYPE_VAR: &str = "OPENBLAS_CORETYPE";

fn validation(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn numerical(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(1)
}

/// OpenBLAS picks its kernels when the library loads, so a bad pick can only
/// be corrected by restarting with the core type pinned.
fn blas_reexec() -> Option<ExitCode> {
    if loctens::linalg::blas_self_check().is_ok() {
        return None;
    }
    if std::env::var_os(CORETYPE_VAR).is_some() {
        eprintln!("warning: BLAS self-check failed with {CORETYPE_VAR} already set");
        return None;
    }
    let exe = std::env::current_exe().ok()?;
    let status = Process::new(exe)
        .args(std::env::args_os().skip(1))
        .env(CORETYPE_VAR, "Haswell")
        .status()
        .ok()?;
    Some(match status.code() {
        Some(c) => ExitCode::from(c.clamp(0, 255) as u8),
        None => ExitCode::from(1),
    })
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("invalid `{THREADS_VAR}`: expected a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot size the thread pool: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    if let Err(msg) = configure_threads() {
        return validation(msg);
    }
    if let Some(code) = blas_reexec() {
        return code;
    }

    let cmd = &cli.command;
    let outcome = match commands::run(cmd) {
        Ok(o) => o,
        Err(e) if e.is_validation() => return validation(e),
        Err(e) => return numerical(e),
    };

    let name = cmd.name();
    let summary = json!({
        "command": name,
        "version": loctens::VERSION,
        "config": outcome.config,
        "config_hash": report::config_hash(&outcome.config),
        "results": outcome.results,
        "passed": outcome.passed,
    });
    let json_text = report::to_json(&summary);

    if let Some(dir) = &cmd.common().out {
        if let Err(e) = fs::create_dir_all(dir) {
            return numerical(format!("cannot create {}: {e}", dir.display()));
        }
        if let Some(t) = &outcome.table {
            if let Err(e) = report::write_atomic(dir, &format!("{name}.csv"), &t.to_csv()) {
                return numerical(format!("cannot write {name}.csv: {e}"));
            }
        }
        if let Err(e) = report::write_atomic(dir, &format!("{name}.json"), &json_text) {
            return numerical(format!("cannot write {name}.json: {e}"));
        }
    }
    print!("{json_text}");

    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        eprintln!("one or more checks failed");
        ExitCode::from(1)
    }
}
