//! Command-line harness for `fracsol-core`: configuration, artifact
//! formats, sweeps and the acceptance battery.

pub mod accept;
pub mod cli;
pub mod config;
pub mod emit;
pub mod error;
pub mod records;
pub mod tasks;

use std::path::PathBuf;
use std::time::Instant;

use crate::cli::{resolve, Cli, Resolved};
use crate::config::Echo;
use crate::emit::{ensure_dir, Manifest, TaskStatus};
pub use crate::error::{HarnessError, Result};

/// Runs one command and returns the process exit status.
pub fn run(cli: &Cli) -> Result<i32> {
    let (resolved, out) = resolve(&cli.command)?;
    ensure_dir(&out)?;
    if let Resolved::Accept(cfg) = &resolved {
        let outcome = accept::run_acceptance(cfg, &out, true)?;
        return Ok(if outcome.all_passed() { 0 } else { 1 });
    }
    let echo = match &resolved {
        Resolved::Solve(c) => c.echo(),
        Resolved::Sweep(c) => c.echo(),
        Resolved::Spectrum(c) => c.echo(),
        Resolved::Branch(c) => c.echo(),
        Resolved::ExtendCheck(c) => c.echo(),
        Resolved::IneqSuite(c) => c.echo(),
        Resolved::Accept(c) => c.echo(),
    };
    let mut manifest = Manifest::new(resolved.name(), echo);
    let start = Instant::now();
    let result = match &resolved {
        Resolved::Solve(c) => tasks::solve(c, &out),
        Resolved::Sweep(c) => tasks::sweep(c, &out),
        Resolved::Spectrum(c) => tasks::spectrum(c, &out),
        Resolved::Branch(c) => tasks::branch(c, &out),
        Resolved::ExtendCheck(c) => tasks::extend_check(c, &out),
        Resolved::IneqSuite(c) => tasks::ineq_suite(c, &out),
        Resolved::Accept(_) => unreachable!("handled above"),
    };
    let (files, status, detail): (Vec<PathBuf>, &str, String) = match &result {
        Ok(files) => (files.clone(), "ok", format!("{} files", files.len())),
        Err(e) => (Vec::new(), "error", e.to_string()),
    };
    manifest.tasks.push(TaskStatus {
        name: resolved.name().into(),
        status: status.into(),
        detail,
        seconds: start.elapsed().as_secs_f64(),
    });
    manifest.finish(&out, &files)?;
    result.map(|files| {
        for f in &files {
            println!("{}", out.join(f).display());
        }
        0
    })
}
