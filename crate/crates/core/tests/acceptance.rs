//! Runs every acceptance criterion at the full tier and prints one
//! `PASS`/`FAIL` line each. Exits non-zero if any criterion fails.
//!
//! Positional arguments filter criteria by name, as with libtest.

use saddlescape::harness::{run_criterion, RayonExecutor, Tier, CRITERIA};
use std::process::ExitCode;

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<(u8, String)> = CRITERIA
        .iter()
        .map(|&(id, name)| (id, format!("criterion_{id:02}_{}", name.replace([' ', '-'], "_").to_lowercase())))
        .filter(|(_, name)| filters.is_empty() || filters.iter().any(|f| name.contains(f.as_str())))
        .collect();
    println!("\nrunning {} acceptance criteria", selected.len());
    let scratch = tempfile::tempdir().expect("scratch directory");
    let exec = RayonExecutor::new(None);
    let mut failed = Vec::new();
    for (id, name) in &selected {
        let result = run_criterion(*id, Tier::Full, &exec, scratch.path());
        println!("{}", result.line());
        if !result.passed {
            failed.push(name.clone());
        }
    }
    println!(
        "\nacceptance result: {}. {} passed; {} failed{}",
        if failed.is_empty() { "ok" } else { "FAILED" },
        selected.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
