//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `SPIKELAB_CRITERIA=1,6` restricts the run; `SPIKELAB_ACCEPTANCE_JSON=path`
//! keeps the report. By default the target fails only when a criterion cannot
//! be evaluated; `SPIKELAB_ACCEPTANCE_STRICT=1` also fails on any FAIL line.

use std::process::ExitCode;

use spikelab::acceptance::{run_acceptance_with, AcceptanceSettings, ALL_CRITERIA};

fn main() -> ExitCode {
    let criteria = match std::env::var("SPIKELAB_CRITERIA") {
        Ok(list) => list
            .split(',')
            .map(|s| s.trim().parse::<u8>().expect("criterion id"))
            .collect(),
        Err(_) => ALL_CRITERIA.to_vec(),
    };
    let settings = AcceptanceSettings { criteria, ..Default::default() };
    let (report, timings) = run_acceptance_with(&settings, |r, t| {
        let budget = match t.budget {
            Some(b) => format!("budget {:.0} s", b.as_secs_f64()),
            None => "no budget".into(),
        };
        let verdict = if r.passed && t.within_budget() { "PASS" } else { "FAIL" };
        println!(
            "criterion {} [{}] {} ({:.1} s; {})",
            r.id,
            r.title,
            verdict,
            t.elapsed.as_secs_f64(),
            budget
        );
        for c in &r.checks {
            println!(
                "    {}{}: value {:?}, target {:?}, tolerance {:?}",
                if c.passed { "" } else { "FAILED " },
                c.name,
                c.value,
                c.target,
                c.tolerance
            );
        }
        for o in &r.observations {
            println!("    observed {}: {:?}", o.name, o.value);
        }
        if let Some(e) = &r.error {
            println!("    error: {e}");
        }
    });
    if let Ok(path) = std::env::var("SPIKELAB_ACCEPTANCE_JSON") {
        std::fs::write(path, report.to_json()).expect("writing report");
    }
    let passed = report.passed && timings.iter().all(|t| t.within_budget());
    println!("acceptance {}", if passed { "PASS" } else { "FAIL" });
    let strict = std::env::var("SPIKELAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let errored = report.criteria.iter().any(|r| r.error.is_some());
    if !errored && (passed || !strict) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
