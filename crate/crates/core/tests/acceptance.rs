//! Runs every acceptance criterion on the default configuration and prints
//! one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_RED` are reported as failures but do not fail the
//! process; the run does fail if one of them starts passing, so the list has
//! to be kept honest.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nlkg_core::verify::{run_criterion, SuiteConfig, CRITERIA};

/// Criteria that fail on the faithful implementation.
const KNOWN_RED: [u8; 2] = [10, 11];

fn runtime_cap(id: u8) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(60)),
        4 => Some(Duration::from_secs(300)),
        8 => Some(Duration::from_secs(120)),
        10 => Some(Duration::from_secs(600)),
        _ => None,
    }
}

fn selected() -> Vec<u8> {
    // `NLKG_CRITERIA=1,4,7` restricts the run.
    match std::env::var("NLKG_CRITERIA") {
        Ok(list) => list.split(',').filter_map(|s| s.trim().parse().ok()).collect(),
        Err(_) => CRITERIA.iter().map(|c| c.0).collect(),
    }
}

fn main() -> ExitCode {
    let cfg = SuiteConfig::acceptance();
    let mut unexpected = 0;
    for id in selected() {
        let start = Instant::now();
        let result = run_criterion(id, &cfg);
        let elapsed = start.elapsed();
        let (passed, line) = match result {
            Ok(o) => (o.passed, o.line()),
            Err(e) => (false, format!("[FAIL] {id:>2} error: {e}")),
        };
        let over = runtime_cap(id).is_some_and(|cap| elapsed > cap);
        let ok = passed && !over;
        let known = KNOWN_RED.contains(&id);
        let tag = match (ok, known) {
            (false, true) => " (known)",
            (true, true) => " (known red now passes)",
            _ => "",
        };
        let cap = if over { " over runtime cap" } else { "" };
        println!("{line} [{:.1}s{cap}]{tag}", elapsed.as_secs_f64());
        if ok == known {
            unexpected += 1;
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{unexpected} unexpected result(s)");
        ExitCode::FAILURE
    }
}
