//! Runs every acceptance criterion at its stated tolerance and prints one
//! PASS/FAIL line per criterion. Exits nonzero if any criterion fails or
//! overruns its time limit.

use nsp_lab::suite::{run_criterion, SuiteOptions, CRITERIA};

/// Wall-clock limits in milliseconds where the criterion states one.
fn limit_ms(id: u32) -> Option<u128> {
    match id {
        1 => Some(1_000),
        2 => Some(30_000),
        4 => Some(300_000),
        9 => Some(600_000),
        _ => None,
    }
}

fn main() {
    let opts = SuiteOptions::default();
    let mut failed = 0;
    for &(id, _, _) in CRITERIA {
        let mut r = run_criterion(id, &opts);
        if let Some(limit) = limit_ms(id) {
            if r.elapsed_ms >= limit {
                r.passed = false;
                r.detail = format!("{}; over the {limit} ms limit", r.detail);
            }
        }
        if !r.passed {
            failed += 1;
        }
        println!("{}", r.line());
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
