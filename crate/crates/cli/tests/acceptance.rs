//! Runs every experiment at its default size and prints one line per
//! criterion. Exits non-zero if a criterion fails that is not listed in
//! `EXPECTED_FAILURES`.

use std::process::ExitCode;
use std::time::Instant;

use sewing_cli::{registry, ExperimentConfig};

const SEED: u64 = 20240601;

/// `(experiment, check)` pairs known to miss their target.
/// The clipped power |x|^{1/2} has successive differences of order mesh^{1/2}
/// up to a logarithm, not mesh^{1/4}, so the slope lands near 0.45.
const EXPECTED_FAILURES: &[(&str, &str)] = &[("ito-integral", "successive-difference slope for clipped |x|^τ")];

fn main() -> ExitCode {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    let mut ran = 0;
    for (k, exp) in registry().iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| exp.name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let cfg = ExperimentConfig::named(exp.name, SEED);
        let outcome = match (exp.run)(&cfg) {
            Ok(o) => o,
            Err(e) => {
                println!("[{:>2}] FAIL {:<24} error: {e}", k + 1, exp.name);
                unexpected += 1;
                continue;
            }
        };
        let failed: Vec<_> = outcome.checks.iter().filter(|c| !c.pass).collect();
        let known = failed.iter().all(|c| EXPECTED_FAILURES.contains(&(exp.name, c.name.as_str())));
        let status = if failed.is_empty() {
            "PASS"
        } else if known {
            "FAIL (known)"
        } else {
            unexpected += 1;
            "FAIL"
        };
        let detail: Vec<String> = outcome
            .checks
            .iter()
            .map(|c| format!("{}{}={:.4} [{}]", if c.pass { "" } else { "!" }, c.name, c.observed, c.target))
            .collect();
        println!("[{:>2}] {status} {:<24} {:.1}s  {}", k + 1, exp.name, start.elapsed().as_secs_f64(), detail.join("; "));
    }
    println!("acceptance: {ran} criteria run, {unexpected} unexpected failures");
    if unexpected == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
