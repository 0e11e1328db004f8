//! Runs the full property suite on seeded random ensembles.

use bures_wasserstein::checks::{random_ensembles, run_suite};

fn main() {
    let report = run_suite(&random_ensembles(10, 3), 3);
    for r in &report.results {
        let tag = if r.informational {
            "INFO"
        } else if r.passed {
            "PASS"
        } else {
            "FAIL"
        };
        println!(
            "[{tag}] {:<40} trials {:>5}  failures {:>3}  worst margin {:.2e}",
            r.property, r.trials, r.failures, r.worst_margin
        );
    }
    println!("suite passed: {}", report.passed());
}
