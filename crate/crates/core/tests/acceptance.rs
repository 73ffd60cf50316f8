//! Runs the default verification suite on the reference configuration and
//! prints one line per acceptance criterion. Exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use grushin::verify::{run_suite, Status, Suite};

fn main() -> ExitCode {
    let suite = Suite::default_suite();
    let start = Instant::now();
    let report = match run_suite(&suite) {
        Ok(r) => r,
        Err(e) => {
            println!("acceptance suite could not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("\nacceptance criteria (reference N=1, k=1, rho=3, grid 128^2 on [-8,8]^2, T=8)");
    let mut failed = 0;
    for (i, spec) in suite.checks.iter().enumerate() {
        let o = report.outcome(&spec.name).expect("every check has an outcome");
        let pass = o.status == Status::Passed;
        if !pass && !o.informational {
            failed += 1;
        }
        let measured = o.measured.map_or("-".to_string(), |m| format!("{m:.4e}"));
        println!(
            "criterion {:>2} {:<22} {}  measured {measured:>11}  tolerance {:.1e}{}",
            i + 1,
            o.name,
            if pass { "PASS" } else { "FAIL" },
            o.tolerance,
            o.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default(),
        );
    }
    println!("{} of {} criteria passed in {:.0} s\n", suite.checks.len() - failed, suite.checks.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
