use std::process::ExitCode;
use std::time::Instant;

use degenlab::acceptance::{run_acceptance_with, Suite};

fn main() -> ExitCode {
    let start = Instant::now();
    let report = run_acceptance_with(Suite::All, |c| println!("{}", c.line()));
    println!("{} passed, {} failed in {:.1} s", report.passed, report.failed, start.elapsed().as_secs_f64());
    if report.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
