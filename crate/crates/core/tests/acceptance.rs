use std::process::ExitCode;

use manin_core::verification::run_acceptance_suite;

fn main() -> ExitCode {
    let outcomes = run_acceptance_suite();
    for o in &outcomes {
        println!("{}", o.line());
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    println!("acceptance: {} of {} criteria passed", outcomes.len() - failed.len(), outcomes.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
