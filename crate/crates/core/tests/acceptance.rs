//! End-to-end acceptance run: a default dumbbell solve into a scratch run
//! directory followed by every check in `verify`. Prints one line per
//! criterion and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use freebound::config::RunConfig;
use freebound::pipeline::{cmd_solve, RunStatus};
use freebound::verify::run_verify;

fn main() -> ExitCode {
    let t = Instant::now();
    let dir = tempfile::tempdir().expect("scratch dir");
    let cfg = RunConfig::default();
    let status = cmd_solve(&cfg, dir.path()).expect("solve runs");
    println!("solve finished with {status:?} in {:.1?}", t.elapsed());
    let report = run_verify(&cfg, dir.path()).expect("verify runs");
    print!("{}", report.to_text());
    let failed: Vec<u32> = report.criteria.iter().filter(|c| !c.pass).map(|c| c.id).collect();
    println!(
        "acceptance: {} of {} criteria pass ({:.1?})",
        report.criteria.len() - failed.len(),
        report.criteria.len(),
        t.elapsed()
    );
    if status == RunStatus::Success && report.all_pass() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
