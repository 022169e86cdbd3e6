//! Acceptance criteria, one line per criterion.
//!
//! Runs every self-test suite at full size with the default seed and
//! tolerance. Set `CORRLAB_QUICK=1` for a tenth of the cases.

use std::process::ExitCode;

use corrlab::selftest::{run_suite, Config, SUITES};

fn main() -> ExitCode {
    let cfg = Config {
        quick: std::env::var_os("CORRLAB_QUICK").is_some(),
        ..Config::default()
    };
    println!("acceptance: seed {} eps {:e}{}", cfg.seed, cfg.eps, if cfg.quick { " (quick)" } else { "" });
    let mut failed = 0;
    for id in 1..=SUITES.len() {
        let (rec, cases) = run_suite(id, &cfg);
        let residual = rec.max_residual.map(|r| format!(", max residual {r:.2e}")).unwrap_or_default();
        let limit = rec.time_limit_s.map(|l| format!(" of {l:.0} s")).unwrap_or_default();
        println!(
            "criterion {:>2} {}: {} ({} cases, {} failures{residual}, {:.1} s{limit})",
            rec.id,
            if rec.passed { "PASS" } else { "FAIL" },
            rec.description,
            rec.cases,
            rec.failures,
            rec.time_ms / 1e3,
        );
        if !rec.passed {
            failed += 1;
            for c in cases.iter().filter(|c| !c.passed).take(5) {
                println!("    {} {}: {}", c.suite, c.case, c.detail.as_deref().unwrap_or(""));
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", SUITES.len() - failed, SUITES.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
