//! Acceptance criteria 1-11, one PASS/FAIL line each. Runs without the
//! libtest harness so the lines are always shown.

use fbrewire::validation::{self, ValidationConfig, ALL};

fn main() {
    let cfg = ValidationConfig::default();
    let mut failed = Vec::new();
    for &id in ALL.iter() {
        let r = validation::run_one(id, &cfg);
        println!(
            "criterion {:2} {}: {} ({}) [{:.0} ms]",
            id,
            if r.pass { "PASS" } else { "FAIL" },
            r.name,
            r.detail,
            r.runtime_ms
        );
        if !r.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", ALL.len());
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
