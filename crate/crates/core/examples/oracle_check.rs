//! Exact recovery under global depolarizing noise.

use qem::bench::{oracle_check, OracleConfig};

fn main() -> qem::Result<()> {
    let report = oracle_check(&OracleConfig::default())?;
    for c in &report.checks {
        println!("{:<32} max |error| {:.1e} over {} cases", c.name, c.max_abs_error, c.cases);
    }
    println!("all passed: {}", report.passed());
    Ok(())
}
