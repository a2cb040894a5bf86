//! A small benchmark sweep written to a temporary directory.

use qem::bench::{run_experiment, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ExperimentConfig::from_toml_str(
        r#"
        Q = [3, 4]
        g = [1]
        instances = 5
        budgets = [1000000, 100000000]
        infinite_shots = true
        "#,
    )?;
    let report = run_experiment(&config)?;
    let out = std::env::temp_dir().join("qem-example-run");
    report.write_all(&out)?;
    for a in report.aggregates()? {
        println!(
            "Q={} budget={:>9} {:<7} mean {:.2e} (n={}, skipped {})",
            a.num_qubits, a.budget, a.method, a.mean_abs_error, a.count, a.skipped
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}
