//! UNITED against its special cases on one benchmark instance, with exact
//! features and with a finite shot budget.

use qem::bench::{Budget, ExperimentConfig, Instance};
use qem::shots::Method;

fn main() -> qem::Result<()> {
    let config = ExperimentConfig::default();
    let grid = config.grids.union_grid(&Method::ALL)?;
    let inst = Instance::prepare(&config, 4, 1, 0, &grid, true)?;
    println!("instance seed {} exact {:.6}", inst.seed, inst.exact);
    for budget in [Budget::Infinite, Budget::Shots(1_000_000_000), Budget::Shots(1_000_000)] {
        println!("budget {budget}:");
        for method in Method::ALL {
            match inst.evaluate(&config, method, budget) {
                Ok((est, shots)) => println!(
                    "  {method:<7} {est:+.6} error {:.2e} shots {}",
                    (est - inst.exact).abs(),
                    shots.map_or("-".into(), |s| s.to_string())
                ),
                Err(e) => println!("  {method:<7} skipped: {e}"),
            }
        }
    }
    Ok(())
}
