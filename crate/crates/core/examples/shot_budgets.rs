//! How a fixed shot budget is split over the circuits each method needs.

use qem::shots::{allocate_budget, sample_expectation, Method};
use qem::rng;

fn main() -> qem::Result<()> {
    let total = 100_000;
    println!("N_tot = {total}, 3 noise levels, 50 training circuits, 3 copies");
    for method in Method::ALL {
        match allocate_budget(method, total, 3, 50, 3) {
            Ok(b) => println!("{method:<7} {:>4} circuits x {:>6} shots", b.circuit_count, b.per_circuit),
            Err(e) => println!("{method:<7} {e}"),
        }
    }

    let mut r = rng::stream(1, &[]);
    let samples = (0..5)
        .map(|_| sample_expectation(0.3, 1_000, &mut r))
        .collect::<qem::Result<Vec<_>>>()?;
    println!("five 1000-shot estimates of 0.3: {samples:?}");
    Ok(())
}
