//! Virtual distillation with increasing copy number, and the closed-form
//! damping factor under global depolarizing noise.

use qem::circuit::noisy_state;
use qem::mitigation::global_depolarizing_f;
use qem::{build_random_circuit, simulate_exact, NoiseModel, Observable};

fn main() -> qem::Result<()> {
    let circuit = build_random_circuit(4, 4, 11)?;
    let obs = Observable::z(0, 4)?;
    let exact = simulate_exact(&circuit, &obs)?;
    println!("exact {exact:.6}");

    let rho = noisy_state(&circuit, &NoiseModel::default())?;
    println!("local noise:");
    for m in 1..=5 {
        let (_, _, ratio) = rho.vd_expectation(&obs, m)?;
        println!("  M = {m}: {ratio:.6} error {:.2e}", (ratio - exact).abs());
    }

    // one global depolarizing layer per gate
    let p = 0.02;
    let rho = noisy_state(&circuit, &NoiseModel::global(p))?;
    let gates = circuit.len() as i32;
    let mixed = 1.0 - (1.0 - p).powi(gates);
    println!("global depolarizing p = {p} per gate, {gates} gates, mixed weight {mixed:.4}:");
    for m in 1..=5 {
        let (_, _, ratio) = rho.vd_expectation(&obs, m)?;
        let predicted = global_depolarizing_f(m, 1, mixed, 16) * exact;
        println!("  M = {m}: simulated {ratio:.8} closed form {predicted:.8}");
    }
    Ok(())
}
