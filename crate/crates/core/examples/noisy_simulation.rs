//! Simulate one random circuit with and without noise and look at how far
//! the dominant eigenvector of the noisy state sits from the ideal state.

use qem::circuit::{exact_statevector, noisy_state};
use qem::{build_random_circuit, simulate_exact, NoiseModel, Observable};

fn main() -> qem::Result<()> {
    let circuit = build_random_circuit(4, 4, 2021)?;
    let obs = Observable::z(0, 4)?;
    let noise = NoiseModel::default();

    println!("{} gates, {} non-Clifford", circuit.len(), circuit.non_clifford_count());
    let exact = simulate_exact(&circuit, &obs)?;
    let rho = noisy_state(&circuit, &noise)?;
    println!("exact <Z0> = {exact:.6}");
    println!("noisy <Z0> = {:.6} (purity {:.4})", rho.expectation(&obs)?, rho.purity());

    let diag = rho.spectral_diagnostics(&exact_statevector(&circuit)?, &obs)?;
    println!(
        "dominant eigenvalue {:.4}, coherent mismatch {:.2e}, noise floor {:.2e}",
        diag.dominant_eigenvalue, diag.coherent_mismatch, diag.noise_floor
    );
    Ok(())
}
