//! Zero-noise extrapolation on gate-folded copies of a circuit.

use qem::circuit::simulate_noisy;
use qem::mitigation::{richardson_coefficients, zne, ExtrapolationSpec, Fit};
use qem::{build_random_circuit, scale_circuit, simulate_exact, NoiseLevel, NoiseModel, Observable};

fn main() -> qem::Result<()> {
    let circuit = build_random_circuit(4, 4, 7)?;
    let obs = Observable::z(0, 4)?;
    let noise = NoiseModel::default();
    let exact = simulate_exact(&circuit, &obs)?;

    let levels = [1u32, 2, 3];
    let mut values = Vec::new();
    for &c in &levels {
        let scaled = scale_circuit(&circuit, NoiseLevel::new(c)?, 99)?;
        let v = simulate_noisy(&scaled, &noise, &obs)?;
        println!("c = {c}: {} gates, <Z0> = {v:.6}", scaled.len());
        values.push(v);
    }
    let cs: Vec<f64> = levels.iter().map(|&c| f64::from(c)).collect();
    println!("Richardson weights {:?}", richardson_coefficients(&cs)?);
    for fit in [Fit::Richardson, Fit::Linear, Fit::Exponential] {
        let est = zne(&values, &ExtrapolationSpec::new(cs.clone(), fit)?)?;
        println!("{fit:?}: {est:.6} (error {:.2e})", (est - exact).abs());
    }
    println!("unmitigated error {:.2e}", (values[0] - exact).abs());
    Ok(())
}
