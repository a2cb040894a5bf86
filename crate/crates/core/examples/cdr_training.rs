//! Clifford data regression: learn a noisy-to-exact map on near-Clifford
//! copies of the circuit and apply it to the circuit itself.

use qem::circuit::simulate_noisy;
use qem::mitigation::{fit_regression, mitigate_cdr, mitigate_vncdr};
use qem::shots::Sampling;
use qem::training::{build_training_set, FeatureGrid, TrainingParams};
use qem::{build_random_circuit, scale_circuit, simulate_exact, NoiseLevel, NoiseModel, Observable};

fn main() -> qem::Result<()> {
    let circuit = build_random_circuit(4, 8, 3)?;
    let obs = Observable::z(0, 4)?;
    let noise = NoiseModel::default();
    let params = TrainingParams::default();
    let exact = simulate_exact(&circuit, &obs)?;
    let noisy = simulate_noisy(&circuit, &noise, &obs)?;

    let set = build_training_set(&circuit, &params, &obs, &FeatureGrid::cdr(), &noise, Sampling::Exact, 1)?;
    let model = fit_regression(&set, true)?;
    println!("CDR fit y = {:.4} x + {:.4}", model.coefficients[0], model.intercept.unwrap_or(0.0));
    let cdr = mitigate_cdr(&model, noisy)?;

    let grid = FeatureGrid::new(vec![1, 2, 3], 1)?;
    let set = build_training_set(&circuit, &params, &obs, &grid, &noise, Sampling::Exact, 1)?;
    let model = fit_regression(&set, false)?;
    let features = grid
        .levels
        .iter()
        .map(|&c| simulate_noisy(&scale_circuit(&circuit, NoiseLevel::new(c)?, 5)?, &noise, &obs))
        .collect::<qem::Result<Vec<_>>>()?;
    let vncdr = mitigate_vncdr(&model, &features)?;

    println!("exact {exact:.6}");
    println!("noisy {noisy:.6} error {:.2e}", (noisy - exact).abs());
    println!("CDR   {cdr:.6} error {:.2e}", (cdr - exact).abs());
    println!("vnCDR {vncdr:.6} error {:.2e}", (vncdr - exact).abs());
    Ok(())
}
