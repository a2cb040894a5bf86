//! Closed-form virtual-distillation response under global depolarizing noise.

/// Damping factor `f_{m,j}` of the `m`-copy VD estimate for
/// `rho_j = (1 - p^j) |psi><psi| + p^j I/d` and traceless `X`:
/// `Tr(rho_j^m X) / Tr(rho_j^m) = f_{m,j} <psi|X|psi>`.
///
/// Expects `m, j >= 1`, `0 <= p < 1` and `d >= 2`.
pub fn global_depolarizing_f(m: u32, j: u32, p: f64, d: usize) -> f64 {
    debug_assert!(m >= 1 && j >= 1 && (0.0..1.0).contains(&p) && d >= 2);
    let d = d as f64;
    let q = p.powi(j as i32);
    let qm = q.powi(m as i32);
    1.0 - d * qm / ((d - 1.0) * qm + (d - q * (d - 1.0)).powi(m as i32))
}
