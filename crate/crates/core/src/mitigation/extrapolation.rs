//! Zero-noise extrapolation in the noise level `c`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fit {
    /// Degree-`n` polynomial through all `n + 1` points.
    Richardson,
    /// Least-squares straight line.
    #[default]
    Linear,
    /// `a exp(-b c)` fitted on `ln |values|`.
    Exponential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtrapolationSpec {
    levels: Vec<f64>,
    pub fit: Fit,
}

impl ExtrapolationSpec {
    /// Levels must start at 1 and increase strictly.
    pub fn new(levels: Vec<f64>, fit: Fit) -> Result<Self> {
        if levels.first() != Some(&1.0) {
            return Err(Error::InvalidArgument(format!(
                "extrapolation levels must start at 1, got {levels:?}"
            )));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "extrapolation levels {levels:?} must increase strictly"
            )));
        }
        Ok(Self { levels, fit })
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

/// Weights `gamma_j` with `sum gamma_j = 1` and `sum gamma_j c_j^k = 0` for
/// `k = 1..n`, i.e. the Lagrange basis evaluated at `c = 0`:
/// `gamma_j = prod_{i != j} c_i / (c_i - c_j)`.
pub fn richardson_coefficients(levels: &[f64]) -> Result<Vec<f64>> {
    if levels.is_empty() {
        return Err(Error::InvalidArgument("no extrapolation levels".into()));
    }
    for (j, &cj) in levels.iter().enumerate() {
        if levels[..j].contains(&cj) {
            return Err(Error::SingularLevels(cj));
        }
    }
    Ok(levels
        .iter()
        .enumerate()
        .map(|(j, &cj)| {
            levels
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, &ci)| ci / (ci - cj))
                .product()
        })
        .collect())
}

/// Outer product `gamma_j gamma_M` of noise-level and copy-number Richardson
/// weights, flattened level-major. Copy number `M` plays the role of the
/// level coordinate `c_M = M`.
pub fn double_richardson_weights(levels: &[f64], max_copies: u32) -> Result<Vec<f64>> {
    let noise = richardson_coefficients(levels)?;
    let copies = copy_richardson_coefficients(max_copies)?;
    Ok(noise
        .iter()
        .flat_map(|g| copies.iter().map(move |h| g * h))
        .collect())
}

/// Richardson weights over copy numbers `M = 1..=max_copies`, taking
/// `c_M = M`.
pub fn copy_richardson_coefficients(max_copies: u32) -> Result<Vec<f64>> {
    let levels: Vec<f64> = (1..=max_copies).map(f64::from).collect();
    richardson_coefficients(&levels)
}

fn linear_intercept(levels: &[f64], values: &[f64]) -> f64 {
    let n = levels.len() as f64;
    let cm = levels.iter().sum::<f64>() / n;
    let vm = values.iter().sum::<f64>() / n;
    let sxy: f64 = levels
        .iter()
        .zip(values)
        .map(|(c, v)| (c - cm) * (v - vm))
        .sum();
    let sxx: f64 = levels.iter().map(|c| (c - cm).powi(2)).sum();
    vm - sxy / sxx * cm
}

/// Zero-noise estimate from values measured at `spec.levels()`.
pub fn zne(values: &[f64], spec: &ExtrapolationSpec) -> Result<f64> {
    let levels = spec.levels();
    if values.len() != levels.len() {
        return Err(Error::DimensionMismatch {
            expected: levels.len(),
            got: values.len(),
        });
    }
    if spec.fit != Fit::Richardson && values.len() < 2 {
        return Err(Error::InvalidArgument(
            "linear and exponential fits need at least 2 points".into(),
        ));
    }
    match spec.fit {
        Fit::Richardson => Ok(richardson_coefficients(levels)?
            .iter()
            .zip(values)
            .map(|(g, v)| g * v)
            .sum()),
        Fit::Linear => Ok(linear_intercept(levels, values)),
        Fit::Exponential => {
            let positive = values.iter().all(|&v| v > 0.0);
            let negative = values.iter().all(|&v| v < 0.0);
            if !(positive || negative) {
                return Ok(linear_intercept(levels, values));
            }
            let logs: Vec<f64> = values.iter().map(|v| v.abs().ln()).collect();
            let est = linear_intercept(levels, &logs).exp();
            if est.is_finite() {
                Ok(if negative { -est } else { est })
            } else {
                Ok(linear_intercept(levels, values))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use faer::linalg::solvers::Solve;
    use faer::Mat;
    use proptest::prelude::*;

    /// Independent route: solve the transposed Vandermonde system
    /// `sum_j gamma_j c_j^k = [k == 0]` with a dense LU solve.
    fn vandermonde_oracle(levels: &[f64]) -> Vec<f64> {
        let n = levels.len();
        let a = Mat::from_fn(n, n, |k, j| levels[j].powi(k as i32));
        let b = Mat::from_fn(n, 1, |k, _| if k == 0 { 1.0 } else { 0.0 });
        a.partial_piv_lu().solve(&b).col(0).iter().copied().collect()
    }

    #[test]
    fn known_weights() {
        assert_eq!(richardson_coefficients(&[1.0, 2.0]).unwrap(), vec![2.0, -1.0]);
        let g = richardson_coefficients(&[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in g.iter().zip([3.0, -3.0, 1.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-14);
        }
        assert_eq!(richardson_coefficients(&[1.0]).unwrap(), vec![1.0]);
        assert!(matches!(
            richardson_coefficients(&[1.0, 2.0, 2.0]),
            Err(Error::SingularLevels(_))
        ));
    }

    #[test]
    fn weights_match_vandermonde_solve() {
        for levels in [
            vec![1.0, 2.0],
            vec![1.0, 2.0, 3.0],
            vec![1.0, 1.5, 2.5, 4.0],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        ] {
            let g = richardson_coefficients(&levels).unwrap();
            let oracle = vandermonde_oracle(&levels);
            for (a, b) in g.iter().zip(&oracle) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn linear_examples() {
        let spec = ExtrapolationSpec::new(vec![1.0, 2.0], Fit::Linear).unwrap();
        assert_abs_diff_eq!(zne(&[0.8, 0.6], &spec).unwrap(), 1.0, epsilon = 1e-14);
        let three = ExtrapolationSpec::new(vec![1.0, 2.0, 3.0], Fit::Linear).unwrap();
        // least-squares line through (1,1), (2,0), (3,0): slope -1/2, intercept 4/3
        assert_abs_diff_eq!(zne(&[1.0, 0.0, 0.0], &three).unwrap(), 4.0 / 3.0, epsilon = 1e-14);
        let one = ExtrapolationSpec::new(vec![1.0], Fit::Linear).unwrap();
        assert!(zne(&[0.5], &one).is_err());
        assert!(zne(&[0.5, 0.1, 0.0], &spec).is_err());
    }

    #[test]
    fn exponential_recovers_depolarizing_decay() {
        let (mu, p, k) = (0.63, 0.01, 40);
        let s = (1.0f64 - p).powi(k);
        let spec = ExtrapolationSpec::new(vec![1.0, 2.0], Fit::Exponential).unwrap();
        assert_abs_diff_eq!(zne(&[s * mu, s * s * mu], &spec).unwrap(), mu, epsilon = 1e-12);
        assert_abs_diff_eq!(zne(&[-s * mu, -s * s * mu], &spec).unwrap(), -mu, epsilon = 1e-12);
        // sign change falls back to the straight line
        let lin = ExtrapolationSpec::new(vec![1.0, 2.0], Fit::Linear).unwrap();
        assert_eq!(
            zne(&[0.1, -0.05], &spec).unwrap(),
            zne(&[0.1, -0.05], &lin).unwrap()
        );
        assert_eq!(zne(&[0.0, 0.1], &spec).unwrap(), zne(&[0.0, 0.1], &lin).unwrap());
    }

    #[test]
    fn spec_validation() {
        assert!(ExtrapolationSpec::new(vec![2.0, 3.0], Fit::Linear).is_err());
        assert!(ExtrapolationSpec::new(vec![1.0, 1.0], Fit::Linear).is_err());
        assert!(ExtrapolationSpec::new(vec![], Fit::Linear).is_err());
    }

    #[test]
    fn double_weights_are_outer_product() {
        let w = double_richardson_weights(&[1.0, 2.0], 3).unwrap();
        // noise weights (2, -1), copy weights (3, -3, 1)
        let expected = [6.0, -6.0, 2.0, -3.0, 3.0, -1.0];
        for (a, b) in w.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(w.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn constraints_hold_up_to_degree_five(
            gaps in proptest::collection::vec(0.2..1.5f64, 0..6),
        ) {
            let mut levels = vec![1.0];
            for g in gaps {
                let last = *levels.last().unwrap();
                levels.push(last + g);
            }
            let gamma = richardson_coefficients(&levels).unwrap();
            let scale: f64 = gamma.iter().map(|g| g.abs()).sum();
            prop_assert!((gamma.iter().sum::<f64>() - 1.0).abs() < 1e-10 * scale);
            for k in 1..levels.len() as i32 {
                let s: f64 = gamma.iter().zip(&levels).map(|(g, c)| g * c.powi(k)).sum();
                let mag: f64 = gamma.iter().zip(&levels).map(|(g, c)| (g * c.powi(k)).abs()).sum();
                prop_assert!(s.abs() < 1e-10 * mag.max(1.0));
            }
        }

        #[test]
        fn richardson_is_exact_on_polynomials(
            coeffs in proptest::collection::vec(-1.0..1.0f64, 1..5),
        ) {
            let n = coeffs.len();
            let levels: Vec<f64> = (1..=n).map(|c| c as f64).collect();
            let values: Vec<f64> = levels
                .iter()
                .map(|c| coeffs.iter().enumerate().map(|(k, a)| a * c.powi(k as i32)).sum())
                .collect();
            let spec = ExtrapolationSpec::new(levels, Fit::Richardson).unwrap();
            prop_assert!((zne(&values, &spec).unwrap() - coeffs[0]).abs() < 1e-9);
        }
    }
}
