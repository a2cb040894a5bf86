//! Finite-shot estimation and per-method shot budgeting.
//!
//! Every measured quantity is modelled as the mean of a ±1-valued
//! observable: `k ~ Binomial(n, (1 + v) / 2)` and the estimate is
//! `2k/n - 1`. VD numerators `Tr(rho^M X)` and denominators `Tr(rho^M)` are
//! each sampled this way (the Hadamard-test picture), so a VD ratio costs
//! two circuit evaluations.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::density::VdMoments;
use crate::error::{Error, Result};

const RANGE_TOL: f64 = 1e-9;
const MIN_DENOMINATOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Unmitigated estimate; the whole budget goes to one circuit.
    Noisy,
    Zne,
    Vd,
    Cdr,
    VnCdr,
    Cgvd,
    United,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Noisy,
        Method::Zne,
        Method::Vd,
        Method::Cdr,
        Method::VnCdr,
        Method::Cgvd,
        Method::United,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Noisy => "noisy",
            Method::Zne => "zne",
            Method::Vd => "vd",
            Method::Cdr => "cdr",
            Method::VnCdr => "vncdr",
            Method::Cgvd => "cgvd",
            Method::United => "united",
        }
    }

    pub fn needs_training(self) -> bool {
        matches!(
            self,
            Method::Cdr | Method::VnCdr | Method::Cgvd | Method::United
        )
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotBudget {
    pub total: u64,
    pub per_circuit: u64,
    pub circuit_count: u64,
}

impl ShotBudget {
    /// Shots actually spent; never exceeds `total`.
    pub fn used(&self) -> u64 {
        self.per_circuit * self.circuit_count
    }
}

/// Number of distinct circuit evaluations a method needs.
///
/// `n_levels` is the number of noise levels `n + 1`, `n_train` the number
/// of training circuits `N_t` and `max_copies` the largest VD copy number.
pub fn circuit_count(method: Method, n_levels: u64, n_train: u64, max_copies: u64) -> u64 {
    let vd_circuits = 2 * max_copies - 1;
    match method {
        Method::Noisy => 1,
        Method::Zne => n_levels,
        Method::Vd => 2,
        Method::Cdr => n_train + 1,
        Method::VnCdr => n_levels * (n_train + 1),
        Method::Cgvd => (n_train + 1) * vd_circuits,
        Method::United => n_levels * (n_train + 1) * vd_circuits,
    }
}

/// Splits `total` shots evenly over every circuit the method evaluates.
pub fn allocate_budget(
    method: Method,
    total: u64,
    n_levels: u64,
    n_train: u64,
    max_copies: u64,
) -> Result<ShotBudget> {
    if n_levels == 0 || n_train == 0 || max_copies == 0 {
        return Err(Error::InvalidArgument(
            "noise levels, training circuits and copies must all be >= 1".into(),
        ));
    }
    let count = circuit_count(method, n_levels, n_train, max_copies);
    let per_circuit = total / count;
    if per_circuit == 0 {
        return Err(Error::BudgetTooSmall {
            total,
            circuits: count,
        });
    }
    Ok(ShotBudget {
        total,
        per_circuit,
        circuit_count: count,
    })
}

fn check_range(v: f64) -> Result<f64> {
    if !v.is_finite() || v.abs() > 1.0 + RANGE_TOL {
        return Err(Error::ValueOutOfRange(v));
    }
    Ok(v.clamp(-1.0, 1.0))
}

/// Finite-shot estimate of a ±1-valued observable with mean `true_value`.
pub fn sample_expectation<R: Rng + ?Sized>(true_value: f64, shots: u64, rng: &mut R) -> Result<f64> {
    if shots == 0 {
        return Err(Error::InvalidArgument("need at least one shot".into()));
    }
    let v = check_range(true_value)?;
    let p = ((1.0 + v) / 2.0).clamp(0.0, 1.0);
    let k = Binomial::new(shots, p)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(rng);
    Ok(2.0 * k as f64 / shots as f64 - 1.0)
}

/// Finite-shot VD ratio: numerator and denominator sampled independently
/// with `shots_each` shots, ratio clamped to `[-1, 1]`.
pub fn sample_vd_estimate<R: Rng + ?Sized>(
    numerator_true: f64,
    denominator_true: f64,
    shots_each: u64,
    rng: &mut R,
) -> Result<f64> {
    if !(denominator_true > 0.0 && denominator_true <= 1.0 + RANGE_TOL) {
        return Err(Error::ValueOutOfRange(denominator_true));
    }
    let num = sample_expectation(numerator_true, shots_each, rng)?;
    let den = sample_expectation(denominator_true, shots_each, rng)?;
    if den < MIN_DENOMINATOR {
        return Err(Error::InsufficientShots(den));
    }
    Ok((num / den).clamp(-1.0, 1.0))
}

/// Whether features are exact channel expectations or finite-shot samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Exact,
    Shots(u64),
}

impl Sampling {
    pub fn direct<R: Rng + ?Sized>(&self, true_value: f64, rng: &mut R) -> Result<f64> {
        match *self {
            Sampling::Exact => Ok(true_value),
            Sampling::Shots(n) => sample_expectation(true_value, n, rng),
        }
    }

    /// Estimate for `M` copies; `M = 1` is a plain expectation value.
    pub fn vd<R: Rng + ?Sized>(&self, moments: VdMoments, copies: u32, rng: &mut R) -> Result<f64> {
        if copies == 1 {
            return self.direct(moments.numerator, rng);
        }
        match *self {
            Sampling::Exact => {
                if moments.denominator <= 0.0 {
                    return Err(Error::DegenerateDenominator(moments.denominator));
                }
                Ok(moments.ratio())
            }
            Sampling::Shots(n) => {
                sample_vd_estimate(moments.numerator, moments.denominator, n, rng)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn deterministic_outcomes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(sample_expectation(1.0, 17, &mut rng).unwrap(), 1.0);
            assert_eq!(sample_expectation(-1.0, 17, &mut rng).unwrap(), -1.0);
        }
    }

    #[test]
    fn out_of_range_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_expectation(1.0 + 1e-10, 10, &mut rng).is_ok());
        assert!(matches!(
            sample_expectation(1.01, 10, &mut rng),
            Err(Error::ValueOutOfRange(_))
        ));
        assert!(sample_expectation(0.3, 0, &mut rng).is_err());
        assert!(sample_vd_estimate(0.1, 0.0, 10, &mut rng).is_err());
        assert!(sample_vd_estimate(0.1, 1.5, 10, &mut rng).is_err());
    }

    #[test]
    fn binomial_standard_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let xs: Vec<f64> = (0..2000)
            .map(|_| sample_expectation(0.0, 10_000, &mut rng).unwrap())
            .collect();
        let (m, v) = mean_var(&xs);
        assert!(m.abs() < 4.0 * 0.01 / (2000f64).sqrt());
        assert!((v.sqrt() - 0.01).abs() < 0.001);
    }

    #[test]
    fn three_sigma_mean_at_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..100)
            .map(|_| sample_expectation(0.5, 1_000_000, &mut rng).unwrap())
            .collect();
        let (m, _) = mean_var(&xs);
        // per-run sigma = sqrt(0.75 / 1e6) = 0.000866
        assert!((m - 0.5).abs() < 3.0 * 0.000866);
    }

    #[test]
    fn huge_budgets_are_constant_time() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = sample_expectation(0.25, 5_000_000_000, &mut rng).unwrap();
        assert!((v - 0.25).abs() < 1e-3);
    }

    #[test]
    fn vd_pure_state_denominator() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let r = sample_vd_estimate(0.4, 1.0, 1000, &mut rng).unwrap();
            assert!((-1.0..=1.0).contains(&r));
        }
    }

    #[test]
    fn vd_ratio_bias_is_small() {
        // rho = diag(0.75, 0.25), M = 2: Tr(rho^2 Z) = 0.5, Tr(rho^2) = 0.625.
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xs: Vec<f64> = (0..1000)
            .map(|_| sample_vd_estimate(0.5, 0.625, 1_000_000, &mut rng).unwrap())
            .collect();
        let (m, _) = mean_var(&xs);
        assert!((m - 0.8).abs() < 1e-3, "mean {m}");
    }

    #[test]
    fn vd_insufficient_shots() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // a tiny denominator sampled with one shot lands on -1 half the time
        let errs = (0..200)
            .filter(|_| {
                matches!(
                    sample_vd_estimate(0.0, 1e-3, 1, &mut rng),
                    Err(Error::InsufficientShots(_))
                )
            })
            .count();
        assert!(errs > 50);
    }

    #[test]
    fn budget_formulas() {
        let b = allocate_budget(Method::United, 1_000_000, 3, 50, 3).unwrap();
        assert_eq!((b.circuit_count, b.per_circuit), (765, 1307));
        let b = allocate_budget(Method::VnCdr, 1_000_000, 3, 50, 1).unwrap();
        assert_eq!((b.circuit_count, b.per_circuit), (153, 6535));
        let b = allocate_budget(Method::Zne, 100_000, 2, 1, 1).unwrap();
        assert_eq!(b.per_circuit, 50_000);
        let b = allocate_budget(Method::Vd, 100_000, 1, 1, 2).unwrap();
        assert_eq!(b.circuit_count, 2);
        let b = allocate_budget(Method::Cdr, 100_000, 1, 50, 1).unwrap();
        assert_eq!(b.circuit_count, 51);
        let b = allocate_budget(Method::Cgvd, 100_000, 1, 50, 3).unwrap();
        assert_eq!(b.circuit_count, 255);
        let b = allocate_budget(Method::Noisy, 7, 3, 50, 3).unwrap();
        assert_eq!((b.circuit_count, b.per_circuit), (1, 7));
        assert!(matches!(
            allocate_budget(Method::United, 100, 3, 50, 3),
            Err(Error::BudgetTooSmall { .. })
        ));
        assert!(allocate_budget(Method::Zne, 100, 0, 1, 1).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("UNITED".parse::<Method>().unwrap(), Method::United);
        assert!("foo".parse::<Method>().is_err());
    }

    proptest! {
        #[test]
        fn budget_never_overspends(
            total in 1u64..10_000_000_000,
            levels in 1u64..5,
            n_train in 1u64..120,
            copies in 1u64..6,
        ) {
            for m in Method::ALL {
                if let Ok(b) = allocate_budget(m, total, levels, n_train, copies) {
                    prop_assert!(b.used() <= total);
                    prop_assert!(b.per_circuit >= 1);
                    prop_assert_eq!(b.circuit_count, circuit_count(m, levels, n_train, copies));
                }
            }
        }

        #[test]
        fn estimates_stay_in_range(v in -1.0..=1.0f64, den in 0.05..=1.0f64, shots in 1u64..5000, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = sample_expectation(v, shots, &mut rng).unwrap();
            prop_assert!((-1.0..=1.0).contains(&d));
            if let Ok(r) = sample_vd_estimate(v * den, den, shots, &mut rng) {
                prop_assert!((-1.0..=1.0).contains(&r));
            }
        }
    }
}
