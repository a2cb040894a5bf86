//! Noisy density-matrix simulation and data-driven quantum error mitigation.
//!
//! The crate simulates layered random circuits of native trapped-ion gates
//! under a configurable noise model and mitigates the resulting expectation
//! values with zero-noise extrapolation, Clifford data regression (CDR and
//! its multi-noise-level variant vnCDR), virtual distillation (VD),
//! Clifford-guided VD (CGVD) and the unified regression over noise levels
//! and copy numbers (UNITED). [`bench`] runs whole experiments under finite
//! shot budgets.

pub mod bench;
pub mod circuit;
pub mod density;
pub mod error;
pub mod mitigation;
pub mod noise;
pub mod rng;
pub mod shots;
pub mod training;

pub use circuit::{build_random_circuit, simulate_exact, simulate_noisy, Circuit, Gate, GateKind};
pub use density::{DensityMatrix, Observable, Pauli, VdMoments};
pub use error::{Error, Result};
pub use noise::{scale_circuit, NoiseLevel, NoiseMode, NoiseModel};
