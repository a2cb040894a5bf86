//! Mitigation estimators.
//!
//! * [`extrapolation`]: Richardson weights and ZNE fits in the noise level.
//! * [`regression`]: least-squares maps from noisy features to exact values
//!   (CDR, vnCDR, CGVD, UNITED) and the VD pass-through.
//! * [`analytic`]: closed forms under global depolarizing noise.

pub mod analytic;
pub mod extrapolation;
pub mod regression;

pub use analytic::global_depolarizing_f;
pub use extrapolation::{richardson_coefficients, zne, ExtrapolationSpec, Fit};
pub use regression::{
    fit_regression, fit_regression_with, mitigate_cdr, mitigate_united, mitigate_vd,
    mitigate_vncdr, RegressionModel, RegressionOptions,
};
