//! Least-squares maps from noisy features to exact values.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::training::{FeatureLabel, TrainingSet};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

const CDR_FEATURE: FeatureLabel = FeatureLabel { level: 1, copies: 1 };

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub schema: Vec<FeatureLabel>,
    pub coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intercept: Option<f64>,
    /// Numerical rank of the design matrix, intercept column included.
    pub rank: usize,
}

impl RegressionModel {
    pub fn new(
        schema: Vec<FeatureLabel>,
        coefficients: Vec<f64>,
        intercept: Option<f64>,
    ) -> Result<Self> {
        if schema.len() != coefficients.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} coefficients for {} features",
                coefficients.len(),
                schema.len()
            )));
        }
        Ok(Self {
            rank: coefficients.len() + usize::from(intercept.is_some()),
            schema,
            coefficients,
            intercept,
        })
    }

    /// `coefficients . features + intercept`.
    pub fn predict(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.coefficients.len() {
            return Err(Error::SchemaMismatch(format!(
                "{} features given, model expects {}",
                features.len(),
                self.coefficients.len()
            )));
        }
        let dot: f64 = self
            .coefficients
            .iter()
            .zip(features)
            .map(|(a, x)| a * x)
            .sum();
        Ok(dot + self.intercept.unwrap_or(0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RegressionOptions {
    pub intercept: bool,
    /// Tikhonov parameter; 0 gives minimum-norm ordinary least squares.
    pub ridge: f64,
}

pub fn fit_regression(set: &TrainingSet, include_intercept: bool) -> Result<RegressionModel> {
    fit_regression_with(
        set,
        RegressionOptions {
            intercept: include_intercept,
            ridge: 0.0,
        },
    )
}

/// Least squares through an SVD of the design matrix. Directions with
/// singular value below `RANK_TOLERANCE * sigma_max` are dropped, so
/// collinear features get the minimum-norm solution.
pub fn fit_regression_with(set: &TrainingSet, opts: RegressionOptions) -> Result<RegressionModel> {
    if set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if !(opts.ridge >= 0.0 && opts.ridge.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ridge parameter must be finite and non-negative, got {}",
            opts.ridge
        )));
    }
    let n_feat = set.schema.len();
    let cols = n_feat + usize::from(opts.intercept);
    if cols == 0 {
        return Err(Error::InvalidArgument("no features to fit".into()));
    }
    if set.len() < cols {
        return Err(Error::InvalidArgument(format!(
            "{} training rows cannot determine {} parameters",
            set.len(),
            cols
        )));
    }
    let a = Mat::from_fn(set.len(), cols, |i, j| {
        if j < n_feat {
            set.rows[i].features[j]
        } else {
            1.0
        }
    });
    if set.rows.iter().flat_map(|r| &r.features).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite training feature".into()));
    }
    let b: Vec<f64> = set.rows.iter().map(|r| r.target).collect();
    let svd = a
        .thin_svd()
        .map_err(|e| Error::InvalidArgument(format!("SVD failed: {e:?}")))?;
    let sigma: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let s_max = sigma.iter().copied().fold(0.0, f64::max);
    let mut x = vec![0.0; cols];
    let mut rank = 0;
    for (k, &s) in sigma.iter().enumerate() {
        if s <= RANK_TOLERANCE * s_max {
            continue;
        }
        rank += 1;
        let ub: f64 = svd.U().col(k).iter().zip(&b).map(|(u, y)| u * y).sum();
        let w = ub * s / (s * s + opts.ridge);
        for (xj, vj) in x.iter_mut().zip(svd.V().col(k).iter()) {
            *xj += w * vj;
        }
    }
    let coefficients = x.iter().take(n_feat).copied().collect();
    let intercept = opts.intercept.then(|| x[n_feat]);
    let mut model = RegressionModel::new(set.schema.clone(), coefficients, intercept)?;
    model.rank = rank;
    Ok(model)
}

/// `a_1 x + a_2` for a model trained on the single `c1_m1` feature.
pub fn mitigate_cdr(model: &RegressionModel, noisy: f64) -> Result<f64> {
    if model.schema != [CDR_FEATURE] || model.intercept.is_none() {
        return Err(Error::SchemaMismatch(
            "CDR model needs exactly the c1_m1 feature and an intercept".into(),
        ));
    }
    model.predict(&[noisy])
}

/// `sum_j a_j x_j` over noisy values at several levels, no intercept.
pub fn mitigate_vncdr(model: &RegressionModel, noisy: &[f64]) -> Result<f64> {
    if model.schema.iter().any(|l| l.copies != 1) || model.intercept.is_some() {
        return Err(Error::SchemaMismatch(
            "vnCDR model takes single-copy features and no intercept".into(),
        ));
    }
    model.predict(noisy)
}

/// The virtual-distillation ratio is already the mitigated value.
pub fn mitigate_vd(ratio: f64) -> f64 {
    ratio
}

/// `sum_{j,m} d_{j,m} x_{j,m}` over a (level, copies) grid; CGVD is the
/// single-level case.
pub fn mitigate_united(model: &RegressionModel, features: &[f64]) -> Result<f64> {
    model.predict(features)
}
