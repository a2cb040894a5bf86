use std::ops::RangeInclusive;

use rayon::prelude::*;

use super::config::{Budget, ExperimentConfig};
use super::report::{CopyRow, CopySweepReport, MitigationReport, ResultRow, SkippedRun};
use crate::circuit::{self, build_random_circuit};
use crate::density::Observable;
use crate::error::{Error, Result};
use crate::mitigation::{
    fit_regression_with, mitigate_cdr, mitigate_united, mitigate_vd, mitigate_vncdr,
    zne, RegressionOptions,
};
use crate::rng::{self, StreamRng};
use crate::shots::{allocate_budget, Method, Sampling};
use crate::training::{
    moment_table, sample_features, FeatureGrid, FeatureLabel, MomentTable, TrainingData,
};

const TRAINING_TAG: u64 = 1;
const SCALING_TAG: u64 = 2;
const SAMPLING_TAG: u64 = 3;

/// One circuit of interest with everything that does not depend on the
/// shot budget: exact value, noisy moments, and training data.
pub struct Instance {
    pub num_qubits: usize,
    pub depth_factor: usize,
    pub layers: usize,
    pub index: usize,
    pub seed: u64,
    pub observable: Observable,
    pub exact: f64,
    pub moments: MomentTable,
    /// `Err` when no usable training set exists for this circuit.
    pub training: std::result::Result<TrainingData, String>,
}

/// Seed of instance `index` in the `(Q, g)` sweep.
pub fn instance_seed(base: u64, num_qubits: usize, depth_factor: usize, index: usize) -> u64 {
    rng::derive_seed(base, &[num_qubits as u64, depth_factor as u64, index as u64])
}

impl Instance {
    pub fn prepare(
        config: &ExperimentConfig,
        num_qubits: usize,
        depth_factor: usize,
        index: usize,
        grid: &FeatureGrid,
        with_training: bool,
    ) -> Result<Self> {
        let seed = instance_seed(config.seed, num_qubits, depth_factor, index);
        let layers = depth_factor * num_qubits;
        let obs = config.observable_for(num_qubits)?;
        let circuit = build_random_circuit(num_qubits, layers, seed)?;
        let exact = circuit::simulate_exact(&circuit, &obs)?;
        let scale_seed = rng::derive_seed(seed, &[SCALING_TAG]);
        let moments = moment_table(&circuit, &config.noise, grid, &obs, scale_seed)?;
        let training = if with_training {
            let train_seed = rng::derive_seed(seed, &[TRAINING_TAG]);
            match TrainingData::prepare(&circuit, &obs, &config.grids.training, &config.noise, grid, train_seed) {
                Ok(t) => Ok(t),
                Err(e @ Error::DegenerateTrainingSet(_)) => Err(e.to_string()),
                Err(e) => return Err(e),
            }
        } else {
            Err("no training requested".into())
        };
        Ok(Self {
            num_qubits,
            depth_factor,
            layers,
            index,
            seed,
            observable: obs,
            exact,
            moments,
            training,
        })
    }

    fn sampling_stream(&self, budget: Budget, method: Method) -> StreamRng {
        rng::stream(self.seed, &[SAMPLING_TAG, budget_key(budget), method as u64])
    }

    /// Whether the selected training circuits have at least two distinct
    /// nonzero exact values, so that a slope and intercept can be learned.
    pub fn training_is_informative(&self) -> bool {
        let Ok(t) = &self.training else {
            return false;
        };
        let ys: Vec<f64> = t.circuits.iter().map(|c| c.exact_value).collect();
        let spread = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - ys.iter().copied().fold(f64::INFINITY, f64::min);
        spread > 1e-9 && ys.iter().any(|y| y.abs() > 1e-9)
    }

    fn training(&self) -> Result<&TrainingData> {
        self.training
            .as_ref()
            .map_err(|_| Error::DegenerateTrainingSet(0))
    }

    /// Mitigated estimate and shots spent for one method at one budget.
    pub fn evaluate(
        &self,
        config: &ExperimentConfig,
        method: Method,
        budget: Budget,
    ) -> Result<(f64, Option<u64>)> {
        let grids = &config.grids;
        let grid = grids.feature_grid(method)?;
        let n_train = grids.training.select as u64;
        let (sampling, used) = match budget {
            Budget::Infinite => (Sampling::Exact, None),
            Budget::Shots(total) => {
                let b = allocate_budget(
                    method,
                    total,
                    grid.levels.len() as u64,
                    n_train,
                    u64::from(grid.max_copies),
                )?;
                (Sampling::Shots(b.per_circuit), Some(b.used()))
            }
        };
        let mut rng = self.sampling_stream(budget, method);
        let schema = grid.schema();
        let features = sample_features(&self.moments, &schema, sampling, &mut rng)?;
        let opts = |intercept| RegressionOptions {
            intercept,
            ridge: grids.ridge,
        };
        let estimate = match method {
            Method::Noisy => features[0],
            Method::Zne => zne(&features, &grids.zne_spec()?)?,
            Method::Vd => mitigate_vd(features[copy_column(&schema, grids.vd_copies)]),
            Method::Cdr => {
                let set = self.training()?.sample(&schema, sampling, &mut rng)?;
                let model = fit_regression_with(&set, opts(true))?;
                // identical training features leave the slope undetermined
                if model.rank < 2 {
                    return Err(Error::DegenerateTrainingSet(set.len()));
                }
                mitigate_cdr(&model, features[0])?
            }
            Method::VnCdr => {
                let set = self.training()?.sample(&schema, sampling, &mut rng)?;
                mitigate_vncdr(&fit_regression_with(&set, opts(false))?, &features)?
            }
            Method::Cgvd | Method::United => {
                let set = self.training()?.sample(&schema, sampling, &mut rng)?;
                let model = fit_regression_with(&set, opts(grids.fit_intercept))?;
                mitigate_united(&model, &features)?
            }
        };
        Ok((estimate, used))
    }
}

fn copy_column(schema: &[FeatureLabel], copies: u32) -> usize {
    schema
        .iter()
        .position(|l| l.copies == copies)
        .expect("VD grid includes its copy number")
}

/// Errors that mean "this method cannot run here" rather than a bug.
fn is_skippable(e: &Error) -> bool {
    matches!(
        e,
        Error::BudgetTooSmall { .. }
            | Error::InsufficientShots(_)
            | Error::DegenerateDenominator(_)
            | Error::DegenerateTrainingSet(_)
    )
}

fn sweep_points(config: &ExperimentConfig) -> Vec<(usize, usize, usize)> {
    let mut points = Vec::new();
    for &q in &config.qubits {
        for &g in &config.depth_factors {
            for i in 0..config.instances {
                points.push((q, g, i));
            }
        }
    }
    points
}

/// Runs every configured method on every instance and budget.
///
/// Instances run in parallel; rows come back ordered by `(Q, g, instance,
/// budget, method)` so the report does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<MitigationReport> {
    config.validate()?;
    let grid = config.grids.union_grid(&config.methods)?;
    let with_training = config.methods.iter().any(|m| m.needs_training());
    let budgets = config.effective_budgets();
    let per_instance = sweep_points(config)
        .into_par_iter()
        .map(|(q, g, i)| {
            let inst = Instance::prepare(config, q, g, i, &grid, with_training)?;
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            for &budget in &budgets {
                for &method in &config.methods {
                    match inst.evaluate(config, method, budget) {
                        Ok((estimate, shots_used)) => rows.push(ResultRow {
                            num_qubits: q,
                            depth_factor: g,
                            layers: inst.layers,
                            budget,
                            instance: i,
                            instance_seed: inst.seed,
                            method,
                            exact: inst.exact,
                            estimate,
                            abs_error: (estimate - inst.exact).abs(),
                            shots_used,
                        }),
                        Err(e) if is_skippable(&e) => skipped.push(SkippedRun {
                            num_qubits: q,
                            depth_factor: g,
                            budget,
                            instance_seed: inst.seed,
                            method,
                            reason: match (&e, &inst.training) {
                                (Error::DegenerateTrainingSet(_), Err(why)) => why.clone(),
                                _ => e.to_string(),
                            },
                        }),
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok((rows, skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (r, s) in per_instance {
        rows.extend(r);
        skipped.extend(s);
    }
    Ok(MitigationReport {
        config: config.clone(),
        rows,
        skipped,
    })
}

pub const MAX_SWEEP_COPIES: u32 = 6;

/// VD error against copy number. `M = 1` is the unmitigated value with the
/// whole budget on one circuit; `M >= 2` splits it over numerator and
/// denominator.
pub fn copy_sweep(config: &ExperimentConfig, copies: RangeInclusive<u32>) -> Result<CopySweepReport> {
    config.validate()?;
    if *copies.start() < 1 || *copies.end() > MAX_SWEEP_COPIES || copies.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "copy range {copies:?} must lie within 1..={MAX_SWEEP_COPIES}"
        )));
    }
    let grid = FeatureGrid::new(vec![1], *copies.end())?;
    let budgets = config.effective_budgets();
    let per_instance = sweep_points(config)
        .into_par_iter()
        .map(|(q, g, i)| {
            let inst = Instance::prepare(config, q, g, i, &grid, false)?;
            let mut rows = Vec::new();
            let mut skipped = Vec::new();
            for &budget in &budgets {
                for m in copies.clone() {
                    let method = if m == 1 { Method::Noisy } else { Method::Vd };
                    let label = FeatureLabel { level: 1, copies: m };
                    let mut rng = rng::stream(inst.seed, &[SAMPLING_TAG, budget_key(budget), 100 + u64::from(m)]);
                    let outcome = (|| {
                        let (sampling, used) = match budget {
                            Budget::Infinite => (Sampling::Exact, None),
                            Budget::Shots(total) => {
                                let b = allocate_budget(method, total, 1, 1, u64::from(m))?;
                                (Sampling::Shots(b.per_circuit), Some(b.used()))
                            }
                        };
                        let v = sampling.vd(inst.moments.get(label)?, m, &mut rng)?;
                        Ok::<_, Error>((v, used))
                    })();
                    match outcome {
                        Ok((estimate, shots_used)) => rows.push(CopyRow {
                            num_qubits: q,
                            depth_factor: g,
                            layers: inst.layers,
                            budget,
                            instance_seed: inst.seed,
                            copies: m,
                            exact: inst.exact,
                            estimate,
                            abs_error: (estimate - inst.exact).abs(),
                            shots_used,
                        }),
                        Err(e) if is_skippable(&e) => skipped.push(SkippedRun {
                            num_qubits: q,
                            depth_factor: g,
                            budget,
                            instance_seed: inst.seed,
                            method,
                            reason: format!("M = {m}: {e}"),
                        }),
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok((rows, skipped))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (r, s) in per_instance {
        rows.extend(r);
        skipped.extend(s);
    }
    Ok(CopySweepReport { rows, skipped })
}

fn budget_key(b: Budget) -> u64 {
    match b {
        Budget::Shots(n) => n,
        Budget::Infinite => u64::MAX,
    }
}
