//! Near-Clifford training circuits and training-set assembly.
//!
//! Training circuits keep the gate sequence and wiring of the circuit of
//! interest and only change angles: every `XX` and `RY` is snapped to its
//! nearest Clifford angle, and all but `keep` randomly chosen `RZ` gates are
//! snapped as well. Of `candidates` such circuits the `select` with the
//! largest `|y|` are kept.

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{self, Circuit, Gate, GateKind};
use crate::density::{Observable, VdMoments};
use crate::error::{Error, Result};
use crate::noise::{self, NoiseLevel, NoiseModel};
use crate::rng::{self, StreamRng};
use crate::shots::Sampling;

const VANISHING: f64 = 1e-12;

/// Nearest Clifford gate of the same kind on the same qubits.
///
/// Distances are measured on the circle; an angle exactly between two grid
/// points goes to the smaller one.
pub fn snap_to_clifford(gate: &Gate) -> Gate {
    let step = gate.kind.clifford_step();
    let a = gate.angle.rem_euclid(TAU);
    let x = a / step;
    let lower = x.floor();
    let k = if x - lower > 0.5 { lower + 1.0 } else { lower };
    let snapped = k * step;
    gate.with_angle(if snapped >= TAU - 1e-12 { 0.0 } else { snapped })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingCircuit {
    pub circuit: Circuit,
    /// Noiseless expectation value `y`.
    pub exact_value: f64,
    pub non_clifford_count: usize,
    pub seed: u64,
}

/// Snaps `XX`/`RY` gates and all but a random subset of `keep` `RZ` gates.
pub fn make_training_circuit(
    circuit: &Circuit,
    keep: usize,
    obs: &Observable,
    seed: u64,
) -> Result<TrainingCircuit> {
    let rz_positions: Vec<usize> = circuit
        .gates
        .iter()
        .enumerate()
        .filter(|(_, g)| g.kind == GateKind::Rz)
        .map(|(i, _)| i)
        .collect();
    let n_keep = keep.min(rz_positions.len());
    let mut rng = rng::stream(seed, &[]);
    let mut kept = vec![false; circuit.gates.len()];
    for i in index::sample(&mut rng, rz_positions.len(), n_keep) {
        kept[rz_positions[i]] = true;
    }
    let gates = circuit
        .gates
        .iter()
        .zip(&kept)
        .map(|(g, &k)| if k { g.clone() } else { snap_to_clifford(g) })
        .collect();
    let training = Circuit {
        gates,
        seed,
        ..circuit.clone()
    };
    let exact_value = circuit::simulate_exact(&training, obs)?;
    Ok(TrainingCircuit {
        non_clifford_count: training.non_clifford_count(),
        circuit: training,
        exact_value,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingParams {
    pub candidates: usize,
    /// Circuits kept after ranking by `|y|` (`N_t`).
    pub select: usize,
    /// Non-Clifford `RZ` gates left in each training circuit (`N`).
    pub keep: usize,
}

impl Default for TrainingParams {
    fn default() -> Self {
        Self {
            candidates: 100,
            select: 50,
            keep: 10,
        }
    }
}

/// Generates `candidates` training circuits and keeps the `select` with the
/// largest `|y|`; ties keep generation order.
pub fn select_training_circuits(
    circuit: &Circuit,
    obs: &Observable,
    params: &TrainingParams,
    seed: u64,
) -> Result<Vec<TrainingCircuit>> {
    if params.select == 0 || params.select > params.candidates {
        return Err(Error::InvalidArgument(format!(
            "cannot select {} of {} candidates",
            params.select, params.candidates
        )));
    }
    let mut pool = (0..params.candidates)
        .into_par_iter()
        .map(|k| {
            let s = rng::derive_seed(seed, &[k as u64]);
            make_training_circuit(circuit, params.keep, obs, s)
        })
        .collect::<Result<Vec<_>>>()?;
    if pool.iter().all(|t| t.exact_value.abs() < VANISHING) {
        return Err(Error::DegenerateTrainingSet(pool.len()));
    }
    pool.sort_by(|a, b| b.exact_value.abs().total_cmp(&a.exact_value.abs()));
    pool.truncate(params.select);
    Ok(pool)
}

/// One feature column: estimate at noise level `level` with `copies` VD copies
/// (`copies = 1` is the plain noisy value).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FeatureLabel {
    pub level: u32,
    pub copies: u32,
}

impl fmt::Display for FeatureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}_m{}", self.level, self.copies)
    }
}

/// Noise levels x copy numbers, enumerated level-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureGrid {
    pub levels: Vec<u32>,
    pub max_copies: u32,
}

impl FeatureGrid {
    pub fn new(levels: Vec<u32>, max_copies: u32) -> Result<Self> {
        if levels.is_empty() || max_copies == 0 {
            return Err(Error::InvalidArgument(
                "feature grid needs a level and a copy number".into(),
            ));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "levels {levels:?} must be strictly increasing"
            )));
        }
        if let Some(&c) = levels.iter().find(|c| !noise::SCALABLE_LEVELS.contains(c)) {
            return Err(Error::UnsupportedNoiseLevel(c));
        }
        Ok(Self { levels, max_copies })
    }

    /// Single `(c = 1, M = 1)` feature: the CDR grid.
    pub fn cdr() -> Self {
        Self {
            levels: vec![1],
            max_copies: 1,
        }
    }

    pub fn schema(&self) -> Vec<FeatureLabel> {
        self.levels
            .iter()
            .flat_map(|&level| (1..=self.max_copies).map(move |copies| FeatureLabel { level, copies }))
            .collect()
    }
}

/// Exact VD moments of one circuit at each noise level.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    levels: Vec<u32>,
    moments: Vec<Vec<VdMoments>>,
}

impl MomentTable {
    pub fn get(&self, label: FeatureLabel) -> Result<VdMoments> {
        let row = self
            .levels
            .iter()
            .position(|&c| c == label.level)
            .ok_or_else(|| Error::SchemaMismatch(format!("no data at level {}", label.level)))?;
        self.moments[row]
            .get((label.copies as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::SchemaMismatch(format!("no data for {label}")))
    }

    /// Noisy expectation value at `level` (the `M = 1` numerator).
    pub fn noisy(&self, level: u32) -> Result<f64> {
        Ok(self.get(FeatureLabel { level, copies: 1 })?.numerator)
    }

    /// Exact feature values (no shot noise) in schema order.
    pub fn exact_features(&self, schema: &[FeatureLabel]) -> Result<Vec<f64>> {
        sample_features(self, schema, Sampling::Exact, &mut rng::stream(0, &[]))
    }
}

/// Simulates `circuit` under `noise` at each level in `grid` and records
/// `Tr(rho^M X)`, `Tr(rho^M)` for `M = 1..=max_copies`.
///
/// Each level uses its own scaled circuit, drawn from `scale_seed`.
pub fn moment_table(
    circuit: &Circuit,
    noise: &NoiseModel,
    grid: &FeatureGrid,
    obs: &Observable,
    scale_seed: u64,
) -> Result<MomentTable> {
    let moments = grid
        .levels
        .iter()
        .map(|&c| {
            let scaled = noise::scale_circuit(circuit, NoiseLevel::new(c)?, scale_seed)?;
            circuit::noisy_state(&scaled, noise)?.vd_moments(obs, grid.max_copies)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentTable {
        levels: grid.levels.clone(),
        moments,
    })
}

/// Draws one estimate per schema column, in schema order.
pub fn sample_features(
    table: &MomentTable,
    schema: &[FeatureLabel],
    sampling: Sampling,
    rng: &mut StreamRng,
) -> Result<Vec<f64>> {
    schema
        .iter()
        .map(|&label| sampling.vd(table.get(label)?, label.copies, rng))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub seed: u64,
    pub target: f64,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSet {
    pub schema: Vec<FeatureLabel>,
    pub rows: Vec<TrainingRow>,
}

impl TrainingSet {
    pub fn new(schema: Vec<FeatureLabel>, rows: Vec<TrainingRow>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.features.len() != schema.len()) {
            return Err(Error::SchemaMismatch(format!(
                "row {} has {} features, schema has {}",
                bad.seed,
                bad.features.len(),
                schema.len()
            )));
        }
        Ok(Self { schema, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, label: FeatureLabel) -> Result<usize> {
        self.schema
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::SchemaMismatch(format!("{label} not in training set")))
    }

    /// Keeps only the columns in `schema`, in that order.
    pub fn restrict(&self, schema: &[FeatureLabel]) -> Result<Self> {
        let idx = schema
            .iter()
            .map(|&l| self.column_index(l))
            .collect::<Result<Vec<_>>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| TrainingRow {
                seed: r.seed,
                target: r.target,
                features: idx.iter().map(|&i| r.features[i]).collect(),
            })
            .collect();
        Ok(Self {
            schema: schema.to_vec(),
            rows,
        })
    }

    /// One line per circuit: `seed, y, features...` in schema order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["seed".to_string(), "y".to_string()];
        header.extend(self.schema.iter().map(|l| l.to_string()));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.seed.to_string(), r.target.to_string()];
            rec.extend(r.features.iter().map(|x| x.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Selected training circuits together with their exact noisy moments;
/// sampling them at a given shot count yields a [`TrainingSet`].
#[derive(Debug, Clone)]
pub struct TrainingData {
    pub circuits: Vec<TrainingCircuit>,
    pub tables: Vec<MomentTable>,
}

impl TrainingData {
    pub fn prepare(
        circuit: &Circuit,
        obs: &Observable,
        params: &TrainingParams,
        noise: &NoiseModel,
        grid: &FeatureGrid,
        seed: u64,
    ) -> Result<Self> {
        let circuits = select_training_circuits(circuit, obs, params, seed)?;
        let tables = circuits
            .par_iter()
            .map(|t| moment_table(&t.circuit, noise, grid, obs, t.seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { circuits, tables })
    }

    pub fn sample(
        &self,
        schema: &[FeatureLabel],
        sampling: Sampling,
        rng: &mut StreamRng,
    ) -> Result<TrainingSet> {
        let rows = self
            .circuits
            .iter()
            .zip(&self.tables)
            .map(|(t, table)| {
                Ok(TrainingRow {
                    seed: t.seed,
                    target: t.exact_value,
                    features: sample_features(table, schema, sampling, rng)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TrainingSet::new(schema.to_vec(), rows)
    }
}

/// Builds a training set over `grid` for the circuit of interest in one go.
pub fn build_training_set(
    circuit: &Circuit,
    params: &TrainingParams,
    obs: &Observable,
    grid: &FeatureGrid,
    noise: &NoiseModel,
    sampling: Sampling,
    seed: u64,
) -> Result<TrainingSet> {
    let data = TrainingData::prepare(circuit, obs, params, noise, grid, seed)?;
    data.sample(&grid.schema(), sampling, &mut rng::stream(seed, &[u64::MAX]))
}
