use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{Budget, ExperimentConfig};
use crate::error::{Error, Result};
use crate::shots::Method;

/// One mitigated value for one circuit instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub num_qubits: usize,
    pub depth_factor: usize,
    pub layers: usize,
    pub budget: Budget,
    pub instance: usize,
    pub instance_seed: u64,
    pub method: Method,
    pub exact: f64,
    pub estimate: f64,
    pub abs_error: f64,
    /// `None` for infinite-shot runs.
    pub shots_used: Option<u64>,
}

/// A method that could not produce a value for an instance, e.g. because
/// the budget leaves zero shots per circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRun {
    pub num_qubits: usize,
    pub depth_factor: usize,
    pub budget: Budget,
    pub instance_seed: u64,
    pub method: Method,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub num_qubits: usize,
    pub depth_factor: usize,
    pub layers: usize,
    pub budget: Budget,
    pub method: Method,
    pub count: usize,
    pub skipped: usize,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    /// Standard error of the mean over instances.
    pub std_error: f64,
}

/// Mean and maximum of the given absolute errors, summed in order.
pub fn aggregate(errors: &[f64]) -> Result<(f64, f64)> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("cannot aggregate zero rows".into()));
    }
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    let max = errors.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok((mean, max))
}

/// Standard error of the mean; zero for a single value.
pub fn std_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

type GroupKey = (usize, usize, Budget, Method);

fn group_aggregates(rows: &[ResultRow], skipped: &[SkippedRun]) -> Result<Vec<Aggregate>> {
    let mut groups: BTreeMap<GroupKey, (usize, Vec<f64>, usize)> = BTreeMap::new();
    for r in rows {
        let e = groups
            .entry((r.num_qubits, r.depth_factor, r.budget, r.method))
            .or_insert((r.layers, Vec::new(), 0));
        e.1.push(r.abs_error);
    }
    for s in skipped {
        if let Some(e) = groups.get_mut(&(s.num_qubits, s.depth_factor, s.budget, s.method)) {
            e.2 += 1;
        }
    }
    groups
        .into_iter()
        .map(|((q, g, budget, method), (layers, errs, skipped))| {
            let (mean, max) = aggregate(&errs)?;
            Ok(Aggregate {
                num_qubits: q,
                depth_factor: g,
                layers,
                budget,
                method,
                count: errs.len(),
                skipped,
                mean_abs_error: mean,
                max_abs_error: max,
                std_error: std_error(&errs),
            })
        })
        .collect()
}

fn opt_to_string(v: Option<u64>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MitigationReport {
    pub config: ExperimentConfig,
    pub rows: Vec<ResultRow>,
    pub skipped: Vec<SkippedRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub aggregates: Vec<Aggregate>,
    pub skipped: Vec<SkippedRun>,
}

impl MitigationReport {
    /// Per-(Q, g, budget, method) aggregates in sorted key order.
    pub fn aggregates(&self) -> Result<Vec<Aggregate>> {
        group_aggregates(&self.rows, &self.skipped)
    }

    pub fn aggregate_for(&self, q: usize, g: usize, budget: Budget, method: Method) -> Option<Aggregate> {
        self.aggregates().ok()?.into_iter().find(|a| {
            a.num_qubits == q && a.depth_factor == g && a.budget == budget && a.method == method
        })
    }

    pub fn summary(&self) -> Result<Summary> {
        Ok(Summary {
            aggregates: self.aggregates()?,
            skipped: self.skipped.clone(),
        })
    }

    /// `Q,g,L,budget,instance_seed,method,exact,estimate,abs_error,shots_used`.
    pub fn write_results_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "Q",
            "g",
            "L",
            "budget",
            "instance_seed",
            "method",
            "exact",
            "estimate",
            "abs_error",
            "shots_used",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.num_qubits.to_string(),
                r.depth_factor.to_string(),
                r.layers.to_string(),
                r.budget.to_string(),
                r.instance_seed.to_string(),
                r.method.to_string(),
                r.exact.to_string(),
                r.estimate.to_string(),
                r.abs_error.to_string(),
                opt_to_string(r.shots_used),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Budget against mean/max error per method, one line per aggregate.
    pub fn write_curves_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "Q",
            "g",
            "L",
            "budget",
            "method",
            "mean_abs_error",
            "max_abs_error",
            "std_error",
            "count",
            "skipped",
        ])?;
        for a in self.aggregates()? {
            w.write_record([
                a.num_qubits.to_string(),
                a.depth_factor.to_string(),
                a.layers.to_string(),
                a.budget.to_string(),
                a.method.to_string(),
                a.mean_abs_error.to_string(),
                a.max_abs_error.to_string(),
                a.std_error.to_string(),
                a.count.to_string(),
                a.skipped.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `results.csv`, `summary.json`, `curves.csv` and `report.json`.
    pub fn write_all(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        self.write_results_csv(create(&dir.join("results.csv"))?)?;
        self.write_curves_csv(create(&dir.join("curves.csv"))?)?;
        write_json(&dir.join("summary.json"), &self.summary()?)?;
        write_json(&dir.join("report.json"), self)
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(dir.as_ref().join("report.json"))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// VD error at one copy number; `copies = 1` is the unmitigated value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopyRow {
    pub num_qubits: usize,
    pub depth_factor: usize,
    pub layers: usize,
    pub budget: Budget,
    pub instance_seed: u64,
    pub copies: u32,
    pub exact: f64,
    pub estimate: f64,
    pub abs_error: f64,
    pub shots_used: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopyAggregate {
    pub num_qubits: usize,
    pub depth_factor: usize,
    pub budget: Budget,
    pub copies: u32,
    pub count: usize,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopySweepReport {
    pub rows: Vec<CopyRow>,
    pub skipped: Vec<SkippedRun>,
}

impl CopySweepReport {
    pub fn aggregates(&self) -> Result<Vec<CopyAggregate>> {
        let mut groups: BTreeMap<(usize, usize, Budget, u32), Vec<f64>> = BTreeMap::new();
        for r in &self.rows {
            groups
                .entry((r.num_qubits, r.depth_factor, r.budget, r.copies))
                .or_default()
                .push(r.abs_error);
        }
        groups
            .into_iter()
            .map(|((q, g, budget, copies), errs)| {
                let (mean, max) = aggregate(&errs)?;
                Ok(CopyAggregate {
                    num_qubits: q,
                    depth_factor: g,
                    budget,
                    copies,
                    count: errs.len(),
                    mean_abs_error: mean,
                    max_abs_error: max,
                    std_error: std_error(&errs),
                })
            })
            .collect()
    }

    /// Writes `copy_sweep.csv`, `copy_curves.csv` and `copy_summary.json`.
    pub fn write_all(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_writer(create(&dir.join("copy_sweep.csv"))?);
        w.write_record([
            "Q",
            "g",
            "L",
            "budget",
            "instance_seed",
            "copies",
            "exact",
            "estimate",
            "abs_error",
            "shots_used",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.num_qubits.to_string(),
                r.depth_factor.to_string(),
                r.layers.to_string(),
                r.budget.to_string(),
                r.instance_seed.to_string(),
                r.copies.to_string(),
                r.exact.to_string(),
                r.estimate.to_string(),
                r.abs_error.to_string(),
                opt_to_string(r.shots_used),
            ])?;
        }
        w.flush()?;

        let aggs = self.aggregates()?;
        let mut w = csv::Writer::from_writer(create(&dir.join("copy_curves.csv"))?);
        w.write_record([
            "Q",
            "g",
            "budget",
            "copies",
            "mean_abs_error",
            "max_abs_error",
            "std_error",
            "count",
        ])?;
        for a in &aggs {
            w.write_record([
                a.num_qubits.to_string(),
                a.depth_factor.to_string(),
                a.budget.to_string(),
                a.copies.to_string(),
                a.mean_abs_error.to_string(),
                a.max_abs_error.to_string(),
                a.std_error.to_string(),
                a.count.to_string(),
            ])?;
        }
        w.flush()?;
        write_json(&dir.join("copy_summary.json"), &aggs)
    }
}
