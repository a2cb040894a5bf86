use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::Observable;
use crate::error::{Error, Result};
use crate::mitigation::{ExtrapolationSpec, Fit};
use crate::noise::NoiseModel;
use crate::shots::Method;
use crate::training::{FeatureGrid, TrainingParams};

/// Total shots per mitigated value, or exact channel expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "BudgetRepr", into = "BudgetRepr")]
pub enum Budget {
    Shots(u64),
    Infinite,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BudgetRepr {
    Count(u64),
    Float(f64),
    Text(String),
}

impl TryFrom<BudgetRepr> for Budget {
    type Error = Error;

    fn try_from(r: BudgetRepr) -> Result<Self> {
        match r {
            BudgetRepr::Count(n) => Ok(Budget::Shots(n)),
            // accepts 1e10 written as a float
            BudgetRepr::Float(x) if x >= 1.0 && x.fract() == 0.0 && x < 1.8e19 => {
                Ok(Budget::Shots(x as u64))
            }
            BudgetRepr::Float(x) => Err(Error::Config(format!("invalid shot budget {x}"))),
            BudgetRepr::Text(s) => s.parse(),
        }
    }
}

impl From<Budget> for BudgetRepr {
    fn from(b: Budget) -> Self {
        match b {
            Budget::Shots(n) => BudgetRepr::Count(n),
            Budget::Infinite => BudgetRepr::Text("inf".into()),
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Budget::Infinite);
        }
        if let Ok(n) = s.parse::<u64>() {
            return Ok(Budget::Shots(n));
        }
        match s.parse::<f64>() {
            Ok(x) => BudgetRepr::Float(x).try_into(),
            Err(_) => Err(Error::Config(format!("invalid shot budget '{s}'"))),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Shots(n) => f.pad(&n.to_string()),
            Budget::Infinite => f.pad("inf"),
        }
    }
}

/// Noise levels, copy numbers and training parameters for every method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MethodGrids {
    pub zne_levels: Vec<u32>,
    pub zne_fit: Fit,
    pub vd_copies: u32,
    pub vncdr_levels: Vec<u32>,
    pub cgvd_copies: u32,
    pub united_levels: Vec<u32>,
    pub united_copies: u32,
    pub training: TrainingParams,
    /// Adds a constant term to the CGVD and UNITED fits.
    pub fit_intercept: bool,
    pub ridge: f64,
}

impl Default for MethodGrids {
    fn default() -> Self {
        Self {
            zne_levels: vec![1, 2],
            zne_fit: Fit::Linear,
            vd_copies: 2,
            vncdr_levels: vec![1, 2, 3],
            cgvd_copies: 3,
            united_levels: vec![1, 2, 3],
            united_copies: 3,
            training: TrainingParams::default(),
            fit_intercept: false,
            ridge: 0.0,
        }
    }
}

impl MethodGrids {
    pub fn zne_spec(&self) -> Result<ExtrapolationSpec> {
        ExtrapolationSpec::new(self.zne_levels.iter().map(|&c| f64::from(c)).collect(), self.zne_fit)
    }

    /// Feature grid a method reads from; `None` for methods without one.
    pub fn feature_grid(&self, method: Method) -> Result<FeatureGrid> {
        match method {
            Method::Noisy | Method::Cdr => Ok(FeatureGrid::cdr()),
            Method::Zne => FeatureGrid::new(self.zne_levels.clone(), 1),
            Method::Vd => FeatureGrid::new(vec![1], self.vd_copies),
            Method::VnCdr => FeatureGrid::new(self.vncdr_levels.clone(), 1),
            Method::Cgvd => FeatureGrid::new(vec![1], self.cgvd_copies),
            Method::United => FeatureGrid::new(self.united_levels.clone(), self.united_copies),
        }
    }

    /// Smallest grid covering every listed method.
    pub fn union_grid(&self, methods: &[Method]) -> Result<FeatureGrid> {
        let mut levels = vec![1];
        let mut copies = 1;
        for &m in methods {
            let g = self.feature_grid(m)?;
            levels.extend(g.levels);
            copies = copies.max(g.max_copies);
        }
        levels.sort_unstable();
        levels.dedup();
        FeatureGrid::new(levels, copies)
    }

    pub fn validate(&self) -> Result<()> {
        self.zne_spec()?;
        if self.vd_copies < 2 {
            return Err(Error::Config("vd_copies must be at least 2".into()));
        }
        for m in Method::ALL {
            let g = self.feature_grid(m)?;
            if g.levels[0] != 1 {
                return Err(Error::Config(format!("{m} levels must start at 1")));
            }
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::Config(format!("invalid ridge parameter {}", self.ridge)));
        }
        let t = &self.training;
        if t.select == 0 || t.select > t.candidates {
            return Err(Error::Config(format!(
                "cannot select {} of {} training candidates",
                t.select, t.candidates
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Qubit counts `Q`.
    #[serde(alias = "Q")]
    pub qubits: Vec<usize>,
    /// Depth factors `g`; each circuit has `L = g Q` layers.
    #[serde(alias = "g")]
    pub depth_factors: Vec<usize>,
    pub instances: usize,
    pub budgets: Vec<Budget>,
    /// Replace all budgets by exact feature values.
    pub infinite_shots: bool,
    pub methods: Vec<Method>,
    /// Pauli string, qubit 0 first. Defaults to `Z` on qubit 0.
    pub observable: Option<Observable>,
    pub seed: u64,
    pub noise: NoiseModel,
    pub grids: MethodGrids,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            qubits: vec![4],
            depth_factors: vec![1],
            instances: 30,
            budgets: [100_000, 1_000_000, 10_000_000, 100_000_000, 1_000_000_000, 10_000_000_000]
                .map(Budget::Shots)
                .to_vec(),
            infinite_shots: false,
            methods: Method::ALL.to_vec(),
            observable: None,
            seed: 2021,
            noise: NoiseModel::default(),
            grids: MethodGrids::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads JSON for `.json` files and TOML otherwise.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Self::from_json_str(&text),
            _ => Self::from_toml_str(&text),
        }
    }

    /// Configured budgets plus the exact-feature run when `infinite_shots` is set.
    pub fn effective_budgets(&self) -> Vec<Budget> {
        let mut budgets = self.budgets.clone();
        if self.infinite_shots && !budgets.contains(&Budget::Infinite) {
            budgets.push(Budget::Infinite);
        }
        budgets
    }

    pub fn observable_for(&self, num_qubits: usize) -> Result<Observable> {
        match &self.observable {
            Some(obs) if obs.num_qubits() == num_qubits => Ok(obs.clone()),
            Some(obs) => Err(Error::Config(format!(
                "observable {obs} acts on {} qubits, circuit has {num_qubits}",
                obs.num_qubits()
            ))),
            None => Observable::z(0, num_qubits),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.instances == 0 {
            return Err(Error::Config("instances must be at least 1".into()));
        }
        if self.qubits.is_empty() || self.depth_factors.is_empty() {
            return Err(Error::Config("need at least one qubit count and depth factor".into()));
        }
        if self.depth_factors.contains(&0) {
            return Err(Error::Config("depth factors must be positive".into()));
        }
        for &q in &self.qubits {
            self.observable_for(q)?;
            if q == 0 || q > crate::density::MAX_QUBITS {
                return Err(Error::QubitCap {
                    num_qubits: q,
                    cap: crate::density::MAX_QUBITS,
                });
            }
        }
        if !self.infinite_shots && self.budgets.is_empty() {
            return Err(Error::Config("no shot budgets given".into()));
        }
        if self.budgets.contains(&Budget::Shots(0)) {
            return Err(Error::Config("budgets must be positive".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        self.noise.validate()?;
        self.grids.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_flag_adds_exact_run() {
        let mut cfg = ExperimentConfig::default();
        assert_eq!(cfg.effective_budgets(), cfg.budgets);
        cfg.infinite_shots = true;
        assert_eq!(cfg.effective_budgets().len(), cfg.budgets.len() + 1);
        assert_eq!(cfg.effective_budgets().last(), Some(&Budget::Infinite));
        cfg.budgets = vec![Budget::Infinite];
        assert_eq!(cfg.effective_budgets(), vec![Budget::Infinite]);
        cfg.budgets.clear();
        cfg.validate().unwrap();
        cfg.infinite_shots = false;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.instances, 30);
        assert_eq!(cfg.observable_for(4).unwrap().to_string(), "ZIII");
        let g = cfg.grids.union_grid(&Method::ALL).unwrap();
        assert_eq!(g.levels, vec![1, 2, 3]);
        assert_eq!(g.max_copies, 3);
    }

    #[test]
    fn toml_and_json_agree() {
        let toml_text = r#"
            Q = [2, 3]
            g = [1]
            instances = 4
            budgets = [1e5, 1000000, "inf"]
            methods = ["zne", "vncdr"]
            seed = 9

            [noise]
            mode = "global_depolarizing"
            global_p = 0.01
            p1_depol = 0.0
            p2_depol = 0.0
            p_dephase = 0.0
            angle_sigma = 0.0

            [grids]
            zne_levels = [1, 3]
            zne_fit = "exponential"
        "#;
        let a = ExperimentConfig::from_toml_str(toml_text).unwrap();
        assert_eq!(a.qubits, vec![2, 3]);
        assert_eq!(
            a.budgets,
            vec![Budget::Shots(100_000), Budget::Shots(1_000_000), Budget::Infinite]
        );
        assert_eq!(a.methods, vec![Method::Zne, Method::VnCdr]);
        assert_eq!(a.grids.vd_copies, 2);
        let b = ExperimentConfig::from_json_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml_str("instances = 0").is_err());
        assert!(ExperimentConfig::from_toml_str("budgets = [0]").is_err());
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[grids]\nzne_levels = [2, 3]").is_err());
        assert!(ExperimentConfig::from_toml_str("[grids]\nvncdr_levels = [1, 4]").is_err());
        assert!(ExperimentConfig::from_toml_str("observable = \"ZI\"").is_err());
        assert!(ExperimentConfig::from_toml_str("Q = [2]\nobservable = \"XY\"").is_ok());
    }

    #[test]
    fn budget_parsing() {
        assert_eq!("1e10".parse::<Budget>().unwrap(), Budget::Shots(10_000_000_000));
        assert_eq!("INF".parse::<Budget>().unwrap(), Budget::Infinite);
        assert!("1.5".parse::<Budget>().is_err());
        assert!(Budget::Shots(5) < Budget::Infinite);
    }
}
