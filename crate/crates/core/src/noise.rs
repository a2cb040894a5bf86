//! Trapped-ion noise model and the noise-level scaling transforms.
//!
//! `LOCAL` mode attaches, after every gate, depolarizing and dephasing
//! channels on the qubits the gate touched and perturbs the gate angle.
//! `GLOBAL_DEPOLARIZING` mode follows every gate with `(1-p) rho + p I/d`,
//! the configuration for which the learned mitigation maps are exact.
//!
//! Noise is amplified by rewriting circuits: `c = 2` splits every gate into
//! two gates of the same kind whose angles sum to the original, `c = 3`
//! appends `G(a) G(-a)` after every gate `G`. Both leave the encoded unitary
//! unchanged and multiply the gate count by exactly `c`.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Gate};
use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::rng::{self, StreamRng};

/// Three-point Gauss-Hermite rule for a standard normal variable.
const GH_NODES: [f64; 3] = [-1.732_050_807_568_877_2, 0.0, 1.732_050_807_568_877_2];
const GH_WEIGHTS: [f64; 3] = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    #[default]
    Local,
    GlobalDepolarizing,
}

/// How angle imprecision is realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    /// Average over a 3-point Gauss-Hermite quadrature of the Gaussian angle
    /// error. Deterministic.
    #[default]
    Quadrature,
    /// Draw one angle error per gate from a seeded stream.
    Sampled { seed: u64 },
}

/// Noise parameters. Probabilities are per gate; angles are in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Depolarizing probability after each single-qubit gate.
    pub p1_depol: f64,
    /// Depolarizing probability on each qubit of a two-qubit gate.
    pub p2_depol: f64,
    /// Dephasing probability on each acted qubit, per gate.
    pub p_dephase: f64,
    /// Standard deviation of the rotation-angle error (radians).
    pub angle_sigma: f64,
    pub mode: NoiseMode,
    /// Global depolarizing strength per gate (`GlobalDepolarizing` only).
    pub global_p: f64,
    pub angle_mode: AngleMode,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            p1_depol: 5e-4,
            p2_depol: 5e-3,
            p_dephase: 1e-3,
            angle_sigma: 5e-3,
            mode: NoiseMode::Local,
            global_p: 0.0,
            angle_mode: AngleMode::Quadrature,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            p1_depol: 0.0,
            p2_depol: 0.0,
            p_dephase: 0.0,
            angle_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn global(p: f64) -> Self {
        Self {
            mode: NoiseMode::GlobalDepolarizing,
            global_p: p,
            ..Self::noiseless()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p1_depol, self.p2_depol, self.p_dephase, self.global_p] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
        }
        if !(self.angle_sigma >= 0.0 && self.angle_sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "angle_sigma must be a finite non-negative number, got {}",
                self.angle_sigma
            )));
        }
        Ok(())
    }

    pub(crate) fn angle_sampler(&self, circuit_seed: u64) -> Option<AngleSampler> {
        match (self.mode, self.angle_mode) {
            (NoiseMode::Local, AngleMode::Sampled { seed }) if self.angle_sigma > 0.0 => {
                Some(AngleSampler {
                    rng: rng::stream(seed, &[circuit_seed]),
                    normal: Normal::new(0.0, self.angle_sigma).ok()?,
                })
            }
            _ => None,
        }
    }
}

pub(crate) struct AngleSampler {
    rng: StreamRng,
    normal: Normal<f64>,
}

/// Noise scaling factor `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct NoiseLevel(u32);

impl NoiseLevel {
    pub const BASE: NoiseLevel = NoiseLevel(1);

    pub fn new(c: u32) -> Result<Self> {
        if c == 0 {
            return Err(Error::UnsupportedNoiseLevel(c));
        }
        Ok(Self(c))
    }

    pub fn factor(self) -> u32 {
        self.0
    }
}

impl TryFrom<u32> for NoiseLevel {
    type Error = Error;

    fn try_from(c: u32) -> Result<Self> {
        Self::new(c)
    }
}

impl From<NoiseLevel> for u32 {
    fn from(l: NoiseLevel) -> u32 {
        l.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Gate(Gate),
    /// Gate whose angle carries a Gaussian error of width `sigma`.
    ImpreciseGate { gate: Gate, sigma: f64 },
    Depolarizing { qubit: usize, p: f64 },
    Dephasing { qubit: usize, p: f64 },
    GlobalDepolarizing { p: f64 },
}

/// Channel sequence implementing one noisy gate. Zero-strength channels are
/// omitted.
pub fn attach_noise(gate: &Gate, noise: &NoiseModel) -> Vec<Channel> {
    match noise.mode {
        NoiseMode::GlobalDepolarizing => {
            let mut out = vec![Channel::Gate(gate.clone())];
            if noise.global_p > 0.0 {
                out.push(Channel::GlobalDepolarizing { p: noise.global_p });
            }
            out
        }
        NoiseMode::Local => {
            let mut out = Vec::with_capacity(1 + 2 * gate.qubits().len());
            out.push(if noise.angle_sigma > 0.0 {
                Channel::ImpreciseGate {
                    gate: gate.clone(),
                    sigma: noise.angle_sigma,
                }
            } else {
                Channel::Gate(gate.clone())
            });
            let p_depol = if gate.qubits().len() == 2 {
                noise.p2_depol
            } else {
                noise.p1_depol
            };
            if p_depol > 0.0 {
                out.extend(
                    gate.qubits()
                        .iter()
                        .map(|&qubit| Channel::Depolarizing { qubit, p: p_depol }),
                );
            }
            if noise.p_dephase > 0.0 {
                out.extend(gate.qubits().iter().map(|&qubit| Channel::Dephasing {
                    qubit,
                    p: noise.p_dephase,
                }));
            }
            out
        }
    }
}

pub(crate) fn apply_channel(
    mut rho: DensityMatrix,
    channel: &Channel,
    sampler: Option<&mut AngleSampler>,
) -> Result<DensityMatrix> {
    match channel {
        Channel::Gate(g) => rho.apply_gate(g)?,
        Channel::ImpreciseGate { gate, sigma } => match sampler {
            Some(s) => {
                let delta = s.normal.sample(&mut s.rng);
                rho.apply_gate(&gate.with_angle(gate.angle + delta))?;
            }
            None => {
                let branches = GH_NODES
                    .iter()
                    .zip(GH_WEIGHTS)
                    .map(|(x, w)| {
                        let mut branch = rho.clone();
                        branch.apply_gate(&gate.with_angle(gate.angle + sigma * x))?;
                        Ok((w, branch))
                    })
                    .collect::<Result<Vec<_>>>()?;
                rho = DensityMatrix::mixture(&branches)?;
            }
        },
        Channel::Depolarizing { qubit, p } => rho.apply_depolarizing(*p, *qubit)?,
        Channel::Dephasing { qubit, p } => rho.apply_dephasing(*p, *qubit)?,
        Channel::GlobalDepolarizing { p } => rho.apply_global_depolarizing(*p)?,
    }
    Ok(rho)
}

/// Levels [`scale_circuit`] can realize.
pub const SCALABLE_LEVELS: [u32; 3] = [1, 2, 3];

/// Rewrites `circuit` so that every gate is executed `c` times.
pub fn scale_circuit(circuit: &Circuit, level: NoiseLevel, seed: u64) -> Result<Circuit> {
    let c = level.factor();
    if !SCALABLE_LEVELS.contains(&c) {
        return Err(Error::UnsupportedNoiseLevel(c));
    }
    if c == 1 {
        return Ok(circuit.clone());
    }
    let mut rng = rng::stream(seed, &[u64::from(c)]);
    let mut gates = Vec::with_capacity(circuit.gates.len() * c as usize);
    for g in &circuit.gates {
        if c == 2 {
            let split = g.angle * rng.random::<f64>();
            gates.push(g.with_angle(split));
            gates.push(g.with_angle(g.angle - split));
        } else {
            let a = rng.random_range(0.0..TAU);
            gates.push(g.clone());
            gates.push(g.with_angle(a));
            gates.push(g.with_angle(-a));
        }
    }
    Ok(Circuit {
        gates,
        ..circuit.clone()
    })
}
