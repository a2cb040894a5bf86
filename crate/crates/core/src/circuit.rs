//! Native trapped-ion gates, circuits, the layered random-circuit generator
//! and the exact / noisy simulation entry points.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::density::{DensityMatrix, Observable, MAX_QUBITS};
use crate::error::{Error, Result};
use crate::noise::{self, NoiseModel};
use crate::rng;

const GRID_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    /// `exp(-i a Z / 2)`
    Rz,
    /// `exp(-i a Y / 2)`
    Ry,
    /// Molmer-Sorensen `exp(-i a X X)`
    Xx,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rz | GateKind::Ry => 1,
            GateKind::Xx => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rz => "RZ",
            GateKind::Ry => "RY",
            GateKind::Xx => "XX",
        }
    }

    /// Spacing of the Clifford angles for this gate family.
    ///
    /// `RZ(pi/2)` is the phase gate and `XX(pi/4)` the maximally entangling
    /// MS gate; `RZ(pi/4)` is the non-Clifford T gate.
    pub fn clifford_step(self) -> f64 {
        match self {
            GateKind::Rz | GateKind::Ry => FRAC_PI_2,
            GateKind::Xx => FRAC_PI_4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub angle: f64,
    qubits: Vec<usize>,
}

impl Gate {
    pub fn rz(qubit: usize, angle: f64) -> Self {
        Self::from_parts(GateKind::Rz, angle, vec![qubit])
    }

    pub fn ry(qubit: usize, angle: f64) -> Self {
        Self::from_parts(GateKind::Ry, angle, vec![qubit])
    }

    pub fn xx(a: usize, b: usize, angle: f64) -> Self {
        Self::from_parts(GateKind::Xx, angle, vec![a, b])
    }

    /// Unchecked constructor; [`Gate::check_arity`] and circuit validation
    /// catch malformed gates.
    pub fn from_parts(kind: GateKind, angle: f64, qubits: Vec<usize>) -> Self {
        Self {
            kind,
            angle,
            qubits,
        }
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn with_angle(&self, angle: f64) -> Self {
        Self {
            angle,
            ..self.clone()
        }
    }

    pub fn check_arity(&self) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::ArityMismatch {
                kind: self.kind.name(),
                expected: self.kind.arity(),
                got: self.qubits.len(),
            });
        }
        Ok(())
    }

    /// True when the angle sits on the gate family's Clifford grid (circle
    /// distance below 1e-12).
    pub fn is_clifford(&self) -> bool {
        let step = self.kind.clifford_step();
        let a = self.angle.rem_euclid(TAU);
        let r = a - step * (a / step).round();
        r.abs() < GRID_TOL || (TAU - a) < GRID_TOL
    }

    /// Row-major unitary; for `XX` the local index is `b0 + 2 b1`.
    pub fn unitary(&self) -> Vec<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        match self.kind {
            GateKind::Rz => {
                let h = self.angle / 2.0;
                vec![
                    Complex64::from_polar(1.0, -h),
                    zero,
                    zero,
                    Complex64::from_polar(1.0, h),
                ]
            }
            GateKind::Ry => {
                let (s, c) = (self.angle / 2.0).sin_cos();
                vec![
                    Complex64::new(c, 0.0),
                    Complex64::new(-s, 0.0),
                    Complex64::new(s, 0.0),
                    Complex64::new(c, 0.0),
                ]
            }
            GateKind::Xx => {
                let (s, c) = self.angle.sin_cos();
                let d = Complex64::new(c, 0.0);
                let o = Complex64::new(0.0, -s);
                #[rustfmt::skip]
                let u = vec![
                    d, zero, zero, o,
                    zero, d, o, zero,
                    zero, o, d, zero,
                    o, zero, zero, d,
                ];
                u
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub num_qubits: usize,
    /// Number of generator layers; metadata only.
    pub layers: usize,
    /// Seed the generator was run with; metadata only.
    pub seed: u64,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(num_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let c = Self {
            num_qubits,
            layers: 0,
            seed: 0,
            gates,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn empty(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            layers: 0,
            seed: 0,
            gates: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(Error::InvalidArgument("circuit has no qubits".into()));
        }
        for g in &self.gates {
            g.check_arity()?;
            for (t, &q) in g.qubits.iter().enumerate() {
                if q >= self.num_qubits {
                    return Err(Error::QubitOutOfRange {
                        index: q,
                        num_qubits: self.num_qubits,
                    });
                }
                if g.qubits[..t].contains(&q) {
                    return Err(Error::RepeatedQubit(q));
                }
            }
            if !g.angle.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite angle in {} gate",
                    g.kind.name()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    pub fn non_clifford_count(&self) -> usize {
        self.gates.iter().filter(|g| !g.is_clifford()).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Gate count of a generated circuit: every XX pair carries two
/// three-gate decorations, so each pair contributes 7 gates per layer.
pub fn generated_gate_count(num_qubits: usize, layers: usize) -> usize {
    let even = num_qubits / 2;
    let odd = num_qubits.saturating_sub(1) / 2;
    7 * layers * (even + odd)
}

/// Layered random circuit of native trapped-ion gates.
///
/// Each layer applies XX on pairs (0,1),(2,3),... and then on pairs
/// (1,2),(3,4),... with open boundaries. Both qubits of every pair first
/// receive `RZ(a) RY(b) RZ(c)` (so `RZ(c)` acts first). All angles are
/// uniform in `[0, 2pi)`.
pub fn build_random_circuit(num_qubits: usize, layers: usize, seed: u64) -> Result<Circuit> {
    if num_qubits < 2 {
        return Err(Error::InvalidArgument(format!(
            "random circuits need at least 2 qubits, got {num_qubits}"
        )));
    }
    if layers == 0 {
        return Err(Error::InvalidArgument("need at least one layer".into()));
    }
    let mut rng = rng::stream(seed, &[]);
    let mut gates = Vec::with_capacity(generated_gate_count(num_qubits, layers));
    for _ in 0..layers {
        for start in [0, 1] {
            for a in (start..num_qubits.saturating_sub(1)).step_by(2) {
                for q in [a, a + 1] {
                    let (alpha, beta, gamma): (f64, f64, f64) = (
                        rng.random_range(0.0..TAU),
                        rng.random_range(0.0..TAU),
                        rng.random_range(0.0..TAU),
                    );
                    gates.push(Gate::rz(q, gamma));
                    gates.push(Gate::ry(q, beta));
                    gates.push(Gate::rz(q, alpha));
                }
                gates.push(Gate::xx(a, a + 1, rng.random_range(0.0..TAU)));
            }
        }
    }
    Ok(Circuit {
        num_qubits,
        layers,
        seed,
        gates,
    })
}

fn check_cap(circuit: &Circuit) -> Result<()> {
    if circuit.num_qubits > MAX_QUBITS {
        return Err(Error::QubitCap {
            num_qubits: circuit.num_qubits,
            cap: MAX_QUBITS,
        });
    }
    Ok(())
}

/// Noiseless output state `U|0><0|U^dagger`.
pub fn exact_state(circuit: &Circuit) -> Result<DensityMatrix> {
    check_cap(circuit)?;
    let mut rho = DensityMatrix::zero_state(circuit.num_qubits)?;
    for g in &circuit.gates {
        rho.apply_gate(g)?;
    }
    Ok(rho)
}

/// Ideal pure state vector `U|0>`, read off the noiseless density matrix.
pub fn exact_statevector(circuit: &Circuit) -> Result<Vec<Complex64>> {
    let (_, v, _) = exact_state(circuit)?.dominant_eigenpair()?;
    Ok(v)
}

pub fn simulate_exact(circuit: &Circuit, obs: &Observable) -> Result<f64> {
    exact_state(circuit)?.expectation(obs)
}

/// Output state with the noise model's channels attached after every gate.
pub fn noisy_state(circuit: &Circuit, noise: &NoiseModel) -> Result<DensityMatrix> {
    check_cap(circuit)?;
    noise.validate()?;
    let mut sampler = noise.angle_sampler(circuit.seed);
    let mut rho = DensityMatrix::zero_state(circuit.num_qubits)?;
    for g in &circuit.gates {
        for ch in noise::attach_noise(g, noise) {
            rho = noise::apply_channel(rho, &ch, sampler.as_mut())?;
        }
    }
    Ok(rho)
}

/// Exact expectation of the noisy mixed state (no shot noise).
pub fn simulate_noisy(circuit: &Circuit, noise: &NoiseModel, obs: &Observable) -> Result<f64> {
    noisy_state(circuit, noise)?.expectation(obs)
}
