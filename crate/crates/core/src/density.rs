//! Dense density-matrix states, Pauli observables and the linear algebra the
//! mitigation methods are built on.
//!
//! Qubit `q` is bit `q` of a computational-basis index, so qubit 0 is the
//! least significant bit. Matrices are stored row-major.

use std::fmt;
use std::str::FromStr;

use faer::{Mat, Side};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::circuit::Gate;
use crate::error::{Error, Result};

/// Largest register the dense simulator accepts (a 4096 x 4096 matrix).
pub const MAX_QUBITS: usize = 12;

const TRACE_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
const IMAG_TOL: f64 = 1e-8;
const DENOMINATOR_FLOOR: f64 = 1e-14;
const DEGENERACY_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Pauli operators.
///
/// The string form lists qubit 0 first, so `"ZII"` is `Z` on qubit 0 of a
/// three-qubit register.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Observable {
    paulis: Vec<Pauli>,
}

impl Observable {
    pub fn new(paulis: Vec<Pauli>) -> Result<Self> {
        if paulis.is_empty() {
            return Err(Error::InvalidArgument("empty Pauli string".into()));
        }
        Ok(Self { paulis })
    }

    /// `Z` on `qubit`, identity elsewhere.
    pub fn z(qubit: usize, num_qubits: usize) -> Result<Self> {
        if qubit >= num_qubits {
            return Err(Error::QubitOutOfRange {
                index: qubit,
                num_qubits,
            });
        }
        let mut paulis = vec![Pauli::I; num_qubits];
        paulis[qubit] = Pauli::Z;
        Self::new(paulis)
    }

    pub fn num_qubits(&self) -> usize {
        self.paulis.len()
    }

    pub fn paulis(&self) -> &[Pauli] {
        &self.paulis
    }

    pub fn is_identity(&self) -> bool {
        self.paulis.iter().all(|&p| p == Pauli::I)
    }

    pub fn is_traceless(&self) -> bool {
        !self.is_identity()
    }

    /// Operator norm. Every Pauli string has spectrum {-1, +1}.
    pub fn spectral_norm(&self) -> f64 {
        1.0
    }

    fn masks(&self) -> (usize, usize, u32) {
        let mut flip = 0;
        let mut sign = 0;
        let mut n_y = 0;
        for (q, p) in self.paulis.iter().enumerate() {
            match p {
                Pauli::I => {}
                Pauli::X => flip |= 1 << q,
                Pauli::Y => {
                    flip |= 1 << q;
                    sign |= 1 << q;
                    n_y += 1;
                }
                Pauli::Z => sign |= 1 << q,
            }
        }
        (flip, sign, n_y)
    }

    /// `P|j> = phase(j) |j ^ flip>`.
    fn phase(sign: usize, n_y: u32, j: usize) -> Complex64 {
        let base = Complex64::i().powu(n_y);
        if (j & sign).count_ones() % 2 == 1 {
            -base
        } else {
            base
        }
    }

    /// Applies the operator to a state vector.
    pub fn apply(&self, state: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.num_qubits();
        if state.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: state.len(),
            });
        }
        let (flip, sign, n_y) = self.masks();
        let mut out = vec![ZERO; dim];
        for (j, amp) in state.iter().enumerate() {
            out[j ^ flip] = Self::phase(sign, n_y, j) * amp;
        }
        Ok(out)
    }

    /// Dense row-major matrix of the operator.
    pub fn to_matrix(&self) -> Vec<Complex64> {
        let dim = 1usize << self.num_qubits();
        let (flip, sign, n_y) = self.masks();
        let mut m = vec![ZERO; dim * dim];
        for j in 0..dim {
            m[(j ^ flip) * dim + j] = Self::phase(sign, n_y, j);
        }
        m
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.paulis.iter().try_for_each(|p| write!(f, "{}", p.label()))
    }
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let paulis = s
            .trim()
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::InvalidArgument(format!(
                    "'{other}' is not a Pauli label"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(paulis)
    }
}

impl TryFrom<String> for Observable {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Observable> for String {
    fn from(o: Observable) -> String {
        o.to_string()
    }
}

/// Virtual-distillation moments for one copy number `M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VdMoments {
    /// `Tr(rho^M X)`
    pub numerator: f64,
    /// `Tr(rho^M)`
    pub denominator: f64,
}

impl VdMoments {
    pub fn ratio(&self) -> f64 {
        self.numerator / self.denominator
    }
}

/// Dominant-eigenvector diagnostics of a noisy state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDiagnostics {
    /// `1 - |<psi_exact|psi_0>|^2`
    pub coherent_mismatch: f64,
    /// `<psi_0|X|psi_0> - <psi_exact|X|psi_exact>`
    pub noise_floor: f64,
    pub dominant_eigenvalue: f64,
    /// False when the two largest eigenvalues are within 1e-12.
    pub reliable: bool,
}

impl SpectralDiagnostics {
    /// `|eps| <= 2 c ||X||`. Holds when the mismatch is second order in the
    /// error rates, but is not a theorem for arbitrary states.
    pub fn within_linear_bound(&self, obs: &Observable) -> bool {
        self.noise_floor.abs() <= 2.0 * self.coherent_mismatch * obs.spectral_norm() + 1e-12
    }

    /// `|eps| <= 2 sqrt(c) ||X||`, the trace-distance bound valid for every state.
    pub fn within_trace_distance_bound(&self, obs: &Observable) -> bool {
        self.noise_floor.abs()
            <= 2.0 * self.coherent_mismatch.max(0.0).sqrt() * obs.spectral_norm() + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    data: Vec<Complex64>,
}

fn check_qubits(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 {
        return Err(Error::InvalidArgument("need at least one qubit".into()));
    }
    if num_qubits > MAX_QUBITS {
        return Err(Error::QubitCap {
            num_qubits,
            cap: MAX_QUBITS,
        });
    }
    Ok(())
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

fn matmul(a: &[Complex64], b: &[Complex64], dim: usize) -> Vec<Complex64> {
    let mut out = vec![ZERO; dim * dim];
    for i in 0..dim {
        let row = &mut out[i * dim..(i + 1) * dim];
        for k in 0..dim {
            let aik = a[i * dim + k];
            if aik == ZERO {
                continue;
            }
            let brow = &b[k * dim..(k + 1) * dim];
            for (o, &bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    out
}

/// `Tr(A B)` for row-major square matrices.
fn trace_product(a: &[Complex64], b: &[Complex64], dim: usize) -> Complex64 {
    let mut acc = ZERO;
    for i in 0..dim {
        for k in 0..dim {
            acc += a[i * dim + k] * b[k * dim + i];
        }
    }
    acc
}

impl DensityMatrix {
    /// `|0...0><0...0|`
    pub fn zero_state(num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1 << num_qubits;
        let mut data = vec![ZERO; dim * dim];
        data[0] = ONE;
        Ok(Self { num_qubits, data })
    }

    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1 << num_qubits;
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(Self { num_qubits, data })
    }

    /// `|psi><psi|` for a normalized state vector.
    pub fn from_pure(state: &[Complex64]) -> Result<Self> {
        let num_qubits = qubits_for_dim(state.len())?;
        let norm: f64 = state.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "state vector has squared norm {norm}"
            )));
        }
        let dim = state.len();
        let mut data = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                data[i * dim + j] = state[i] * state[j].conj();
            }
        }
        Ok(Self { num_qubits, data })
    }

    /// Builds a state from row-major entries, checking trace, Hermiticity
    /// and positivity.
    pub fn from_data(num_qubits: usize, data: Vec<Complex64>) -> Result<Self> {
        check_qubits(num_qubits)?;
        let dim = 1 << num_qubits;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let rho = Self { num_qubits, data };
        rho.validate()?;
        Ok(rho)
    }

    pub fn from_diagonal(probabilities: &[f64]) -> Result<Self> {
        let num_qubits = qubits_for_dim(probabilities.len())?;
        let dim = probabilities.len();
        let mut data = vec![ZERO; dim * dim];
        for (i, &p) in probabilities.iter().enumerate() {
            data[i * dim + i] = Complex64::new(p, 0.0);
        }
        Self::from_data(num_qubits, data)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|i| self.data[i * dim + i]).sum()
    }

    /// `Tr(rho^2)`
    pub fn purity(&self) -> f64 {
        trace_product(&self.data, &self.data, self.dim()).re
    }

    pub fn max_hermitian_residual(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                let d = self.data[i * dim + j] - self.data[j * dim + i].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Checks unit trace, Hermiticity and positivity to numerical tolerance.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidArgument(format!("trace {tr} is not 1")));
        }
        let h = self.max_hermitian_residual();
        if h > HERMITIAN_TOL {
            return Err(Error::InvalidArgument(format!(
                "not Hermitian (residual {h:e})"
            )));
        }
        let min = self.eigenvalues()?.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::InvalidArgument(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }

    fn debug_check(&self) {
        debug_assert!(
            (self.trace().re - 1.0).abs() < TRACE_TOL,
            "trace drifted to {}",
            self.trace()
        );
        debug_assert!(self.max_hermitian_residual() < HERMITIAN_TOL);
    }

    fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            Err(Error::QubitOutOfRange {
                index: qubit,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    /// `rho -> U rho U^dagger` for a unitary acting on `qubits`.
    ///
    /// `unitary` is a row-major `2^k x 2^k` matrix whose local index has bit
    /// `t` set when `qubits[t]` is 1. Only the target subspace is touched.
    pub fn apply_unitary(&mut self, unitary: &[Complex64], qubits: &[usize]) -> Result<()> {
        let k = qubits.len();
        if k == 0 || k > 2 {
            return Err(Error::InvalidArgument(format!(
                "unitaries on {k} qubits are not supported"
            )));
        }
        let local = 1usize << k;
        if unitary.len() != local * local {
            return Err(Error::DimensionMismatch {
                expected: local * local,
                got: unitary.len(),
            });
        }
        for (t, &q) in qubits.iter().enumerate() {
            self.check_qubit(q)?;
            if qubits[..t].contains(&q) {
                return Err(Error::RepeatedQubit(q));
            }
        }

        let dim = self.dim();
        let target_mask: usize = qubits.iter().map(|&q| 1 << q).sum();
        let offsets: Vec<usize> = (0..local)
            .map(|l| {
                (0..k)
                    .filter(|t| l >> t & 1 == 1)
                    .map(|t| 1 << qubits[t])
                    .sum()
            })
            .collect();
        let bases: Vec<usize> = (0..dim).filter(|i| i & target_mask == 0).collect();
        let mut v = [ZERO; 4];
        let mut w = [ZERO; 4];

        // Left multiplication: mixes rows within each target block.
        for &base in &bases {
            for col in 0..dim {
                for l in 0..local {
                    v[l] = self.data[(base + offsets[l]) * dim + col];
                }
                for r in 0..local {
                    w[r] = (0..local).map(|c| unitary[r * local + c] * v[c]).sum();
                }
                for l in 0..local {
                    self.data[(base + offsets[l]) * dim + col] = w[l];
                }
            }
        }
        // Right multiplication by U^dagger: mixes columns.
        for row in 0..dim {
            let r0 = row * dim;
            for &base in &bases {
                for l in 0..local {
                    v[l] = self.data[r0 + base + offsets[l]];
                }
                for r in 0..local {
                    w[r] = (0..local)
                        .map(|c| unitary[r * local + c].conj() * v[c])
                        .sum();
                }
                for l in 0..local {
                    self.data[r0 + base + offsets[l]] = w[l];
                }
            }
        }
        self.debug_check();
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.check_arity()?;
        self.apply_unitary(&gate.unitary(), gate.qubits())
    }

    /// Local depolarizing channel
    /// `(1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)` on `qubit`.
    pub fn apply_depolarizing(&mut self, p: f64, qubit: usize) -> Result<()> {
        check_probability(p)?;
        self.check_qubit(qubit)?;
        let keep_diag = 1.0 - 2.0 * p / 3.0;
        let swap_diag = 2.0 * p / 3.0;
        let offdiag = 1.0 - 4.0 * p / 3.0;
        self.for_each_block(qubit, |a, b, c, d| {
            let (a0, d0) = (*a, *d);
            *a = a0 * keep_diag + d0 * swap_diag;
            *d = d0 * keep_diag + a0 * swap_diag;
            *b *= offdiag;
            *c *= offdiag;
        });
        self.debug_check();
        Ok(())
    }

    /// `(1-p) rho + p Z rho Z` on `qubit`.
    pub fn apply_dephasing(&mut self, p: f64, qubit: usize) -> Result<()> {
        check_probability(p)?;
        self.check_qubit(qubit)?;
        let offdiag = 1.0 - 2.0 * p;
        self.for_each_block(qubit, |_, b, c, _| {
            *b *= offdiag;
            *c *= offdiag;
        });
        self.debug_check();
        Ok(())
    }

    /// `(1-p) rho + p I/d` over the whole register.
    pub fn apply_global_depolarizing(&mut self, p: f64) -> Result<()> {
        check_probability(p)?;
        let dim = self.dim();
        let shift = p / dim as f64;
        for z in &mut self.data {
            *z *= 1.0 - p;
        }
        for i in 0..dim {
            self.data[i * dim + i] += shift;
        }
        self.debug_check();
        Ok(())
    }

    /// Visits every 2x2 block `[[a, b], [c, d]]` of the single-qubit
    /// subspace of `qubit`.
    fn for_each_block<F>(&mut self, qubit: usize, mut f: F)
    where
        F: FnMut(&mut Complex64, &mut Complex64, &mut Complex64, &mut Complex64),
    {
        let dim = self.dim();
        let mask = 1 << qubit;
        for i in (0..dim).filter(|i| i & mask == 0) {
            for j in (0..dim).filter(|j| j & mask == 0) {
                let (i1, j1) = (i | mask, j | mask);
                let mut a = self.data[i * dim + j];
                let mut b = self.data[i * dim + j1];
                let mut c = self.data[i1 * dim + j];
                let mut d = self.data[i1 * dim + j1];
                f(&mut a, &mut b, &mut c, &mut d);
                self.data[i * dim + j] = a;
                self.data[i * dim + j1] = b;
                self.data[i1 * dim + j] = c;
                self.data[i1 * dim + j1] = d;
            }
        }
    }

    /// Convex combination `sum_k w_k rho_k` of states on the same register.
    pub fn mixture(parts: &[(f64, DensityMatrix)]) -> Result<Self> {
        let (_, first) = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut data = vec![ZERO; first.data.len()];
        for (w, rho) in parts {
            if rho.num_qubits != first.num_qubits {
                return Err(Error::DimensionMismatch {
                    expected: first.num_qubits,
                    got: rho.num_qubits,
                });
            }
            for (acc, z) in data.iter_mut().zip(&rho.data) {
                *acc += z * *w;
            }
        }
        let rho = Self {
            num_qubits: first.num_qubits,
            data,
        };
        rho.debug_check();
        Ok(rho)
    }

    fn check_observable(&self, obs: &Observable) -> Result<()> {
        if obs.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                got: obs.num_qubits(),
            });
        }
        Ok(())
    }

    fn pauli_trace(data: &[Complex64], dim: usize, obs: &Observable) -> Complex64 {
        let (flip, sign, n_y) = obs.masks();
        (0..dim)
            .map(|j| Observable::phase(sign, n_y, j) * data[j * dim + (j ^ flip)])
            .sum()
    }

    fn real_part(z: Complex64) -> Result<f64> {
        if z.im.abs() > IMAG_TOL {
            return Err(Error::ComplexExpectation(z.im));
        }
        Ok(z.re)
    }

    /// `Tr(rho X)`
    pub fn expectation(&self, obs: &Observable) -> Result<f64> {
        self.check_observable(obs)?;
        Self::real_part(Self::pauli_trace(&self.data, self.dim(), obs))
    }

    /// `Tr(rho A)` for an arbitrary dense Hermitian operator.
    pub fn expectation_dense(&self, op: &[Complex64]) -> Result<f64> {
        let dim = self.dim();
        if op.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: op.len(),
            });
        }
        Self::real_part(trace_product(&self.data, op, dim))
    }

    /// `rho^m` as a row-major matrix (not a state for m > 1: its trace is
    /// the purity-like moment `Tr(rho^m)`).
    pub fn power(&self, m: u32) -> Result<Vec<Complex64>> {
        if m == 0 {
            return Err(Error::InvalidArgument("copy count must be >= 1".into()));
        }
        let dim = self.dim();
        let mut acc = self.data.clone();
        for _ in 1..m {
            acc = matmul(&acc, &self.data, dim);
        }
        Ok(acc)
    }

    /// Moments `Tr(rho^M X)` and `Tr(rho^M)` for `M = 1..=max_copies`.
    pub fn vd_moments(&self, obs: &Observable, max_copies: u32) -> Result<Vec<VdMoments>> {
        self.check_observable(obs)?;
        if max_copies == 0 {
            return Err(Error::InvalidArgument("copy count must be >= 1".into()));
        }
        let dim = self.dim();
        let mut out = Vec::with_capacity(max_copies as usize);
        let mut acc = self.data.clone();
        for m in 1..=max_copies {
            if m > 1 {
                acc = matmul(&acc, &self.data, dim);
            }
            let numerator = Self::real_part(Self::pauli_trace(&acc, dim, obs))?;
            let trace: Complex64 = (0..dim).map(|i| acc[i * dim + i]).sum();
            let denominator = Self::real_part(trace)?;
            out.push(VdMoments {
                numerator,
                denominator,
            });
        }
        Ok(out)
    }

    /// Virtual-distillation estimate `Tr(rho^M X) / Tr(rho^M)` with its parts.
    pub fn vd_expectation(&self, obs: &Observable, copies: u32) -> Result<(f64, f64, f64)> {
        let moments = self.vd_moments(obs, copies)?;
        let last = moments[copies as usize - 1];
        if copies == 1 {
            return Ok((last.numerator, 1.0, last.numerator));
        }
        if last.denominator < DENOMINATOR_FLOOR {
            return Err(Error::DegenerateDenominator(last.denominator));
        }
        Ok((last.numerator, last.denominator, last.ratio()))
    }

    /// Eigenvalues (ascending) and eigenvectors as columns.
    fn eigen(&self) -> Result<(Vec<f64>, Mat<Complex64>)> {
        let dim = self.dim();
        let m = Mat::from_fn(dim, dim, |i, j| self.data[i * dim + j]);
        let eig = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::InvalidArgument(format!("eigensolver failed: {e:?}")))?;
        let vals = eig.S().column_vector().iter().map(|v| v.re).collect();
        Ok((vals, eig.U().to_owned()))
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let mut vals = self.eigen()?.0;
        vals.reverse();
        Ok(vals)
    }

    /// Largest eigenvalue, its eigenvector, and whether it is separated from
    /// the next one by more than 1e-12.
    pub fn dominant_eigenpair(&self) -> Result<(f64, Vec<Complex64>, bool)> {
        let (vals, vecs) = self.eigen()?;
        let best = vals.len() - 1;
        let separated = best == 0 || vals[best] - vals[best - 1] > DEGENERACY_TOL;
        let vector = vecs.col(best).iter().copied().collect();
        Ok((vals[best], vector, separated))
    }

    /// Coherent mismatch and noise floor of the dominant eigenvector relative
    /// to the ideal pure state.
    pub fn spectral_diagnostics(
        &self,
        exact_state: &[Complex64],
        obs: &Observable,
    ) -> Result<SpectralDiagnostics> {
        self.check_observable(obs)?;
        let dim = self.dim();
        if exact_state.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: exact_state.len(),
            });
        }
        let norm: f64 = exact_state.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "exact state has squared norm {norm}"
            )));
        }
        let (lambda, psi0, reliable) = self.dominant_eigenpair()?;
        let overlap: Complex64 = exact_state
            .iter()
            .zip(&psi0)
            .map(|(e, d)| e.conj() * d)
            .sum();
        let expect = |v: &[Complex64]| -> Result<f64> {
            let xv = obs.apply(v)?;
            Self::real_part(v.iter().zip(&xv).map(|(a, b)| a.conj() * b).sum())
        };
        Ok(SpectralDiagnostics {
            coherent_mismatch: (1.0 - overlap.norm_sqr()).max(0.0),
            noise_floor: expect(&psi0)? - expect(exact_state)?,
            dominant_eigenvalue: lambda,
            reliable,
        })
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim < 2 || !dim.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "dimension {dim} is not a power of two >= 2"
        )));
    }
    let n = dim.trailing_zeros() as usize;
    check_qubits(n)?;
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        let mut v: Vec<Complex64> = (0..1 << n)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        v
    }

    fn random_mixed(n: usize, rank: usize, rng: &mut impl Rng) -> DensityMatrix {
        let mut weights: Vec<f64> = (0..rank).map(|_| rng.random::<f64>()).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let parts: Vec<_> = weights
            .into_iter()
            .map(|w| (w, DensityMatrix::from_pure(&random_state(n, rng)).unwrap()))
            .collect();
        DensityMatrix::mixture(&parts).unwrap()
    }

    /// Full `2^n x 2^n` matrix of a gate by explicit Kronecker products.
    fn embed(gate: &Gate, n: usize) -> Vec<Complex64> {
        let dim = 1 << n;
        let u = gate.unitary();
        let qs = gate.qubits();
        let local = 1 << qs.len();
        let mut m = vec![ZERO; dim * dim];
        for row in 0..dim {
            for col in 0..dim {
                let mask: usize = qs.iter().map(|&q| 1 << q).sum();
                if row & !mask != col & !mask {
                    continue;
                }
                let li = |x: usize| (0..qs.len()).map(|t| ((x >> qs[t]) & 1) << t).sum::<usize>();
                m[row * dim + col] = u[li(row) * local + li(col)];
            }
        }
        m
    }

    fn dagger(m: &[Complex64], dim: usize) -> Vec<Complex64> {
        let mut out = vec![ZERO; dim * dim];
        for i in 0..dim {
            for j in 0..dim {
                out[j * dim + i] = m[i * dim + j].conj();
            }
        }
        out
    }

    #[test]
    fn ry_pi_flips_zero_to_one() {
        let mut rho = DensityMatrix::zero_state(1).unwrap();
        rho.apply_gate(&Gate::ry(0, PI)).unwrap();
        let z = Observable::z(0, 1).unwrap();
        assert_abs_diff_eq!(rho.expectation(&z).unwrap(), -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(1, 1).re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn rz_zero_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_mixed(3, 3, &mut rng);
        let mut out = rho.clone();
        out.apply_gate(&Gate::rz(1, 0.0)).unwrap();
        for (a, b) in rho.data().iter().zip(out.data()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn xx_quarter_pi_on_zero_zero() {
        // exp(-i pi/4 XX)|00> = (|00> - i|11>)/sqrt(2)
        let mut rho = DensityMatrix::zero_state(2).unwrap();
        rho.apply_gate(&Gate::xx(0, 1, PI / 4.0)).unwrap();
        let z0 = Observable::z(0, 2).unwrap();
        assert_abs_diff_eq!(rho.expectation(&z0).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(0, 3).re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.get(0, 3).im, 0.5, epsilon = 1e-12);
        let xy: Observable = "XY".parse().unwrap();
        assert_abs_diff_eq!(rho.expectation(&xy).unwrap(), -1.0, epsilon = 1e-12);
    }

    #[test]
    fn gate_errors() {
        let mut rho = DensityMatrix::zero_state(2).unwrap();
        assert!(matches!(
            rho.apply_gate(&Gate::rz(2, 0.1)),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(matches!(
            rho.apply_gate(&Gate::xx(1, 1, 0.1)),
            Err(Error::RepeatedQubit(1))
        ));
        let bad = Gate::from_parts(crate::circuit::GateKind::Xx, 0.1, vec![0]);
        assert!(matches!(
            rho.apply_gate(&bad),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn depolarizing_examples() {
        let z = Observable::z(0, 1).unwrap();
        let mut rho = DensityMatrix::zero_state(1).unwrap();
        rho.apply_depolarizing(0.0, 0).unwrap();
        assert_eq!(rho, DensityMatrix::zero_state(1).unwrap());
        rho.apply_depolarizing(0.1, 0).unwrap();
        assert_abs_diff_eq!(rho.expectation(&z).unwrap(), 1.0 - 0.4 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.expectation(&z).unwrap(), 0.8667, epsilon = 1e-4);

        let mut g = DensityMatrix::zero_state(3).unwrap();
        g.apply_global_depolarizing(1.0).unwrap();
        assert_eq!(g, DensityMatrix::maximally_mixed(3).unwrap());
        assert!(matches!(
            g.apply_depolarizing(1.5, 0),
            Err(Error::InvalidProbability(_))
        ));
        assert!(g.apply_global_depolarizing(-0.1).is_err());
    }

    #[test]
    fn depolarizing_matches_kraus_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rho = random_mixed(2, 2, &mut rng);
        let p = 0.37;
        let mut fast = rho.clone();
        fast.apply_depolarizing(p, 1).unwrap();
        let dim = 4;
        let mut kraus = rho.data().iter().map(|z| z * (1.0 - p)).collect::<Vec<_>>();
        for label in ["IX", "IY", "IZ"] {
            let k = label.parse::<Observable>().unwrap().to_matrix();
            let term = matmul(&matmul(&k, rho.data(), dim), &k, dim);
            for (acc, t) in kraus.iter_mut().zip(term) {
                *acc += t * (p / 3.0);
            }
        }
        for (a, b) in fast.data().iter().zip(&kraus) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn dephasing_examples() {
        let x = "X".parse::<Observable>().unwrap();
        let plus = [c(0.5f64.sqrt(), 0.0), c(0.5f64.sqrt(), 0.0)];

        let mut rho = DensityMatrix::from_pure(&plus).unwrap();
        rho.apply_dephasing(0.2, 0).unwrap();
        assert_abs_diff_eq!(rho.expectation(&x).unwrap(), 0.6, epsilon = 1e-12);

        let mut rho = DensityMatrix::from_pure(&plus).unwrap();
        rho.apply_dephasing(0.5, 0).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        for (a, b) in rho.data().iter().zip(mixed.data()) {
            assert!((a - b).norm() < 1e-15);
        }

        let diag = DensityMatrix::from_diagonal(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let mut out = diag.clone();
        out.apply_dephasing(0.73, 1).unwrap();
        assert_eq!(out, diag);
        assert!(out.apply_dephasing(2.0, 0).is_err());
    }

    #[test]
    fn expectation_examples() {
        let z = Observable::z(0, 1).unwrap();
        let zero = DensityMatrix::zero_state(1).unwrap();
        assert_eq!(zero.expectation(&z).unwrap(), 1.0);
        let mixed = DensityMatrix::maximally_mixed(1).unwrap();
        assert_eq!(mixed.expectation(&z).unwrap(), 0.0);
        let diag = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        assert_abs_diff_eq!(diag.expectation(&z).unwrap(), 0.5, epsilon = 1e-15);
        let z2 = Observable::z(0, 2).unwrap();
        assert!(matches!(
            diag.expectation(&z2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pauli_trace_matches_dense_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = random_mixed(3, 4, &mut rng);
        for label in ["ZII", "IXI", "YYZ", "XYI", "III", "IIY"] {
            let obs: Observable = label.parse().unwrap();
            let fast = rho.expectation(&obs).unwrap();
            let dense = rho.expectation_dense(&obs.to_matrix()).unwrap();
            assert_abs_diff_eq!(fast, dense, epsilon = 1e-13);
        }
    }

    #[test]
    fn vd_examples() {
        let z = Observable::z(0, 1).unwrap();
        let diag = DensityMatrix::from_diagonal(&[0.75, 0.25]).unwrap();
        let (num, den, ratio) = diag.vd_expectation(&z, 2).unwrap();
        assert_abs_diff_eq!(num, 0.5625 - 0.0625, epsilon = 1e-15);
        assert_abs_diff_eq!(den, 0.625, epsilon = 1e-15);
        assert_abs_diff_eq!(ratio, 0.8, epsilon = 1e-14);

        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let z2 = Observable::z(0, 2).unwrap();
        for m in 1..=4 {
            assert_abs_diff_eq!(mixed.vd_expectation(&z2, m).unwrap().2, 0.0, epsilon = 1e-15);
        }
        assert!(diag.vd_expectation(&z, 0).is_err());
    }

    #[test]
    fn vd_on_pure_state_is_plain_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rho = DensityMatrix::from_pure(&random_state(3, &mut rng)).unwrap();
        let obs: Observable = "ZXI".parse().unwrap();
        let plain = rho.expectation(&obs).unwrap();
        for m in 1..=5 {
            assert_abs_diff_eq!(rho.vd_expectation(&obs, m).unwrap().2, plain, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_copy_vd_equals_expectation_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rho = random_mixed(2, 3, &mut rng);
        let obs: Observable = "YZ".parse().unwrap();
        let (num, den, ratio) = rho.vd_expectation(&obs, 1).unwrap();
        assert_eq!(num, rho.expectation(&obs).unwrap());
        assert_eq!(den, 1.0);
        assert_eq!(ratio, num);
    }

    #[test]
    fn power_matches_repeated_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = random_mixed(2, 2, &mut rng);
        let p3 = rho.power(3).unwrap();
        let manual = matmul(&matmul(rho.data(), rho.data(), 4), rho.data(), 4);
        for (a, b) in p3.iter().zip(&manual) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn spectral_diagnostics_pure_and_global() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let psi = random_state(2, &mut rng);
        let obs: Observable = "ZI".parse().unwrap();
        let rho = DensityMatrix::from_pure(&psi).unwrap();
        let d = rho.spectral_diagnostics(&psi, &obs).unwrap();
        assert_abs_diff_eq!(d.coherent_mismatch, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.noise_floor, 0.0, epsilon = 1e-12);
        assert!(d.reliable);

        let mut noisy = rho.clone();
        noisy.apply_global_depolarizing(0.3).unwrap();
        let d = noisy.spectral_diagnostics(&psi, &obs).unwrap();
        assert_abs_diff_eq!(d.coherent_mismatch, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.noise_floor, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(d.dominant_eigenvalue, 0.7 + 0.3 / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_diagnostics_flags_degenerate_spectrum() {
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        let psi = [ONE, ZERO, ZERO, ZERO];
        let d = mixed
            .spectral_diagnostics(&psi, &"ZI".parse().unwrap())
            .unwrap();
        assert!(!d.reliable);
        assert!(mixed
            .spectral_diagnostics(&[ONE, ONE, ZERO, ZERO], &"ZI".parse().unwrap())
            .is_err());
    }

    #[test]
    fn mismatch_bounds_on_random_states() {
        // Dense-eigensolver oracle: the noise floor never exceeds the
        // trace-distance bound 2 sqrt(c) ||X||.
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let obs: Observable = "ZI".parse().unwrap();
        for _ in 0..50 {
            let psi = random_state(2, &mut rng);
            let rho = random_mixed(2, 3, &mut rng);
            let d = rho.spectral_diagnostics(&psi, &obs).unwrap();
            assert!(d.within_trace_distance_bound(&obs), "{d:?}");
        }
    }

    #[test]
    fn linear_mismatch_bound_is_not_universal() {
        // psi_0 = cos t|0> + sin t|1>, X = sigma_x: eps = sin 2t while 2c = 2 sin^2 t.
        let t = 0.1f64;
        let exact = [ONE, ZERO];
        let rho = DensityMatrix::from_diagonal(&[0.9, 0.1]).unwrap();
        let mut rotated = rho.clone();
        rotated.apply_gate(&Gate::ry(0, 2.0 * t)).unwrap();
        let obs: Observable = "X".parse().unwrap();
        let d = rotated.spectral_diagnostics(&exact, &obs).unwrap();
        assert_abs_diff_eq!(d.coherent_mismatch, t.sin().powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(d.noise_floor.abs(), (2.0 * t).sin(), epsilon = 1e-12);
        assert!(!d.within_linear_bound(&obs));
        assert!(d.within_trace_distance_bound(&obs));
    }

    #[test]
    fn validate_rejects_bad_matrices() {
        assert!(DensityMatrix::from_diagonal(&[0.5, 0.6]).is_err());
        assert!(DensityMatrix::from_diagonal(&[1.2, -0.2]).is_err());
        let data = vec![c(0.5, 0.0), c(0.1, 0.1), c(0.1, 0.1), c(0.5, 0.0)];
        assert!(DensityMatrix::from_data(1, data).is_err());
        assert!(matches!(
            DensityMatrix::zero_state(13),
            Err(Error::QubitCap { .. })
        ));
    }

    #[test]
    fn observable_parsing() {
        let o: Observable = "zIx".parse().unwrap();
        assert_eq!(o.to_string(), "ZIX");
        assert!(o.is_traceless());
        assert!("III".parse::<Observable>().unwrap().is_identity());
        assert!("ZQ".parse::<Observable>().is_err());
        assert!("".parse::<Observable>().is_err());
        let json = serde_json::to_string(&o).unwrap();
        assert_eq!(json, "\"ZIX\"");
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let angle = 0.0..(2.0 * PI);
        prop_oneof![
            (0..n, angle.clone()).prop_map(|(q, a)| Gate::rz(q, a)),
            (0..n, angle.clone()).prop_map(|(q, a)| Gate::ry(q, a)),
            (0..n - 1, angle).prop_map(|(q, a)| Gate::xx(q, q + 1, a)),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn channels_preserve_state_invariants(
            gates in proptest::collection::vec(arb_gate(3), 1..12),
            p in 0.0..1.0f64,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rho = random_mixed(3, 2, &mut rng);
            for (k, g) in gates.iter().enumerate() {
                rho.apply_gate(g).unwrap();
                rho.apply_depolarizing(p, k % 3).unwrap();
                rho.apply_dephasing(p / 2.0, (k + 1) % 3).unwrap();
            }
            rho.apply_global_depolarizing(p / 3.0).unwrap();
            prop_assert!(rho.validate().is_ok());
        }

        #[test]
        fn contraction_matches_dense_conjugation(gate in arb_gate(3), seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_mixed(3, 3, &mut rng);
            let u = embed(&gate, 3);
            let dense = matmul(&matmul(&u, rho.data(), 8), &dagger(&u, 8), 8);
            let mut fast = rho.clone();
            fast.apply_gate(&gate).unwrap();
            for (a, b) in fast.data().iter().zip(&dense) {
                prop_assert!((a - b).norm() < 1e-13);
            }
        }

        #[test]
        fn vd_ratio_is_unitarily_invariant(
            gates in proptest::collection::vec(arb_gate(2), 1..6),
            m in 1u32..5,
            seed in any::<u64>(),
        ) {
            // Tr[(U rho U^+)^M U X U^+] / Tr[(U rho U^+)^M] = Tr[rho^M X] / Tr[rho^M]
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_mixed(2, 2, &mut rng);
            let obs: Observable = "ZX".parse().unwrap();
            let (_, _, before) = rho.vd_expectation(&obs, m).unwrap();

            let mut u = Observable::new(vec![Pauli::I, Pauli::I]).unwrap().to_matrix();
            let mut rotated = rho.clone();
            for g in &gates {
                u = matmul(&embed(g, 2), &u, 4);
                rotated.apply_gate(g).unwrap();
            }
            let x_rot = matmul(&matmul(&u, &obs.to_matrix(), 4), &dagger(&u, 4), 4);
            let rm = rotated.power(m).unwrap();
            let num = trace_product(&rm, &x_rot, 4).re;
            let den: f64 = (0..4).map(|i| rm[i * 4 + i].re).sum();
            prop_assert!((num / den - before).abs() < 1e-10);
        }
    }
}
