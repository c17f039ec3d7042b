//! Dense statevector simulation for up to six qubits.
//!
//! Amplitudes are indexed with qubit 0 as the most significant bit, matching
//! [`crate::pauli::dense`]. In the six-qubit game register Alice holds qubits
//! 0-2 and Bob holds qubits 3-5; qubit `k` of Alice is Bell-paired with qubit
//! `k + 3` of Bob.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::pauli::{DenseOperator, PauliLetter, PauliString};

pub const GAME_QUBITS: usize = 6;
pub const MAX_QUBITS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit index {qubit} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("controlled-NOT with control equal to target ({0})")]
    ControlIsTarget(usize),
    #[error("observable acts on {observable} qubits but the state has {state}")]
    WidthMismatch { observable: usize, state: usize },
    #[error("observable {0} is not hermitian")]
    NonHermitian(String),
    #[error("site observables overlap on qubit {0}")]
    OverlappingSites(usize),
    #[error("invalid register size {0}")]
    InvalidWidth(usize),
    #[error("amplitude vector has length {got}, expected {expected}")]
    BadLength { got: usize, expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Rz { qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    /// The same gate with every qubit index moved up by `offset`.
    pub fn shifted(self, offset: usize) -> Gate {
        match self {
            Gate::Rx { qubit, angle } => Gate::Rx { qubit: qubit + offset, angle },
            Gate::Ry { qubit, angle } => Gate::Ry { qubit: qubit + offset, angle },
            Gate::Rz { qubit, angle } => Gate::Rz { qubit: qubit + offset, angle },
            Gate::Cnot { control, target } => Gate::Cnot {
                control: control + offset,
                target: target + offset,
            },
        }
    }

    fn check(&self, n_qubits: usize) -> Result<(), SimError> {
        let in_range = |q: usize| {
            if q < n_qubits {
                Ok(())
            } else {
                Err(SimError::QubitOutOfRange { qubit: q, n_qubits })
            }
        };
        match *self {
            Gate::Rx { qubit, .. } | Gate::Ry { qubit, .. } | Gate::Rz { qubit, .. } => in_range(qubit),
            Gate::Cnot { control, target } => {
                in_range(control)?;
                in_range(target)?;
                if control == target {
                    return Err(SimError::ControlIsTarget(control));
                }
                Ok(())
            }
        }
    }
}

/// 2x2 matrix of `exp(-i angle G / 2)` for `G` in {X, Y, Z}, row-major.
fn rotation_matrix(letter: PauliLetter, angle: f64) -> [Complex64; 4] {
    let (s, c) = (angle / 2.0).sin_cos();
    let zero = Complex64::new(0.0, 0.0);
    match letter {
        PauliLetter::X => [
            Complex64::new(c, 0.0),
            Complex64::new(0.0, -s),
            Complex64::new(0.0, -s),
            Complex64::new(c, 0.0),
        ],
        PauliLetter::Y => [
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ],
        PauliLetter::Z => [Complex64::new(c, -s), zero, zero, Complex64::new(c, s)],
        PauliLetter::I => [Complex64::new(1.0, 0.0), zero, zero, Complex64::new(1.0, 0.0)],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self, SimError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(SimError::InvalidWidth(n_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amplitudes })
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, SimError> {
        let mut s = Self::zero(n_qubits)?;
        if index >= s.dim() {
            return Err(SimError::BadLength { got: index, expected: s.dim() });
        }
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self, SimError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(SimError::InvalidWidth(n_qubits));
        }
        if amplitudes.len() != 1 << n_qubits {
            return Err(SimError::BadLength { got: amplitudes.len(), expected: 1 << n_qubits });
        }
        Ok(Self { n_qubits, amplitudes })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn bit_mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    pub fn apply_gate(&self, gate: &Gate) -> Result<StateVector, SimError> {
        let mut out = self.clone();
        out.apply_gate_mut(gate)?;
        Ok(out)
    }

    /// In-place variant of [`StateVector::apply_gate`] for owned scratch buffers.
    pub fn apply_gate_mut(&mut self, gate: &Gate) -> Result<(), SimError> {
        gate.check(self.n_qubits)?;
        match *gate {
            Gate::Rx { qubit, angle } => self.apply_single(qubit, rotation_matrix(PauliLetter::X, angle)),
            Gate::Ry { qubit, angle } => self.apply_single(qubit, rotation_matrix(PauliLetter::Y, angle)),
            Gate::Rz { qubit, angle } => self.apply_single(qubit, rotation_matrix(PauliLetter::Z, angle)),
            Gate::Cnot { control, target } => {
                let c = self.bit_mask(control);
                let t = self.bit_mask(target);
                for i in 0..self.dim() {
                    if i & c != 0 && i & t == 0 {
                        self.amplitudes.swap(i, i | t);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_gates<'a, I>(&mut self, gates: I) -> Result<(), SimError>
    where
        I: IntoIterator<Item = &'a Gate>,
    {
        for g in gates {
            self.apply_gate_mut(g)?;
        }
        Ok(())
    }

    fn apply_single(&mut self, qubit: usize, m: [Complex64; 4]) {
        let mask = self.bit_mask(qubit);
        for i in 0..self.dim() {
            if i & mask == 0 {
                let j = i | mask;
                let (a, b) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = m[0] * a + m[1] * b;
                self.amplitudes[j] = m[2] * a + m[3] * b;
            }
        }
    }

    /// `P|self>` for a Pauli string of matching width, phase included.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<StateVector, SimError> {
        if p.len() != self.n_qubits {
            return Err(SimError::WidthMismatch { observable: p.len(), state: self.n_qubits });
        }
        let mut flip = 0usize;
        let mut z_mask = 0usize;
        let mut y_count = 0u32;
        for (q, l) in p.letters().iter().enumerate() {
            let m = self.bit_mask(q);
            match l {
                PauliLetter::I => {}
                PauliLetter::X => flip |= m,
                PauliLetter::Z => z_mask |= m,
                PauliLetter::Y => {
                    flip |= m;
                    z_mask |= m;
                    y_count += 1;
                }
            }
        }
        // Y = i X Z, so each Y contributes a factor i beyond the X·Z action.
        let global = p.phase().to_complex() * Complex64::new(0.0, 1.0).powu(y_count);
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (i, a) in self.amplitudes.iter().enumerate() {
            let sign = if (i & z_mask).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
            out[i ^ flip] = global * a * sign;
        }
        Ok(StateVector { n_qubits: self.n_qubits, amplitudes: out })
    }

    /// `<self| obs |self>` for a Hermitian Pauli string.
    pub fn expectation(&self, obs: &PauliString) -> Result<f64, SimError> {
        if !obs.is_hermitian() {
            return Err(SimError::NonHermitian(obs.to_string()));
        }
        let value = self.inner(&self.apply_pauli(obs)?);
        debug_assert!(value.im.abs() < 1e-10, "imaginary residue {}", value.im);
        Ok(value.re)
    }
}

/// Three Bell pairs `|Φ+>` on qubit pairs (0,3), (1,4), (2,5).
pub fn prepare_bell_stack() -> StateVector {
    let amp = Complex64::new(2f64.powf(-1.5), 0.0);
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << GAME_QUBITS];
    for alice in 0..8usize {
        // Bob's three bits copy Alice's.
        amplitudes[(alice << 3) | alice] = amp;
    }
    StateVector { n_qubits: GAME_QUBITS, amplitudes }
}

pub fn expectation(state: &StateVector, obs: &PauliString) -> Result<f64, SimError> {
    state.expectation(obs)
}

pub fn apply_gate(state: &StateVector, gate: &Gate) -> Result<StateVector, SimError> {
    state.apply_gate(gate)
}

/// Dense matrix of a gate sequence on `n_qubits`, column `k` being the
/// image of basis state `|k>`.
pub fn circuit_unitary(gates: &[Gate], n_qubits: usize) -> Result<DenseOperator, SimError> {
    let dim = 1usize << n_qubits;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for k in 0..dim {
        let mut s = StateVector::basis(n_qubits, k)?;
        s.apply_gates(gates)?;
        m.set_column(k, &DVector::from_column_slice(s.amplitudes()));
    }
    Ok(DenseOperator::from_matrix(m))
}

/// Derives an independent sub-seed for task `index` of a run seeded with
/// `seed`, using the SplitMix64 finalizer on `seed + (index + 1) * γ`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A single-qubit Pauli observable on one qubit of the register.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SiteObservable {
    pub qubit: usize,
    pub letter: PauliLetter,
}

impl SiteObservable {
    pub fn new(qubit: usize, letter: PauliLetter) -> Self {
        Self { qubit, letter }
    }
}

/// One joint measurement shot: the ±1 outcome of each of Alice's and Bob's
/// three site observables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Outcome {
    pub alice: [i8; 3],
    pub bob: [i8; 3],
}

impl Outcome {
    /// Alice's answer: product of her three site outcomes.
    pub fn a(&self) -> i8 {
        self.alice.iter().product()
    }

    pub fn b(&self) -> i8 {
        self.bob.iter().product()
    }
}

/// Born-rule sampling of six commuting single-site observables.
///
/// Each site is rotated into the computational basis (X by `Ry(-π/2)`, Y by
/// `Rx(π/2)`), then full basis states are drawn from the 64 probabilities.
pub fn sample_joint(
    state: &StateVector,
    alice_sites: &[SiteObservable; 3],
    bob_sites: &[SiteObservable; 3],
    shots: usize,
    seed: u64,
) -> Result<Vec<Outcome>, SimError> {
    let mut used = 0usize;
    for site in alice_sites.iter().chain(bob_sites) {
        if site.qubit >= state.n_qubits {
            return Err(SimError::QubitOutOfRange { qubit: site.qubit, n_qubits: state.n_qubits });
        }
        if used & (1 << site.qubit) != 0 {
            return Err(SimError::OverlappingSites(site.qubit));
        }
        used |= 1 << site.qubit;
    }
    if shots == 0 {
        return Ok(Vec::new());
    }

    let mut rotated = state.clone();
    for site in alice_sites.iter().chain(bob_sites) {
        match site.letter {
            PauliLetter::X => rotated.apply_gate_mut(&Gate::Ry {
                qubit: site.qubit,
                angle: -std::f64::consts::FRAC_PI_2,
            })?,
            PauliLetter::Y => rotated.apply_gate_mut(&Gate::Rx {
                qubit: site.qubit,
                angle: std::f64::consts::FRAC_PI_2,
            })?,
            PauliLetter::Z | PauliLetter::I => {}
        }
    }

    let dist = WeightedIndex::new(rotated.probabilities())
        .expect("a normalized state has a valid probability vector");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let value = |index: usize, site: &SiteObservable| -> i8 {
        if site.letter == PauliLetter::I || index & rotated.bit_mask(site.qubit) == 0 {
            1
        } else {
            -1
        }
    };
    Ok((0..shots)
        .map(|_| {
            let index = dist.sample(&mut rng);
            Outcome {
                alice: alice_sites.map(|s| value(index, &s)),
                bob: bob_sites.map(|s| value(index, &s)),
            }
        })
        .collect())
}
