//! Signed Pauli strings with exact phase tracking, and their dense matrix
//! realizations.
//!
//! Dense realizations use qubit 0 as the most significant bit of the basis
//! index: for `n` qubits, qubit `q` is bit `n - 1 - q` of the row index.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PauliError {
    #[error("pauli strings have different lengths ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("operators have different dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cannot parse pauli string {0:?}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PauliLetter {
    I,
    X,
    Y,
    Z,
}

impl PauliLetter {
    pub const ALL: [PauliLetter; 4] = [PauliLetter::I, PauliLetter::X, PauliLetter::Y, PauliLetter::Z];

    /// Product of two letters as `(phase, letter)`, e.g. `Z * X = (+i, Y)`.
    pub fn mul(self, rhs: PauliLetter) -> (Phase, PauliLetter) {
        use PauliLetter::*;
        match (self, rhs) {
            (I, p) | (p, I) => (Phase::ONE, p),
            (X, X) | (Y, Y) | (Z, Z) => (Phase::ONE, I),
            (X, Y) => (Phase::I, Z),
            (Y, X) => (Phase::MINUS_I, Z),
            (Y, Z) => (Phase::I, X),
            (Z, Y) => (Phase::MINUS_I, X),
            (Z, X) => (Phase::I, Y),
            (X, Z) => (Phase::MINUS_I, Y),
        }
    }

    pub fn anticommutes_with(self, other: PauliLetter) -> bool {
        self != PauliLetter::I && other != PauliLetter::I && self != other
    }

    pub fn matrix(self) -> DMatrix<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let entries = match self {
            PauliLetter::I => [l, o, o, l],
            PauliLetter::X => [o, l, l, o],
            PauliLetter::Y => [o, -i, i, o],
            PauliLetter::Z => [l, o, o, -l],
        };
        DMatrix::from_row_slice(2, 2, &entries)
    }

    fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(PauliLetter::I),
            'X' => Some(PauliLetter::X),
            'Y' => Some(PauliLetter::Y),
            'Z' => Some(PauliLetter::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            PauliLetter::I => 'I',
            PauliLetter::X => 'X',
            PauliLetter::Y => 'Y',
            PauliLetter::Z => 'Z',
        }
    }
}

/// An element of `{+1, +i, -1, -i}`, stored as the exponent of `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power_of_i(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn power_of_i(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;

    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl std::ops::Neg for Phase {
    type Output = Phase;

    fn neg(self) -> Phase {
        self * Phase::MINUS_ONE
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    phase: Phase,
    letters: Vec<PauliLetter>,
}

impl PauliString {
    pub fn new(phase: Phase, letters: Vec<PauliLetter>) -> Self {
        Self { phase, letters }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(Phase::ONE, vec![PauliLetter::I; n])
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn letters(&self) -> &[PauliLetter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.iter().all(|&l| l == PauliLetter::I)
    }

    /// Tensor product `self ⊗ other`; `self` occupies the leading qubits.
    pub fn tensor(&self, other: &PauliString) -> PauliString {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        PauliString::new(self.phase * other.phase, letters)
    }

    /// Number of positions where the two strings hold anticommuting letters.
    pub fn anticommuting_positions(&self, other: &PauliString) -> Result<usize, PauliError> {
        check_lengths(self, other)?;
        Ok(self
            .letters
            .iter()
            .zip(&other.letters)
            .filter(|(a, b)| a.anticommutes_with(**b))
            .count())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.phase.0 {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(sign)?;
        for l in &self.letters {
            write!(f, "{}", l.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = PauliError;

    /// Parses strings such as `"ZZX"`, `"-XXX"` or `"+iY"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PauliError::Parse(s.to_string());
        let (mut phase, rest) = if let Some(r) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else {
            (Phase::ONE, s.strip_prefix('+').unwrap_or(s))
        };
        let rest = match rest.strip_prefix('i') {
            Some(r) => {
                phase = phase * Phase::I;
                r
            }
            None => rest,
        };
        let letters = rest
            .chars()
            .map(PauliLetter::from_char)
            .collect::<Option<Vec<_>>>()
            .ok_or_else(err)?;
        if letters.is_empty() {
            return Err(err());
        }
        Ok(PauliString::new(phase, letters))
    }
}

fn check_lengths(a: &PauliString, b: &PauliString) -> Result<(), PauliError> {
    if a.len() != b.len() {
        return Err(PauliError::LengthMismatch { left: a.len(), right: b.len() });
    }
    Ok(())
}

/// Group product `a · b` with the phase tracked exactly.
pub fn multiply(a: &PauliString, b: &PauliString) -> Result<PauliString, PauliError> {
    check_lengths(a, b)?;
    let mut phase = a.phase * b.phase;
    let letters = a
        .letters
        .iter()
        .zip(&b.letters)
        .map(|(&x, &y)| {
            let (p, l) = x.mul(y);
            phase = phase * p;
            l
        })
        .collect();
    Ok(PauliString::new(phase, letters))
}

/// Symbolic commutation test: the strings commute iff an even number of
/// positions anticommute.
pub fn commutes(a: &PauliString, b: &PauliString) -> Result<bool, PauliError> {
    Ok(a.anticommuting_positions(b)? % 2 == 0)
}

/// Square complex matrix acting on `n` qubits (dimension `2^n`).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(DMatrix<Complex64>);

impl DenseOperator {
    pub fn from_matrix(m: DMatrix<Complex64>) -> Self {
        assert!(m.is_square(), "dense operators must be square");
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn kron(&self, other: &DenseOperator) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn matmul(&self, other: &DenseOperator) -> Result<Self, PauliError> {
        check_dims(self, other)?;
        Ok(Self(&self.0 * &other.0))
    }

    pub fn add(&self, other: &DenseOperator) -> Result<Self, PauliError> {
        check_dims(self, other)?;
        Ok(Self(&self.0 + &other.0))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.map(|z| z * factor))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &DenseOperator) -> Result<f64, PauliError> {
        check_dims(self, other)?;
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()).is_ok_and(|d| d < tol)
    }

    /// Conjugation `u† · self · u`.
    pub fn conjugate_by(&self, u: &DenseOperator) -> Result<Self, PauliError> {
        u.adjoint().matmul(self)?.matmul(u)
    }

    /// Ascending eigenvalues of a Hermitian operator.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let eig = nalgebra::SymmetricEigen::new(self.0.clone());
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

fn check_dims(a: &DenseOperator, b: &DenseOperator) -> Result<(), PauliError> {
    if a.dim() != b.dim() {
        return Err(PauliError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(())
}

/// Kronecker product of the single-qubit matrices, scaled by the phase.
pub fn dense(p: &PauliString) -> DenseOperator {
    let m = p
        .letters
        .iter()
        .fold(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)), |acc, l| {
            acc.kronecker(&l.matrix())
        });
    DenseOperator(m * p.phase.to_complex())
}

/// Frobenius norm of `ab - ba`.
pub fn commutator_norm(a: &DenseOperator, b: &DenseOperator) -> Result<f64, PauliError> {
    check_dims(a, b)?;
    let c = &a.0 * &b.0 - &b.0 * &a.0;
    Ok(DenseOperator(c).frobenius_norm())
}
