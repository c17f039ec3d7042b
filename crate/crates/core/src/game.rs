//! The 3x3 magic square game: fixed row/column observables, winning
//! projectors, the value Hamiltonian and the classical value.
//!
//! Answer bits `b ∈ {0, 1}` encode values `(-1)^b`. A valid Alice row has
//! value product +1 and a valid Bob column has value product -1. Position `k`
//! of Alice's row-`i` answer is column `k`; position `k` of Bob's column-`j`
//! answer is row `k`. On inputs `(i, j)` the shared cell compares Alice's
//! position `j` with Bob's position `i`.

use num_rational::Ratio;
use thiserror::Error;

use crate::pauli::{dense, DenseOperator, PauliString};

pub const GRID: usize = 3;
pub const ALICE_PARITY: i8 = 1;
pub const BOB_PARITY: i8 = -1;
/// Magnitude of the extreme eigenvalues of the value Hamiltonian.
pub const TERMS: f64 = (GRID * GRID) as f64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("input index ({0}, {1}) out of range")]
    IndexOutOfRange(usize, usize),
    #[error("cost {0} outside [-9, 9]")]
    CostOutOfRange(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct GameSpec {
    pub rows: [PauliString; GRID],
    pub cols: [PauliString; GRID],
}

impl GameSpec {
    pub fn magic_square() -> Self {
        let p = |s: &str| s.parse::<PauliString>().expect("static operator");
        Self {
            rows: [p("ZZX"), p("XZZ"), p("ZXZ")],
            cols: [p("XZZ"), p("ZXZ"), p("ZZX")],
        }
    }

    /// Uniform referee distribution `π(i, j)`.
    pub fn input_probability(&self, _i: usize, _j: usize) -> f64 {
        1.0 / TERMS
    }

    /// The six-qubit joint string `A_i ⊗ B_j`.
    pub fn joint(&self, i: usize, j: usize) -> Result<PauliString, GameError> {
        check_inputs(i, j)?;
        Ok(self.rows[i].tensor(&self.cols[j]))
    }
}

impl Default for GameSpec {
    fn default() -> Self {
        Self::magic_square()
    }
}

fn check_inputs(i: usize, j: usize) -> Result<(), GameError> {
    if i >= GRID || j >= GRID {
        return Err(GameError::IndexOutOfRange(i, j));
    }
    Ok(())
}

/// `(I + A_i ⊗ B_j) / 2`.
pub fn win_projector(spec: &GameSpec, i: usize, j: usize) -> Result<DenseOperator, GameError> {
    let term = dense(&spec.joint(i, j)?);
    let id = DenseOperator::identity(term.dim());
    Ok(id.add(&term).expect("equal dimensions").scale(0.5))
}

/// `H = -Σ_{i,j} A_i ⊗ B_j`.
pub fn value_hamiltonian(spec: &GameSpec) -> DenseOperator {
    let mut h = DenseOperator::identity(64).scale(0.0);
    for i in 0..GRID {
        for j in 0..GRID {
            let term = dense(&spec.joint(i, j).expect("indices in range"));
            h = h.add(&term.scale(-1.0)).expect("equal dimensions");
        }
    }
    h
}

/// Uniform-average winning probability implied by a value-Hamiltonian cost:
/// `1/2 - cost/18`.
pub fn quantum_game_value(cost: f64) -> Result<f64, GameError> {
    const SLACK: f64 = 1e-9;
    if !cost.is_finite() || cost.abs() > TERMS + SLACK {
        return Err(GameError::CostOutOfRange(cost));
    }
    Ok((0.5 - cost / (2.0 * TERMS)).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub min: f64,
    pub max: f64,
    pub ground_dimension: usize,
}

/// Extreme eigenvalues of the value Hamiltonian and the multiplicity of the
/// smallest one (eigenvalues within `tol` of the minimum).
pub fn spectrum(spec: &GameSpec, tol: f64) -> Spectrum {
    let values = value_hamiltonian(spec).hermitian_eigenvalues();
    let min = values[0];
    let max = *values.last().expect("non-empty spectrum");
    let ground_dimension = values.iter().take_while(|&&v| v - min < tol).count();
    Spectrum { min, max, ground_dimension }
}

/// The four 3-bit answers (as ±1 values) whose product equals `parity`.
pub fn valid_assignments(parity: i8) -> Vec<[i8; 3]> {
    (0..8u8)
        .map(|bits| std::array::from_fn(|k| if bits >> (2 - k) & 1 == 0 { 1 } else { -1 }))
        .filter(|a: &[i8; 3]| a.iter().product::<i8>() == parity)
        .collect()
}

/// A deterministic classical strategy: one answer per row for Alice, one per
/// column for Bob.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassicalStrategy {
    pub alice: [[i8; 3]; GRID],
    pub bob: [[i8; 3]; GRID],
}

impl ClassicalStrategy {
    /// Number of the nine input pairs on which the shared cell agrees.
    pub fn wins(&self) -> u32 {
        let mut wins = 0;
        for i in 0..GRID {
            for j in 0..GRID {
                if self.alice[i][j] == self.bob[j][i] {
                    wins += 1;
                }
            }
        }
        wins
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalValue {
    pub value: Ratio<u32>,
    pub optimal_pairs: usize,
    pub strategy_pairs: usize,
}

fn all_player_strategies(parity: i8) -> Vec<[[i8; 3]; GRID]> {
    let options = valid_assignments(parity);
    let mut out = Vec::with_capacity(options.len().pow(GRID as u32));
    for a in &options {
        for b in &options {
            for c in &options {
                out.push([*a, *b, *c]);
            }
        }
    }
    out
}

/// Exhaustive search over all parity-respecting deterministic strategy pairs.
pub fn classical_value_bruteforce() -> ClassicalValue {
    let alice = all_player_strategies(ALICE_PARITY);
    let bob = all_player_strategies(BOB_PARITY);
    let mut best = 0;
    let mut optimal_pairs = 0;
    for a in &alice {
        for b in &bob {
            let wins = ClassicalStrategy { alice: *a, bob: *b }.wins();
            if wins > best {
                best = wins;
                optimal_pairs = 0;
            }
            if wins == best {
                optimal_pairs += 1;
            }
        }
    }
    ClassicalValue {
        value: Ratio::new(best, (GRID * GRID) as u32),
        optimal_pairs,
        strategy_pairs: alice.len() * bob.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::commutator_norm;
    use std::collections::BTreeMap;

    #[test]
    fn table_operators_have_one_x_two_z() {
        let spec = GameSpec::magic_square();
        for p in spec.rows.iter().chain(&spec.cols) {
            let s = p.to_string();
            assert_eq!(s.matches('X').count(), 1);
            assert_eq!(s.matches('Z').count(), 2);
        }
    }

    #[test]
    fn projector_properties() {
        let spec = GameSpec::magic_square();
        let p00 = win_projector(&spec, 0, 0).unwrap();
        assert!((p00.trace().re - 32.0).abs() < 1e-12);

        let p02 = win_projector(&spec, 0, 2).unwrap();
        assert!(p02.matmul(&p02).unwrap().max_abs_diff(&p02).unwrap() < 1e-12);
        assert!(p02.is_hermitian(1e-12));

        let eig = win_projector(&spec, 1, 1).unwrap().hermitian_eigenvalues();
        assert!(eig[..32].iter().all(|v| v.abs() < 1e-10));
        assert!(eig[32..].iter().all(|v| (v - 1.0).abs() < 1e-10));

        assert_eq!(win_projector(&spec, 3, 0), Err(GameError::IndexOutOfRange(3, 0)));
    }

    #[test]
    fn hamiltonian_examples() {
        let spec = GameSpec::magic_square();
        let h = value_hamiltonian(&spec);
        assert!(h.is_hermitian(1e-12));
        assert!(h.trace().norm() < 1e-12);
        let s = spectrum(&spec, 1e-9);
        assert!((s.min + 9.0).abs() < 1e-9);
        assert!((s.max - 9.0).abs() < 1e-9);
        assert_eq!(s.ground_dimension, 2);

        let bell = crate::simulator::prepare_bell_stack();
        let v = nalgebra::DVector::from_column_slice(bell.amplitudes());
        let e = (v.adjoint() * h.matrix() * &v)[(0, 0)];
        assert!((e.re + 3.0).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_is_affine_in_projectors() {
        let spec = GameSpec::magic_square();
        let mut rhs = DenseOperator::identity(64).scale(TERMS);
        for i in 0..3 {
            for j in 0..3 {
                rhs = rhs.add(&win_projector(&spec, i, j).unwrap().scale(-2.0)).unwrap();
            }
        }
        assert!(value_hamiltonian(&spec).max_abs_diff(&rhs).unwrap() < 1e-12);
    }

    #[test]
    fn joint_terms_share_two_dimensional_stabilized_space() {
        let spec = GameSpec::magic_square();
        let terms: Vec<_> = (0..9).map(|k| dense(&spec.joint(k / 3, k % 3).unwrap())).collect();
        for a in &terms {
            for b in &terms {
                assert!(commutator_norm(a, b).unwrap() < 1e-12);
            }
        }
        // Product of commuting projectors projects onto the common +1 space.
        let mut joint = DenseOperator::identity(64);
        for i in 0..3 {
            for j in 0..3 {
                joint = joint.matmul(&win_projector(&spec, i, j).unwrap()).unwrap();
            }
        }
        assert!((joint.trace().re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn game_value_map() {
        assert_eq!(quantum_game_value(-9.0).unwrap(), 1.0);
        assert_eq!(quantum_game_value(9.0).unwrap(), 0.0);
        assert!((quantum_game_value(-3.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(quantum_game_value(9.5).is_err());
        assert!(quantum_game_value(f64::NAN).is_err());
    }

    #[test]
    fn assignments_respect_parity() {
        assert_eq!(valid_assignments(1).len(), 4);
        assert_eq!(valid_assignments(-1).len(), 4);
        assert!(valid_assignments(-1).iter().all(|a| a.iter().product::<i8>() == -1));
    }

    #[test]
    fn classical_value_is_eight_ninths() {
        let c = classical_value_bruteforce();
        assert_eq!(c.value, Ratio::new(8, 9));
        assert_eq!(c.strategy_pairs, 4096);

        // Independent enumeration over raw bit patterns with explicit parity filters.
        let mut histogram = BTreeMap::new();
        for alice_bits in 0u32..512 {
            let a = |i: usize, j: usize| (alice_bits >> (3 * i + j)) & 1;
            if (0..3).any(|i| (a(i, 0) + a(i, 1) + a(i, 2)) % 2 != 0) {
                continue;
            }
            for bob_bits in 0u32..512 {
                let b = |j: usize, i: usize| (bob_bits >> (3 * j + i)) & 1;
                if (0..3).any(|j| (b(j, 0) + b(j, 1) + b(j, 2)) % 2 != 1) {
                    continue;
                }
                let wins = (0..9).filter(|k| a(k / 3, k % 3) == b(k % 3, k / 3)).count();
                *histogram.entry(wins).or_insert(0usize) += 1;
            }
        }
        assert_eq!(histogram.values().sum::<usize>(), 4096);
        assert!(!histogram.contains_key(&9));
        let (&best, &count) = histogram.iter().next_back().unwrap();
        assert_eq!(best, 8);
        assert_eq!(count, c.optimal_pairs);
    }
}
