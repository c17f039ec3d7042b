//! Post-training checks on a learned strategy: exact correlators and
//! marginals, intra-player commutators, and sampled game statistics.
//!
//! Each partial result records a fingerprint of the parameters it was
//! computed from so that [`assemble_report`] can refuse to mix runs.

use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ansatz::{rotated_expectation, rotated_observable, rotated_state, AnsatzError, ParamSet, Player, TrainTrace};
use crate::game::{quantum_game_value, GameError, GameSpec, ALICE_PARITY, BOB_PARITY, GRID};
use crate::pauli::{commutator_norm, PauliError, PauliString};
use crate::simulator::{derive_seed, sample_joint, Outcome, SimError, SiteObservable, StateVector};

/// Intra-player pairs reported by [`commutator_report`], in order.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("at least one shot per input is required")]
    NoShots,
    #[error("components were computed from different parameters")]
    ProvenanceMismatch,
    #[error("grid sum {grid} disagrees with trace cost {trace}")]
    CostMismatch { grid: f64, trace: f64 },
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

/// Stable in-process identity of a parameter set.
pub fn fingerprint(params: &ParamSet) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    params.shape().layers.hash(&mut h);
    for v in params.values() {
        v.to_bits().hash(&mut h);
    }
    h.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpectationGrid {
    pub grid: [[f64; GRID]; GRID],
    pub alice_marginals: [f64; GRID],
    pub bob_marginals: [f64; GRID],
    pub fingerprint: u64,
}

impl ExpectationGrid {
    /// `-Σ grid`, the cost implied by the correlators.
    pub fn implied_cost(&self) -> f64 {
        -self.grid.iter().flatten().sum::<f64>()
    }
}

fn padded(p: &PauliString, player: Player) -> PauliString {
    let id = PauliString::identity(p.len());
    match player {
        Player::Alice => p.tensor(&id),
        Player::Bob => id.tensor(p),
    }
}

/// Correlators `<Ã_i ⊗ B̃_j>` and marginals `<Ã_i ⊗ I>`, `<I ⊗ B̃_j>`.
pub fn expectation_grid(
    state: &StateVector,
    spec: &GameSpec,
    params: &ParamSet,
) -> Result<ExpectationGrid, VerifyError> {
    let mut grid = [[0.0; GRID]; GRID];
    for (i, row) in grid.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = rotated_expectation(state, spec, params, i, j)?;
        }
    }
    let mut alice_marginals = [0.0; GRID];
    let mut bob_marginals = [0.0; GRID];
    for k in 0..GRID {
        // Bob's unitary does not affect an Alice-only observable, and vice versa.
        let s = rotated_state(state, params, k, k)?;
        alice_marginals[k] = s.expectation(&padded(&spec.rows[k], Player::Alice))?;
        bob_marginals[k] = s.expectation(&padded(&spec.cols[k], Player::Bob))?;
    }
    Ok(ExpectationGrid { grid, alice_marginals, bob_marginals, fingerprint: fingerprint(params) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorNorms {
    /// `‖[Ã_i, Ã_i']‖_F` for the pairs in [`PAIRS`].
    pub alice: [f64; 3],
    pub bob: [f64; 3],
    pub fingerprint: u64,
}

pub fn commutator_report(spec: &GameSpec, params: &ParamSet) -> Result<CommutatorNorms, VerifyError> {
    let norms = |player: Player| -> Result<[f64; 3], VerifyError> {
        let ops = (0..GRID)
            .map(|k| rotated_observable(spec, params, player, k))
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = [0.0; 3];
        for (slot, &(a, b)) in out.iter_mut().zip(PAIRS.iter()) {
            *slot = commutator_norm(&ops[a], &ops[b])?;
        }
        Ok(out)
    };
    Ok(CommutatorNorms { alice: norms(Player::Alice)?, bob: norms(Player::Bob)?, fingerprint: fingerprint(params) })
}

/// Raw shots for all nine inputs; `shots[i][j]` used sub-seed
/// `derive_seed(seed, 3 i + j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSamples {
    pub shots: [[Vec<Outcome>; GRID]; GRID],
    pub shots_per_input: usize,
    pub seed: u64,
    pub fingerprint: u64,
}

/// Samples the six rotated site observables for every input pair.
///
/// For input `(i, j)` Alice measures site `k` of `A_i` on qubit `k` after
/// `U_i`, and Bob site `k` of `B_j` on qubit `3 + k` after `V_j`.
pub fn sample_game(
    state: &StateVector,
    spec: &GameSpec,
    params: &ParamSet,
    shots_per_input: usize,
    seed: u64,
) -> Result<GameSamples, VerifyError> {
    if shots_per_input == 0 {
        return Err(VerifyError::NoShots);
    }
    let sites = |p: &PauliString, offset: usize| -> [SiteObservable; 3] {
        std::array::from_fn(|k| SiteObservable::new(offset + k, p.letters()[k]))
    };
    let mut shots: [[Vec<Outcome>; GRID]; GRID] = Default::default();
    for (i, row) in shots.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let s = rotated_state(state, params, i, j)?;
            let sub_seed = derive_seed(seed, (i * GRID + j) as u64);
            *cell = sample_joint(&s, &sites(&spec.rows[i], 0), &sites(&spec.cols[j], GRID), shots_per_input, sub_seed)?;
        }
    }
    Ok(GameSamples { shots, shots_per_input, seed, fingerprint: fingerprint(params) })
}

#[derive(Debug, Clone, PartialEq)]
pub struct WinRates {
    /// Fraction of shots with `a · b = +1` per input pair.
    pub per_input: [[f64; GRID]; GRID],
    /// Uniform average over the nine inputs.
    pub overall: f64,
    pub shots_per_input: usize,
    pub seed: u64,
    pub fingerprint: u64,
}

impl GameSamples {
    pub fn win_rates(&self) -> WinRates {
        let n = self.shots_per_input as f64;
        let per_input = self.shots.clone().map(|row| {
            row.map(|outs| outs.iter().filter(|o| o.a() * o.b() == 1).count() as f64 / n)
        });
        let overall = per_input.iter().flatten().sum::<f64>() / (GRID * GRID) as f64;
        WinRates { per_input, overall, shots_per_input: self.shots_per_input, seed: self.seed, fingerprint: self.fingerprint }
    }

    pub fn parity_and_intersection(&self) -> ParityIntersection {
        let n = self.shots_per_input as f64;
        let mut alice = [[SignCounts::default(); GRID]; GRID];
        let mut bob = [[SignCounts::default(); GRID]; GRID];
        let mut intersection = [[0.0; GRID]; GRID];
        for i in 0..GRID {
            for j in 0..GRID {
                let outs = &self.shots[i][j];
                for o in outs {
                    alice[i][j].record(o.alice.iter().product());
                    bob[i][j].record(o.bob.iter().product());
                }
                intersection[i][j] = outs.iter().filter(|o| o.alice[j] == o.bob[i]).count() as f64 / n;
            }
        }
        ParityIntersection { alice, bob, intersection, fingerprint: self.fingerprint }
    }
}

/// Per-input win rates from sampling every input `shots_per_input` times.
pub fn sampled_win_rate(
    state: &StateVector,
    spec: &GameSpec,
    params: &ParamSet,
    shots_per_input: usize,
    seed: u64,
) -> Result<WinRates, VerifyError> {
    Ok(sample_game(state, spec, params, shots_per_input, seed)?.win_rates())
}

/// Counts of +1 and -1 three-site products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SignCounts {
    pub plus: u64,
    pub minus: u64,
}

impl SignCounts {
    fn record(&mut self, value: i8) {
        if value > 0 {
            self.plus += 1;
        } else {
            self.minus += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.plus + self.minus
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParityIntersection {
    /// Distribution of Alice's answer product on input `(i, j)`.
    pub alice: [[SignCounts; GRID]; GRID],
    pub bob: [[SignCounts; GRID]; GRID],
    /// Fraction of shots where Alice's position `j` equals Bob's position `i`.
    pub intersection: [[f64; GRID]; GRID],
    pub fingerprint: u64,
}

/// Parity and shared-cell statistics; with the same seed these come from the
/// same shots as [`sampled_win_rate`].
pub fn parity_and_intersection(
    state: &StateVector,
    spec: &GameSpec,
    params: &ParamSet,
    shots_per_input: usize,
    seed: u64,
) -> Result<ParityIntersection, VerifyError> {
    Ok(sample_game(state, spec, params, shots_per_input, seed)?.parity_and_intersection())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommutatorSection {
    pub pairs: Vec<[usize; 2]>,
    pub alice: [f64; 3],
    pub bob: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParitySection {
    /// Required product of Alice's row answer (values `(-1)^bit`).
    pub alice_target: i8,
    pub bob_target: i8,
    pub alice: [[SignCounts; GRID]; GRID],
    pub bob: [[SignCounts; GRID]; GRID],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WinSection {
    pub shots_per_input: usize,
    pub seed: u64,
    pub per_input: [[f64; GRID]; GRID],
    pub overall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationReport {
    pub layers: usize,
    pub iterations: usize,
    pub final_cost: f64,
    pub game_value: f64,
    pub expectation_grid: [[f64; GRID]; GRID],
    pub alice_marginals: [f64; GRID],
    pub bob_marginals: [f64; GRID],
    pub commutator_norms: CommutatorSection,
    pub parity: ParitySection,
    pub intersection_agreement: [[f64; GRID]; GRID],
    pub win_rates: WinSection,
}

/// Bundles the component checks with the training trace they describe.
pub fn assemble_report(
    grid: &ExpectationGrid,
    commutators: &CommutatorNorms,
    wins: &WinRates,
    parity: &ParityIntersection,
    trace: &TrainTrace,
) -> Result<VerificationReport, VerifyError> {
    let expected = fingerprint(&trace.final_params);
    if [grid.fingerprint, commutators.fingerprint, wins.fingerprint, parity.fingerprint]
        .iter()
        .any(|&f| f != expected)
    {
        return Err(VerifyError::ProvenanceMismatch);
    }
    let implied = grid.implied_cost();
    if (implied - trace.final_cost).abs() > 1e-9 {
        return Err(VerifyError::CostMismatch { grid: implied, trace: trace.final_cost });
    }
    Ok(VerificationReport {
        layers: trace.final_params.shape().layers,
        iterations: trace.iterations(),
        final_cost: trace.final_cost,
        game_value: quantum_game_value(trace.final_cost)?,
        expectation_grid: grid.grid,
        alice_marginals: grid.alice_marginals,
        bob_marginals: grid.bob_marginals,
        commutator_norms: CommutatorSection {
            pairs: PAIRS.iter().map(|&(a, b)| [a, b]).collect(),
            alice: commutators.alice,
            bob: commutators.bob,
        },
        parity: ParitySection {
            alice_target: ALICE_PARITY,
            bob_target: BOB_PARITY,
            alice: parity.alice,
            bob: parity.bob,
        },
        intersection_agreement: parity.intersection,
        win_rates: WinSection {
            shots_per_input: wins.shots_per_input,
            seed: wins.seed,
            per_input: wins.per_input,
            overall: wins.overall,
        },
    })
}

/// Runs every check on the final parameters of `trace`.
pub fn verify_trace(
    state: &StateVector,
    spec: &GameSpec,
    trace: &TrainTrace,
    shots_per_input: usize,
    seed: u64,
) -> Result<VerificationReport, VerifyError> {
    let params = &trace.final_params;
    let grid = expectation_grid(state, spec, params)?;
    let commutators = commutator_report(spec, params)?;
    let samples = sample_game(state, spec, params, shots_per_input, seed)?;
    assemble_report(&grid, &commutators, &samples.win_rates(), &samples.parity_and_intersection(), trace)
}
