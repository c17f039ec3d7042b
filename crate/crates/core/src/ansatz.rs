//! Trainable measurement strategy: one layered three-qubit unitary per input,
//! the value-Hamiltonian cost, parameter-shift gradients and Adam training.
//!
//! Each layer applies `Rz(a) Ry(b) Rz(c)` (in that time order) to every qubit
//! and then a ring of CNOTs `q -> (q + r) mod 3` with range `r = (l mod 2) + 1`.

use std::f64::consts::FRAC_PI_2;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::game::{GameError, GameSpec, GRID};
use crate::pauli::{dense, DenseOperator, PauliError};
use crate::simulator::{circuit_unitary, prepare_bell_stack, Gate, SimError, StateVector};

pub const QUBITS_PER_PLAYER: usize = 3;
pub const ANGLES_PER_QUBIT: usize = 3;
pub const UNITARIES: usize = 2 * GRID;
pub const DEFAULT_LAYERS: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnsatzError {
    #[error("expected {expected} parameters, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("non-finite {quantity} at iteration {iteration}")]
    NonFinite { quantity: &'static str, iteration: usize },
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Pauli(#[from] PauliError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    Alice,
    Bob,
}

impl Player {
    fn offset(self) -> usize {
        match self {
            Player::Alice => 0,
            Player::Bob => QUBITS_PER_PLAYER,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AnsatzShape {
    pub layers: usize,
}

impl AnsatzShape {
    pub fn new(layers: usize) -> Self {
        Self { layers }
    }

    pub fn params_per_unitary(&self) -> usize {
        self.layers * QUBITS_PER_PLAYER * ANGLES_PER_QUBIT
    }

    pub fn total_params(&self) -> usize {
        UNITARIES * self.params_per_unitary()
    }
}

impl Default for AnsatzShape {
    fn default() -> Self {
        Self::new(DEFAULT_LAYERS)
    }
}

/// All angles of the six unitaries, flattened in the order
/// `[U_0, U_1, U_2, V_0, V_1, V_2][layer][qubit][angle]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    shape: AnsatzShape,
    values: Vec<f64>,
}

impl ParamSet {
    pub fn zeros(shape: AnsatzShape) -> Self {
        Self { shape, values: vec![0.0; shape.total_params()] }
    }

    pub fn from_flat(shape: AnsatzShape, values: Vec<f64>) -> Result<Self, AnsatzError> {
        if values.len() != shape.total_params() {
            return Err(AnsatzError::ShapeMismatch { expected: shape.total_params(), got: values.len() });
        }
        Ok(Self { shape, values })
    }

    /// Angles drawn i.i.d. from the standard normal distribution.
    pub fn standard_normal(shape: AnsatzShape, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..shape.total_params()).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self { shape, values }
    }

    pub fn shape(&self) -> AnsatzShape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn unitary_index(player: Player, input: usize) -> usize {
        match player {
            Player::Alice => input,
            Player::Bob => GRID + input,
        }
    }

    pub fn unitary(&self, player: Player, input: usize) -> &[f64] {
        let n = self.shape.params_per_unitary();
        let u = Self::unitary_index(player, input);
        &self.values[u * n..(u + 1) * n]
    }

    pub fn unitary_mut(&mut self, player: Player, input: usize) -> &mut [f64] {
        let n = self.shape.params_per_unitary();
        let u = Self::unitary_index(player, input);
        &mut self.values[u * n..(u + 1) * n]
    }

    /// Flat index of `[player input][layer][qubit][angle]`.
    pub fn index(&self, player: Player, input: usize, layer: usize, qubit: usize, angle: usize) -> usize {
        Self::unitary_index(player, input) * self.shape.params_per_unitary()
            + (layer * QUBITS_PER_PLAYER + qubit) * ANGLES_PER_QUBIT
            + angle
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Nested view `[input][layer][qubit][angle]` of one player's angles.
    pub fn nested(&self, player: Player) -> Vec<Vec<Vec<[f64; 3]>>> {
        (0..GRID)
            .map(|input| {
                self.unitary(player, input)
                    .chunks(QUBITS_PER_PLAYER * ANGLES_PER_QUBIT)
                    .map(|layer| layer.chunks(ANGLES_PER_QUBIT).map(|a| [a[0], a[1], a[2]]).collect())
                    .collect()
            })
            .collect()
    }

    /// Inverse of [`ParamSet::nested`]; the layer count is taken from `shape`.
    pub fn from_nested(
        shape: AnsatzShape,
        theta: &[Vec<Vec<[f64; 3]>>],
        phi: &[Vec<Vec<[f64; 3]>>],
    ) -> Result<Self, AnsatzError> {
        let mut values = Vec::with_capacity(shape.total_params());
        for unitary in theta.iter().chain(phi) {
            if unitary.len() != shape.layers {
                return Err(AnsatzError::ShapeMismatch {
                    expected: shape.layers,
                    got: unitary.len(),
                });
            }
            for layer in unitary {
                if layer.len() != QUBITS_PER_PLAYER {
                    return Err(AnsatzError::ShapeMismatch { expected: QUBITS_PER_PLAYER, got: layer.len() });
                }
                values.extend(layer.iter().flatten());
            }
        }
        if theta.len() != GRID || phi.len() != GRID {
            return Err(AnsatzError::ShapeMismatch {
                expected: UNITARIES,
                got: theta.len() + phi.len(),
            });
        }
        Self::from_flat(shape, values)
    }
}

/// Gate sequence of one local unitary on qubits 0..3.
pub fn build_unitary_circuit(params: &[f64], shape: AnsatzShape) -> Result<Vec<Gate>, AnsatzError> {
    if params.len() != shape.params_per_unitary() {
        return Err(AnsatzError::ShapeMismatch { expected: shape.params_per_unitary(), got: params.len() });
    }
    let mut gates = Vec::with_capacity(shape.layers * 12);
    for (layer, angles) in params.chunks(QUBITS_PER_PLAYER * ANGLES_PER_QUBIT).enumerate() {
        for (qubit, a) in angles.chunks(ANGLES_PER_QUBIT).enumerate() {
            gates.push(Gate::Rz { qubit, angle: a[0] });
            gates.push(Gate::Ry { qubit, angle: a[1] });
            gates.push(Gate::Rz { qubit, angle: a[2] });
        }
        let range = layer % 2 + 1;
        for control in 0..QUBITS_PER_PLAYER {
            gates.push(Gate::Cnot { control, target: (control + range) % QUBITS_PER_PLAYER });
        }
    }
    Ok(gates)
}

fn player_circuit(params: &ParamSet, player: Player, input: usize) -> Result<Vec<Gate>, AnsatzError> {
    let gates = build_unitary_circuit(params.unitary(player, input), params.shape)?;
    Ok(gates.into_iter().map(|g| g.shifted(player.offset())).collect())
}

/// Dense 8x8 matrix of the local unitary for one player input.
pub fn local_unitary(params: &ParamSet, player: Player, input: usize) -> Result<DenseOperator, AnsatzError> {
    let gates = build_unitary_circuit(params.unitary(player, input), params.shape)?;
    Ok(circuit_unitary(&gates, QUBITS_PER_PLAYER)?)
}

/// Dense rotated observable `U† A_i U` (Alice) or `V† B_j V` (Bob).
pub fn rotated_observable(
    spec: &GameSpec,
    params: &ParamSet,
    player: Player,
    input: usize,
) -> Result<DenseOperator, AnsatzError> {
    if input >= GRID {
        return Err(GameError::IndexOutOfRange(input, input).into());
    }
    let fixed = match player {
        Player::Alice => &spec.rows[input],
        Player::Bob => &spec.cols[input],
    };
    let u = local_unitary(params, player, input)?;
    Ok(dense(fixed).conjugate_by(&u)?)
}

/// `state` after Alice's unitary for row `i` and Bob's for column `j`.
pub fn rotated_state(
    state: &StateVector,
    params: &ParamSet,
    i: usize,
    j: usize,
) -> Result<StateVector, AnsatzError> {
    if i >= GRID || j >= GRID {
        return Err(GameError::IndexOutOfRange(i, j).into());
    }
    let mut s = state.clone();
    s.apply_gates(&player_circuit(params, Player::Alice, i)?)?;
    s.apply_gates(&player_circuit(params, Player::Bob, j)?)?;
    Ok(s)
}

/// `<ψ| Ã_i ⊗ B̃_j |ψ>`.
pub fn rotated_expectation(
    state: &StateVector,
    spec: &GameSpec,
    params: &ParamSet,
    i: usize,
    j: usize,
) -> Result<f64, AnsatzError> {
    let s = rotated_state(state, params, i, j)?;
    Ok(s.expectation(&spec.joint(i, j)?)?)
}

/// `<H̃> = -Σ_{i,j} <Ã_i ⊗ B̃_j>`, summed row-major.
pub fn cost(state: &StateVector, spec: &GameSpec, params: &ParamSet) -> Result<f64, AnsatzError> {
    let mut total = 0.0;
    for i in 0..GRID {
        for j in 0..GRID {
            total -= rotated_expectation(state, spec, params, i, j)?;
        }
    }
    Ok(total)
}

/// Exact gradient of [`cost`] by the two-point parameter-shift rule.
///
/// A coordinate of `U_i` only enters the three terms `(i, ·)`, so only those
/// are re-evaluated; the partner unitaries are applied once and cached.
pub fn gradient(state: &StateVector, spec: &GameSpec, params: &ParamSet) -> Result<ParamSet, AnsatzError> {
    let shape = params.shape;
    let per = shape.params_per_unitary();
    let mut alice_applied = Vec::with_capacity(GRID);
    let mut bob_applied = Vec::with_capacity(GRID);
    let mut joints = Vec::with_capacity(GRID * GRID);
    for k in 0..GRID {
        let mut s = state.clone();
        s.apply_gates(&player_circuit(params, Player::Alice, k)?)?;
        alice_applied.push(s);
        let mut s = state.clone();
        s.apply_gates(&player_circuit(params, Player::Bob, k)?)?;
        bob_applied.push(s);
    }
    for i in 0..GRID {
        for j in 0..GRID {
            joints.push(spec.joint(i, j)?);
        }
    }

    // Sum of the three cost terms touched by unitary (player, input) with
    // that unitary's angles replaced by `angles`.
    let partial_cost = |player: Player, input: usize, angles: &[f64]| -> Result<f64, AnsatzError> {
        let gates: Vec<Gate> = build_unitary_circuit(angles, shape)?
            .into_iter()
            .map(|g| g.shifted(player.offset()))
            .collect();
        let mut total = 0.0;
        for other in 0..GRID {
            let (mut s, obs) = match player {
                Player::Alice => (bob_applied[other].clone(), &joints[input * GRID + other]),
                Player::Bob => (alice_applied[other].clone(), &joints[other * GRID + input]),
            };
            s.apply_gates(&gates)?;
            total -= s.expectation(obs)?;
        }
        Ok(total)
    };

    let values = (0..params.len())
        .into_par_iter()
        .map(|k| {
            let u = k / per;
            let (player, input) = if u < GRID { (Player::Alice, u) } else { (Player::Bob, u - GRID) };
            let mut angles = params.unitary(player, input).to_vec();
            let local = k % per;
            let base = angles[local];
            angles[local] = base + FRAC_PI_2;
            let plus = partial_cost(player, input, &angles)?;
            angles[local] = base - FRAC_PI_2;
            let minus = partial_cost(player, input, &angles)?;
            Ok((plus - minus) / 2.0)
        })
        .collect::<Result<Vec<f64>, AnsatzError>>()?;
    ParamSet::from_flat(shape, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub layers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            iterations: 200,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
            layers: DEFAULT_LAYERS,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AnsatzError> {
        let bad = |msg: &str| Err(AnsatzError::InvalidConfig(msg.to_string()));
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad("moment decay rates must lie in [0, 1)");
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        Ok(())
    }

    pub fn shape(&self) -> AnsatzShape {
        AnsatzShape::new(self.layers)
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone)]
pub struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(config: &TrainConfig, n_params: usize) -> Self {
        Self {
            learning_rate: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            epsilon: config.epsilon,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    /// Applies one update in place and returns the Euclidean norm of the step.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> f64 {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let mut sq = 0.0;
        for (k, (p, g)) in params.iter_mut().zip(grad).enumerate() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g;
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[k] / bc1;
            let v_hat = self.v[k] / bc2;
            let delta = -self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            *p += delta;
            sq += delta * delta;
        }
        sq.sqrt()
    }
}

/// Per-iteration history of a training run. Entry `t` of each series is
/// measured at the parameters before update `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub costs: Vec<f64>,
    pub gradient_norms: Vec<f64>,
    pub update_norms: Vec<f64>,
    pub initial_params: ParamSet,
    pub final_params: ParamSet,
    /// Cost at `final_params`.
    pub final_cost: f64,
}

impl TrainTrace {
    /// Trace of a run with no iterations, starting (and ending) at `params`.
    pub fn untrained(params: ParamSet) -> Result<Self, AnsatzError> {
        let final_cost = cost(&prepare_bell_stack(), &GameSpec::magic_square(), &params)?;
        Ok(Self {
            costs: Vec::new(),
            gradient_norms: Vec::new(),
            update_norms: Vec::new(),
            initial_params: params.clone(),
            final_params: params,
            final_cost,
        })
    }

    pub fn iterations(&self) -> usize {
        self.costs.len()
    }
}

/// Runs Adam from standard-normal initial angles drawn with `config.seed`.
pub fn train(config: &TrainConfig) -> Result<TrainTrace, AnsatzError> {
    config.validate()?;
    train_from(config, ParamSet::standard_normal(config.shape(), config.seed))
}

/// Runs Adam from explicit initial parameters.
pub fn train_from(config: &TrainConfig, initial: ParamSet) -> Result<TrainTrace, AnsatzError> {
    config.validate()?;
    if initial.shape() != config.shape() {
        return Err(AnsatzError::ShapeMismatch {
            expected: config.shape().total_params(),
            got: initial.len(),
        });
    }
    let state = prepare_bell_stack();
    let spec = GameSpec::magic_square();
    let mut params = initial.clone();
    let mut adam = Adam::new(config, params.len());
    let mut costs = Vec::with_capacity(config.iterations);
    let mut gradient_norms = Vec::with_capacity(config.iterations);
    let mut update_norms = Vec::with_capacity(config.iterations);

    for iteration in 0..config.iterations {
        let c = cost(&state, &spec, &params)?;
        if !c.is_finite() {
            return Err(AnsatzError::NonFinite { quantity: "cost", iteration });
        }
        let g = gradient(&state, &spec, &params)?;
        let g_norm = g.norm();
        if !g_norm.is_finite() {
            return Err(AnsatzError::NonFinite { quantity: "gradient", iteration });
        }
        let step = adam.step(params.values_mut(), g.values());
        costs.push(c);
        gradient_norms.push(g_norm);
        update_norms.push(step);
    }

    let final_cost = cost(&state, &spec, &params)?;
    if !final_cost.is_finite() {
        return Err(AnsatzError::NonFinite { quantity: "cost", iteration: config.iterations });
    }
    Ok(TrainTrace {
        costs,
        gradient_norms,
        update_norms,
        initial_params: initial,
        final_params: params,
        final_cost,
    })
}
