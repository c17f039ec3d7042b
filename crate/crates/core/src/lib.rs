//! Variational search for perfect quantum strategies in the 3x3 magic square
//! game, plus the algebraic and statistical checks used to verify them.
//!
//! * [`pauli`]: signed Pauli strings and dense operators.
//! * [`simulator`]: six-qubit statevector engine and joint sampling.
//! * [`game`]: operator table, projectors, value Hamiltonian, classical value.
//! * [`ansatz`]: layered local unitaries, cost, gradients, Adam training.
//! * [`verify`]: post-training checks and the assembled report.
//! * [`cli`]: command-line driver and file formats.

pub mod ansatz;
pub mod cli;
pub mod game;
pub mod pauli;
pub mod simulator;
pub mod verify;
