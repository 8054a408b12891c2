//! State controllability of even-level quantum systems with symplectic
//! control algebras, and pulse synthesis for state-to-state transfer.
//!
//! * [`clifford`] builds Pauli-product representations of Clifford algebras.
//! * [`lie`] closes generator sets under commutators and extracts the
//!   diagonal Cartan subalgebra.
//! * [`system`] models `ẋ = (A + Σ uᵢ Bᵢ) x` and decides controllability.
//! * [`propagator`] propagates states exactly under piecewise-constant fields.
//! * [`synth`] finds rotation sequences that route states through a pivot.
//! * [`cli`] is the command-line front end.

pub mod cli;
pub mod clifford;
pub mod error;
pub mod json;
pub mod lie;
pub mod operator;
pub mod propagator;
pub mod synth;
pub mod system;

pub use error::{Error, Result};
pub use operator::{Hermiticity, OperatorMatrix, C64};
