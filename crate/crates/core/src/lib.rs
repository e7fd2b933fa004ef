//! Homotopy transfer of quantum L∞ structures in the finite-dimensional
//! Batalin–Vilkovisky formalism.
//!
//! The crate works over exact rationals throughout. The pipeline is:
//!
//! 1. [`linalg`]: a dg odd-symplectic vector space `(V, Q, ω)` and its Hodge
//!    decomposition `V = H ⊕ B ⊕ C`.
//! 2. [`series`]: weight-truncated, graded-commutative formal power series in
//!    the dual variables with an `ħ` grading.
//! 3. [`bv`]: the BV Laplacian, the antibracket and the quantum master
//!    equation.
//! 4. [`hpl`]: the special deformation retract between function spaces and
//!    the homological perturbation lemma.
//! 5. [`transfer`]: effective action, path integral, transferred
//!    differential and the homotopy witness.
//! 6. [`lambda`]: the multilinear operations `λₙᵍ` and their equivalence with
//!    actions.
//!
//! [`problem`] and [`commands`] implement the text schema and the
//! subcommands shared by the CLI binary and the C bindings.

pub mod bv;
pub mod commands;
pub mod error;
pub mod fixtures;
pub mod hpl;
pub mod lambda;
pub mod linalg;
pub mod problem;
pub mod rational;
pub mod report;
pub mod series;
pub mod transfer;

pub use error::{Error, Result};
pub use rational::Rational;
