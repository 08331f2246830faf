//! Finite-dimensional toolkit for weak values and complex conditional
//! probabilities.
//!
//! * [`linalg`]: states, operators, bases, Haar sampling, unitary evolution.
//! * [`probability`]: weak values, `p(m|a,b)` tables, Kirkwood-Dirac
//!   distributions and the Bayesian sum back to Born probabilities.
//! * [`ergodicity`]: residual checks of the exact identities linking them.
//! * [`reconstruction`]: inner products rebuilt from conditional probabilities.
//! * [`weak_sim`]: qubit-pointer weak measurement and the direct
//!   wavefunction-measurement Monte Carlo.
//! * [`dynamics`]: expectation-value rates as imaginary energy correlations.
//!
//! Batch work runs on rayon when the default `parallel` feature is on; see
//! [`exec::Execution`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ergodicity;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod probability;
pub mod reconstruction;
pub mod stats;
pub mod suite;
pub mod weak_sim;

pub use error::{QergoError, RefSide, Result};
pub use exec::Execution;
pub use linalg::{Basis, Ket, Operator, PhysicalConstants, C64};
