//! Photoassociation of atom pairs into molecules driven by a tanh detuning
//! sweep (the second Demkov-Kunike model with constant coupling).
//!
//! * [`model`]: parameters, detuning, full and block Hamiltonians
//! * [`dk2`]: closed-form transition probabilities and entanglement entropy
//! * [`tdse`]: Schrodinger-equation oracle for the closed form
//! * [`output`]: pumped, lossy molecule-number master equation and statistics
//! * [`cli`]: figure sweeps, oracle runs and steady-state studies as CSV

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod cli;
pub mod dk2;
pub mod error;
pub mod model;
pub mod output;
pub mod tdse;

pub use error::{Error, Result};
