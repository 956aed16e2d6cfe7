//! Exact and approximate Yang-Baxter-like turnover relations for two-qutrit
//! gates, and their use in compressing Trotter circuits of the spin-1 XY
//! chain.
//!
//! The crate is organised bottom-up:
//!
//! * [`spin`]: spin-1 operators and single-qutrit conjugation unitaries.
//! * [`gates`]: two-qutrit exponentials `exp(-iα G⊗G)` and register embedding.
//! * [`circuit`]: gate sequences, state-vector application, same-generator merging.
//! * [`turnover`]: exact turnover identities and their use as a circuit rewrite.
//! * [`optimizer`]: trace infidelity and a finite-difference BFGS minimizer.
//! * [`trotter`]: Trotter step templates, reflection fitting and compression.
//! * [`dynamics`]: exact propagation and return probabilities.

pub mod circuit;
pub mod dynamics;
pub mod error;
pub mod gates;
pub mod linalg;
pub mod optimizer;
pub mod spin;
pub mod trotter;
pub mod turnover;

pub use error::{Error, Result};
