//! Quantum Fisher information, metrological gain and CCNR maximization for bipartite
//! quantum states.
//!
//! The crate evaluates metrological quantities of a density matrix and maximizes them over
//! local Hamiltonians `H1 (x) 1 + 1 (x) H2` with bounded spectra, either by see-saw
//! iteration or through a semidefinite upper bound.

// Negated comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod metrology;
pub mod optimizers;
pub mod sdp;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{BipartiteDims, CMatrix, Hermitian, SpectralData, Subsystem, C64};
pub use metrology::{DensityMatrix, LocalHamiltonian, Objective, QMatrix};
