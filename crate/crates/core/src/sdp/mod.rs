//! Semidefinite programming: problem representation, an interior-point solver, complex
//! embeddings, optimization over PPT states and the level-1 moment relaxation.

mod embed;
mod lmi;
mod moment;
mod ppt;
mod program;
mod solver;

pub use embed::{
    embed, embed_complex_psd, embed_sparse, extract, hermitian_basis, sparse_to_dense,
    sparse_trace_product, traceless_basis, ComplexEmbedding, SparseHermitian,
};
pub use lmi::{solve_lmi, LmiBlock, LmiProblem, LmiSolution};
pub use moment::{
    shor_level1, ConstraintMode, Extraction, MomentRelaxation, RelaxationConfig, RelaxationResult, TracePinning,
    RANK_ONE_TOL, TIGHT_TOL,
};
pub use ppt::{linear_over_ppt, linear_over_states, ppt_spectrum_min, StateSet};
pub use program::{Cone, ConicProgram, Sense, SolveStatus};
pub use solver::{solve, ConicSolution, SolverSettings};
