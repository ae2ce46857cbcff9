//! Linear optimization over density matrices, optionally with a positive partial transpose.

use super::embed::{embed_sparse, sparse_to_dense, sparse_trace_product, traceless_basis, SparseHermitian};
use super::lmi::{solve_lmi, LmiBlock, LmiProblem};
use super::program::SolveStatus;
use super::solver::SolverSettings;
use crate::error::{Error, Result};
use crate::linalg::{cr, eig_matrix, identity, partial_transpose, symmetrize, BipartiteDims, CMatrix, Hermitian, RMatrix, Subsystem};
use crate::metrology::DensityMatrix;

/// Feasible set for state-side optimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StateSet {
    All,
    Ppt(BipartiteDims),
}

fn pt_sparse(g: &SparseHermitian, dims: BipartiteDims) -> SparseHermitian {
    let d2 = dims.d2;
    g.iter()
        .map(|&(r, c, z)| {
            let (i, j) = (r / d2, r % d2);
            let (k, l) = (c / d2, c % d2);
            (k * d2 + j, i * d2 + l, z)
        })
        .collect()
}

/// Smallest eigenvalues of `rho` and of its partial transpose.
pub fn ppt_spectrum_min(rho: &CMatrix, dims: BipartiteDims) -> Result<(f64, f64)> {
    let a = eig_matrix(&symmetrize(rho))?.min();
    let pt = partial_transpose(rho, dims, Subsystem::First)?;
    Ok((a, eig_matrix(&symmetrize(&pt))?.min()))
}

/// Maximizes `Tr(C rho)` over states in `set`. Returns the state and `Tr(C rho)`.
pub fn linear_over_states(c: &Hermitian, set: StateSet, settings: &SolverSettings) -> Result<(DensityMatrix, f64)> {
    match set {
        StateSet::All => {
            let s = c.eig()?;
            let v = s.vector(0);
            let rho = DensityMatrix::new(crate::linalg::outer(&v), None)?;
            Ok((rho, s.max()))
        }
        StateSet::Ppt(dims) => linear_over_ppt(c, dims, settings),
    }
}

/// Maximizes `Tr(C rho)` over `{rho >= 0, rho^T1 >= 0, Tr rho = 1}`.
pub fn linear_over_ppt(c: &Hermitian, dims: BipartiteDims, settings: &SolverSettings) -> Result<(DensityMatrix, f64)> {
    dims.check(c)?;
    let n = dims.total();
    let basis = traceless_basis(n);
    let b: Vec<f64> = basis.iter().map(|g| sparse_trace_product(c, g)).collect();
    let c0 = RMatrix::identity(2 * n, 2 * n) / n as f64;
    let negate = |v: Vec<(usize, usize, f64)>| v.into_iter().map(|(r, col, x)| (r, col, -x)).collect::<Vec<_>>();
    let block1 = LmiBlock { c0: c0.clone(), terms: basis.iter().map(|g| negate(embed_sparse(g, n))).collect() };
    let block2 = LmiBlock {
        c0,
        terms: basis.iter().map(|g| negate(embed_sparse(&pt_sparse(g, dims), n))).collect(),
    };
    let lmi = LmiProblem { b, blocks: vec![block1, block2] };
    let sol = solve_lmi(&lmi, settings)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(sol.status));
    }
    let mut rho = identity(n) * cr(1.0 / n as f64);
    for (g, &y) in basis.iter().zip(&sol.y) {
        rho += sparse_to_dense(g, n) * cr(y);
    }
    let rho = pull_inside(&rho, dims)?;
    let value = crate::linalg::trace_product(c, &rho);
    Ok((DensityMatrix::bipartite(rho, dims)?, value))
}

/// Mixes in just enough white noise to make both `rho` and `rho^T1` positive semidefinite.
fn pull_inside(rho: &CMatrix, dims: BipartiteDims) -> Result<CMatrix> {
    let (a, b) = ppt_spectrum_min(rho, dims)?;
    let lmin = a.min(b);
    if lmin >= 0.0 {
        return Ok(symmetrize(rho));
    }
    let inv_n = 1.0 / dims.total() as f64;
    let eps = (-lmin / (inv_n - lmin)) * (1.0 + 1e-9);
    Ok(symmetrize(&(rho * cr(1.0 - eps) + identity(dims.total()) * cr(eps * inv_n))))
}
