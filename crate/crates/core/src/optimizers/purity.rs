//! Purity maximization under linear expectation-value constraints.
//!
//! The affine set `{rho : Tr(O_k rho) = e_k, Tr rho = 1}` is parameterized by its nullspace,
//! and each step maximizes `Tr(rho sigma)` with `sigma` the previous iterate.

use nalgebra::DVector;

use super::{random_hermitian, run_restarts, settled, RestartRun, SeesawConfig};
use crate::error::{Error, Result};
use crate::linalg::{cr, symmetric_eig, CMatrix, Hermitian, RMatrix};
use crate::metrology::DensityMatrix;
use crate::sdp::{embed, hermitian_basis, solve_lmi, sparse_to_dense, LmiBlock, LmiProblem, SolveStatus, SolverSettings};

#[derive(Clone, Debug)]
pub struct PurityResult {
    pub state: DensityMatrix,
    pub purity: f64,
    pub history: Vec<f64>,
    pub restart_values: Vec<f64>,
    pub converged: bool,
}

/// Affine parameterization `rho(y) = rho0 + sum_j y_j N_j`.
struct AffineStates {
    rho0: CMatrix,
    directions: Vec<CMatrix>,
}

const NULL_TOL: f64 = 1e-10;
const CONSISTENCY_TOL: f64 = 1e-8;

impl AffineStates {
    fn new(constraints: &[(Hermitian, f64)], dim: usize) -> Result<Self> {
        for (o, _) in constraints {
            if o.dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "constraint operator is {}x{} but dim is {dim}",
                    o.dim(),
                    o.dim()
                )));
            }
        }
        let basis: Vec<CMatrix> = hermitian_basis(dim).iter().map(|g| sparse_to_dense(g, dim)).collect();
        let n = basis.len();
        let m = constraints.len() + 1;
        let mut l = RMatrix::zeros(m, n);
        let mut e = DVector::zeros(m);
        for (a, b) in basis.iter().enumerate() {
            l[(0, a)] = b.trace().re;
            for (k, (o, _)) in constraints.iter().enumerate() {
                l[(k + 1, a)] = (o.matrix() * b).trace().re;
            }
        }
        e[0] = 1.0;
        for (k, (_, ek)) in constraints.iter().enumerate() {
            e[k + 1] = *ek;
        }
        let svd = l.clone().svd(true, true);
        let t0 = svd.solve(&e, NULL_TOL).map_err(|m| Error::InvalidArgument(m.to_string()))?;
        let mismatch = (&l * &t0 - &e).amax();
        if mismatch > CONSISTENCY_TOL {
            return Err(Error::Infeasible(format!("expectation constraints are inconsistent (residual {mismatch:.2e})")));
        }
        let (ev, vecs) = symmetric_eig(&(l.transpose() * &l))?;
        let scale = ev.first().copied().unwrap_or(0.0).max(1.0);
        let combine = |coef: &[f64]| -> CMatrix {
            let mut out = CMatrix::zeros(dim, dim);
            for (b, &x) in basis.iter().zip(coef) {
                out += b * cr(x);
            }
            out
        };
        let rho0 = combine(t0.as_slice());
        let directions = ev
            .iter()
            .enumerate()
            .filter(|(_, &x)| x <= NULL_TOL * scale)
            .map(|(j, _)| combine(vecs.column(j).as_slice()))
            .collect();
        Ok(AffineStates { rho0, directions })
    }

    fn point(&self, y: &[f64]) -> CMatrix {
        let mut rho = self.rho0.clone();
        for (n, &yj) in self.directions.iter().zip(y) {
            rho += n * cr(yj);
        }
        rho
    }

    /// Maximizes `Tr(rho sigma)` over the positive part of the affine set.
    fn maximize(&self, sigma: &CMatrix, settings: &SolverSettings) -> Result<DensityMatrix> {
        if self.directions.is_empty() {
            return DensityMatrix::new(self.rho0.clone(), None)
                .map_err(|_| Error::Infeasible("the unique state satisfying the constraints is not positive".into()));
        }
        let upper = |m: &RMatrix| -> Vec<(usize, usize, f64)> {
            let n = m.nrows();
            let mut out = Vec::new();
            for r in 0..n {
                for c in r..n {
                    if m[(r, c)] != 0.0 {
                        out.push((r, c, -m[(r, c)]));
                    }
                }
            }
            out
        };
        let b = self.directions.iter().map(|n| crate::linalg::trace_product(sigma, n)).collect();
        let block = LmiBlock { c0: embed(&self.rho0), terms: self.directions.iter().map(|n| upper(&embed(n))).collect() };
        let sol = solve_lmi(&LmiProblem { b, blocks: vec![block] }, settings)?;
        if sol.status != SolveStatus::Optimal {
            return Err(Error::Solver(sol.status));
        }
        DensityMatrix::project(&self.point(&sol.y), None)
    }
}

/// Maximizes `Tr(rho^2)` subject to `Tr(O_k rho) = e_k`.
pub fn purity_seesaw(constraints: &[(Hermitian, f64)], dim: usize, config: &SeesawConfig) -> Result<PurityResult> {
    let set = AffineStates::new(constraints, dim)?;
    let settings = SolverSettings::default();
    let res = run_restarts(config, |rng| {
        let mut rho = set.maximize(random_hermitian(dim, rng).matrix(), &settings)?;
        let mut history = vec![rho.purity()];
        let mut converged = set.directions.is_empty();
        for _ in 0..config.max_iters {
            if converged {
                break;
            }
            let next = set.maximize(rho.matrix(), &settings)?;
            let p = next.purity();
            if p < *history.last().expect("nonempty") {
                converged = true;
                break;
            }
            rho = next;
            history.push(p);
            converged = settled(&history, config.tol);
        }
        Ok(RestartRun { value: rho.purity(), argument: rho, history, converged })
    })?;
    let history = res.objective_history[res.best_restart].clone();
    Ok(PurityResult {
        purity: res.best_value,
        state: res.best_argument,
        history,
        restart_values: res.restart_values,
        converged: res.converged,
    })
}
