//! See-saw over local Hamiltonians with eigenvalues capped at `+-c_n`.

use rand::Rng;

use super::{random_hermitian, run_restarts, settled, RestartRun, SeesawConfig, SeesawResult};
use crate::error::Result;
use crate::linalg::{cr, hadamard, matmul, to_complex, Adjoint, BipartiteDims, CMatrix, Hermitian, RMatrix, C64};
use crate::metrology::{q_matrix, weight_matrix, weighted_norm, DensityMatrix, LocalHamiltonian, Objective};
use crate::sdp::{embed_sparse, hermitian_basis, solve_lmi, sparse_to_dense, sparse_trace_product, LmiBlock, LmiProblem, SolveStatus, SolverSettings};
use crate::Error;

/// Precomputed eigenbasis and weights of a state for repeated local steps.
#[derive(Clone, Debug)]
pub struct LocalSeesawContext {
    pub dims: BipartiteDims,
    pub weights: RMatrix,
    rho: DensityMatrix,
}

impl LocalSeesawContext {
    pub fn new(rho: &DensityMatrix, objective: Objective) -> Result<Self> {
        let dims = rho.require_dims()?;
        Ok(LocalSeesawContext { dims, weights: weight_matrix(rho, objective), rho: rho.clone() })
    }

    pub fn objective_value(&self, ham: &LocalHamiltonian) -> f64 {
        weighted_norm(&self.weights, &self.frame(ham))
    }

    /// `U^dagger (H1 (x) 1 + 1 (x) H2) U`, using the product structure for the first factor.
    fn frame(&self, ham: &LocalHamiltonian) -> CMatrix {
        let u = &self.rho.spectral().eigenvectors;
        let (d1, d2) = (self.dims.d1, self.dims.d2);
        let (h1, h2) = (ham.h1.matrix(), ham.h2.matrix());
        let n = u.nrows();
        let mut x = CMatrix::zeros(n, n);
        for l in 0..n {
            let col = u.column(l);
            let mut out = x.column_mut(l);
            for i in 0..d1 {
                for j in 0..d2 {
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..d1 {
                        acc += h1[(i, k)] * col[k * d2 + j];
                    }
                    for m in 0..d2 {
                        acc += h2[(j, m)] * col[i * d2 + m];
                    }
                    out[i * d2 + j] = acc;
                }
            }
        }
        matmul(u, &x, Adjoint::Left)
    }

    /// Partial traces of `U M U^dagger` without forming the full product.
    fn reduced(&self, m: &CMatrix) -> (CMatrix, CMatrix) {
        let u = &self.rho.spectral().eigenvectors;
        let y = matmul(u, m, Adjoint::None);
        let (d1, d2) = (self.dims.d1, self.dims.d2);
        let mut w1 = CMatrix::zeros(d1, d1);
        let mut w2 = CMatrix::zeros(d2, d2);
        for l in 0..u.ncols() {
            let (yc, uc) = (y.column(l), u.column(l));
            for i in 0..d1 {
                for j in 0..d2 {
                    let yv = yc[i * d2 + j];
                    for k in 0..d1 {
                        w1[(i, k)] += yv * uc[k * d2 + j].conj();
                    }
                    for m2 in 0..d2 {
                        w2[(j, m2)] += yv * uc[i * d2 + m2].conj();
                    }
                }
            }
        }
        (w1, w2)
    }

    /// Maximizes `Re Tr(U M U^dagger (H1 (x) 1 + 1 (x) H2))` over cap-feasible pairs.
    fn extreme_point(&self, m: &CMatrix, caps: (f64, f64)) -> Result<LocalHamiltonian> {
        let (w1, w2) = self.reduced(m);
        let h1 = sign_projection(&w1, caps.0)?;
        let h2 = sign_projection(&w2, caps.1)?;
        LocalHamiltonian::new(h1, h2, caps)
    }

    /// `W o H~` in the eigenbasis, the gradient of the objective up to a factor 2.
    fn linear_term(&self, ht: &CMatrix) -> CMatrix {
        hadamard(&to_complex(&self.weights), ht).expect("same shape")
    }

    pub fn step(&self, h_old: &LocalHamiltonian, caps: (f64, f64)) -> Result<LocalHamiltonian> {
        self.extreme_point(&self.linear_term(&self.frame(h_old)), caps)
    }
}

/// `U diag(c s(w)) U^dagger` with `s(x) = 1` for `x >= 0`, else `-1`.
pub(crate) fn sign_projection(w: &CMatrix, cap: f64) -> Result<Hermitian> {
    let s = Hermitian::from_symmetrized(w.clone()).eig()?;
    Ok(Hermitian::from_symmetrized(s.apply(|x| if x >= 0.0 { cap } else { -cap })))
}

/// `sum_kl W_kl |H~_kl|^2` for the given objective.
pub fn local_objective(rho: &DensityMatrix, ham: &LocalHamiltonian, objective: Objective) -> Result<f64> {
    Ok(LocalSeesawContext::new(rho, objective)?.objective_value(ham))
}

/// One closed-form see-saw step for the QFI objective.
pub fn seesaw_step_local(rho: &DensityMatrix, h_old: &LocalHamiltonian, caps: (f64, f64)) -> Result<LocalHamiltonian> {
    LocalSeesawContext::new(rho, Objective::Qfi)?.step(h_old, caps)
}

/// The same step solved as a linear matrix inequality `-c_n <= H_n <= c_n`.
pub fn seesaw_step_local_sdp(
    rho: &DensityMatrix,
    h_old: &LocalHamiltonian,
    caps: (f64, f64),
    settings: &SolverSettings,
) -> Result<LocalHamiltonian> {
    let ctx = LocalSeesawContext::new(rho, Objective::Qfi)?;
    let (w1, w2) = ctx.reduced(&ctx.linear_term(&ctx.frame(h_old)));
    let h1 = linear_over_cap_ball(&w1, caps.0, settings)?;
    let h2 = linear_over_cap_ball(&w2, caps.1, settings)?;
    LocalHamiltonian::new(h1, h2, caps)
}

fn linear_over_cap_ball(w: &CMatrix, cap: f64, settings: &SolverSettings) -> Result<Hermitian> {
    let d = w.nrows();
    let basis = hermitian_basis(d);
    let b = basis.iter().map(|g| sparse_trace_product(w, g)).collect();
    let c0 = RMatrix::identity(2 * d, 2 * d) * cap;
    let upper = LmiBlock { c0: c0.clone(), terms: basis.iter().map(|g| embed_sparse(g, d)).collect() };
    let lower = LmiBlock {
        c0,
        terms: basis
            .iter()
            .map(|g| embed_sparse(g, d).into_iter().map(|(r, c, v)| (r, c, -v)).collect())
            .collect(),
    };
    let sol = solve_lmi(&LmiProblem { b, blocks: vec![upper, lower] }, settings)?;
    if sol.status != SolveStatus::Optimal {
        return Err(Error::Solver(sol.status));
    }
    let mut h = CMatrix::zeros(d, d);
    for (g, &y) in basis.iter().zip(&sol.y) {
        h += sparse_to_dense(g, d) * cr(y);
    }
    Ok(Hermitian::from_symmetrized(h))
}

fn random_start<R: Rng + ?Sized>(dims: BipartiteDims, caps: (f64, f64), rng: &mut R) -> Result<LocalHamiltonian> {
    let h1 = random_hermitian(dims.d1, rng);
    let h2 = random_hermitian(dims.d2, rng);
    LocalHamiltonian::new(h1, h2, caps)
}

fn local_restart<R: Rng + ?Sized>(
    ctx: &LocalSeesawContext,
    config: &SeesawConfig,
    rng: &mut R,
) -> Result<RestartRun<LocalHamiltonian>> {
    let mut h = random_start(ctx.dims, config.caps, rng)?;
    let mut ht = ctx.frame(&h);
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iters.max(1) {
        let next = ctx.extreme_point(&ctx.linear_term(&ht), config.caps)?;
        let next_t = ctx.frame(&next);
        let f = weighted_norm(&ctx.weights, &next_t);
        // Guard against rounding-level decreases at a fixed point.
        if history.last().is_some_and(|&prev| f < prev) {
            converged = true;
            break;
        }
        h = next;
        ht = next_t;
        history.push(f);
        if settled(&history, config.tol) {
            converged = true;
            break;
        }
    }
    let value = weighted_norm(&ctx.weights, &ht);
    Ok(RestartRun { value, argument: h, history, converged })
}

/// Multi-restart see-saw for an arbitrary weight objective.
pub fn seesaw_local(rho: &DensityMatrix, objective: Objective, config: &SeesawConfig) -> Result<SeesawResult<LocalHamiltonian>> {
    let ctx = LocalSeesawContext::new(rho, objective)?;
    run_restarts(config, |rng| local_restart(&ctx, config, rng))
}

/// Maximizes the QFI over cap-feasible local Hamiltonians.
pub fn seesaw_qfi_local(rho: &DensityMatrix, config: &SeesawConfig) -> Result<SeesawResult<LocalHamiltonian>> {
    seesaw_local(rho, Objective::Qfi, config)
}

/// Maximizes four times the Wigner-Yanase skew information.
pub fn seesaw_wy_local(rho: &DensityMatrix, config: &SeesawConfig) -> Result<SeesawResult<LocalHamiltonian>> {
    seesaw_local(rho, Objective::Wy4, config)
}

/// QFI see-saw through the auxiliary form `G(H, Y) = 4 sum_kl Re[conj(Y_kl) (Q_kl H~_kl - Y_kl)]`.
///
/// The history records `G` after both half-steps. Starting points match [`seesaw_qfi_local`].
pub fn seesaw_qfi_aux(rho: &DensityMatrix, config: &SeesawConfig) -> Result<SeesawResult<LocalHamiltonian>> {
    let ctx = LocalSeesawContext::new(rho, Objective::Qfi)?;
    let q = to_complex(&q_matrix(rho).q);
    let q_times = |h: &LocalHamiltonian| hadamard(&q, &ctx.frame(h)).expect("same shape");
    let g = |h: &LocalHamiltonian, y: &CMatrix| -> f64 {
        let qh = q_times(h);
        4.0 * qh.iter().zip(y.iter()).map(|(a, b)| (b.conj() * (a - b)).re).sum::<f64>()
    };
    run_restarts(config, |rng| {
        let mut h = random_start(ctx.dims, config.caps, rng)?;
        let mut history: Vec<f64> = Vec::new();
        let mut converged = false;
        for it in 0..config.max_iters.max(1) {
            let y = q_times(&h) * cr(0.5);
            if it > 0 {
                history.push(g(&h, &y));
            }
            // G is linear in H with gradient 4 Q o Y in the eigenbasis
            let next = ctx.extreme_point(&(hadamard(&q, &y).expect("same shape") * cr(4.0)), config.caps)?;
            let g_next = g(&next, &y);
            if it > 0 && g_next < *history.last().expect("recorded") {
                converged = true;
                break;
            }
            let change = (ctx.objective_value(&next) - ctx.objective_value(&h)).abs();
            h = next;
            if it > 0 {
                history.push(g_next);
                if change < config.tol {
                    converged = true;
                    break;
                }
            }
        }
        let value = ctx.objective_value(&h);
        Ok(RestartRun { value, argument: h, history, converged })
    })
}
