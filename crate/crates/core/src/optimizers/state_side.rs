//! See-saw over states for a fixed Hamiltonian, via the variational form
//! `F_Q = max_M Tr[rho (-M^2 + 2i[M, H])]`.

use rand::Rng;

use super::{random_density, run_restarts, settled, RestartRun, SeesawConfig, SeesawResult};
use crate::error::Result;
use crate::linalg::{c, CMatrix, Hermitian};
use crate::metrology::{qfi, sld, DensityMatrix, LocalHamiltonian};
use crate::sdp::{linear_over_states, SolverSettings, StateSet};

/// `-M^2 + 2i[M, H]`, whose expectation is the variational objective.
fn variational_operator(m: &CMatrix, h: &CMatrix) -> Hermitian {
    let comm = m * h - h * m;
    Hermitian::from_symmetrized(-(m * m) + comm * c(0.0, 2.0))
}

fn random_start<R: Rng + ?Sized>(set: StateSet, dim: usize, rng: &mut R) -> Result<DensityMatrix> {
    match set {
        StateSet::All => DensityMatrix::new(random_density(dim, rng), None),
        StateSet::Ppt(dims) => super::ccnr::random_ppt_state(dims, rng),
    }
}

/// Maximizes `qfi(rho, H)` over `set` for a fixed Hamiltonian.
pub fn seesaw_qfi_state(
    ham: &LocalHamiltonian,
    set: StateSet,
    config: &SeesawConfig,
) -> Result<SeesawResult<DensityMatrix>> {
    let h = ham.assembled();
    let dim = h.nrows();
    if let StateSet::Ppt(dims) = set {
        dims.check(&h)?;
    }
    let settings = SolverSettings::default();
    run_restarts(config, |rng| {
        let mut rho = random_start(set, dim, rng)?;
        let mut history = vec![qfi(&rho, &h)?];
        let mut converged = false;
        for _ in 0..config.max_iters.max(1) {
            let m = -sld(&rho, &h)?.into_inner();
            let op = variational_operator(&m, &h);
            let (next, _) = linear_over_states(&op, set, &settings)?;
            let f = qfi(&next, &h)?;
            if f < *history.last().expect("nonempty") {
                converged = true;
                break;
            }
            rho = next;
            history.push(f);
            if settled(&history, config.tol) {
                converged = true;
                break;
            }
        }
        let value = *history.last().expect("nonempty");
        Ok(RestartRun { value, argument: rho, history, converged })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli_z;
    use crate::sdp::StateSet;

    #[test]
    fn variational_form_is_saturated_by_sld() {
        let mut rng = super::super::restart_rng(11, 0);
        let rho = DensityMatrix::new(random_density(4, &mut rng), None).unwrap();
        let h = super::super::random_hermitian(4, &mut rng).into_inner();
        let m = -sld(&rho, &h).unwrap().into_inner();
        let v = rho.expectation(&variational_operator(&m, &h));
        assert!((v - qfi(&rho, &h).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn all_states_reach_full_spread() {
        let z = Hermitian::new(pauli_z()).unwrap();
        let ham = LocalHamiltonian::new(z.clone(), z, (1.0, 1.0)).unwrap();
        let cfg = SeesawConfig { restarts: 4, max_iters: 200, ..Default::default() };
        let res = seesaw_qfi_state(&ham, StateSet::All, &cfg).unwrap();
        assert!((res.best_value - 16.0).abs() < 1e-6, "{}", res.best_value);
    }
}
