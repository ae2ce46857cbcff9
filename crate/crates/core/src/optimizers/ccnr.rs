//! Trace norm of the realigned matrix maximized over PPT states.

use rand::Rng;

use super::{random_density, run_restarts, settled, RestartRun, SeesawConfig, SeesawResult};
use crate::error::Result;
use crate::linalg::{cr, identity, realign, svd, unrealign, BipartiteDims, Hermitian};
use crate::metrology::DensityMatrix;
use crate::sdp::{linear_over_ppt, ppt_spectrum_min, SolverSettings};

pub type CcnrResult = SeesawResult<DensityMatrix>;

/// Random state mixed with just enough white noise to have a positive partial transpose.
pub(crate) fn random_ppt_state<R: Rng + ?Sized>(dims: BipartiteDims, rng: &mut R) -> Result<DensityMatrix> {
    let n = dims.total();
    let rho = random_density(n, rng);
    let mix = |t: f64| &rho * cr(1.0 - t) + identity(n) * cr(t / n as f64);
    let (mut lo, mut hi) = (0.0, 1.0);
    if ppt_spectrum_min(&rho, dims)?.1 >= 1e-12 {
        hi = 0.0;
    } else {
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if ppt_spectrum_min(&mix(mid), dims)?.1 >= 1e-12 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    DensityMatrix::bipartite(mix(hi), dims)
}

/// Alternates the polar-factor step `Y = W V^dagger` with a linear maximization of
/// `Re Tr(R(rho)^dagger Y)` over PPT states. History entries are `|R(rho)|_tr`.
pub fn ccnr_max_ppt(dims: BipartiteDims, config: &SeesawConfig) -> Result<CcnrResult> {
    let settings = SolverSettings::default();
    run_restarts(config, |rng| {
        let mut rho = random_ppt_state(dims, rng)?;
        let (mut w, mut s, mut vt) = svd(&realign(rho.matrix(), dims)?)?;
        let mut history = vec![s.iter().sum::<f64>()];
        let mut converged = false;
        for _ in 0..config.max_iters.max(1) {
            let y = &w * &vt;
            // Re Tr(R(rho)^dagger Y) = Re Tr(rho C) with C the Hermitian part of the unrealigned Y
            let c = Hermitian::from_symmetrized(unrealign(&y, dims)?);
            let (next, _) = linear_over_ppt(&c, dims, &settings)?;
            let (w2, s2, vt2) = svd(&realign(next.matrix(), dims)?)?;
            let value: f64 = s2.iter().sum();
            if value < *history.last().expect("nonempty") {
                converged = true;
                break;
            }
            rho = next;
            (w, s, vt) = (w2, s2, vt2);
            history.push(value);
            if settled(&history, config.tol) {
                converged = true;
                break;
            }
        }
        let value = s.iter().sum();
        Ok(RestartRun { value, argument: rho, history, converged })
    })
}
