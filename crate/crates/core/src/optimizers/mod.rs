//! Alternating maximizers over local Hamiltonians and over states.
//!
//! Every scheme alternates two exactly solvable half-steps, so objective histories are
//! nondecreasing. Restart `i` draws from a generator seeded with `seed ^ i`.

mod ccnr;
mod gain;
mod local;
mod power;
mod purity;
mod state_side;

pub use ccnr::{ccnr_max_ppt, CcnrResult};
pub use gain::{gain_global, GainConfig};
pub(crate) use local::sign_projection;
pub use local::{
    local_objective, seesaw_local, seesaw_qfi_aux, seesaw_qfi_local, seesaw_step_local,
    seesaw_step_local_sdp, seesaw_wy_local, LocalSeesawContext,
};
pub use power::{power_iteration, PowerResult};
pub use purity::{purity_seesaw, PurityResult};
pub use state_side::seesaw_qfi_state;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix, Hermitian, C64};

/// Restart and stopping policy shared by the see-saw drivers.
#[derive(Clone, Debug, PartialEq)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Absolute objective change below which a restart stops.
    pub tol: f64,
    pub seed: u64,
    pub caps: (f64, f64),
}

impl Default for SeesawConfig {
    fn default() -> Self {
        SeesawConfig { restarts: 50, max_iters: 500, tol: 1e-9, seed: 0, caps: (1.0, 1.0) }
    }
}

impl SeesawConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidArgument("restarts must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::OutOfRange { what: "tolerance", value: self.tol });
        }
        if !(self.caps.0 > 0.0 && self.caps.1 > 0.0) {
            return Err(Error::OutOfRange { what: "cap", value: self.caps.0.min(self.caps.1) });
        }
        Ok(())
    }

    pub fn with_caps(&self, caps: (f64, f64)) -> Self {
        SeesawConfig { caps, ..self.clone() }
    }
}

/// Outcome of a multi-restart see-saw.
#[derive(Clone, Debug)]
pub struct SeesawResult<A> {
    pub best_value: f64,
    pub best_argument: A,
    pub best_restart: usize,
    pub restart_values: Vec<f64>,
    pub iterations_per_restart: Vec<usize>,
    pub objective_history: Vec<Vec<f64>>,
    /// Every restart met the tolerance within the iteration limit.
    pub converged: bool,
}

/// Result of one restart.
pub(crate) struct RestartRun<A> {
    pub value: f64,
    pub argument: A,
    pub history: Vec<f64>,
    pub converged: bool,
}

pub(crate) fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ restart as u64)
}

/// Runs restarts in parallel and keeps the best (lowest index on ties).
pub(crate) fn run_restarts<A: Send>(
    config: &SeesawConfig,
    run: impl Fn(&mut ChaCha8Rng) -> Result<RestartRun<A>> + Sync,
) -> Result<SeesawResult<A>> {
    config.validate()?;
    let runs: Vec<RestartRun<A>> = (0..config.restarts)
        .into_par_iter()
        .map(|i| run(&mut restart_rng(config.seed, i)))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = i;
        }
    }
    let restart_values = runs.iter().map(|r| r.value).collect();
    let iterations_per_restart = runs.iter().map(|r| r.history.len()).collect();
    let converged = runs.iter().all(|r| r.converged);
    let mut histories = Vec::with_capacity(runs.len());
    let mut best_arg = None;
    let mut best_value = f64::NEG_INFINITY;
    for (i, r) in runs.into_iter().enumerate() {
        histories.push(r.history);
        if i == best {
            best_value = r.value;
            best_arg = Some(r.argument);
        }
    }
    Ok(SeesawResult {
        best_value,
        best_argument: best_arg.expect("at least one restart"),
        best_restart: best,
        restart_values,
        iterations_per_restart,
        objective_history: histories,
        converged,
    })
}

/// Hermitian matrix with i.i.d. standard normal real and imaginary parts, symmetrized.
pub fn random_hermitian<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Hermitian {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    Hermitian::from_symmetrized(g)
}

/// Complex vector with i.i.d. standard normal components.
pub fn random_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DVector<C64> {
    DVector::from_fn(d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// `G G^dagger / Tr` for a complex Gaussian `G`; full rank with probability one.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    m / crate::linalg::cr(tr)
}

/// Stopping rule shared by the drivers: `|f_k - f_{k-1}| < tol`.
pub(crate) fn settled(history: &[f64], tol: f64) -> bool {
    let n = history.len();
    n >= 2 && (history[n - 1] - history[n - 2]).abs() < tol
}
