//! Metrological gain maximized over Hamiltonians and the ratio of the caps.
//!
//! The QFI is homogeneous of degree two in the Hamiltonian, so only `c2 / c1` matters and
//! the caps are scanned as `(cos theta, sin theta)`.

use std::f64::consts::FRAC_PI_2;

use super::{seesaw_qfi_local, SeesawConfig, SeesawResult};
use crate::error::{Error, Result};
use crate::metrology::{gain_for, DensityMatrix, GainReport, LocalHamiltonian};

#[derive(Clone, Debug, PartialEq)]
pub struct GainConfig {
    /// Interior points of the uniform grid on `(0, pi/2)`.
    pub grid: usize,
    /// Final bracket width of the golden-section refinement.
    pub refine_width: f64,
}

impl Default for GainConfig {
    fn default() -> Self {
        GainConfig { grid: 33, refine_width: 1e-4 }
    }
}

struct Evaluation {
    theta: f64,
    gain: f64,
    qfi: f64,
    run: SeesawResult<LocalHamiltonian>,
}

fn evaluate(rho: &DensityMatrix, config: &SeesawConfig, theta: f64) -> Result<Evaluation> {
    let run = seesaw_qfi_local(rho, &config.with_caps((theta.cos(), theta.sin())))?;
    let gain = match gain_for(rho, &run.best_argument) {
        Ok(g) => g,
        Err(Error::TrivialHamiltonian(_)) => 0.0,
        Err(e) => return Err(e),
    };
    Ok(Evaluation { theta, gain, qfi: run.best_value, run })
}

/// Grid scan over the cap angle followed by golden-section refinement around the best point.
pub fn gain_global(rho: &DensityMatrix, config: &SeesawConfig, gain_config: &GainConfig) -> Result<GainReport> {
    if gain_config.grid < 1 {
        return Err(Error::InvalidArgument("theta grid needs at least one point".into()));
    }
    if !(gain_config.refine_width > 0.0) {
        return Err(Error::OutOfRange { what: "refinement width", value: gain_config.refine_width });
    }
    let h = FRAC_PI_2 / (gain_config.grid + 1) as f64;
    let mut evaluations = Vec::new();
    let mut best: Option<Evaluation> = None;
    let consider = |e: Evaluation, evaluations: &mut Vec<(f64, f64)>, best: &mut Option<Evaluation>| {
        evaluations.push((e.theta, e.gain));
        if best.as_ref().is_none_or(|b| e.gain > b.gain) {
            *best = Some(e);
        }
    };
    for i in 1..=gain_config.grid {
        let e = evaluate(rho, config, i as f64 * h)?;
        consider(e, &mut evaluations, &mut best);
    }
    let center = best.as_ref().expect("grid is nonempty").theta;
    let (mut a, mut b) = ((center - h).max(0.5 * h * 1e-3), (center + h).min(FRAC_PI_2 - 0.5 * h * 1e-3));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = {
        let e = evaluate(rho, config, x1)?;
        let g = e.gain;
        consider(e, &mut evaluations, &mut best);
        g
    };
    let mut f2 = {
        let e = evaluate(rho, config, x2)?;
        let g = e.gain;
        consider(e, &mut evaluations, &mut best);
        g
    };
    while b - a > gain_config.refine_width {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            let e = evaluate(rho, config, x1)?;
            f1 = e.gain;
            consider(e, &mut evaluations, &mut best);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            let e = evaluate(rho, config, x2)?;
            f2 = e.gain;
            consider(e, &mut evaluations, &mut best);
        }
    }
    let best = best.expect("evaluated");
    let ham = best.run.best_argument;
    let sep_bound = crate::metrology::fq_sep(&ham)?;
    Ok(GainReport {
        value: best.gain,
        qfi: best.qfi,
        sep_bound,
        optimal_hamiltonian: ham,
        theta: best.theta,
        restarts: config.restarts,
        iterations: best.run.iterations_per_restart,
        restart_values: best.run.restart_values,
        theta_evaluations: evaluations,
    })
}
