//! Subcommand implementations.

use std::path::Path;

use qfiopt::linalg::{realign, trace_norm};
use qfiopt::metrology::{
    delta_seminorm, error_propagation_variance, fq_sep, gain_for, qfi as qfi_value, sld,
};
use qfiopt::optimizers::{
    ccnr_max_ppt, gain_global, seesaw_qfi_local, seesaw_wy_local, GainConfig, SeesawResult,
};
use qfiopt::sdp::{shor_level1, ConstraintMode, RelaxationConfig, SolveStatus, SolverSettings, TracePinning};
use qfiopt::states::{coherence_vector, ppt_min_eigenvalue, special_separable_membership, state_to_json, Membership};
use qfiopt::{BipartiteDims, DensityMatrix, Error, Hermitian, LocalHamiltonian};
use serde_json::{json, Value};

use crate::report::{
    hamiltonian_json, load_source, matrix_from_json, matrix_json, state_json, CliError, CliResult, LoadedState,
    Outcome, Status,
};
use crate::{CcnrArgs, GainArgs, GenArgs, InfoArgs, ModeArg, QfiArgs, RelaxArgs, StateName, StateSource, WyArgs};

/// Entries of the coherence vector below this magnitude count as zero.
const SPARSITY_TOL: f64 = 1e-10;
/// Smallest partial-transpose eigenvalue still counted as PPT.
const PPT_TOL: f64 = -1e-10;

type Run = (String, Value, CliResult<Outcome>);

fn source_echo(source: &StateSource) -> Value {
    match (&source.builtin, &source.state) {
        (Some(b), _) => json!({ "kind": "builtin", "descriptor": b }),
        (None, Some(p)) => json!({ "kind": "file", "path": p.display().to_string() }),
        (None, None) => Value::Null,
    }
}

pub fn with_source(name: &str, source: &StateSource, f: impl FnOnce(&DensityMatrix) -> CliResult<Outcome>) -> Run {
    match load_source(source.builtin.as_deref(), source.state.as_ref()) {
        Ok(LoadedState { rho, input }) => (name.to_string(), input, f(&rho)),
        Err(e) => (name.to_string(), source_echo(source), Err(e)),
    }
}

fn hermitian(v: &Value, what: &str) -> CliResult<Hermitian> {
    Hermitian::new(matrix_from_json(v, what)?).map_err(|e| CliError::Input(format!("{what}: {e}")))
}

/// The operator on the full space and, when given as local terms, the pair itself.
fn read_hamiltonian(path: &Path, rho: &DensityMatrix) -> CliResult<(Hermitian, Option<LocalHamiltonian>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let mismatch = |n: usize| {
        CliError::Input(Error::DimensionMismatch(format!("Hamiltonian is {n}x{n} but the state has dimension {}", rho.dim())).to_string())
    };
    if let Some(m) = v.get("matrix") {
        let h = hermitian(m, "matrix")?;
        if h.dim() != rho.dim() {
            return Err(mismatch(h.dim()));
        }
        return Ok((h, None));
    }
    let (Some(a), Some(b)) = (v.get("h1"), v.get("h2")) else {
        return Err(CliError::Input(format!("{}: expected a `matrix` field or `h1` and `h2` fields", path.display())));
    };
    let (h1, h2) = (hermitian(a, "h1")?, hermitian(b, "h2")?);
    let dims = rho.require_dims()?;
    if (h1.dim(), h2.dim()) != (dims.d1, dims.d2) {
        return Err(CliError::Input(
            Error::DimensionMismatch(format!(
                "local terms are {}x{} and {}x{} but the state is {} x {}",
                h1.dim(),
                h1.dim(),
                h2.dim(),
                h2.dim(),
                dims.d1,
                dims.d2
            ))
            .to_string(),
        ));
    }
    let caps = (delta_seminorm(&h1)? / 2.0, delta_seminorm(&h2)? / 2.0);
    let local = LocalHamiltonian { h1, h2, caps };
    Ok((Hermitian::from_symmetrized(local.assembled()), Some(local)))
}

pub fn qfi(rho: &DensityMatrix, args: &QfiArgs) -> CliResult<Outcome> {
    let (h, local) = read_hamiltonian(&args.hamiltonian, rho)?;
    let f = qfi_value(rho, h.matrix())?;
    let four_variance = 4.0 * rho.variance(h.matrix());
    let delta = delta_seminorm(&h)?;
    let l = sld(rho, h.matrix())?;
    let saturation = match error_propagation_variance(rho, l.matrix(), h.matrix()) {
        Ok(v) => json!({ "error_propagation": v, "inverse_qfi": 1.0 / f, "saturated": ((v * f) - 1.0).abs() <= 1e-8 }),
        Err(Error::UninformativeMeasurement(_)) => Value::Null,
        Err(e) => return Err(e.into()),
    };
    let separable = match &local {
        Some(ham) => json!(fq_sep(ham)?),
        None => Value::Null,
    };
    let config = json!({ "hamiltonian_file": args.hamiltonian.display().to_string(), "local": local.is_some() });
    let results = json!({
        "qfi": f,
        "four_variance": four_variance,
        "delta_squared": delta * delta,
        "separable_bound": separable,
        "sld": matrix_json(l.matrix()),
        "sld_saturation": saturation,
    });
    let summary = format!("qfi = {f:.6}, 4 var = {four_variance:.6}, delta^2 = {:.6}", delta * delta);
    Ok(Outcome::new(config, results, summary))
}

fn restart_data<A>(run: &SeesawResult<A>) -> Value {
    json!({
        "best_restart": run.best_restart,
        "restart_values": run.restart_values,
        "iterations": run.iterations_per_restart,
        "converged": run.converged,
    })
}

fn flag_convergence(outcome: &mut Outcome, converged: bool) {
    if !converged {
        outcome.status = Status::NotConverged;
        outcome.warnings.push("not every restart met the tolerance within the iteration limit".into());
    }
}

pub fn gain(rho: &DensityMatrix, args: &GainArgs) -> CliResult<Outcome> {
    let caps = (args.c1, args.c2);
    let seesaw = args.seesaw.config(caps);
    if args.scan_theta {
        let gc = GainConfig { grid: args.grid, refine_width: args.refine_width };
        let r = gain_global(rho, &seesaw, &gc)?;
        let config = json!({
            "seesaw": args.seesaw.echo(),
            "scan_theta": true,
            "grid": gc.grid,
            "refine_width": gc.refine_width,
        });
        let theta_evaluations: Vec<Value> = r.theta_evaluations.iter().map(|(t, g)| json!([t, g])).collect();
        let results = json!({
            "qfi": r.qfi,
            "gain": r.value,
            "sep_bound": r.sep_bound,
            "theta": r.theta,
            "caps": [r.theta.cos(), r.theta.sin()],
            "hamiltonian": hamiltonian_json(&r.optimal_hamiltonian),
            "restarts": r.restarts,
            "restart_values": r.restart_values,
            "iterations": r.iterations,
            "theta_evaluations": theta_evaluations,
        });
        let summary = format!("gain = {:.6} at theta = {:.6} (qfi {:.6})", r.value, r.theta, r.qfi);
        return Ok(Outcome::new(config, results, summary));
    }
    seesaw.validate()?;
    let run = seesaw_qfi_local(rho, &seesaw)?;
    let ham = &run.best_argument;
    let sep = fq_sep(ham)?;
    let g = gain_for(rho, ham)?;
    let config = json!({ "seesaw": args.seesaw.echo(), "caps": [caps.0, caps.1], "scan_theta": false });
    let results = json!({
        "qfi": run.best_value,
        "gain": g,
        "sep_bound": sep,
        "hamiltonian": hamiltonian_json(ham),
        "restarts": restart_data(&run),
    });
    let summary = format!("qfi = {:.6}, gain = {g:.6}", run.best_value);
    let mut outcome = Outcome::new(config, results, summary);
    flag_convergence(&mut outcome, run.converged);
    Ok(outcome)
}

pub fn wy(rho: &DensityMatrix, args: &WyArgs) -> CliResult<Outcome> {
    let caps = (args.c1, args.c2);
    let seesaw = args.seesaw.config(caps);
    seesaw.validate()?;
    let run = seesaw_wy_local(rho, &seesaw)?;
    let config = json!({ "seesaw": args.seesaw.echo(), "caps": [caps.0, caps.1] });
    let results = json!({
        "four_wy": run.best_value,
        "hamiltonian": hamiltonian_json(&run.best_argument),
        "restarts": restart_data(&run),
    });
    let summary = format!("4 I_wy = {:.6}", run.best_value);
    let mut outcome = Outcome::new(config, results, summary);
    flag_convergence(&mut outcome, run.converged);
    Ok(outcome)
}

fn parse_pair<T: std::str::FromStr>(s: &str, what: &str) -> CliResult<(T, T)> {
    let bad = || CliError::Input(format!("{what}: expected two comma-separated numbers, got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

pub fn relax(rho: &DensityMatrix, args: &RelaxArgs) -> CliResult<Outcome> {
    let caps: (f64, f64) = parse_pair(&args.caps, "--caps")?;
    if !(caps.0 > 0.0 && caps.1 > 0.0) {
        return Err(CliError::Input(format!("--caps must be positive, got {},{}", caps.0, caps.1)));
    }
    let pinning = match args.trace_pinning.as_str() {
        "off" => TracePinning::Off,
        "scan" => TracePinning::Scan,
        s => {
            let (m1, m2) = parse_pair(s, "--trace-pinning")?;
            TracePinning::Fixed(m1, m2)
        }
    };
    let mode = match args.mode {
        ModeArg::Eig => ConstraintMode::Eig,
        ModeArg::Sum => ConstraintMode::Sum,
        ModeArg::Trace => ConstraintMode::Trace,
    };
    let config = RelaxationConfig {
        caps,
        mode,
        pinning,
        settings: SolverSettings { tol: args.solver_tol, ..SolverSettings::default() },
        ..RelaxationConfig::default()
    };
    let echo = json!({
        "caps": [caps.0, caps.1],
        "trace_pinning": args.trace_pinning,
        "mode": mode.name(),
        "solver_tol": args.solver_tol,
    });
    let r = match shor_level1(rho, &config) {
        Ok(r) => r,
        Err(Error::Solver(status @ (SolveStatus::Infeasible | SolveStatus::Unbounded))) => {
            let results = json!({ "solver_status": status.to_string(), "upper_bound": Value::Null });
            let mut outcome = Outcome::new(echo, results, format!("relaxation {status}"));
            outcome.status = Status::Infeasible;
            return Ok(outcome);
        }
        Err(e) => return Err(e.into()),
    };
    let extracted = r.extracted.as_ref().map(|e| json!({ "value": e.value, "hamiltonian": hamiltonian_json(&e.hamiltonian) }));
    let scan: Vec<Value> = r.scan.iter().map(|((m1, m2), b)| json!({ "pinning": [m1, m2], "bound": b })).collect();
    let results = json!({
        "upper_bound": r.upper_bound,
        "solver_status": r.status.to_string(),
        "tight": r.tight,
        "rank_one": r.rank_one,
        "eigen_ratio": r.eigen_ratio,
        "extracted": extracted,
        "pinning": r.pinning.map(|(a, b)| json!([a, b])),
        "scan": scan,
        "solver_iterations": r.solver_iterations,
    });
    let summary = format!("level-1 bound = {:.6} ({}, tight {})", r.upper_bound, r.status, r.tight);
    let mut outcome = Outcome::new(echo, results, summary);
    if r.status == SolveStatus::NumericalLimit {
        outcome.warnings.push("solver stopped at its numerical limit; the bound is approximate".into());
    }
    Ok(outcome)
}

fn ppt_value(rho: &DensityMatrix) -> CliResult<Value> {
    let min = ppt_min_eigenvalue(rho)?;
    Ok(json!({ "min_eigenvalue": min, "ppt": min >= PPT_TOL }))
}

pub fn ccnr(args: &CcnrArgs) -> Run {
    match (args.d1, args.d2) {
        (Some(d1), Some(d2)) => {
            if args.source.builtin.is_some() || args.source.state.is_some() {
                let err = CliError::Input("give either --d1/--d2 or a state, not both".into());
                return ("ccnr".into(), source_echo(&args.source), Err(err));
            }
            let input = json!({ "kind": "dims", "dims": [d1, d2] });
            ("ccnr".into(), input, ccnr_optimize(d1, d2, args))
        }
        _ => with_source("ccnr", &args.source, ccnr_evaluate),
    }
}

fn ccnr_optimize(d1: usize, d2: usize, args: &CcnrArgs) -> CliResult<Outcome> {
    let dims = BipartiteDims::new(d1, d2)?;
    let seesaw = args.seesaw.config((1.0, 1.0));
    seesaw.validate()?;
    let run = ccnr_max_ppt(dims, &seesaw)?;
    let rho = &run.best_argument;
    let results = json!({
        "trace_norm": run.best_value,
        "state": state_json(rho),
        "ppt": ppt_value(rho)?,
        "restarts": restart_data(&run),
    });
    let summary = format!("max realigned trace norm over PPT states = {:.6}", run.best_value);
    let mut outcome = Outcome::new(json!({ "seesaw": args.seesaw.echo() }), results, summary);
    flag_convergence(&mut outcome, run.converged);
    Ok(outcome)
}

fn ccnr_evaluate(rho: &DensityMatrix) -> CliResult<Outcome> {
    let dims = rho.require_dims()?;
    let tn = trace_norm(&realign(rho.matrix(), dims)?)?;
    let ppt = ppt_value(rho)?;
    let entangled = ppt["ppt"] == json!(true) && tn > 1.0 + 1e-9;
    let results = json!({ "trace_norm": tn, "ppt": ppt, "ccnr_violated": tn > 1.0 + 1e-9, "bound_entangled": entangled });
    Ok(Outcome::new(json!({}), results, format!("realigned trace norm = {tn:.9}")))
}

fn descriptor(args: &GenArgs) -> CliResult<String> {
    let need = |v: Option<String>, flag: &str| v.ok_or_else(|| CliError::Input(format!("this state needs {flag}")));
    let p = need(args.p.map(|x| x.to_string()), "--p");
    let d = need(args.d.map(|x| x.to_string()), "--d");
    Ok(match args.name {
        StateName::Isotropic => format!("isotropic:{}:{}", p?, d?),
        StateName::TwoCopyIsotropic => format!("two-copy-isotropic:{}:{}", p?, d?),
        StateName::Horodecki => format!("horodecki:{}", need(args.a.map(|x| x.to_string()), "--a")?),
        StateName::UpbTiles => "upb-tiles".into(),
        StateName::CcnrBes4x4 => "ccnr-bes-4x4".into(),
        StateName::MaximallyMixed => format!(
            "maximally-mixed:{}:{}",
            need(args.d1.map(|x| x.to_string()), "--d1")?,
            need(args.d2.map(|x| x.to_string()), "--d2")?
        ),
    })
}

pub fn state_gen(args: &GenArgs) -> Run {
    let spec = match descriptor(args) {
        Ok(s) => s,
        Err(e) => return ("state gen".into(), Value::Null, Err(e)),
    };
    let input = json!({ "kind": "builtin", "descriptor": spec });
    let result = (|| {
        let rho = qfiopt::states::builtin(&spec)?;
        let output = match &args.output {
            Some(path) => {
                let text = state_to_json(&rho, Some(&spec))?;
                std::fs::write(path, &text)
                    .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
                json!({ "path": path.display().to_string(), "sha256": crate::report::sha256_hex(text.as_bytes()) })
            }
            None => Value::Null,
        };
        let state = if args.output.is_some() { Value::Null } else { state_json(&rho) };
        let results = json!({ "descriptor": spec, "output": output, "state": state });
        let summary = match &args.output {
            Some(p) => format!("wrote {spec} to {}", p.display()),
            None => format!("generated {spec}"),
        };
        Ok(Outcome::new(json!({}), results, summary))
    })();
    ("state gen".into(), input, result)
}

fn info_source(args: &InfoArgs) -> StateSource {
    StateSource { builtin: args.builtin.clone(), state: args.file.clone() }
}

pub fn state_info(args: &InfoArgs) -> Run {
    with_source("state info", &info_source(args), |rho| {
        let dims = rho.require_dims()?;
        let cv = coherence_vector(rho)?;
        let local_nonzero = cv.local1.iter().chain(&cv.local2).filter(|x| x.abs() > SPARSITY_TOL).count();
        let corr_nonzero = cv.corr.iter().filter(|x| x.abs() > SPARSITY_TOL).count();
        let spectrum: Vec<f64> = rho.eigenvalues().to_vec();
        let results = json!({
            "dims": [dims.d1, dims.d2],
            "spectrum": spectrum,
            "purity": rho.purity(),
            "rank": rho.rank(),
            "ppt": ppt_value(rho)?,
            "realigned_trace_norm": trace_norm(&realign(rho.matrix(), dims)?)?,
            "coherence": {
                "nonzero": cv.nonzero_count(SPARSITY_TOL),
                "local_nonzero": local_nonzero,
                "correlation_nonzero": corr_nonzero,
                "length": cv.local1.len() + cv.local2.len() + cv.corr.len(),
                "correlation_max": cv.corr_max(),
            },
        });
        let summary = format!("dimension {} x {}, purity {:.6}, rank {}", dims.d1, dims.d2, rho.purity(), rho.rank());
        Ok(Outcome::new(json!({ "sparsity_tol": SPARSITY_TOL }), results, summary))
    })
}

pub fn check_special_separable(args: &InfoArgs) -> Run {
    with_source("state check-special-separable", &info_source(args), |rho| {
        let results = match special_separable_membership(rho)? {
            Membership::Member(dec) => json!({
                "member": true,
                "p_interval": [dec.p_bounds.0, dec.p_bounds.1],
                "p": dec.p,
                "residual": dec.residual,
                "rho1": matrix_json(dec.rho1.matrix()),
                "rho2": matrix_json(dec.rho2.matrix()),
            }),
            Membership::NotMember { p_bounds, residual } => json!({
                "member": false,
                "p_interval": [p_bounds.0, p_bounds.1],
                "p": Value::Null,
                "residual": residual,
            }),
        };
        let summary = format!("special separable: {} (p interval {})", results["member"], results["p_interval"]);
        Ok(Outcome::new(json!({}), results, summary))
    })
}
