//! Level-1 moment (Shor) relaxation of the QFI maximization over local Hamiltonians.
//!
//! The pair `(H1, H2)` is parameterized by real coordinates `v` in the basis of
//! [`hermitian_basis`] for each subsystem. The objective is the quadratic form `v^T R v`
//! and the relaxation replaces `v v^T` by the block `V` of the moment matrix
//! `M = [[1, v^T], [v, V]] >= 0`.

use std::collections::BTreeMap;

use nalgebra::DVector;

use super::embed::{hermitian_basis, sparse_to_dense, SparseHermitian};
use super::program::{Cone, ConicProgram, Sense, SolveStatus};
use super::solver::{solve, ConicSolution, SolverSettings};
use crate::error::{Error, Result};
use crate::linalg::{cr, symmetric_eig, BipartiteDims, CMatrix, Hermitian, RMatrix, C64};
use crate::metrology::{weight_matrix, weighted_inner, DensityMatrix, LocalHamiltonian, Objective};
use crate::optimizers::{sign_projection, LocalSeesawContext};

/// Which constraint set on `(H1, H2)` is relaxed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintMode {
    /// `H_n^2 = c_n^2 1` entrywise.
    Eig,
    /// `H1^2 (x) 1 + 1 (x) H2^2 <= 1`; caps are ignored.
    Sum,
    /// `Tr(H1^2) / d1 + Tr(H2^2) / d2 <= 1`; caps are ignored.
    Trace,
}

impl ConstraintMode {
    pub fn name(&self) -> &'static str {
        match self {
            ConstraintMode::Eig => "eig",
            ConstraintMode::Sum => "sum",
            ConstraintMode::Trace => "trace",
        }
    }
}

/// Optional constraint `Tr(H_n) = m_n c_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TracePinning {
    Off,
    Fixed(i32, i32),
    /// Every `m_n` in `-d_n..=d_n` with the parity of `d_n`; the maximum is reported.
    Scan,
}

#[derive(Clone, Debug)]
pub struct RelaxationConfig {
    pub caps: (f64, f64),
    pub objective: Objective,
    pub mode: ConstraintMode,
    pub pinning: TracePinning,
    pub settings: SolverSettings,
    /// See-saw steps applied to the rounded extraction.
    pub polish_iters: usize,
}

impl Default for RelaxationConfig {
    fn default() -> Self {
        RelaxationConfig {
            caps: (1.0, 1.0),
            objective: Objective::Qfi,
            mode: ConstraintMode::Eig,
            pinning: TracePinning::Off,
            settings: SolverSettings::default(),
            polish_iters: 500,
        }
    }
}

/// Relative size of the second moment-matrix eigenvalue below which it counts as rank one.
pub const RANK_ONE_TOL: f64 = 1e-6;
/// Agreement between bound and extracted value required to call the relaxation tight.
pub const TIGHT_TOL: f64 = 1e-6;

/// Product coefficients: `(H^2)_pq = sum over (a <= b) coef * V_ab`.
type SquarePoly = Vec<Vec<Vec<(usize, usize, C64)>>>;

fn square_polynomials(basis: &[SparseHermitian], d: usize) -> SquarePoly {
    let mut acc: Vec<Vec<BTreeMap<(usize, usize), C64>>> = vec![vec![BTreeMap::new(); d]; d];
    let mut add_product = |x: &SparseHermitian, y: &SparseHermitian, key: (usize, usize)| {
        for &(i, j, z) in x {
            for &(j2, k, w) in y {
                if j == j2 {
                    *acc[i][k].entry(key).or_insert(C64::new(0.0, 0.0)) += z * w;
                }
            }
        }
    };
    for a in 0..basis.len() {
        for b in a..basis.len() {
            add_product(&basis[a], &basis[b], (a, b));
            if a != b {
                add_product(&basis[b], &basis[a], (a, b));
            }
        }
    }
    acc.into_iter()
        .map(|row| {
            row.into_iter()
                .map(|m| m.into_iter().filter(|(_, z)| z.norm() > 1e-14).map(|((a, b), z)| (a, b, z)).collect())
                .collect()
        })
        .collect()
}

/// The level-1 relaxation for one constraint mode and optional fixed trace pinning.
#[derive(Clone, Debug)]
pub struct MomentRelaxation {
    pub dims: BipartiteDims,
    pub mode: ConstraintMode,
    pub caps: (f64, f64),
    pub pinning: Option<(i32, i32)>,
    /// Quadratic form of the objective in the real parameters.
    pub r: RMatrix,
    pub program: ConicProgram,
    pub moment_block: usize,
    aux_block: Option<usize>,
    bases: [Vec<SparseHermitian>; 2],
}

impl MomentRelaxation {
    pub fn build(
        rho: &DensityMatrix,
        caps: (f64, f64),
        mode: ConstraintMode,
        objective: Objective,
        pinning: Option<(i32, i32)>,
    ) -> Result<Self> {
        let dims = rho.require_dims()?;
        if !(caps.0 > 0.0 && caps.1 > 0.0) {
            return Err(Error::OutOfRange { what: "cap", value: caps.0.min(caps.1) });
        }
        if pinning.is_some() && mode != ConstraintMode::Eig {
            return Err(Error::InvalidArgument("trace pinning requires the eig constraint mode".into()));
        }
        let bases = [hermitian_basis(dims.d1), hermitian_basis(dims.d2)];
        let (n1, n2) = (bases[0].len(), bases[1].len());
        let n = n1 + n2;

        // lifted basis operators in the eigenbasis of rho
        let lifted: Vec<CMatrix> = (0..n)
            .map(|a| {
                let h = if a < n1 {
                    LocalHamiltonian::lift(&sparse_to_dense(&bases[0][a], dims.d1), dims.d2, true)
                } else {
                    LocalHamiltonian::lift(&sparse_to_dense(&bases[1][a - n1], dims.d2), dims.d1, false)
                };
                rho.to_eigenbasis(&h)
            })
            .collect();
        let w = weight_matrix(rho, objective);
        let mut r = RMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let x = weighted_inner(&w, &lifted[a], &lifted[b]);
                r[(a, b)] = x;
                r[(b, a)] = x;
            }
        }

        let mut program = ConicProgram::new(Sense::Maximize);
        let mb = program.add_block(Cone::Psd(n + 1));
        for a in 0..n {
            for b in a..n {
                let coef = if a == b { r[(a, a)] } else { 2.0 * r[(a, b)] };
                if coef.abs() > 1e-14 {
                    program.add_objective(program.var(mb, 1 + a, 1 + b), coef);
                }
            }
        }
        program.add_constraint(vec![(program.var(mb, 0, 0), 1.0)], 1.0);

        let polys = [square_polynomials(&bases[0], dims.d1), square_polynomials(&bases[1], dims.d2)];
        let offsets = [1, 1 + n1];
        let local_dims = [dims.d1, dims.d2];
        let mut aux_block = None;
        match mode {
            ConstraintMode::Eig => {
                for s in 0..2 {
                    let cap = if s == 0 { caps.0 } else { caps.1 };
                    let o = offsets[s];
                    let d = local_dims[s];
                    for p in 0..d {
                        for q in p..d {
                            let poly = &polys[s][p][q];
                            let re = poly.iter().map(|&(a, b, z)| (program.var(mb, o + a, o + b), z.re)).collect();
                            program.add_constraint(re, if p == q { cap * cap } else { 0.0 });
                            if p < q {
                                let im = poly.iter().map(|&(a, b, z)| (program.var(mb, o + a, o + b), z.im)).collect();
                                program.add_constraint(im, 0.0);
                            }
                        }
                    }
                }
                if let Some((m1, m2)) = pinning {
                    for (s, m) in [(0usize, m1), (1usize, m2)] {
                        let cap = if s == 0 { caps.0 } else { caps.1 };
                        let d = local_dims[s];
                        if m.unsigned_abs() as usize > d {
                            return Err(Error::OutOfRange { what: "trace pinning", value: m as f64 });
                        }
                        let o = offsets[s];
                        let target = m as f64 * cap;
                        let diag: Vec<usize> = (0..d).map(|a| o + a).collect();
                        // Tr(H) v_j = m c v_j for every moment row j, including j = 0
                        for j in 0..=n {
                            let mut terms: Vec<(usize, f64)> = diag.iter().map(|&k| (program.var(mb, j, k), 1.0)).collect();
                            if j == 0 {
                                program.add_constraint(terms, target);
                            } else {
                                terms.push((program.var(mb, 0, j), -target));
                                program.add_constraint(terms, 0.0);
                            }
                        }
                    }
                }
            }
            ConstraintMode::Sum => {
                let big = dims.total();
                let zb = program.add_block(Cone::Psd(2 * big));
                aux_block = Some(zb);
                // L = H1^2 (x) 1 + 1 (x) H2^2 entrywise as linear forms in V
                let entry = |ii: usize, jj: usize| -> Vec<(usize, C64)> {
                    let (i, j) = (ii / dims.d2, ii % dims.d2);
                    let (k, l) = (jj / dims.d2, jj % dims.d2);
                    let mut out = Vec::new();
                    if j == l {
                        out.extend(polys[0][i][k].iter().map(|&(a, b, z)| (program.var(mb, 1 + a, 1 + b), z)));
                    }
                    if i == k {
                        out.extend(
                            polys[1][j][l].iter().map(|&(a, b, z)| (program.var(mb, 1 + n1 + a, 1 + n1 + b), z)),
                        );
                    }
                    out
                };
                // Z = embed(1 - L)
                let mut pending = Vec::new();
                for r in 0..2 * big {
                    for c in r..2 * big {
                        let (i, j) = (r % big, c % big);
                        let terms = entry(i, j);
                        let part = |z: C64| match (r < big, c < big) {
                            (true, true) | (false, false) => z.re,
                            (true, false) => -z.im,
                            (false, true) => z.im,
                        };
                        let mut lin: Vec<(usize, f64)> = terms.iter().map(|&(v, z)| (v, part(z))).collect();
                        lin.push((program.var(zb, r, c), 1.0));
                        pending.push((lin, if r == c { 1.0 } else { 0.0 }));
                    }
                }
                for (lin, rhs) in pending {
                    program.add_constraint(lin, rhs);
                }
            }
            ConstraintMode::Trace => {
                let sb = program.add_block(Cone::NonNeg(1));
                aux_block = Some(sb);
                let mut terms = vec![(program.var(sb, 0, 0), 1.0)];
                for s in 0..2 {
                    let d = local_dims[s];
                    for (a, g) in bases[s].iter().enumerate() {
                        let norm = if a < d { 1.0 } else { 2.0 };
                        debug_assert_eq!(g.len(), if a < d { 1 } else { 2 });
                        terms.push((program.var(mb, offsets[s] + a, offsets[s] + a), norm / d as f64));
                    }
                }
                program.add_constraint(terms, 1.0);
            }
        }
        program.validate()?;
        Ok(MomentRelaxation { dims, mode, caps, pinning, r, program, moment_block: mb, aux_block, bases })
    }

    /// Side of the moment matrix, `1 + d1^2 + d2^2`.
    pub fn size(&self) -> usize {
        1 + self.bases[0].len() + self.bases[1].len()
    }

    /// Real coordinates of a Hamiltonian pair in the documented order.
    pub fn params_of(&self, ham: &LocalHamiltonian) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.size() - 1);
        for h in [&ham.h1, &ham.h2] {
            let d = h.dim();
            v.extend((0..d).map(|p| h[(p, p)].re));
            for p in 0..d {
                for q in p + 1..d {
                    v.push(h[(p, q)].re);
                }
            }
            for p in 0..d {
                for q in p + 1..d {
                    v.push(h[(p, q)].im);
                }
            }
        }
        DVector::from_vec(v)
    }

    /// Hamiltonian pair with coordinates `v` (caps copied from the relaxation).
    pub fn hamiltonian_of(&self, v: &[f64]) -> Result<LocalHamiltonian> {
        let n1 = self.bases[0].len();
        let build = |basis: &[SparseHermitian], coords: &[f64], d: usize| {
            let mut h = CMatrix::zeros(d, d);
            for (g, &x) in basis.iter().zip(coords) {
                h += sparse_to_dense(g, d) * cr(x);
            }
            Hermitian::from_symmetrized(h)
        };
        let h1 = build(&self.bases[0], &v[..n1], self.dims.d1);
        let h2 = build(&self.bases[1], &v[n1..], self.dims.d2);
        LocalHamiltonian::new(h1, h2, self.caps)
    }

    /// `v^T R v`, the relaxed objective at a rank-one point.
    pub fn quadratic_value(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.r * v))
    }

    /// Program coordinates of the rank-one point `M = (1, v)(1, v)^T`.
    pub fn lift_point(&self, v: &DVector<f64>) -> Vec<f64> {
        let mut x = vec![0.0; self.program.num_vars()];
        let mut u = vec![1.0];
        u.extend(v.iter());
        for r in 0..u.len() {
            for c in r..u.len() {
                x[self.program.var(self.moment_block, r, c)] = u[r] * u[c];
            }
        }
        match (self.mode, self.aux_block) {
            (ConstraintMode::Sum, Some(zb)) => {
                let ham = self.hamiltonian_of(v.as_slice()).expect("caps validated");
                let sq = |h: &Hermitian| h.matrix() * h.matrix();
                let l = crate::linalg::local_sum(&sq(&ham.h1), &sq(&ham.h2));
                let z = super::embed::embed(&(crate::linalg::identity(l.nrows()) - l));
                for r in 0..z.nrows() {
                    for c in r..z.ncols() {
                        x[self.program.var(zb, r, c)] = z[(r, c)];
                    }
                }
            }
            (ConstraintMode::Trace, Some(sb)) => {
                let ham = self.hamiltonian_of(v.as_slice()).expect("caps validated");
                let t = |h: &Hermitian| (h.matrix() * h.matrix()).trace().re / h.dim() as f64;
                x[self.program.var(sb, 0, 0)] = 1.0 - t(&ham.h1) - t(&ham.h2);
            }
            _ => {}
        }
        x
    }

    /// Largest absolute equality-constraint violation at `x`.
    pub fn constraint_residual(&self, x: &[f64]) -> f64 {
        self.program
            .constraints()
            .iter()
            .zip(self.program.rhs())
            .map(|(row, b)| (row.iter().map(|&(j, a)| a * x[j]).sum::<f64>() - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn solve(&self, settings: &SolverSettings) -> Result<ConicSolution> {
        solve(&self.program, settings)
    }

    pub fn moment_matrix(&self, sol: &ConicSolution) -> RMatrix {
        sol.block_matrix(&self.program, self.moment_block)
    }
}

/// Hamiltonian recovered from a moment matrix, rounded to the caps and polished.
#[derive(Clone, Debug)]
pub struct Extraction {
    pub hamiltonian: LocalHamiltonian,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct RelaxationResult {
    pub upper_bound: f64,
    pub status: SolveStatus,
    pub mode: ConstraintMode,
    /// Second over first eigenvalue of the moment matrix.
    pub eigen_ratio: f64,
    pub rank_one: bool,
    /// The extracted Hamiltonian attains the bound, certifying global optimality.
    pub tight: bool,
    pub extracted: Option<Extraction>,
    pub pinning: Option<(i32, i32)>,
    /// Bound for each solved trace pinning.
    pub scan: Vec<((i32, i32), f64)>,
    pub solver_iterations: usize,
    pub moment_matrix: RMatrix,
}

fn parity_range(d: usize) -> Vec<i32> {
    let d = d as i32;
    (-d..=d).filter(|m| (d - m) % 2 == 0).collect()
}

/// Level-1 bound on the maximum of the objective over local Hamiltonians.
pub fn shor_level1(rho: &DensityMatrix, config: &RelaxationConfig) -> Result<RelaxationResult> {
    let dims = rho.require_dims()?;
    let pins: Vec<Option<(i32, i32)>> = match config.pinning {
        TracePinning::Off => vec![None],
        TracePinning::Fixed(m1, m2) => vec![Some((m1, m2))],
        TracePinning::Scan => {
            let mut v = Vec::new();
            for m1 in parity_range(dims.d1) {
                for m2 in parity_range(dims.d2) {
                    v.push(Some((m1, m2)));
                }
            }
            v
        }
    };
    let scanning = pins.len() > 1;
    let mut best: Option<(MomentRelaxation, ConicSolution, f64)> = None;
    let mut scan = Vec::new();
    let mut last_status = SolveStatus::Optimal;
    for pin in pins {
        let relax = MomentRelaxation::build(rho, config.caps, config.mode, config.objective, pin)?;
        let sol = relax.solve(&config.settings)?;
        // A stalled solve still carries a usable iterate; the status is passed on to the caller.
        if matches!(sol.status, SolveStatus::Infeasible | SolveStatus::Unbounded) {
            if scanning {
                last_status = sol.status;
                continue;
            }
            return Err(Error::Solver(sol.status));
        }
        let bound = sol.primal_objective.max(sol.dual_objective);
        if let Some(p) = pin {
            scan.push((p, bound));
        }
        if best.as_ref().is_none_or(|b| bound > b.2) {
            best = Some((relax, sol, bound));
        }
    }
    let (relax, sol, bound) = best.ok_or(Error::Solver(last_status))?;
    let m = relax.moment_matrix(&sol);
    let (ev, vecs) = symmetric_eig(&m)?;
    let l1 = ev[0].max(f64::MIN_POSITIVE);
    let eigen_ratio = ev.get(1).copied().unwrap_or(0.0).max(0.0) / l1;
    let rank_one = eigen_ratio <= RANK_ONE_TOL;

    let extracted = if config.mode == ConstraintMode::Eig {
        extract(rho, &relax, &m, &vecs, config)?
    } else {
        None
    };
    let tight = extracted
        .as_ref()
        .is_some_and(|e| (bound - e.value).abs() <= TIGHT_TOL * bound.abs().max(1.0));
    Ok(RelaxationResult {
        upper_bound: bound,
        status: sol.status,
        mode: config.mode,
        eigen_ratio,
        rank_one,
        tight,
        extracted,
        pinning: relax.pinning,
        scan,
        solver_iterations: sol.iterations,
        moment_matrix: m,
    })
}

/// Rounds candidate parameter vectors to the caps and polishes them with see-saw steps.
fn extract(
    rho: &DensityMatrix,
    relax: &MomentRelaxation,
    m: &RMatrix,
    vecs: &RMatrix,
    config: &RelaxationConfig,
) -> Result<Option<Extraction>> {
    let n = relax.size() - 1;
    // Under a fixed pinning the bound only covers Hamiltonians with those traces.
    let pinned = |ham: &LocalHamiltonian| match config.pinning {
        TracePinning::Fixed(m1, m2) => {
            let ok = |h: &Hermitian, m: i32, c: f64| (h.trace() - m as f64 * c).abs() <= 1e-8 * c.max(1.0);
            ok(&ham.h1, m1, config.caps.0) && ok(&ham.h2, m2, config.caps.1)
        }
        _ => true,
    };
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    // first column of M and the scaled top eigenvector of M
    let m00 = m[(0, 0)].max(1e-300);
    candidates.push((1..=n).map(|k| m[(k, 0)] / m00).collect());
    let top = vecs.column(0);
    if top[0].abs() > 1e-8 {
        candidates.push((1..=n).map(|k| top[k] / top[0]).collect());
    }
    // top eigenvector of the second-moment block
    let v_block = m.view((1, 1), (n, n)).into_owned();
    let (vev, vvecs) = symmetric_eig(&v_block)?;
    let scale = vev[0].max(0.0).sqrt();
    candidates.push(vvecs.column(0).iter().map(|x| x * scale).collect());

    let ctx = LocalSeesawContext::new(rho, config.objective)?;
    let mut best: Option<Extraction> = None;
    for v in candidates {
        let raw = relax.hamiltonian_of(&v)?;
        let h1 = sign_projection(raw.h1.matrix(), config.caps.0)?;
        let h2 = sign_projection(raw.h2.matrix(), config.caps.1)?;
        let mut ham = LocalHamiltonian::new(h1, h2, config.caps)?;
        if !pinned(&ham) {
            continue;
        }
        let mut value = ctx.objective_value(&ham);
        for _ in 0..config.polish_iters {
            let next = ctx.step(&ham, config.caps)?;
            let f = ctx.objective_value(&next);
            if f <= value + 1e-13 || !pinned(&next) {
                break;
            }
            ham = next;
            value = f;
        }
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(Extraction { hamiltonian: ham, value });
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::pauli_z;
    use crate::states::isotropic;

    #[test]
    fn rank_one_point_is_feasible() {
        let rho = isotropic(0.3, 2).unwrap();
        let relax = MomentRelaxation::build(&rho, (1.0, 0.5), ConstraintMode::Eig, Objective::Qfi, None).unwrap();
        let z = Hermitian::new(pauli_z()).unwrap();
        let ham = LocalHamiltonian::new(z.clone(), z.scale(0.5), (1.0, 0.5)).unwrap();
        let v = relax.params_of(&ham);
        assert!(relax.constraint_residual(&relax.lift_point(&v)) < 1e-12);
        let f = crate::metrology::qfi(&rho, &ham.assembled()).unwrap();
        assert!((relax.quadratic_value(&v) - f).abs() < 1e-10);
    }

    #[test]
    fn isotropic_bound_is_tight() {
        let rho = isotropic(0.1, 2).unwrap();
        let res = shor_level1(&rho, &RelaxationConfig::default()).unwrap();
        let want = 32.0 * 0.81 / 1.9;
        assert!((res.upper_bound - want).abs() < 1e-6, "{}", res.upper_bound);
        assert!(res.tight);
    }
}
