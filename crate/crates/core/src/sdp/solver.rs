//! Primal-dual interior-point method on the homogeneous self-dual embedding.
//!
//! Nesterov-Todd scaling with a Mehrotra predictor-corrector step. Free variables are
//! split into two nonnegative parts.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::program::{Cone, ConicProgram, Sense, SolveStatus};
use crate::error::Result;
use crate::linalg::RMatrix;

const MAX_ITERS: usize = 200;
const STEP_FRACTION: f64 = 0.99;
/// Accuracy below which a stalled solve is still reported as optimal.
const FALLBACK_TOL: f64 = 1e-7;
const INFEASIBILITY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { tol: 1e-9, max_iters: MAX_ITERS }
    }
}

#[derive(Clone, Debug)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Primal coordinates in program order.
    pub x: Vec<f64>,
    /// Equality multipliers; for maximization the dual reads `min b^T y, A^T y - c in K*`.
    pub y: Vec<f64>,
    /// Dual slack coordinates in program order (off-diagonal PSD entries as matrix entries).
    pub s: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `|primal - dual| / max(1, |primal|, |dual|)`.
    pub gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
}

impl ConicSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Dense symmetric matrix of PSD block `block`.
    pub fn block_matrix(&self, prog: &ConicProgram, block: usize) -> RMatrix {
        block_from_coords(prog, block, &self.x)
    }

    /// Dense symmetric dual slack of PSD block `block`.
    pub fn slack_matrix(&self, prog: &ConicProgram, block: usize) -> RMatrix {
        block_from_coords(prog, block, &self.s)
    }
}

fn block_from_coords(prog: &ConicProgram, block: usize, v: &[f64]) -> RMatrix {
    let n = match prog.cones()[block] {
        Cone::Psd(n) => n,
        other => panic!("block {block} is {other:?}, not PSD"),
    };
    let mut m = RMatrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let x = v[prog.var(block, r, c)];
            m[(r, c)] = x;
            m[(c, r)] = x;
        }
    }
    m
}

/// Where a program coordinate lives internally.
#[derive(Clone, Copy, Debug)]
enum Slot {
    Psd { k: usize, r: usize, c: usize },
    Lp(usize),
    Split(usize, usize),
}

/// Constraint row split by cone.
#[derive(Clone, Debug, Default)]
struct Row {
    /// `(block, r, c, v)` with `r <= c`; `v` multiplies the coordinate `X[r][c]`.
    psd: Vec<(usize, usize, usize, f64)>,
    lp: Vec<(usize, f64)>,
}

struct Problem {
    psd_sizes: Vec<usize>,
    nlp: usize,
    rows: Vec<Row>,
    b: DVector<f64>,
    c_psd: Vec<RMatrix>,
    c_lp: DVector<f64>,
    slots: Vec<Slot>,
    /// `+1` to minimize the program objective, `-1` to maximize it.
    sign: f64,
}

#[derive(Clone)]
struct Point {
    xs: Vec<RMatrix>,
    xl: DVector<f64>,
    y: DVector<f64>,
    ss: Vec<RMatrix>,
    sl: DVector<f64>,
    tau: f64,
    kappa: f64,
}

struct Scaling {
    r: Vec<RMatrix>,
    rinv: Vec<RMatrix>,
    g: Vec<RMatrix>,
    lam: Vec<Vec<f64>>,
    w2: DVector<f64>,
    lam_lp: DVector<f64>,
}

#[derive(Clone)]
struct Dir {
    xs: Vec<RMatrix>,
    xl: DVector<f64>,
    y: DVector<f64>,
    ss: Vec<RMatrix>,
    sl: DVector<f64>,
    tau: f64,
    kappa: f64,
}

impl Problem {
    fn build(prog: &ConicProgram) -> Problem {
        let mut psd_sizes = Vec::new();
        let mut nlp = 0;
        let mut slots = Vec::with_capacity(prog.num_vars());
        for cone in prog.cones() {
            match *cone {
                Cone::Psd(n) => {
                    let k = psd_sizes.len();
                    psd_sizes.push(n);
                    for r in 0..n {
                        for c in r..n {
                            slots.push(Slot::Psd { k, r, c });
                        }
                    }
                }
                Cone::NonNeg(n) => {
                    for _ in 0..n {
                        slots.push(Slot::Lp(nlp));
                        nlp += 1;
                    }
                }
                Cone::Free(n) => {
                    for _ in 0..n {
                        slots.push(Slot::Split(nlp, nlp + 1));
                        nlp += 2;
                    }
                }
            }
        }
        let sign = match prog.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };
        let mut c_psd: Vec<RMatrix> = psd_sizes.iter().map(|&n| RMatrix::zeros(n, n)).collect();
        let mut c_lp = DVector::zeros(nlp);
        for (v, &a) in prog.objective().iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let a = sign * a;
            match slots[v] {
                Slot::Psd { k, r, c } => {
                    if r == c {
                        c_psd[k][(r, r)] += a;
                    } else {
                        c_psd[k][(r, c)] += a / 2.0;
                        c_psd[k][(c, r)] += a / 2.0;
                    }
                }
                Slot::Lp(i) => c_lp[i] += a,
                Slot::Split(p, m) => {
                    c_lp[p] += a;
                    c_lp[m] -= a;
                }
            }
        }
        let rows = prog
            .constraints()
            .iter()
            .map(|terms| {
                let mut row = Row::default();
                for &(v, a) in terms {
                    match slots[v] {
                        Slot::Psd { k, r, c } => row.psd.push((k, r, c, a)),
                        Slot::Lp(i) => row.lp.push((i, a)),
                        Slot::Split(p, m) => {
                            row.lp.push((p, a));
                            row.lp.push((m, -a));
                        }
                    }
                }
                row
            })
            .collect();
        Problem {
            psd_sizes,
            nlp,
            rows,
            b: DVector::from_column_slice(prog.rhs()),
            c_psd,
            c_lp,
            slots,
            sign,
        }
    }

    fn m(&self) -> usize {
        self.rows.len()
    }

    fn nu(&self) -> f64 {
        (self.psd_sizes.iter().sum::<usize>() + self.nlp) as f64
    }

    fn a_op(&self, xs: &[RMatrix], xl: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.m(),
            self.rows.iter().map(|row| {
                let mut acc = 0.0;
                for &(k, r, c, v) in &row.psd {
                    acc += v * xs[k][(r, c)];
                }
                for &(i, v) in &row.lp {
                    acc += v * xl[i];
                }
                acc
            }),
        )
    }

    fn at_op(&self, y: &DVector<f64>) -> (Vec<RMatrix>, DVector<f64>) {
        let mut ms: Vec<RMatrix> = self.psd_sizes.iter().map(|&n| RMatrix::zeros(n, n)).collect();
        let mut ml = DVector::zeros(self.nlp);
        for (row, &yi) in self.rows.iter().zip(y.iter()) {
            if yi == 0.0 {
                continue;
            }
            for &(k, r, c, v) in &row.psd {
                if r == c {
                    ms[k][(r, r)] += yi * v;
                } else {
                    ms[k][(r, c)] += yi * v / 2.0;
                    ms[k][(c, r)] += yi * v / 2.0;
                }
            }
            for &(i, v) in &row.lp {
                ml[i] += yi * v;
            }
        }
        (ms, ml)
    }

    fn c_dot(&self, xs: &[RMatrix], xl: &DVector<f64>) -> f64 {
        inner(&self.c_psd, &self.c_lp, xs, xl)
    }

    fn norm_c(&self) -> f64 {
        (self.c_psd.iter().map(|m| m.norm_squared()).sum::<f64>() + self.c_lp.norm_squared()).sqrt()
    }
}

fn inner(a: &[RMatrix], al: &DVector<f64>, b: &[RMatrix], bl: &DVector<f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum::<f64>() + al.dot(bl)
}

fn sym(m: &RMatrix) -> RMatrix {
    (m + m.transpose()) * 0.5
}

/// Any factor `L` with `L L^T = X` for symmetric positive definite `X`.
fn psd_factor(x: &RMatrix) -> RMatrix {
    if let Some(ch) = Cholesky::new(x.clone()) {
        return ch.l();
    }
    let eig = x.clone().symmetric_eigen();
    let floor = 1e-300;
    let mut l = eig.eigenvectors.clone();
    for (j, &e) in eig.eigenvalues.iter().enumerate() {
        l.column_mut(j).scale_mut(e.max(floor).sqrt());
    }
    l
}

fn min_eig(m: &RMatrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    sym(m).symmetric_eigenvalues().iter().fold(f64::INFINITY, |a, &b| a.min(b))
}

fn scaling(pt: &Point) -> Scaling {
    let mut r = Vec::new();
    let mut rinv = Vec::new();
    let mut g = Vec::new();
    let mut lam = Vec::new();
    for (x, s) in pt.xs.iter().zip(&pt.ss) {
        let lx = psd_factor(x);
        let ls = psd_factor(s);
        let svd = (ls.transpose() * &lx).svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let l: Vec<f64> = svd.singular_values.iter().map(|&v| v.max(1e-300)).collect();
        let n = l.len();
        let mut rk = &lx * vt.transpose();
        let mut rik = u.transpose() * ls.transpose();
        for j in 0..n {
            let f = l[j].sqrt();
            rk.column_mut(j).scale_mut(1.0 / f);
            rik.row_mut(j).scale_mut(1.0 / f);
        }
        g.push(&rk * rk.transpose());
        r.push(rk);
        rinv.push(rik);
        lam.push(l);
    }
    let w2 = pt.xl.component_div(&pt.sl);
    let lam_lp = pt.xl.component_mul(&pt.sl).map(f64::sqrt);
    Scaling { r, rinv, g, lam, w2, lam_lp }
}

impl Scaling {
    fn h(&self, zs: &[RMatrix], zl: &DVector<f64>) -> (Vec<RMatrix>, DVector<f64>) {
        let hs = zs.iter().zip(&self.g).map(|(z, g)| sym(&(g * z * g))).collect();
        (hs, zl.component_mul(&self.w2))
    }
}

fn schur(p: &Problem, sc: &Scaling) -> DMatrix<f64> {
    let m = p.m();
    let mut out = DMatrix::zeros(m, m);
    let mut b_blocks: Vec<RMatrix> = p.psd_sizes.iter().map(|&n| RMatrix::zeros(n, n)).collect();
    let mut h_lp = DVector::zeros(p.nlp);
    for j in 0..m {
        let row = &p.rows[j];
        let mut touched = vec![false; p.psd_sizes.len()];
        for &(k, r, c, v) in &row.psd {
            touched[k] = true;
            let g = &sc.g[k];
            let bk = &mut b_blocks[k];
            if r == c {
                bk.ger(v, &g.column(r), &g.column(r), 1.0);
            } else {
                bk.ger(v / 2.0, &g.column(r), &g.column(c), 1.0);
                bk.ger(v / 2.0, &g.column(c), &g.column(r), 1.0);
            }
        }
        for &(i, v) in &row.lp {
            h_lp[i] += v * sc.w2[i];
        }
        for i in j..m {
            let ri = &p.rows[i];
            let mut acc = 0.0;
            for &(k, r, c, v) in &ri.psd {
                if touched[k] {
                    acc += v * b_blocks[k][(r, c)];
                }
            }
            for &(l, v) in &ri.lp {
                acc += v * h_lp[l];
            }
            out[(i, j)] = acc;
            out[(j, i)] = acc;
        }
        for (k, t) in touched.iter().enumerate() {
            if *t {
                b_blocks[k].fill(0.0);
            }
        }
        for &(i, _) in &row.lp {
            h_lp[i] = 0.0;
        }
    }
    out
}

/// Cholesky with escalating diagonal regularization.
fn factor(mut m: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let scale = (0..m.nrows()).fold(1e-300_f64, |a, i| a.max(m[(i, i)].abs()));
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch);
    }
    let mut delta = 1e-14 * scale;
    for _ in 0..8 {
        for i in 0..m.nrows() {
            m[(i, i)] += delta;
        }
        if let Some(ch) = Cholesky::new(m.clone()) {
            return Some(ch);
        }
        delta *= 100.0;
    }
    None
}

struct Newton<'a> {
    p: &'a Problem,
    sc: &'a Scaling,
    chol: Cholesky<f64, nalgebra::Dyn>,
    v: DVector<f64>,
    dx1: (Vec<RMatrix>, DVector<f64>),
    denom: f64,
    rp: DVector<f64>,
    rd: (Vec<RMatrix>, DVector<f64>),
    rg: f64,
}

impl<'a> Newton<'a> {
    fn new(p: &'a Problem, sc: &'a Scaling, pt: &Point) -> Option<Self> {
        let chol = factor(schur(p, sc))?;
        let (hc, hcl) = sc.h(&p.c_psd, &p.c_lp);
        let ahc = p.a_op(&hc, &hcl);
        let v = chol.solve(&(&p.b + ahc));
        let (atv, atvl) = p.at_op(&v);
        let (hatv, hatvl) = sc.h(&atv, &atvl);
        let dx1s: Vec<RMatrix> = hatv.iter().zip(&hc).map(|(a, b)| a - b).collect();
        let dx1l = hatvl - hcl;
        let denom = p.c_dot(&dx1s, &dx1l) - p.b.dot(&v) - pt.kappa / pt.tau;
        let rp = p.a_op(&pt.xs, &pt.xl) - &p.b * pt.tau;
        let (aty, atyl) = p.at_op(&pt.y);
        let rds: Vec<RMatrix> = aty
            .iter()
            .zip(&pt.ss)
            .zip(&p.c_psd)
            .map(|((a, s), c)| a + s - c * pt.tau)
            .collect();
        let rdl = atyl + &pt.sl - &p.c_lp * pt.tau;
        let rg = p.c_dot(&pt.xs, &pt.xl) - p.b.dot(&pt.y) + pt.kappa;
        Some(Newton { p, sc, chol, v, dx1: (dx1s, dx1l), denom, rp, rd: (rds, rdl), rg })
    }

    /// Direction for complementarity target `r_c` (X-space) and `r_tau`.
    fn solve(&self, pt: &Point, eta: f64, rc: (Vec<RMatrix>, DVector<f64>), r_tau: f64) -> Dir {
        let p = self.p;
        let (hrd, hrdl) = self.sc.h(&self.rd.0, &self.rd.1);
        let ts: Vec<RMatrix> = rc.0.iter().zip(&hrd).map(|(a, b)| a + b * eta).collect();
        let tl = &rc.1 + hrdl * eta;
        let rhs = -&self.rp * eta - p.a_op(&ts, &tl);
        let u = self.chol.solve(&rhs);
        let (atu, atul) = p.at_op(&u);
        let (hatu, hatul) = self.sc.h(&atu, &atul);
        let dx0s: Vec<RMatrix> = ts.iter().zip(&hatu).map(|(a, b)| a + b).collect();
        let dx0l = tl + hatul;
        let num = -eta * self.rg - p.c_dot(&dx0s, &dx0l) + p.b.dot(&u) - r_tau / pt.tau;
        let dtau = num / self.denom;
        let dy = u + &self.v * dtau;
        let xs: Vec<RMatrix> = dx0s.iter().zip(&self.dx1.0).map(|(a, b)| sym(&(a + b * dtau))).collect();
        let xl = dx0l + &self.dx1.1 * dtau;
        let (atdy, atdyl) = p.at_op(&dy);
        let ss: Vec<RMatrix> = self
            .rd
            .0
            .iter()
            .zip(&atdy)
            .zip(&p.c_psd)
            .map(|((rd, a), c)| sym(&(-rd * eta - a + c * dtau)))
            .collect();
        let sl = -&self.rd.1 * eta - atdyl + &p.c_lp * dtau;
        let dkappa = (r_tau - pt.kappa * dtau) / pt.tau;
        Dir { xs, xl, y: dy, ss, sl, tau: dtau, kappa: dkappa }
    }
}

/// Scaled directions `Dx = R^-1 dX R^-T`, `Ds = R^T dS R`.
fn scaled_dirs(sc: &Scaling, d: &Dir) -> (Vec<RMatrix>, Vec<RMatrix>) {
    let dx = d.xs.iter().zip(&sc.rinv).map(|(x, ri)| sym(&(ri * x * ri.transpose()))).collect();
    let ds = d.ss.iter().zip(&sc.r).map(|(s, r)| sym(&(r.transpose() * s * r))).collect();
    (dx, ds)
}

fn max_step(sc: &Scaling, pt: &Point, d: &Dir, dx: &[RMatrix], ds: &[RMatrix]) -> f64 {
    let mut alpha: f64 = 1.0 / STEP_FRACTION;
    for (k, lam) in sc.lam.iter().enumerate() {
        let n = lam.len();
        for m in [&dx[k], &ds[k]] {
            let t = RMatrix::from_fn(n, n, |i, j| m[(i, j)] / (lam[i] * lam[j]).sqrt());
            let e = min_eig(&t);
            if e < 0.0 {
                alpha = alpha.min(-1.0 / e);
            }
        }
    }
    for i in 0..pt.xl.len() {
        if d.xl[i] < 0.0 {
            alpha = alpha.min(-pt.xl[i] / d.xl[i]);
        }
        if d.sl[i] < 0.0 {
            alpha = alpha.min(-pt.sl[i] / d.sl[i]);
        }
    }
    if d.tau < 0.0 {
        alpha = alpha.min(-pt.tau / d.tau);
    }
    if d.kappa < 0.0 {
        alpha = alpha.min(-pt.kappa / d.kappa);
    }
    alpha
}

fn step(pt: &Point, d: &Dir, a: f64) -> Point {
    Point {
        xs: pt.xs.iter().zip(&d.xs).map(|(x, dx)| x + dx * a).collect(),
        xl: &pt.xl + &d.xl * a,
        y: &pt.y + &d.y * a,
        ss: pt.ss.iter().zip(&d.ss).map(|(s, ds)| s + ds * a).collect(),
        sl: &pt.sl + &d.sl * a,
        tau: pt.tau + d.tau * a,
        kappa: pt.kappa + d.kappa * a,
    }
}

fn mu(p: &Problem, pt: &Point) -> f64 {
    (inner(&pt.xs, &pt.xl, &pt.ss, &pt.sl) + pt.tau * pt.kappa) / (p.nu() + 1.0)
}

/// `R diag-solve(E) R^T` where `Lambda o D = E`.
fn rc_from_e(sc: &Scaling, es: &[RMatrix], el: &DVector<f64>) -> (Vec<RMatrix>, DVector<f64>) {
    let rcs = es
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let lam = &sc.lam[k];
            let n = lam.len();
            let dmat = RMatrix::from_fn(n, n, |i, j| 2.0 * e[(i, j)] / (lam[i] + lam[j]));
            sym(&(&sc.r[k] * dmat * sc.r[k].transpose()))
        })
        .collect();
    // LP: lambda (dx + ds) = e, and dx = dX / w with w = sqrt(x / s)
    let w = sc.w2.map(f64::sqrt);
    let rcl = el.component_div(&sc.lam_lp).component_mul(&w);
    (rcs, rcl)
}

struct Metrics {
    pobj: f64,
    dobj: f64,
    pres: f64,
    dres: f64,
    gap: f64,
}

fn metrics(p: &Problem, pt: &Point) -> Metrics {
    let t = pt.tau;
    let ax = p.a_op(&pt.xs, &pt.xl) / t - &p.b;
    let (aty, atyl) = p.at_op(&pt.y);
    let mut dr = 0.0;
    for ((a, s), c) in aty.iter().zip(&pt.ss).zip(&p.c_psd) {
        dr += ((a + s) / t - c).norm_squared();
    }
    dr += ((atyl + &pt.sl) / t - &p.c_lp).norm_squared();
    let pobj = p.c_dot(&pt.xs, &pt.xl) / t;
    let dobj = p.b.dot(&pt.y) / t;
    Metrics {
        pobj,
        dobj,
        pres: ax.norm() / (1.0 + p.b.norm()),
        dres: dr.sqrt() / (1.0 + p.norm_c()),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs().max(dobj.abs())),
    }
}

/// Solves a conic program. Infeasibility and unboundedness are reported through the status.
pub fn solve(prog: &ConicProgram, settings: &SolverSettings) -> Result<ConicSolution> {
    prog.validate()?;
    let p = Problem::build(prog);
    let mut pt = Point {
        xs: p.psd_sizes.iter().map(|&n| RMatrix::identity(n, n)).collect(),
        xl: DVector::from_element(p.nlp, 1.0),
        y: DVector::zeros(p.m()),
        ss: p.psd_sizes.iter().map(|&n| RMatrix::identity(n, n)).collect(),
        sl: DVector::from_element(p.nlp, 1.0),
        tau: 1.0,
        kappa: 1.0,
    };
    let tol = settings.tol;
    let mut status = SolveStatus::NumericalLimit;
    let mut best: Option<(f64, Point)> = None;
    let mut iters = 0;
    let mut stall = 0;
    let mut last_err = f64::INFINITY;
    for it in 0..settings.max_iters.max(1) {
        iters = it;
        let mt = metrics(&p, &pt);
        let err = mt.pres.max(mt.dres).max(mt.gap);
        if best.as_ref().is_none_or(|(e, _)| err < *e) {
            best = Some((err, pt.clone()));
        }
        if err <= tol {
            status = SolveStatus::Optimal;
            break;
        }
        if let Some(st) = certificate(&p, &pt) {
            status = st;
            break;
        }
        if err > 0.5 * last_err {
            stall += 1;
        } else {
            stall = 0;
        }
        last_err = last_err.min(err);
        if stall >= 8 {
            break;
        }

        let sc = scaling(&pt);
        let Some(newton) = Newton::new(&p, &sc, &pt) else { break };
        let mu0 = mu(&p, &pt);

        // predictor
        let es: Vec<RMatrix> = sc.lam.iter().map(|l| -RMatrix::from_diagonal(&DVector::from_iterator(l.len(), l.iter().map(|x| x * x)))).collect();
        let el = -sc.lam_lp.component_mul(&sc.lam_lp);
        let rc = rc_from_e(&sc, &es, &el);
        let daff = newton.solve(&pt, 1.0, rc, -pt.tau * pt.kappa);
        let (dxa, dsa) = scaled_dirs(&sc, &daff);
        let a_aff = (max_step(&sc, &pt, &daff, &dxa, &dsa)).min(1.0);
        let mu_aff = mu(&p, &step(&pt, &daff, a_aff));
        let sigma = (mu_aff / mu0).clamp(0.0, 1.0).powi(3);

        // corrector
        let es: Vec<RMatrix> = sc
            .lam
            .iter()
            .enumerate()
            .map(|(k, l)| {
                let n = l.len();
                let cross = sym(&(&dxa[k] * &dsa[k]));
                RMatrix::from_fn(n, n, |i, j| {
                    let diag = if i == j { sigma * mu0 - l[i] * l[i] } else { 0.0 };
                    diag - cross[(i, j)]
                })
            })
            .collect();
        let w = sc.w2.map(f64::sqrt);
        let dxl = daff.xl.component_div(&w);
        let dsl = daff.sl.component_mul(&w);
        let el = DVector::from_iterator(
            p.nlp,
            (0..p.nlp).map(|i| sigma * mu0 - sc.lam_lp[i] * sc.lam_lp[i] - dxl[i] * dsl[i]),
        );
        let rc = rc_from_e(&sc, &es, &el);
        let r_tau = sigma * mu0 - pt.tau * pt.kappa - daff.tau * daff.kappa;
        let d = newton.solve(&pt, 1.0 - sigma, rc, r_tau);
        let (dx, ds) = scaled_dirs(&sc, &d);
        let alpha = (STEP_FRACTION * max_step(&sc, &pt, &d, &dx, &ds)).min(1.0);
        if !(alpha > 1e-10) {
            break;
        }
        let next = step(&pt, &d, alpha);
        if !next.tau.is_finite() || next.xs.iter().any(|m| m.iter().any(|v| !v.is_finite())) {
            break;
        }
        pt = next;
        // keep tau of order one to avoid overflow on infeasible problems
        let scale = pt.tau + pt.kappa;
        if !(1e-6..=1e6).contains(&scale) {
            rescale(&mut pt, 1.0 / scale);
        }
    }
    if status == SolveStatus::NumericalLimit {
        if let Some((err, b)) = best {
            if err <= FALLBACK_TOL.max(tol) {
                status = SolveStatus::Optimal;
            }
            pt = b;
        }
        if status == SolveStatus::NumericalLimit {
            if let Some(st) = certificate(&p, &pt) {
                status = st;
            }
        }
    }
    Ok(finish(prog, &p, &pt, status, iters))
}

fn rescale(pt: &mut Point, f: f64) {
    for m in pt.xs.iter_mut().chain(pt.ss.iter_mut()) {
        *m *= f;
    }
    pt.xl *= f;
    pt.sl *= f;
    pt.y *= f;
    pt.tau *= f;
    pt.kappa *= f;
}

/// Farkas-type certificates, checked once `kappa` dominates `tau`.
fn certificate(p: &Problem, pt: &Point) -> Option<SolveStatus> {
    if pt.tau >= pt.kappa {
        return None;
    }
    let by = p.b.dot(&pt.y);
    if by > 0.0 {
        let (aty, atyl) = p.at_op(&pt.y);
        let mut r = 0.0;
        for (a, s) in aty.iter().zip(&pt.ss) {
            r += (a + s).norm_squared();
        }
        r += (atyl + &pt.sl).norm_squared();
        if r.sqrt() <= INFEASIBILITY_TOL * by {
            return Some(SolveStatus::Infeasible);
        }
    }
    let cx = p.c_dot(&pt.xs, &pt.xl);
    if cx < 0.0 {
        let ax = p.a_op(&pt.xs, &pt.xl);
        if ax.norm() <= INFEASIBILITY_TOL * (-cx) {
            return Some(SolveStatus::Unbounded);
        }
    }
    None
}

fn finish(prog: &ConicProgram, p: &Problem, pt: &Point, status: SolveStatus, iters: usize) -> ConicSolution {
    let t = if status == SolveStatus::Infeasible || status == SolveStatus::Unbounded { 1.0 } else { pt.tau };
    let mut x = vec![0.0; prog.num_vars()];
    let mut s = vec![0.0; prog.num_vars()];
    for (v, slot) in p.slots.iter().enumerate() {
        match *slot {
            Slot::Psd { k, r, c } => {
                x[v] = pt.xs[k][(r, c)] / t;
                s[v] = pt.ss[k][(r, c)] / t;
            }
            Slot::Lp(i) => {
                x[v] = pt.xl[i] / t;
                s[v] = pt.sl[i] / t;
            }
            Slot::Split(a, b) => {
                x[v] = (pt.xl[a] - pt.xl[b]) / t;
                s[v] = pt.sl[a] / t;
            }
        }
    }
    let y: Vec<f64> = pt.y.iter().map(|v| p.sign * v / t).collect();
    let mt = metrics(p, pt);
    ConicSolution {
        status,
        x,
        y,
        s,
        primal_objective: p.sign * mt.pobj,
        dual_objective: p.sign * mt.dobj,
        gap: mt.gap,
        primal_residual: mt.pres,
        dual_residual: mt.dres,
        iterations: iters,
    }
}
