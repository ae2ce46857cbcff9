//! States of the form `p (rho1 (x) 1/d2) + (1 - p) (1/d1 (x) rho2)` and coherence vectors.

use crate::error::{Error, Result};
use crate::linalg::{
    c, cr, eig_matrix, identity, kron, max_abs_diff, partial_trace, BipartiteDims, CMatrix,
    RMatrix, Subsystem,
};
use crate::metrology::DensityMatrix;

/// Reconstruction tolerance for the membership test.
const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SpecialSeparableDecomposition {
    pub p: f64,
    pub rho1: DensityMatrix,
    pub rho2: DensityMatrix,
    pub p_bounds: (f64, f64),
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub enum Membership {
    Member(SpecialSeparableDecomposition),
    NotMember {
        /// `(1 - d1 lmin(red1), d2 lmin(red2))`.
        p_bounds: (f64, f64),
        /// `None` when the interval is empty.
        residual: Option<f64>,
    },
}

impl Membership {
    pub fn is_member(&self) -> bool {
        matches!(self, Membership::Member(_))
    }
}

pub fn special_separable_compose(
    rho1: &DensityMatrix,
    rho2: &DensityMatrix,
    p: f64,
    dims: BipartiteDims,
) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { what: "mixing weight p", value: p });
    }
    if rho1.dim() != dims.d1 || rho2.dim() != dims.d2 {
        return Err(Error::DimensionMismatch(format!(
            "local states have dimensions ({}, {}) but dims are ({}, {})",
            rho1.dim(),
            rho2.dim(),
            dims.d1,
            dims.d2
        )));
    }
    let m = compose_raw(rho1.matrix(), rho2.matrix(), p, dims);
    DensityMatrix::bipartite(m, dims)
}

fn compose_raw(r1: &CMatrix, r2: &CMatrix, p: f64, dims: BipartiteDims) -> CMatrix {
    kron(r1, &identity(dims.d2)) * cr(p / dims.d2 as f64)
        + kron(&identity(dims.d1), r2) * cr((1.0 - p) / dims.d1 as f64)
}

/// Membership test by reduced states, the admissible `p` interval and reconstruction.
pub fn special_separable_membership(rho: &DensityMatrix) -> Result<Membership> {
    let dims = rho.require_dims()?;
    let (d1, d2) = (dims.d1 as f64, dims.d2 as f64);
    let red1 = partial_trace(rho.matrix(), dims, Subsystem::First)?;
    let red2 = partial_trace(rho.matrix(), dims, Subsystem::Second)?;
    let low = 1.0 - d1 * eig_matrix(&red1)?.min();
    let high = d2 * eig_matrix(&red2)?.min();
    let p_bounds = (low, high);
    if low > high + MEMBERSHIP_TOL {
        return Ok(Membership::NotMember { p_bounds, residual: None });
    }
    let p = (0.5 * (low + high)).clamp(0.0, 1.0);
    let eps = 1e-12;
    let r1 = if p > eps {
        (red1 - identity(dims.d1) * cr((1.0 - p) / d1)) * cr(1.0 / p)
    } else {
        identity(dims.d1) * cr(1.0 / d1)
    };
    let r2 = if p < 1.0 - eps {
        (red2 - identity(dims.d2) * cr(p / d2)) * cr(1.0 / (1.0 - p))
    } else {
        identity(dims.d2) * cr(1.0 / d2)
    };
    let rho1 = DensityMatrix::project(&r1, None)?;
    let rho2 = DensityMatrix::project(&r2, None)?;
    let residual = max_abs_diff(&compose_raw(rho1.matrix(), rho2.matrix(), p, dims), rho.matrix());
    if residual > MEMBERSHIP_TOL {
        return Ok(Membership::NotMember { p_bounds, residual: Some(residual) });
    }
    Ok(Membership::Member(SpecialSeparableDecomposition { p, rho1, rho2, p_bounds, residual }))
}

/// Generalized Gell-Mann matrices with `Tr(G_k G_l) = 2 delta_kl`, ordered
/// symmetric off-diagonal, antisymmetric off-diagonal, diagonal.
pub fn gell_mann(d: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(d * d - 1);
    for j in 0..d {
        for k in j + 1..d {
            let mut g = CMatrix::zeros(d, d);
            g[(j, k)] = cr(1.0);
            g[(k, j)] = cr(1.0);
            out.push(g);
        }
    }
    for j in 0..d {
        for k in j + 1..d {
            let mut g = CMatrix::zeros(d, d);
            g[(j, k)] = c(0.0, -1.0);
            g[(k, j)] = c(0.0, 1.0);
            out.push(g);
        }
    }
    for l in 1..d {
        let s = (2.0 / (l * (l + 1)) as f64).sqrt();
        let mut g = CMatrix::zeros(d, d);
        for j in 0..l {
            g[(j, j)] = cr(s);
        }
        g[(l, l)] = cr(-(l as f64) * s);
        out.push(g);
    }
    out
}

/// Expansion coefficients `<G1_k (x) 1>`, `<1 (x) G2_l>`, `<G1_k (x) G2_l>`.
#[derive(Clone, Debug)]
pub struct CoherenceVector {
    pub dims: BipartiteDims,
    pub local1: Vec<f64>,
    pub local2: Vec<f64>,
    pub corr: RMatrix,
}

impl CoherenceVector {
    /// Entries with magnitude above `tol`, over all three blocks.
    pub fn nonzero_count(&self, tol: f64) -> usize {
        self.local1.iter().chain(self.local2.iter()).chain(self.corr.iter()).filter(|x| x.abs() > tol).count()
    }

    pub fn corr_max(&self) -> f64 {
        self.corr.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

pub fn coherence_vector(rho: &DensityMatrix) -> Result<CoherenceVector> {
    let dims = rho.require_dims()?;
    let g1 = gell_mann(dims.d1);
    let g2 = gell_mann(dims.d2);
    let r = rho.matrix();
    let (d1, d2) = (dims.d1, dims.d2);
    // <A (x) B> = sum_{ik,jl} rho[(k,l),(i,j)] A[i,k] B[j,l]
    let expect = |a: &CMatrix, b: &CMatrix| -> f64 {
        let mut acc = c(0.0, 0.0);
        for i in 0..d1 {
            for k in 0..d1 {
                let aik = a[(i, k)];
                if aik == cr(0.0) {
                    continue;
                }
                for j in 0..d2 {
                    for l in 0..d2 {
                        let bjl = b[(j, l)];
                        if bjl == cr(0.0) {
                            continue;
                        }
                        acc += r[(k * d2 + l, i * d2 + j)] * aik * bjl;
                    }
                }
            }
        }
        acc.re
    };
    let i1 = identity(d1);
    let i2 = identity(d2);
    let local1 = g1.iter().map(|g| expect(g, &i2)).collect();
    let local2 = g2.iter().map(|g| expect(&i1, g)).collect();
    let corr = RMatrix::from_fn(g1.len(), g2.len(), |k, l| expect(&g1[k], &g2[l]));
    Ok(CoherenceVector { dims, local1, local2, corr })
}

/// `rho = (1 + (d1/2) sum l1 G (x) 1 + (d2/2) sum l2 1 (x) G + (d1 d2 / 4) sum K G (x) G) / (d1 d2)`.
pub fn reconstruct_from_coherence(cv: &CoherenceVector) -> CMatrix {
    let (d1, d2) = (cv.dims.d1, cv.dims.d2);
    let g1 = gell_mann(d1);
    let g2 = gell_mann(d2);
    let (f1, f2) = (d1 as f64, d2 as f64);
    let mut a1 = CMatrix::zeros(d1, d1);
    for (g, &x) in g1.iter().zip(&cv.local1) {
        a1 += g * cr(x * f1 / 2.0);
    }
    let mut a2 = CMatrix::zeros(d2, d2);
    for (g, &x) in g2.iter().zip(&cv.local2) {
        a2 += g * cr(x * f2 / 2.0);
    }
    let mut out = identity(d1 * d2) + kron(&a1, &identity(d2)) + kron(&identity(d1), &a2);
    for (k, gk) in g1.iter().enumerate() {
        for (l, gl) in g2.iter().enumerate() {
            let x = cv.corr[(k, l)];
            if x != 0.0 {
                out += kron(gk, gl) * cr(x * f1 * f2 / 4.0);
            }
        }
    }
    out * cr(1.0 / (f1 * f2))
}
