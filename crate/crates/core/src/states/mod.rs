//! Test states and state utilities.

mod io;
mod separable;

pub use io::{load_state, parse_state, save_state, state_to_json, StateFile};
pub use separable::{
    coherence_vector, gell_mann, reconstruct_from_coherence, special_separable_compose,
    special_separable_membership, CoherenceVector, Membership, SpecialSeparableDecomposition,
};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    cr, eig_matrix, identity, kron, outer, partial_transpose, reorder_to_bipartition,
    BipartiteDims, CMatrix, Subsystem,
};
use crate::metrology::DensityMatrix;

/// `(1 - p) |psi_me><psi_me| + p 1/d^2` with `|psi_me> = sum_i |ii>/sqrt(d)`.
pub fn isotropic(p: f64, d: usize) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { what: "isotropic mixing p", value: p });
    }
    let dims = BipartiteDims::new(d, d)?;
    let n = d * d;
    let mut psi = DVector::zeros(n);
    for i in 0..d {
        psi[i * d + i] = cr(1.0 / (d as f64).sqrt());
    }
    let rho = outer(&psi) * cr(1.0 - p) + identity(n) * cr(p / n as f64);
    DensityMatrix::bipartite(rho, dims)
}

/// The one-parameter 3x3 bound entangled family of Horodecki, `0 < a < 1`.
pub fn horodecki_3x3(a: f64) -> Result<DensityMatrix> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::OutOfRange { what: "Horodecki parameter a", value: a });
    }
    let mut r = CMatrix::zeros(9, 9);
    for &i in &[0usize, 4, 8] {
        for &j in &[0usize, 4, 8] {
            r[(i, j)] = cr(a);
        }
    }
    for &i in &[1usize, 2, 3, 5, 7] {
        r[(i, i)] = cr(a);
    }
    let off = (1.0 - a * a).sqrt() / 2.0;
    r[(6, 6)] = cr((1.0 + a) / 2.0);
    r[(8, 8)] = cr((1.0 + a) / 2.0);
    r[(6, 8)] = cr(off);
    r[(8, 6)] = cr(off);
    DensityMatrix::bipartite(r * cr(1.0 / (8.0 * a + 1.0)), BipartiteDims::new(3, 3)?)
}

/// The five product vectors of the Tiles unextendible product basis.
pub fn upb_tiles_vectors() -> Vec<DVector<crate::linalg::C64>> {
    let e = |i: usize| {
        let mut v = DVector::zeros(3);
        v[i] = cr(1.0);
        v
    };
    let s = 1.0 / 2f64.sqrt();
    let diff = |i: usize, j: usize| (e(i) - e(j)) * cr(s);
    let uniform = DVector::from_element(3, cr(1.0 / 3f64.sqrt()));
    let k = |a: &DVector<_>, b: &DVector<_>| a.kronecker(b);
    vec![
        k(&e(0), &diff(0, 1)),
        k(&diff(0, 1), &e(2)),
        k(&e(2), &diff(1, 2)),
        k(&diff(1, 2), &e(0)),
        k(&uniform, &uniform),
    ]
}

/// `(1 - sum_i |psi_i><psi_i|) / 4` over the Tiles vectors; rank 4 and PPT.
pub fn upb_tiles_3x3() -> DensityMatrix {
    let mut r = identity(9);
    for v in upb_tiles_vectors() {
        r -= outer(&v);
    }
    DensityMatrix::bipartite(r * cr(0.25), BipartiteDims { d1: 3, d2: 3 }).expect("Tiles state is valid")
}

/// Bell vectors in the order (Psi+, Psi-, Phi+, Phi-).
pub fn bell_vectors() -> [DVector<crate::linalg::C64>; 4] {
    let s = 1.0 / 2f64.sqrt();
    let v = |a: f64, b: f64, c: f64, d: f64| DVector::from_vec(vec![cr(a * s), cr(b * s), cr(c * s), cr(d * s)]);
    [v(0.0, 1.0, 1.0, 0.0), v(0.0, 1.0, -1.0, 0.0), v(1.0, 0.0, 0.0, 1.0), v(1.0, 0.0, 0.0, -1.0)]
}

/// PPT 4x4 state with realignment trace norm 3/2, on the `AA'|BB'` cut.
pub fn ccnr_bes_4x4() -> DensityMatrix {
    let bells = bell_vectors();
    let proj: Vec<CMatrix> = bells.iter().map(outer).collect();
    let blocks = [
        proj[0].clone(),
        proj[1].clone(),
        proj[2].clone(),
        (identity(4) - &proj[3]) * cr(1.0 / 3.0),
    ];
    let probs = [1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5];
    let mut r = CMatrix::zeros(16, 16);
    for i in 0..4 {
        r += kron(&proj[i], &blocks[i]) * cr(probs[i]);
    }
    // factors are A B A' B'
    let r = reorder_to_bipartition(&r, [2; 4], [[0, 2], [1, 3]]).expect("consistent dims");
    DensityMatrix::bipartite(r, BipartiteDims { d1: 4, d2: 4 }).expect("valid state")
}

/// `rho (x) rho` regrouped on the `AA'|BB'` cut.
pub fn two_copy(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let d = rho.require_dims()?;
    let big = kron(rho.matrix(), rho.matrix());
    let r = reorder_to_bipartition(&big, [d.d1, d.d2, d.d1, d.d2], [[0, 2], [1, 3]])?;
    DensityMatrix::bipartite(r, BipartiteDims::new(d.d1 * d.d1, d.d2 * d.d2)?)
}

/// Pure state from an unnormalized vector.
pub fn pure_state(v: &DVector<crate::linalg::C64>, dims: Option<BipartiteDims>) -> Result<DensityMatrix> {
    let n = v.norm();
    if !(n > 0.0) {
        return Err(Error::InvalidArgument("zero state vector".to_string()));
    }
    DensityMatrix::new(outer(&(v / cr(n))), dims)
}

/// Smallest eigenvalue of the partial transpose on the first subsystem.
pub fn ppt_min_eigenvalue(rho: &DensityMatrix) -> Result<f64> {
    let dims = rho.require_dims()?;
    let pt = partial_transpose(rho.matrix(), dims, Subsystem::First)?;
    Ok(eig_matrix(&crate::linalg::symmetrize(&pt))?.min())
}

/// Built-in state from a `name:param:param` descriptor.
///
/// Recognized names: `isotropic:p:d`, `horodecki:a`, `upb-tiles`, `ccnr-bes-4x4`,
/// `maximally-mixed:d1:d2`, and `two-copy-isotropic:p:d`.
pub fn builtin(spec: &str) -> Result<DensityMatrix> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::InvalidArgument(format!("unrecognized built-in state '{spec}'"));
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad());
    match parts.as_slice() {
        ["isotropic", p, d] => isotropic(num(p)?, int(d)?),
        ["two-copy-isotropic", p, d] => two_copy(&isotropic(num(p)?, int(d)?)?),
        ["horodecki", a] => horodecki_3x3(num(a)?),
        ["upb-tiles"] => Ok(upb_tiles_3x3()),
        ["ccnr-bes-4x4"] => Ok(ccnr_bes_4x4()),
        ["maximally-mixed", d1, d2] => Ok(DensityMatrix::maximally_mixed(BipartiteDims::new(int(d1)?, int(d2)?)?)),
        _ => Err(bad()),
    }
}
