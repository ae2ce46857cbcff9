#![allow(dead_code)]

use nalgebra::DVector;
use qfiopt::linalg::{c, cr, outer, CMatrix, Hermitian};
use qfiopt::optimizers::{random_density, random_hermitian, random_vector};
use qfiopt::{BipartiteDims, DensityMatrix, LocalHamiltonian};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dims(d1: usize, d2: usize) -> BipartiteDims {
    BipartiteDims::new(d1, d2).unwrap()
}

pub fn state(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    DensityMatrix::new(random_density(d, rng), None).unwrap()
}

pub fn bipartite_state(d1: usize, d2: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    DensityMatrix::bipartite(random_density(d1 * d2, rng), dims(d1, d2)).unwrap()
}

/// Random state of rank `r`.
pub fn low_rank_state(d: usize, r: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let mut m = CMatrix::zeros(d, d);
    for _ in 0..r {
        let v = random_vector(d, rng);
        m += outer(&v);
    }
    let tr = m.trace().re;
    DensityMatrix::new(m / cr(tr), None).unwrap()
}

pub fn pure(d: usize, rng: &mut ChaCha8Rng) -> (DVector<qfiopt::C64>, DensityMatrix) {
    let v = random_vector(d, rng);
    let v = &v / cr(v.norm());
    let rho = DensityMatrix::new(outer(&v), None).unwrap();
    (v, rho)
}

pub fn herm(d: usize, rng: &mut ChaCha8Rng) -> Hermitian {
    random_hermitian(d, rng)
}

/// Haar-like unitary from the QR factor of a complex Gaussian matrix.
pub fn unitary(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    g.qr().q()
}

/// Hermitian with spectrum drawn uniformly from `[-cap, cap]`.
pub fn capped(d: usize, cap: f64, rng: &mut ChaCha8Rng) -> Hermitian {
    let u = unitary(d, rng);
    let diag = CMatrix::from_diagonal(&DVector::from_fn(d, |_, _| cr(cap * (2.0 * rng.random::<f64>() - 1.0))));
    Hermitian::from_symmetrized(&u * diag * u.adjoint())
}

/// Hermitian with spectrum in `{-cap, +cap}`.
pub fn extreme(d: usize, cap: f64, rng: &mut ChaCha8Rng) -> Hermitian {
    let u = unitary(d, rng);
    let diag = CMatrix::from_diagonal(&DVector::from_fn(d, |_, _| cr(if rng.random::<bool>() { cap } else { -cap })));
    Hermitian::from_symmetrized(&u * diag * u.adjoint())
}

pub fn capped_local(d1: usize, d2: usize, caps: (f64, f64), rng: &mut ChaCha8Rng) -> LocalHamiltonian {
    LocalHamiltonian::new(capped(d1, caps.0, rng), capped(d2, caps.1, rng), caps).unwrap()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// QFI of the two-qubit isotropic state for `sigma_z (x) 1 + 1 (x) sigma_z`, evaluated by hand
/// in the Bell basis where the state is diagonal.
pub fn isotropic_qubit_qfi(p: f64) -> f64 {
    let s = 0.5f64.sqrt();
    let bell = [[s, 0.0, 0.0, s], [s, 0.0, 0.0, -s], [0.0, s, s, 0.0], [0.0, s, -s, 0.0]];
    let h_diag = [2.0, 0.0, 0.0, -2.0];
    let lam = [1.0 - 0.75 * p, p / 4.0, p / 4.0, p / 4.0];
    let mut f = 0.0;
    for k in 0..4 {
        for l in 0..4 {
            let h_kl: f64 = (0..4).map(|i| bell[k][i] * h_diag[i] * bell[l][i]).sum();
            let sum = lam[k] + lam[l];
            if sum > 0.0 {
                f += 2.0 * (lam[k] - lam[l]).powi(2) / sum * h_kl * h_kl;
            }
        }
    }
    f
}
