//! Quantum Fisher information and related quantities.
//!
//! Everything is evaluated in the eigenbasis of the density matrix, where
//! `F_Q[rho, H] = sum_kl Q_kl^2 |<k|H|l>|^2`.

use crate::error::{Error, Result};
use crate::linalg::{
    cr, eig_matrix, matmul, Adjoint, hermiticity_deviation, identity, kron, local_sum, BipartiteDims, CMatrix,
    Hermitian, RMatrix, SpectralData, HERMITIAN_TOL,
};

/// Eigenvalues below `RANK_THRESHOLD * lambda_max` are treated as zero.
pub const RANK_THRESHOLD: f64 = 1e-12;
/// Density-matrix tolerance for trace and positivity.
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance for the cap-feasibility flag of a local Hamiltonian.
pub const CAP_TOL: f64 = 1e-9;

/// Validated density matrix with cached spectrum.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    op: Hermitian,
    dims: Option<BipartiteDims>,
    spectral: SpectralData,
    /// Eigenvalues after clamping to zero and applying the rank threshold.
    lambda: Vec<f64>,
}

impl DensityMatrix {
    /// Checks Hermiticity, unit trace and positivity, each to 1e-10.
    pub fn new(a: CMatrix, dims: Option<BipartiteDims>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if let Some(d) = dims {
            d.check(&a)?;
        }
        let dev = hermiticity_deviation(&a);
        if !(dev <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(dev));
        }
        let op = Hermitian::from_symmetrized(a);
        let tr = op.trace();
        if !((tr - 1.0).abs() <= STATE_TOL) {
            return Err(Error::TraceViolation(tr));
        }
        let spectral = op.eig()?;
        if !(spectral.min() >= -STATE_TOL) {
            return Err(Error::NotPositive(spectral.min()));
        }
        Ok(Self::assemble(op, dims, spectral))
    }

    pub fn bipartite(a: CMatrix, dims: BipartiteDims) -> Result<Self> {
        Self::new(a, Some(dims))
    }

    /// Nearest valid state: negative eigenvalues clamped to zero, then renormalized.
    /// Intended for outputs of numerical solvers.
    pub fn project(a: &CMatrix, dims: Option<BipartiteDims>) -> Result<Self> {
        if let Some(d) = dims {
            d.check(a)?;
        }
        let herm = crate::linalg::symmetrize(a);
        let s = eig_matrix(&herm)?;
        let total: f64 = s.eigenvalues.iter().map(|l| l.max(0.0)).sum();
        if !(total > 0.0) {
            return Err(Error::NotPositive(s.min()));
        }
        let op = Hermitian::from_symmetrized(s.apply(|l| l.max(0.0) / total));
        let spectral = op.eig()?;
        Ok(Self::assemble(op, dims, spectral))
    }

    pub fn maximally_mixed(dims: BipartiteDims) -> Self {
        let n = dims.total();
        Self::new(identity(n) * cr(1.0 / n as f64), Some(dims)).expect("maximally mixed state is valid")
    }

    fn assemble(op: Hermitian, dims: Option<BipartiteDims>, spectral: SpectralData) -> Self {
        let lmax = spectral.max().max(0.0);
        let lambda = spectral
            .eigenvalues
            .iter()
            .map(|&l| if l < RANK_THRESHOLD * lmax { 0.0 } else { l })
            .collect();
        DensityMatrix { op, dims, spectral, lambda }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn dims(&self) -> Option<BipartiteDims> {
        self.dims
    }

    /// Bipartite dimensions or a dimension-mismatch error.
    pub fn require_dims(&self) -> Result<BipartiteDims> {
        self.dims.ok_or_else(|| {
            Error::DimensionMismatch("operation requires a bipartite state".to_string())
        })
    }

    pub fn with_dims(mut self, dims: BipartiteDims) -> Result<Self> {
        dims.check(self.matrix())?;
        self.dims = Some(dims);
        Ok(self)
    }

    pub fn op(&self) -> &Hermitian {
        &self.op
    }

    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    /// Thresholded eigenvalues, descending.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    pub fn purity(&self) -> f64 {
        self.spectral.eigenvalues.iter().map(|l| l * l).sum()
    }

    pub fn rank(&self) -> usize {
        self.lambda.iter().filter(|&&l| l > 0.0).count()
    }

    /// `U^dagger A U` with `U` the eigenvector matrix.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        let u = &self.spectral.eigenvectors;
        matmul(&matmul(u, a, Adjoint::Left), u, Adjoint::None)
    }

    /// `U A U^dagger`.
    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        let u = &self.spectral.eigenvectors;
        matmul(&matmul(u, a, Adjoint::None), u, Adjoint::Right)
    }

    /// `Re Tr(rho A)`.
    pub fn expectation(&self, a: &CMatrix) -> f64 {
        crate::linalg::trace_product(self.matrix(), a)
    }

    /// `Tr(rho A^2) - Tr(rho A)^2`.
    pub fn variance(&self, a: &CMatrix) -> f64 {
        let m = self.expectation(a);
        self.expectation(&(a * a)) - m * m
    }

    fn check_operator(&self, a: &CMatrix) -> Result<()> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{} but the state has dimension {}",
                a.nrows(),
                a.ncols(),
                self.dim()
            )));
        }
        Ok(())
    }
}

/// Symmetric nonnegative coefficient matrix `Q_kl` in the eigenbasis of the state.
#[derive(Clone, Debug)]
pub struct QMatrix {
    pub q: RMatrix,
}

impl QMatrix {
    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// Entrywise square.
    pub fn squared(&self) -> RMatrix {
        self.q.component_mul(&self.q)
    }
}

/// `Q_kl = sqrt(2 (l_k - l_l)^2 / (l_k + l_l))`, zero where `l_k + l_l` vanishes.
pub fn q_matrix(rho: &DensityMatrix) -> QMatrix {
    let l = rho.eigenvalues();
    let n = l.len();
    let q = RMatrix::from_fn(n, n, |k, m| {
        let s = l[k] + l[m];
        if k == m || s <= 0.0 {
            0.0
        } else {
            (2.0 * (l[k] - l[m]).powi(2) / s).sqrt()
        }
    });
    QMatrix { q }
}

/// Quantity maximized by the see-saw and bounded by the relaxation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    /// Quantum Fisher information.
    Qfi,
    /// Four times the Wigner-Yanase skew information.
    Wy4,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Qfi => "qfi",
            Objective::Wy4 => "wy4",
        }
    }
}

/// Weight matrix `W` with objective `sum_kl W_kl |H~_kl|^2`.
///
/// `Qfi` gives `Q_kl^2`; `Wy4` gives `4 C_kl = 2 (sqrt(l_k) - sqrt(l_l))^2`.
pub fn weight_matrix(rho: &DensityMatrix, objective: Objective) -> RMatrix {
    match objective {
        Objective::Qfi => q_matrix(rho).squared(),
        Objective::Wy4 => wy_coefficients(rho) * 4.0,
    }
}

/// `C_kl = (sqrt(l_k) - sqrt(l_l))^2 / 2`.
pub fn wy_coefficients(rho: &DensityMatrix) -> RMatrix {
    let s: Vec<f64> = rho.eigenvalues().iter().map(|l| l.sqrt()).collect();
    let n = s.len();
    RMatrix::from_fn(n, n, |k, m| 0.5 * (s[k] - s[m]).powi(2))
}

/// `sum_kl W_kl |A~_kl|^2` for `A~` already in the eigenbasis.
pub(crate) fn weighted_norm(w: &RMatrix, a_tilde: &CMatrix) -> f64 {
    w.iter().zip(a_tilde.iter()).map(|(w, a)| w * a.norm_sqr()).sum()
}

/// `sum_kl W_kl Re(A~_kl conj(B~_kl))`.
pub(crate) fn weighted_inner(w: &RMatrix, a_tilde: &CMatrix, b_tilde: &CMatrix) -> f64 {
    w.iter()
        .zip(a_tilde.iter().zip(b_tilde.iter()))
        .map(|(w, (a, b))| w * (a * b.conj()).re)
        .sum()
}

/// Quantum Fisher information `F_Q[rho, H]`.
pub fn qfi(rho: &DensityMatrix, h: &CMatrix) -> Result<f64> {
    rho.check_operator(h)?;
    let w = q_matrix(rho).squared();
    Ok(weighted_norm(&w, &rho.to_eigenbasis(h)))
}

/// Two-operator form `sum_kl Q_kl^2 A_kl conj(B_kl)`; real for Hermitian arguments.
pub fn qfi_two(rho: &DensityMatrix, a: &CMatrix, b: &CMatrix) -> Result<f64> {
    rho.check_operator(a)?;
    rho.check_operator(b)?;
    let w = q_matrix(rho).squared();
    Ok(weighted_inner(&w, &rho.to_eigenbasis(a), &rho.to_eigenbasis(b)))
}

/// Fisher matrix `F_mn = qfi_two(rho, H_m, H_n)`.
pub fn fisher_matrix(rho: &DensityMatrix, hams: &[CMatrix]) -> Result<RMatrix> {
    for h in hams {
        rho.check_operator(h)?;
    }
    let w = q_matrix(rho).squared();
    let t: Vec<CMatrix> = hams.iter().map(|h| rho.to_eigenbasis(h)).collect();
    let n = hams.len();
    let mut f = RMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = weighted_inner(&w, &t[i], &t[j]);
            f[(i, j)] = v;
            f[(j, i)] = v;
        }
    }
    Ok(f)
}

/// Symmetric logarithmic derivative `M = 2i sum_kl (l_k - l_l)/(l_k + l_l) H_kl |k><l|`.
pub fn sld(rho: &DensityMatrix, h: &CMatrix) -> Result<Hermitian> {
    rho.check_operator(h)?;
    let l = rho.eigenvalues();
    let ht = rho.to_eigenbasis(h);
    let n = l.len();
    let mt = CMatrix::from_fn(n, n, |k, m| {
        let s = l[k] + l[m];
        if s <= 0.0 {
            cr(0.0)
        } else {
            crate::linalg::c(0.0, 2.0 * (l[k] - l[m]) / s) * ht[(k, m)]
        }
    });
    Ok(Hermitian::from_symmetrized(rho.from_eigenbasis(&mt)))
}

/// `<i[M, H]>`.
pub fn commutator_expectation(rho: &DensityMatrix, m: &CMatrix, h: &CMatrix) -> Result<f64> {
    rho.check_operator(m)?;
    rho.check_operator(h)?;
    let comm = m * h - h * m;
    // i * Tr(rho [M,H]); the trace of rho [M,H] is purely imaginary.
    let t: num_complex::Complex64 = (rho.matrix() * comm).trace();
    Ok(-t.im)
}

/// Error propagation `(Delta M)^2 / <i[M,H]>^2`.
pub fn error_propagation_variance(rho: &DensityMatrix, m: &CMatrix, h: &CMatrix) -> Result<f64> {
    let d = commutator_expectation(rho, m, h)?;
    let d2 = d * d;
    if d2 <= 1e-20 {
        return Err(Error::UninformativeMeasurement(d2));
    }
    Ok(rho.variance(m) / d2)
}

/// `sigma_max(H) - sigma_min(H)`.
pub fn delta_seminorm(h: &Hermitian) -> Result<f64> {
    let s = h.eig()?;
    Ok((s.max() - s.min()).max(0.0))
}

/// Local Hamiltonian `h1 (x) 1 + 1 (x) h2` with eigenvalue caps `(c1, c2)`.
#[derive(Clone, Debug)]
pub struct LocalHamiltonian {
    pub h1: Hermitian,
    pub h2: Hermitian,
    pub caps: (f64, f64),
}

impl LocalHamiltonian {
    pub fn new(h1: Hermitian, h2: Hermitian, caps: (f64, f64)) -> Result<Self> {
        if !(caps.0 > 0.0) || !caps.0.is_finite() {
            return Err(Error::OutOfRange { what: "cap c1", value: caps.0 });
        }
        if !(caps.1 > 0.0) || !caps.1.is_finite() {
            return Err(Error::OutOfRange { what: "cap c2", value: caps.1 });
        }
        Ok(LocalHamiltonian { h1, h2, caps })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.h1.dim(), self.h2.dim())
    }

    pub fn assembled(&self) -> CMatrix {
        local_sum(&self.h1, &self.h2)
    }

    /// Both parts scaled by `s`, caps unchanged.
    pub fn scaled(&self, s: f64) -> Self {
        LocalHamiltonian { h1: self.h1.scale(s), h2: self.h2.scale(s), caps: self.caps }
    }

    /// Spectra of `h_n` lie in `[-c_n, c_n]` up to 1e-9.
    pub fn is_cap_feasible(&self) -> Result<bool> {
        let ok = |h: &Hermitian, cap: f64| -> Result<bool> {
            let s = h.eig()?;
            Ok(s.min() >= -cap - CAP_TOL && s.max() <= cap + CAP_TOL)
        };
        Ok(ok(&self.h1, self.caps.0)? && ok(&self.h2, self.caps.1)?)
    }

    /// Lift of a single-subsystem operator to the full space.
    pub fn lift(h: &CMatrix, other_dim: usize, first: bool) -> CMatrix {
        if first {
            kron(h, &identity(other_dim))
        } else {
            kron(&identity(other_dim), h)
        }
    }
}

/// Separable bound `delta(h1)^2 + delta(h2)^2`.
pub fn fq_sep(ham: &LocalHamiltonian) -> Result<f64> {
    Ok(delta_seminorm(&ham.h1)?.powi(2) + delta_seminorm(&ham.h2)?.powi(2))
}

/// Metrological gain of `rho` for one Hamiltonian.
pub fn gain_for(rho: &DensityMatrix, ham: &LocalHamiltonian) -> Result<f64> {
    let sep = fq_sep(ham)?;
    if sep <= 1e-12 {
        return Err(Error::TrivialHamiltonian(sep));
    }
    Ok(qfi(rho, &ham.assembled())? / sep)
}

/// Wigner-Yanase skew information `Tr(H^2 rho) - Tr(H sqrt(rho) H sqrt(rho))`.
pub fn wy_skew(rho: &DensityMatrix, h: &CMatrix) -> Result<f64> {
    rho.check_operator(h)?;
    Ok(weighted_norm(&wy_coefficients(rho), &rho.to_eigenbasis(h)))
}

/// Result of a metrological gain optimization.
#[derive(Clone, Debug)]
pub struct GainReport {
    pub value: f64,
    pub qfi: f64,
    pub sep_bound: f64,
    pub optimal_hamiltonian: LocalHamiltonian,
    /// Cap angle: `(c1, c2) = (cos theta, sin theta)`.
    pub theta: f64,
    pub restarts: usize,
    pub iterations: Vec<usize>,
    pub restart_values: Vec<f64>,
    pub theta_evaluations: Vec<(f64, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, pauli_x, pauli_z};
    use nalgebra::DVector;

    fn pure(v: &[C]) -> DensityMatrix {
        let v = DVector::from_vec(v.to_vec());
        let v = &v / cr(v.norm());
        DensityMatrix::new(crate::linalg::outer(&v), None).unwrap()
    }
    type C = num_complex::Complex64;

    #[test]
    fn q_matrix_pure_state() {
        let rho = pure(&[cr(1.0), cr(0.0), cr(0.0)]);
        let q = q_matrix(&rho).q;
        for l in 1..3 {
            assert!((q[(0, l)] - 2f64.sqrt()).abs() < 1e-14);
        }
        assert_eq!(q[(1, 2)], 0.0);
        assert_eq!(q[(0, 0)], 0.0);
    }

    #[test]
    fn q_matrix_isotropic_spectrum() {
        let rho = DensityMatrix::new(Hermitian::diag(&[0.925, 0.025, 0.025, 0.025]).into_inner(), None).unwrap();
        let q = q_matrix(&rho).q;
        assert!((q[(0, 1)].powi(2) - 2.0 * 0.81 / 0.95).abs() < 1e-12);
        let mm = DensityMatrix::new(identity(4) * cr(0.25), None).unwrap();
        assert!(q_matrix(&mm).q.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn qfi_pure_is_four_variance() {
        let rho = pure(&[cr(0.6), c(0.0, 0.8)]);
        let h = pauli_x();
        let f = qfi(&rho, &h).unwrap();
        assert!((f - 4.0 * rho.variance(&h)).abs() < 1e-12);
    }

    #[test]
    fn qfi_commuting_is_zero() {
        let rho = DensityMatrix::new(Hermitian::diag(&[0.5, 0.3, 0.2]).into_inner(), None).unwrap();
        let h = Hermitian::diag(&[1.0, -2.0, 0.5]);
        assert!(qfi(&rho, &h).unwrap().abs() < 1e-15);
        assert!(sld(&rho, &h).unwrap().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn qfi_dimension_mismatch() {
        let rho = DensityMatrix::new(identity(2) * cr(0.5), None).unwrap();
        assert!(matches!(qfi(&rho, &identity(3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn density_matrix_violations_are_named() {
        let e = DensityMatrix::new(identity(2) * cr(0.45), None).unwrap_err();
        assert!(e.to_string().contains("trace violation"));
        let e = DensityMatrix::new(Hermitian::diag(&[1.2, -0.2]).into_inner(), None).unwrap_err();
        assert!(e.to_string().contains("positivity"));
        let mut a = identity(2) * cr(0.5);
        a[(0, 1)] = cr(0.1);
        let e = DensityMatrix::new(a, None).unwrap_err();
        assert!(e.to_string().contains("hermiticity"));
    }

    #[test]
    fn error_propagation_with_self_fails() {
        let rho = pure(&[cr(0.6), c(0.0, 0.8)]);
        let h = pauli_x();
        assert!(matches!(error_propagation_variance(&rho, &h, &h), Err(Error::UninformativeMeasurement(_))));
    }

    #[test]
    fn delta_and_sep() {
        assert!(delta_seminorm(&Hermitian::identity(3).scale(4.2)).unwrap().abs() < 1e-14);
        let z = Hermitian::new(pauli_z()).unwrap();
        assert!((delta_seminorm(&z).unwrap() - 2.0).abs() < 1e-14);
        let ham = LocalHamiltonian::new(z.clone(), z, (1.0, 1.0)).unwrap();
        assert!((fq_sep(&ham).unwrap() - 8.0).abs() < 1e-13);
        let zero = LocalHamiltonian::new(Hermitian::zeros(2), Hermitian::zeros(2), (1.0, 1.0)).unwrap();
        assert_eq!(fq_sep(&zero).unwrap(), 0.0);
        let rho = DensityMatrix::new(identity(4) * cr(0.25), None).unwrap();
        assert!(matches!(gain_for(&rho, &zero), Err(Error::TrivialHamiltonian(_))));
    }

    #[test]
    fn wy_pure_and_mixed() {
        let rho = pure(&[cr(0.6), c(0.0, 0.8)]);
        let h = pauli_x();
        assert!((4.0 * wy_skew(&rho, &h).unwrap() - qfi(&rho, &h).unwrap()).abs() < 1e-12);
        let mm = DensityMatrix::new(identity(3) * cr(1.0 / 3.0), None).unwrap();
        assert!(wy_skew(&mm, &Hermitian::diag(&[1.0, 2.0, 3.0])).unwrap().abs() < 1e-15);
    }
}
