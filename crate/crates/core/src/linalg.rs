//! Dense complex matrix kernel.
//!
//! Subsystem 1 is always the slow (outer) tensor index: the basis state
//! `|i, j>` of a `d1 x d2` system sits at row `i * d2 + j`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::ops::Deref;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type RMatrix = DMatrix<f64>;

/// Tolerance for the Hermiticity check performed on construction.
pub const HERMITIAN_TOL: f64 = 1e-10;

const EIG_MAX_ITERS: usize = 10_000;
const SVD_MAX_ITERS: usize = 10_000;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest absolute entry.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Largest absolute entry of `a - b`. Shapes must agree.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

/// Largest deviation from conjugate-transpose symmetry.
pub fn hermiticity_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

/// `(A + A^dagger) / 2`.
pub fn symmetrize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * cr(0.5)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn to_complex(a: &RMatrix) -> CMatrix {
    a.map(cr)
}

/// Dense Hermitian operator. The matrix is exactly self-adjoint after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian(CMatrix);

impl Hermitian {
    /// Validates Hermiticity to [`HERMITIAN_TOL`] and symmetrizes.
    pub fn new(a: CMatrix) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() == 0 {
            return Err(Error::DimensionMismatch(format!(
                "Hermitian operator must be square and non-empty, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let dev = hermiticity_deviation(&a);
        if !(dev <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Hermitian(symmetrize(&a)))
    }

    /// Symmetrizes without the tolerance check. For matrices Hermitian by construction.
    pub fn from_symmetrized(a: CMatrix) -> Self {
        assert_eq!(a.nrows(), a.ncols(), "Hermitian operator must be square");
        Hermitian(symmetrize(&a))
    }

    pub fn from_real(a: &RMatrix) -> Result<Self> {
        Self::new(to_complex(a))
    }

    pub fn diag(values: &[f64]) -> Self {
        let v = DVector::from_iterator(values.len(), values.iter().map(|&x| cr(x)));
        Hermitian(CMatrix::from_diagonal(&v))
    }

    pub fn identity(n: usize) -> Self {
        Hermitian(identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        Hermitian(CMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn scale(&self, s: f64) -> Self {
        Hermitian(&self.0 * cr(s))
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn eig(&self) -> Result<SpectralData> {
        hermitian_eig(self)
    }
}

impl Deref for Hermitian {
    type Target = CMatrix;
    fn deref(&self) -> &CMatrix {
        &self.0
    }
}

/// Eigendecomposition with eigenvalues sorted descending and eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl SpectralData {
    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// `U diag(f(lambda)) U^dagger`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let u = &self.eigenvectors;
        let mut scaled = u.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let s = f(l);
            scaled.column_mut(j).scale_mut(s);
        }
        &scaled * u.adjoint()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.apply(|x| x)
    }

    /// Column `k` as a vector.
    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.eigenvectors.column(k).into_owned()
    }
}

/// Hermitian eigendecomposition, eigenvalues descending.
pub fn hermitian_eig(a: &Hermitian) -> Result<SpectralData> {
    eig_matrix(a.matrix())
}

/// Same as [`hermitian_eig`] for a matrix assumed exactly Hermitian.
pub(crate) fn eig_matrix(a: &CMatrix) -> Result<SpectralData> {
    let n = a.nrows();
    let eig = a
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITERS)
        .ok_or(Error::EigenNonConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenNonConvergence);
    }
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpectralData { eigenvalues, eigenvectors })
}

/// Real symmetric eigendecomposition, eigenvalues descending.
pub fn symmetric_eig(a: &RMatrix) -> Result<(Vec<f64>, RMatrix)> {
    let n = a.nrows();
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITERS)
        .ok_or(Error::EigenNonConvergence)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(Error::EigenNonConvergence);
    }
    let mut vecs = RMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((vals, vecs))
}

/// Dimensions of a bipartite system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BipartiteDims {
    pub d1: usize,
    pub d2: usize,
}

impl BipartiteDims {
    pub fn new(d1: usize, d2: usize) -> Result<Self> {
        if d1 < 2 || d2 < 2 {
            return Err(Error::DimensionMismatch(format!(
                "bipartite dimensions must be at least 2, got ({d1}, {d2})"
            )));
        }
        Ok(BipartiteDims { d1, d2 })
    }

    pub fn total(&self) -> usize {
        self.d1 * self.d2
    }

    pub fn of(&self, s: Subsystem) -> usize {
        match s {
            Subsystem::First => self.d1,
            Subsystem::Second => self.d2,
        }
    }

    pub fn check(&self, a: &CMatrix) -> Result<()> {
        let n = self.total();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "operator is {}x{} but dims ({}, {}) require {n}x{n}",
                a.nrows(),
                a.ncols(),
                self.d1,
                self.d2
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Tensor product with `(A (x) B)[(i,k),(j,l)] = A[i,j] B[k,l]`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Which factors of a product are conjugate-transposed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Adjoint {
    None,
    Left,
    Right,
}

/// Complex matrix product through a blocked kernel, optionally with one factor adjoint.
pub fn matmul(a: &CMatrix, b: &CMatrix, adjoint: Adjoint) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    // an adjoint factor is read as its conjugate with row and column strides swapped
    let conj_a;
    let conj_b;
    let (a, m, k, ra, ca) = match adjoint {
        Adjoint::Left => {
            conj_a = a.conjugate();
            (&conj_a, ac, ar, ar as isize, 1)
        }
        _ => (a, ar, ac, 1, ar as isize),
    };
    let (b, kb, n, rb, cb) = match adjoint {
        Adjoint::Right => {
            conj_b = b.conjugate();
            (&conj_b, bc, br, br as isize, 1)
        }
        _ => (b, br, bc, 1, br as isize),
    };
    assert_eq!(k, kb, "inner dimensions of matrix product differ");
    let mut out = CMatrix::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    // SAFETY: Complex<f64> is repr(C) with layout [re, im]; the pointers cover the full
    // column-major buffers and the strides stay inside them.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            ra,
            ca,
            b.as_ptr() as *const [f64; 2],
            rb,
            cb,
            [0.0, 0.0],
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    out
}

/// `h1 (x) 1 + 1 (x) h2`.
pub fn local_sum(h1: &CMatrix, h2: &CMatrix) -> CMatrix {
    kron(h1, &identity(h2.nrows())) + kron(&identity(h1.nrows()), h2)
}

/// Partial trace keeping subsystem `keep`.
pub fn partial_trace(a: &CMatrix, dims: BipartiteDims, keep: Subsystem) -> Result<CMatrix> {
    dims.check(a)?;
    let (d1, d2) = (dims.d1, dims.d2);
    Ok(match keep {
        Subsystem::First => CMatrix::from_fn(d1, d1, |i, k| {
            (0..d2).map(|j| a[(i * d2 + j, k * d2 + j)]).sum()
        }),
        Subsystem::Second => CMatrix::from_fn(d2, d2, |j, l| {
            (0..d1).map(|i| a[(i * d2 + j, i * d2 + l)]).sum()
        }),
    })
}

/// Partial transpose on one subsystem; an exact involution.
pub fn partial_transpose(a: &CMatrix, dims: BipartiteDims, sub: Subsystem) -> Result<CMatrix> {
    dims.check(a)?;
    let d2 = dims.d2;
    let n = dims.total();
    Ok(CMatrix::from_fn(n, n, |r, col| {
        let (i, j) = (r / d2, r % d2);
        let (k, l) = (col / d2, col % d2);
        match sub {
            Subsystem::First => a[(k * d2 + j, i * d2 + l)],
            Subsystem::Second => a[(i * d2 + l, k * d2 + j)],
        }
    }))
}

/// Realignment `R[(i,k),(j,l)] = <i,j| rho |k,l>`, a `d1^2 x d2^2` matrix.
pub fn realign(a: &CMatrix, dims: BipartiteDims) -> Result<CMatrix> {
    dims.check(a)?;
    let (d1, d2) = (dims.d1, dims.d2);
    Ok(CMatrix::from_fn(d1 * d1, d2 * d2, |r, col| {
        let (i, k) = (r / d1, r % d1);
        let (j, l) = (col / d2, col % d2);
        a[(i * d2 + j, k * d2 + l)]
    }))
}

/// Inverse of [`realign`].
pub fn unrealign(r: &CMatrix, dims: BipartiteDims) -> Result<CMatrix> {
    let (d1, d2) = (dims.d1, dims.d2);
    if r.nrows() != d1 * d1 || r.ncols() != d2 * d2 {
        return Err(Error::DimensionMismatch(format!(
            "realigned matrix is {}x{} but dims ({d1}, {d2}) require {}x{}",
            r.nrows(),
            r.ncols(),
            d1 * d1,
            d2 * d2
        )));
    }
    let n = d1 * d2;
    Ok(CMatrix::from_fn(n, n, |row, col| {
        let (i, j) = (row / d2, row % d2);
        let (k, l) = (col / d2, col % d2);
        r[(i * d1 + k, j * d2 + l)]
    }))
}

/// Singular values, descending.
pub fn singular_values(x: &CMatrix) -> Result<Vec<f64>> {
    if x.is_empty() {
        return Ok(Vec::new());
    }
    let svd = x
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdNonConvergence)?;
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdNonConvergence);
    }
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Thin SVD `X = W diag(s) V^dagger`, returned as `(W, s, V^dagger)`.
pub fn svd(x: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let svd = x
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or(Error::SvdNonConvergence)?;
    let u = svd.u.ok_or(Error::SvdNonConvergence)?;
    let v_t = svd.v_t.ok_or(Error::SvdNonConvergence)?;
    Ok((u, svd.singular_values.iter().copied().collect(), v_t))
}

/// Sum of singular values.
pub fn trace_norm(x: &CMatrix) -> Result<f64> {
    Ok(singular_values(x)?.iter().sum())
}

/// Frobenius norm `sqrt(Tr(X X^dagger))`.
pub fn hs_norm(x: &CMatrix) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Entrywise product.
pub fn hadamard(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch(format!(
            "hadamard product of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.component_mul(b))
}

/// Permutes tensor factors. Factor `perm[m]` of the input becomes factor `m` of the output.
pub fn permute_subsystems(a: &CMatrix, dims: &[usize], perm: &[usize]) -> Result<CMatrix> {
    let n: usize = dims.iter().product();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{} but subsystem dims {dims:?} multiply to {n}",
            a.nrows(),
            a.ncols()
        )));
    }
    let mut seen = vec![false; dims.len()];
    if perm.len() != dims.len()
        || perm.iter().any(|&p| p >= dims.len() || std::mem::replace(&mut seen[p], true))
    {
        return Err(Error::InvalidArgument(format!(
            "{perm:?} is not a permutation of {} subsystems",
            dims.len()
        )));
    }
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    // map[new index] = old index
    let map: Vec<usize> = (0..n)
        .map(|idx| {
            let mut rem = idx;
            let mut digits = vec![0usize; dims.len()];
            for m in (0..dims.len()).rev() {
                digits[perm[m]] = rem % new_dims[m];
                rem /= new_dims[m];
            }
            digits.iter().zip(dims).fold(0, |acc, (&x, &d)| acc * d + x)
        })
        .collect();
    Ok(CMatrix::from_fn(n, n, |r, col| a[(map[r], map[col])]))
}

/// Regroups a four-factor operator `A (x) B (x) C (x) D` into the bipartition given by
/// `grouping`, e.g. `[[0, 2], [1, 3]]` yields the `AC | BD` cut.
pub fn reorder_to_bipartition(
    a: &CMatrix,
    dims4: [usize; 4],
    grouping: [[usize; 2]; 2],
) -> Result<CMatrix> {
    let perm = [grouping[0][0], grouping[0][1], grouping[1][0], grouping[1][1]];
    permute_subsystems(a, &dims4, &perm)
}

/// Undoes [`reorder_to_bipartition`] for the same `dims4` and `grouping`.
pub fn reorder_from_bipartition(
    a: &CMatrix,
    dims4: [usize; 4],
    grouping: [[usize; 2]; 2],
) -> Result<CMatrix> {
    let perm = [grouping[0][0], grouping[0][1], grouping[1][0], grouping[1][1]];
    let mut inv = [0usize; 4];
    for (m, &p) in perm.iter().enumerate() {
        if p >= 4 {
            return Err(Error::InvalidArgument(format!("invalid grouping {grouping:?}")));
        }
        inv[p] = m;
    }
    let new_dims = perm.map(|p| dims4[p]);
    permute_subsystems(a, &new_dims, &inv)
}

/// `|v><v|` for a column vector.
pub fn outer(v: &DVector<C64>) -> CMatrix {
    v * v.adjoint()
}

/// Real part of `Tr(A B)`.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += (a[(i, k)] * b[(k, i)]).re;
        }
    }
    acc
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(0.0), c(0.0, -1.0), c(0.0, 1.0), cr(0.0)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
}
