//! Real embedding of complex Hermitian matrices, `A -> [[Re A, -Im A], [Im A, Re A]]`.
//!
//! The embedding doubles every eigenvalue's multiplicity and `<emb A, emb B> = 2 Tr(A B)`.

use std::collections::BTreeMap;

use crate::linalg::{c, CMatrix, RMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ComplexEmbedding {
    pub n: usize,
}

impl ComplexEmbedding {
    /// Factor relating real inner products of embeddings to complex traces.
    pub const OBJECTIVE_FACTOR: f64 = 2.0;

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn embed(&self, a: &CMatrix) -> RMatrix {
        embed(a)
    }

    pub fn extract(&self, r: &RMatrix) -> CMatrix {
        extract(r)
    }
}

pub fn embed_complex_psd(n: usize) -> ComplexEmbedding {
    ComplexEmbedding { n }
}

pub fn embed(a: &CMatrix) -> RMatrix {
    let n = a.nrows();
    RMatrix::from_fn(2 * n, 2 * n, |i, j| {
        let z = a[(i % n, j % n)];
        match (i < n, j < n) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Reads the complex matrix back from the left column blocks.
pub fn extract(r: &RMatrix) -> CMatrix {
    let n = r.nrows() / 2;
    CMatrix::from_fn(n, n, |i, j| c(r[(i, j)], r[(i + n, j)]))
}

/// Sparse Hermitian matrix as a list of full `(row, col, value)` entries.
pub type SparseHermitian = Vec<(usize, usize, C64)>;

/// Upper-triangle entries `(r, c, v)` with `r <= c` of the embedding of a sparse Hermitian.
pub fn embed_sparse(a: &SparseHermitian, n: usize) -> Vec<(usize, usize, f64)> {
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut put = |r: usize, col: usize, v: f64| {
        if v != 0.0 && r <= col {
            *acc.entry((r, col)).or_insert(0.0) += v;
        }
    };
    for &(i, j, z) in a {
        put(i, j, z.re);
        put(i + n, j + n, z.re);
        put(i + n, j, z.im);
        put(i, j + n, -z.im);
    }
    acc.into_iter().filter(|e| e.1 != 0.0).map(|((r, col), v)| (r, col, v)).collect()
}

/// Real basis of `d x d` Hermitian matrices: `e_pp`, then `e_pq + e_qp` and
/// `i e_pq - i e_qp` for `p < q` (all real parts row-major, then all imaginary parts).
pub fn hermitian_basis(d: usize) -> Vec<SparseHermitian> {
    let mut out: Vec<SparseHermitian> = (0..d).map(|p| vec![(p, p, c(1.0, 0.0))]).collect();
    for p in 0..d {
        for q in p + 1..d {
            out.push(vec![(p, q, c(1.0, 0.0)), (q, p, c(1.0, 0.0))]);
        }
    }
    for p in 0..d {
        for q in p + 1..d {
            out.push(vec![(p, q, c(0.0, 1.0)), (q, p, c(0.0, -1.0))]);
        }
    }
    out
}

/// Traceless real basis: off-diagonal elements as in [`hermitian_basis`], then
/// `e_pp - e_{p+1,p+1}`.
pub fn traceless_basis(d: usize) -> Vec<SparseHermitian> {
    let mut out: Vec<SparseHermitian> = hermitian_basis(d).into_iter().skip(d).collect();
    for p in 0..d.saturating_sub(1) {
        out.push(vec![(p, p, c(1.0, 0.0)), (p + 1, p + 1, c(-1.0, 0.0))]);
    }
    out
}

pub fn sparse_to_dense(a: &SparseHermitian, n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(n, n);
    for &(i, j, z) in a {
        m[(i, j)] += z;
    }
    m
}

/// `Re Tr(C A)` for sparse `A`.
pub fn sparse_trace_product(cm: &CMatrix, a: &SparseHermitian) -> f64 {
    a.iter().map(|&(i, j, z)| (cm[(j, i)] * z).re).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cr, symmetric_eig, Hermitian};

    #[test]
    fn identity_embeds_to_identity() {
        let e = embed_complex_psd(3);
        assert_eq!(e.embed(&CMatrix::identity(3, 3)), RMatrix::identity(6, 6));
    }

    #[test]
    fn spectrum_doubles() {
        // eigenvalues (2, -1) after a complex rotation
        let u = CMatrix::from_row_slice(2, 2, &[c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0)]);
        let a = &u * Hermitian::diag(&[2.0, -1.0]).into_inner() * u.adjoint();
        let (ev, _) = symmetric_eig(&embed(&a)).unwrap();
        let want = [2.0, 2.0, -1.0, -1.0];
        for (x, w) in ev.iter().zip(want) {
            assert!((x - w).abs() < 1e-12);
        }
    }

    #[test]
    fn extract_round_trip_and_inner_product() {
        let a = CMatrix::from_row_slice(2, 2, &[cr(1.0), c(0.5, -0.25), c(0.5, 0.25), cr(-3.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[cr(0.2), c(-1.0, 2.0), c(-1.0, -2.0), cr(0.7)]);
        assert_eq!(extract(&embed(&a)), a);
        let lhs = embed(&a).dot(&embed(&b));
        let rhs = (&a * &b).trace().re * ComplexEmbedding::OBJECTIVE_FACTOR;
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn sparse_embedding_matches_dense() {
        for g in traceless_basis(3) {
            let dense = embed(&sparse_to_dense(&g, 3));
            let sp = embed_sparse(&g, 3);
            let mut rebuilt = RMatrix::zeros(6, 6);
            for (r, col, v) in sp {
                rebuilt[(r, col)] = v;
                rebuilt[(col, r)] = v;
            }
            assert_eq!(rebuilt, dense);
        }
    }
}
