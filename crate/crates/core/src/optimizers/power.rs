//! Power iteration for the top eigenpair of a positive semidefinite operator.

use nalgebra::DVector;
use rand::Rng;

use super::random_vector;
use crate::error::{Error, Result};
use crate::linalg::{cr, Hermitian, C64};

#[derive(Clone, Debug)]
pub struct PowerResult {
    pub eigenvalue: f64,
    pub eigenvector: DVector<C64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `x <- (A + s 1) x / |(A + s 1) x|` from a random start until the residual
/// `|A x - l x|` drops below `tol`. The shift `s` is removed from the reported eigenvalue.
pub fn power_iteration<R: Rng + ?Sized>(
    a: &Hermitian,
    tol: f64,
    max_iters: usize,
    rng: &mut R,
    shift: Option<f64>,
) -> Result<PowerResult> {
    if !(tol > 0.0) {
        return Err(Error::OutOfRange { what: "tolerance", value: tol });
    }
    let n = a.dim();
    let s = shift.unwrap_or(0.0);
    let mut x = random_vector(n, rng);
    x /= cr(x.norm());
    let mut eigenvalue = 0.0;
    for it in 1..=max_iters {
        let ax = a.matrix() * &x;
        let y = &ax + &x * cr(s);
        let norm = y.norm();
        if norm == 0.0 {
            // start orthogonal to the range of A + s1
            return Ok(PowerResult { eigenvalue: -s, eigenvector: x, iterations: it, converged: true });
        }
        x = y / cr(norm);
        let ax = a.matrix() * &x;
        eigenvalue = x.dotc(&ax).re;
        let residual = (&ax - &x * cr(eigenvalue)).norm();
        if residual <= tol {
            return Ok(PowerResult { eigenvalue, eigenvector: x, iterations: it, converged: true });
        }
    }
    Ok(PowerResult { eigenvalue, eigenvector: x, iterations: max_iters, converged: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::outer;

    #[test]
    fn diagonal() {
        let mut rng = super::super::restart_rng(1, 0);
        let r = power_iteration(&Hermitian::diag(&[1.0, 2.0, 3.0]), 1e-10, 10_000, &mut rng, None).unwrap();
        assert!(r.converged);
        assert!((r.eigenvalue - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rank_one_in_one_step() {
        let v = DVector::from_vec(vec![cr(1.0), cr(2.0), cr(-1.0)]);
        let a = Hermitian::new(outer(&v)).unwrap();
        let mut rng = super::super::restart_rng(2, 0);
        let r = power_iteration(&a, 1e-10, 100, &mut rng, None).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.eigenvalue - 6.0).abs() < 1e-12);
    }

    #[test]
    fn shift_handles_indefinite() {
        let mut rng = super::super::restart_rng(3, 0);
        let a = Hermitian::diag(&[-5.0, 1.0, 2.0]);
        let r = power_iteration(&a, 1e-10, 10_000, &mut rng, Some(5.0)).unwrap();
        assert!((r.eigenvalue - 2.0).abs() < 1e-9);
    }
}
