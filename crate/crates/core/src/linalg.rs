//! Dense complex helpers: eigendecompositions, condition numbers, and small utilities
//! shared by the preconditioner and the spectral diagnostics.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);

/// Eigenvalues and unit-norm eigenvectors (columns) of a square matrix.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<C64>,
    pub vectors: DMatrix<C64>,
}

pub fn complexify(a: &DMatrix<f64>) -> DMatrix<C64> {
    a.map(|x| C64::new(x, 0.0))
}

fn to_faer(a: &DMatrix<C64>) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

fn to_faer_real(a: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)])
}

/// General eigendecomposition with unit-norm eigenvectors.
pub fn eig_general(a: &DMatrix<C64>) -> Result<EigenPairs> {
    let n = a.nrows();
    if n == 0 {
        return Ok(EigenPairs {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = to_faer(a).eigen().map_err(|e| {
        Error::Eigensolver(format!("general eigensolver failed for n = {n}: {e:?}"))
    })?;
    let s = eig.S();
    let u = eig.U();
    let values: Vec<C64> = (0..n).map(|i| s[i]).collect();
    let mut vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    normalize_columns(&mut vectors);
    Ok(EigenPairs { values, vectors })
}

/// Eigendecomposition of a Hermitian matrix: real ascending eigenvalues and a unitary eigenvector matrix.
pub fn eig_hermitian(a: &DMatrix<C64>) -> Result<(Vec<f64>, DMatrix<C64>)> {
    let n = a.nrows();
    let eig = to_faer(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| {
            Error::Eigensolver(format!("Hermitian eigensolver failed for n = {n}: {e:?}"))
        })?;
    let s = eig.S();
    let u = eig.U();
    Ok((
        (0..n).map(|i| s[i].re).collect(),
        DMatrix::from_fn(n, n, |i, j| u[(i, j)]),
    ))
}

/// Eigenvalues of a real matrix.
pub fn eigenvalues_real(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    to_faer_real(a)
        .eigenvalues()
        .map_err(|e| Error::Eigensolver(format!("eigensolver failed for n = {}: {e:?}", a.nrows())))
}

pub fn normalize_columns(v: &mut DMatrix<C64>) {
    for mut col in v.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= C64::new(nrm, 0.0);
        }
    }
}

fn ratio(sv: &[f64]) -> f64 {
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if sv.iter().any(|x| x.is_nan()) {
        f64::NAN
    } else if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// 2-norm condition number from the singular values; NaN if the SVD fails.
pub fn condition_number(a: &DMatrix<C64>) -> f64 {
    to_faer(a)
        .singular_values()
        .map(|sv| ratio(&sv))
        .unwrap_or(f64::NAN)
}

pub fn condition_number_real(a: &DMatrix<f64>) -> f64 {
    to_faer_real(a)
        .singular_values()
        .map(|sv| ratio(&sv))
        .unwrap_or(f64::NAN)
}

/// Solves `a x = b` by partial-pivoting LU for a complex system.
pub fn solve_complex(a: &DMatrix<C64>, b: &DVector<C64>) -> Result<DVector<C64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::NumericalFailure("singular complex system".into()))
}

/// Inverse via LU column solves.
pub fn inverse_complex(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    a.clone()
        .lu()
        .solve(&DMatrix::<C64>::identity(n, n))
        .ok_or_else(|| Error::NumericalFailure("singular eigenvector matrix".into()))
}

pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Max-norm of the difference of two vectors.
pub fn max_abs_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Dense Kronecker product `a ⊗ b`.
pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_eigenpairs_satisfy_definition() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, -1.0, 0.5, 3.0, 0.2, 0.0, 1.0]);
        let ac = complexify(&a);
        let e = eig_general(&ac).unwrap();
        for k in 0..3 {
            let v = e.vectors.column(k).into_owned();
            let r = &ac * &v - v * e.values[k];
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn hermitian_eigen_is_unitary() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 2.0),
                C64::new(0.0, -2.0),
                C64::new(-1.0, 0.0),
            ],
        );
        let (vals, w) = eig_hermitian(&a).unwrap();
        let wtw = w.adjoint() * &w;
        assert!((wtw - DMatrix::<C64>::identity(2, 2)).norm() < 1e-13);
        let mut s: Vec<f64> = vals.clone();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((s[1] - 5f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn condition_of_diagonal() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(4.0, 0.0),
            C64::new(0.5, 0.0),
        ]));
        assert!((condition_number(&d) - 8.0).abs() < 1e-12);
    }
}
