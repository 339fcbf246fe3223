//! Small dense-matrix helpers shared by the physics modules.

use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

pub type CMat = Mat<c64>;

pub const I: c64 = c64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> c64 {
    c64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

pub fn zeros(n: usize, m: usize) -> CMat {
    Mat::zeros(n, m)
}

pub fn commutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    a * b + b * a
}

pub fn adjoint(a: MatRef<'_, c64>) -> CMat {
    a.adjoint().to_owned()
}

/// Largest entry magnitude.
pub fn max_abs(a: MatRef<'_, c64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max(a[(i, j)].norm());
        }
    }
    m
}

pub fn max_abs_diff(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

pub fn frobenius(a: MatRef<'_, c64>) -> f64 {
    a.norm_l2()
}

/// Hilbert–Schmidt inner product `Tr[a† b]`.
pub fn hs_inner(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

pub fn trace(a: MatRef<'_, c64>) -> c64 {
    (0..a.nrows().min(a.ncols())).map(|i| a[(i, i)]).sum()
}

pub fn hermiticity_residual(a: MatRef<'_, c64>) -> f64 {
    max_abs_diff(a, a.adjoint().to_owned().as_ref())
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> CMat {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Column-stacking vectorization.
pub fn vec_cols(a: MatRef<'_, c64>) -> Vec<c64> {
    let mut out = Vec::with_capacity(a.nrows() * a.ncols());
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out.push(a[(i, j)]);
        }
    }
    out
}

pub fn unvec_cols(v: &[c64], n: usize) -> CMat {
    assert_eq!(v.len(), n * n);
    Mat::from_fn(n, n, |i, j| v[j * n + i])
}

pub fn mat_vec(a: MatRef<'_, c64>, x: &[c64]) -> Vec<c64> {
    assert_eq!(a.ncols(), x.len());
    let mut y = vec![c64::new(0.0, 0.0); a.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == c64::new(0.0, 0.0) {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

pub fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// All eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub fn hermitian_eigenvalues(h: MatRef<'_, c64>) -> Result<Vec<f64>> {
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Eigenvalues of a real symmetric matrix, ascending.
pub fn symmetric_eigenvalues(h: MatRef<'_, f64>) -> Result<Vec<f64>> {
    h.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))
}

/// Hermitian eigendecomposition; eigenvectors are the columns of the returned matrix.
pub fn hermitian_eigen(h: MatRef<'_, c64>) -> Result<(Vec<f64>, CMat)> {
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let vals = (0..h.nrows()).map(|i| evd.S()[i].re).collect();
    Ok((vals, evd.U().to_owned()))
}

/// `exp(-i t h)` for Hermitian `h`.
pub fn unitary_exp(h: MatRef<'_, c64>, t: f64) -> Result<CMat> {
    let (vals, vecs) = hermitian_eigen(h)?;
    let n = h.nrows();
    let phased = Mat::from_fn(n, n, |i, j| vecs[(i, j)] * c64::cis(-t * vals[j]));
    Ok(&phased * vecs.adjoint())
}
