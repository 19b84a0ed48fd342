//! Dense complex helpers over `nalgebra` matrices.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Tolerance used when checking unitarity and hermiticity of user input.
pub const MATRIX_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn cvec(entries: &[Complex64]) -> CVector {
    CVector::from_column_slice(entries)
}

pub fn rvec(entries: &[f64]) -> CVector {
    CVector::from_iterator(entries.len(), entries.iter().map(|&x| c(x, 0.0)))
}

/// Build a complex matrix from row-major real and imaginary parts.
pub fn cmat(re: &[&[f64]], im: Option<&[&[f64]]>) -> CMatrix {
    let n = re.len();
    let m = re.first().map_or(0, |r| r.len());
    CMatrix::from_fn(n, m, |i, j| {
        let imag = im.map_or(0.0, |im| im[i][j]);
        c(re[i][j], imag)
    })
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entry of |U†U − I|; infinite for non-square input.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let p = u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols());
    max_abs(&p)
}

/// Largest entry of |A − A†|; infinite for non-square input.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(a - a.adjoint()))
}

pub fn check_unitary(u: &CMatrix) -> Result<()> {
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("unitary matrix"));
    }
    let defect = unitarity_defect(u);
    if defect > MATRIX_TOL {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    let eig = a.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Pivot-skipping Cholesky factor of a Hermitian positive semidefinite
/// matrix: returns `L` (n × r) with `G = L L†`, where r is the numerical
/// rank. A pivot is skipped when its residual diagonal is at most
/// `rel_tol` times the largest diagonal entry of `G`.
pub fn psd_cholesky(g: &CMatrix, rel_tol: f64) -> CMatrix {
    let n = g.nrows();
    let scale = (0..n).fold(0.0_f64, |acc, i| acc.max(g[(i, i)].re));
    let mut r = g.clone();
    let mut cols: Vec<CVector> = Vec::new();
    if scale <= 0.0 {
        return CMatrix::zeros(n, 0);
    }
    for k in 0..n {
        let d = r[(k, k)].re;
        if d <= rel_tol * scale {
            continue;
        }
        let s = libm::sqrt(d);
        let mut col = CVector::zeros(n);
        for i in k..n {
            col[i] = r[(i, k)] / s;
        }
        col[k] = c(s, 0.0);
        for i in k..n {
            for j in k..n {
                r[(i, j)] -= col[i] * col[j].conj();
            }
        }
        cols.push(col);
    }
    CMatrix::from_fn(n, cols.len(), |i, j| cols[j][i])
}

/// Unitary whose first column is `v` (normalized), completed by
/// Gram-Schmidt over the standard basis.
pub fn unitary_completion(v: &CVector) -> Result<CMatrix> {
    let n = v.len();
    let norm = v.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::ZeroNorm);
    }
    let mut cols: Vec<CVector> = Vec::with_capacity(n);
    cols.push(v / c(norm, 0.0));
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = CVector::zeros(n);
        w[e] = ONE;
        for q in &cols {
            let p = q.dotc(&w);
            w -= q * p;
        }
        let wn = w.norm();
        if wn > 1e-8 {
            cols.push(w / c(wn, 0.0));
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| cols[j][i]))
}

/// Normalized Schmidt coefficients of `Σ_ij M_ij |u_i⟩|v_j⟩` where the
/// non-orthogonal families have Gram matrices `g_left` and `g_right`.
/// The coefficients are divided by the norm of the state, so they are the
/// square roots of the reduced-density eigenvalues.
pub fn schmidt_values(m: &CMatrix, g_left: &CMatrix, g_right: &CMatrix) -> Vec<f64> {
    let a = psd_cholesky(g_left, GRAM_RANK_TOL).map(|z| z.conj());
    let b = psd_cholesky(g_right, GRAM_RANK_TOL).map(|z| z.conj());
    let t = a.transpose() * m * b;
    let total = t.norm();
    if !(total > 0.0) {
        return Vec::new();
    }
    singular_values(&t).into_iter().map(|s| s / total).collect()
}

/// Relative pivot threshold for Gram factorizations of probe packets.
pub const GRAM_RANK_TOL: f64 = 1e-13;

/// Lexicographic total order on complex numbers.
pub fn cmp_complex(a: &Complex64, b: &Complex64) -> core::cmp::Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

pub fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a.re - b.re).abs() <= tol && (a.im - b.im).abs() <= tol
}
