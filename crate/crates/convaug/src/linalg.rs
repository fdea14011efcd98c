//! Small dense linear-algebra helpers shared across modules.

use rand::Rng;

use crate::rng::normal;
use crate::scalar::{sc, Matrix, Scalar, Vector};

/// Relative symmetry test: `max|H - H^T| <= tol * (1 + max|H|)`.
pub fn is_symmetric<T: Scalar>(m: &Matrix<T>, rel_tol: T) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let mut max_abs = T::zero();
    let mut max_asym = T::zero();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            max_abs = max_abs.max(m[(i, j)].abs());
            let d = (m[(i, j)] - m[(j, i)]).abs();
            max_asym = max_asym.max(d);
        }
    }
    max_asym <= rel_tol * (T::one() + max_abs)
}

/// Enforces exact symmetry by averaging with the transpose.
pub fn symmetrize<T: Scalar>(m: &Matrix<T>) -> Matrix<T> {
    (m + m.transpose()) * sc::<T>(0.5)
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn symmetric_eigen_bounds<T: Scalar>(m: &Matrix<T>) -> (T, T) {
    let eig = m.clone().symmetric_eigen();
    let mut lo = eig.eigenvalues[0];
    let mut hi = lo;
    for &v in eig.eigenvalues.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Haar-ish random orthogonal matrix: QR of a Gaussian matrix with the sign
/// convention fixed so the result is deterministic in the RNG stream.
pub fn random_orthogonal<T: Scalar, R: Rng>(rng: &mut R, d: usize) -> Matrix<T> {
    let g = Matrix::<T>::from_fn(d, d, |_, _| normal::<T, _>(rng));
    let qr = g.qr();
    let r_diag: Vec<T> = (0..d).map(|i| qr.r()[(i, i)]).collect();
    let mut q = qr.q();
    for (j, rj) in r_diag.iter().enumerate() {
        if *rj < T::zero() {
            for i in 0..d {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Geometric spectrum from `lo` to `hi` over `d` values.
pub fn geometric_spectrum<T: Scalar>(d: usize, lo: T, hi: T) -> Vec<T> {
    assert!(d >= 1 && lo > T::zero() && hi >= lo);
    if d == 1 {
        return vec![hi];
    }
    let ratio = (hi / lo).powf(T::one() / sc((d - 1) as f64));
    let mut out = Vec::with_capacity(d);
    let mut v = lo;
    for _ in 0..d {
        out.push(v);
        v *= ratio;
    }
    out
}

/// Symmetric matrix with the prescribed spectrum under a random orthogonal
/// conjugation. This is the synthetic stand-in for externally sourced
/// ill-conditioned matrices.
pub fn conditioned_symmetric<T: Scalar, R: Rng>(rng: &mut R, spectrum: &[T]) -> Matrix<T> {
    let d = spectrum.len();
    let q = random_orthogonal::<T, _>(rng, d);
    let lam = Matrix::<T>::from_diagonal(&Vector::from_iterator(d, spectrum.iter().copied()));
    symmetrize(&(&q * lam * q.transpose()))
}
