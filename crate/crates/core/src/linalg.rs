//! Fixed-size dense matrix helpers for the Kalman filter.

use crate::error::{Error, Result};

pub(crate) type Mat<const R: usize, const C: usize> = [[f64; C]; R];

pub(crate) fn mul<const N: usize, const M: usize, const P: usize>(
    a: &Mat<N, M>,
    b: &Mat<M, P>,
) -> Mat<N, P> {
    let mut out = [[0.0; P]; N];
    for i in 0..N {
        for k in 0..M {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..P {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

pub(crate) fn transpose<const N: usize, const M: usize>(a: &Mat<N, M>) -> Mat<M, N> {
    let mut out = [[0.0; N]; M];
    for i in 0..N {
        for j in 0..M {
            out[j][i] = a[i][j];
        }
    }
    out
}

pub(crate) fn mul_vec<const N: usize, const M: usize>(a: &Mat<N, M>, x: &[f64; M]) -> [f64; N] {
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = a[i].iter().zip(x).map(|(p, q)| p * q).sum();
    }
    out
}

pub(crate) fn identity<const N: usize>() -> Mat<N, N> {
    let mut out = [[0.0; N]; N];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    out
}

pub(crate) fn diag<const N: usize>(d: &[f64; N]) -> Mat<N, N> {
    let mut out = [[0.0; N]; N];
    for i in 0..N {
        out[i][i] = d[i];
    }
    out
}

/// Inverse of a symmetric positive-definite matrix via Cholesky factorization.
pub(crate) fn spd_inverse<const N: usize>(a: &Mat<N, N>) -> Result<Mat<N, N>> {
    let mut l = [[0.0; N]; N];
    for i in 0..N {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return Err(Error::Numeric(
                        "innovation covariance is not positive definite",
                    ));
                }
                l[i][i] = libm::sqrt(sum);
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    // Solve L Y = I, then Lᵀ X = Y.
    let mut inv = [[0.0; N]; N];
    for col in 0..N {
        let mut y = [0.0; N];
        for i in 0..N {
            let mut sum = if i == col { 1.0 } else { 0.0 };
            for k in 0..i {
                sum -= l[i][k] * y[k];
            }
            y[i] = sum / l[i][i];
        }
        for i in (0..N).rev() {
            let mut sum = y[i];
            for k in i + 1..N {
                sum -= l[k][i] * inv[k][col];
            }
            inv[i][col] = sum / l[i][i];
        }
    }
    Ok(inv)
}
