//! Small dense linear-algebra helpers over fixed-size matrices.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::scalar::Real;

const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Only the symmetric part of `a` is used.
pub fn symmetric_eigen<T: Real, const N: usize>(
    a: &SMatrix<T, N, N>,
) -> (SVector<T, N>, SMatrix<T, N, N>) {
    let mut m = symmetrize(a);
    let mut v = SMatrix::<T, N, N>::identity();
    let scale = m.norm();
    if scale == T::zero() {
        return (SVector::zeros(), v);
    }
    let eps = T::default_epsilon();

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = T::zero();
        for p in 0..N {
            for q in (p + 1)..N {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= eps * scale {
            break;
        }
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = m[(p, q)];
                if apq == T::zero() {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (apq + apq);
                let t = if theta >= T::zero() {
                    T::one() / (theta + (theta * theta + T::one()).sqrt())
                } else {
                    -T::one() / (-theta + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                for r in 0..N {
                    let arp = m[(r, p)];
                    let arq = m[(r, q)];
                    m[(r, p)] = c * arp - s * arq;
                    m[(r, q)] = s * arp + c * arq;
                }
                for r in 0..N {
                    let apr = m[(p, r)];
                    let aqr = m[(q, r)];
                    m[(p, r)] = c * apr - s * aqr;
                    m[(q, r)] = s * apr + c * aqr;
                }
                m[(p, q)] = T::zero();
                m[(q, p)] = T::zero();

                for r in 0..N {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .partial_cmp(&m[(j, j)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = SVector::<T, N>::from_fn(|i, _| m[(order[i], order[i])]);
    let vectors = SMatrix::<T, N, N>::from_fn(|r, c| v[(r, order[c])]);
    (values, vectors)
}

/// (A + Aᵀ)/2.
#[inline]
pub fn symmetrize<T: Real, const N: usize>(a: &SMatrix<T, N, N>) -> SMatrix<T, N, N> {
    (a + a.transpose()) * T::lit(0.5)
}

/// Checks symmetry and positive definiteness, returning the eigendecomposition.
pub fn check_spd<T: Real, const N: usize>(
    a: &SMatrix<T, N, N>,
    symmetry_tol: f64,
    eigen_tol: f64,
) -> Result<(SVector<T, N>, SMatrix<T, N, N>)> {
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("non-finite matrix entry".into()));
    }
    let norm = a.norm();
    let asym = (a - a.transpose()).norm();
    if asym > T::lit(symmetry_tol) * norm {
        return Err(Error::NotSpd {
            min_eigenvalue: f64::NAN,
        });
    }
    let (values, vectors) = symmetric_eigen(a);
    let largest = values[N - 1];
    let smallest = values[0];
    if largest <= T::zero() || smallest <= T::lit(eigen_tol) * largest {
        return Err(Error::NotSpd {
            min_eigenvalue: smallest.as_f64(),
        });
    }
    Ok((values, vectors))
}

/// Inverse of a symmetric positive definite matrix, symmetrized.
pub fn spd_inverse<T: Real, const N: usize>(a: &SMatrix<T, N, N>) -> Result<SMatrix<T, N, N>> {
    let chol = symmetrize(a).cholesky().ok_or(Error::NotSpd {
        min_eigenvalue: f64::NAN,
    })?;
    Ok(symmetrize(&chol.inverse()))
}

/// Frobenius-norm condition number ‖A‖_F·‖A⁻¹‖_F; infinite when singular.
pub fn condition_number<T: Real, const N: usize>(a: &SMatrix<T, N, N>) -> f64 {
    match a.try_inverse() {
        Some(inv) => (a.norm() * inv.norm()).as_f64(),
        None => f64::INFINITY,
    }
}
