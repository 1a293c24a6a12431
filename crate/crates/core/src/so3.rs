//! Rotation group primitives: the skew map, exponential and logarithm on
//! SO(3), the principal square root of SPD matrices and a QR factorization
//! whose orthogonal factor is always a proper rotation.

use std::fmt;
use std::ops::Mul;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::linalg::{check_spd, symmetrize};
use crate::scalar::{Real, Tolerances};

pub type Vec3<T> = Vector3<T>;
pub type Mat3<T> = Matrix3<T>;

/// Below this rotation angle the Rodrigues coefficients use their Taylor series.
pub const SMALL_ANGLE: f64 = 1e-6;

/// Within this distance of π the logarithm reads the axis off the symmetric part.
pub const NEAR_PI: f64 = 1e-2;

/// An element of SO(3).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix<T: Real>(Matrix3<T>);

impl<T: Real> RotationMatrix<T> {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates `m` against the default orthogonality tolerance.
    pub fn new(m: Matrix3<T>) -> Result<Self> {
        Self::new_with_tol(m, T::TOLERANCES.orthogonality)
    }

    pub fn new_with_tol(m: Matrix3<T>, tol: f64) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("non-finite rotation entry".into()));
        }
        let defect = (m.transpose() * m - Matrix3::identity()).norm().as_f64();
        let det = m.determinant().as_f64();
        if defect > tol || (det - 1.0).abs() > tol {
            return Err(Error::NotRotation { defect, det });
        }
        Ok(Self(m))
    }

    /// Wraps `m` without checking. The caller guarantees `m ∈ SO(3)`.
    #[inline]
    pub fn new_unchecked(m: Matrix3<T>) -> Self {
        Self(m)
    }

    /// Row-major construction, validated.
    pub fn from_row_slice(values: &[T]) -> Result<Self> {
        if values.len() != 9 {
            return Err(Error::InvalidInput(format!(
                "rotation needs 9 entries, got {}",
                values.len()
            )));
        }
        Self::new(Matrix3::from_row_slice(values))
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<T> {
        &self.0
    }

    #[inline]
    pub fn into_inner(self) -> Matrix3<T> {
        self.0
    }

    #[inline]
    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    /// ‖CᵀC − I‖_F.
    pub fn orthogonality_defect(&self) -> T {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }

    /// Rotation angle in [0, π].
    pub fn angle(&self) -> T {
        log_so3(self).norm()
    }
}

impl<T: Real> Default for RotationMatrix<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> fmt::Display for RotationMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl<T: Real> Mul for RotationMatrix<T> {
    type Output = RotationMatrix<T>;

    fn mul(self, rhs: Self) -> Self::Output {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl<T: Real> Mul<&RotationMatrix<T>> for &RotationMatrix<T> {
    type Output = RotationMatrix<T>;

    fn mul(self, rhs: &RotationMatrix<T>) -> Self::Output {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl<T: Real> Mul<Vector3<T>> for RotationMatrix<T> {
    type Output = Vector3<T>;

    fn mul(self, rhs: Vector3<T>) -> Self::Output {
        self.0 * rhs
    }
}

impl<T: Real> Mul<&Vector3<T>> for RotationMatrix<T> {
    type Output = Vector3<T>;

    fn mul(self, rhs: &Vector3<T>) -> Self::Output {
        self.0 * rhs
    }
}

impl<T: Real> Mul<&Vector3<T>> for &RotationMatrix<T> {
    type Output = Vector3<T>;

    fn mul(self, rhs: &Vector3<T>) -> Self::Output {
        self.0 * rhs
    }
}

/// Cross-product matrix: `hat(v) * w == v.cross(&w)`.
#[inline]
pub fn hat<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(z, -v.z, v.y, v.z, z, -v.x, -v.y, v.x, z)
}

/// Inverse of [`hat`] on skew-symmetric matrices.
pub fn vee<T: Real>(a: &Matrix3<T>) -> Result<Vector3<T>> {
    vee_with_tol(a, T::TOLERANCES.skew)
}

pub fn vee_with_tol<T: Real>(a: &Matrix3<T>, tol: f64) -> Result<Vector3<T>> {
    let asymmetry = (a + a.transpose()).norm();
    if !(asymmetry <= T::lit(tol)) {
        return Err(Error::NotSkew {
            asymmetry: asymmetry.as_f64(),
        });
    }
    Ok(vee_unchecked(a))
}

/// vee of the skew part (A − Aᵀ)/2, without any check.
#[inline]
pub(crate) fn vee_unchecked<T: Real>(a: &Matrix3<T>) -> Vector3<T> {
    let half = T::lit(0.5);
    Vector3::new(
        (a[(2, 1)] - a[(1, 2)]) * half,
        (a[(0, 2)] - a[(2, 0)]) * half,
        (a[(1, 0)] - a[(0, 1)]) * half,
    )
}

/// Rodrigues' formula for the exponential map so(3) → SO(3).
pub fn exp_so3<T: Real>(v: &Vector3<T>) -> RotationMatrix<T> {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < T::lit(SMALL_ANGLE) {
        (
            T::one() - theta2 / T::lit(6.0),
            T::lit(0.5) - theta2 / T::lit(24.0),
        )
    } else {
        (theta.sin() / theta, (T::one() - theta.cos()) / theta2)
    };
    let k = hat(v);
    RotationMatrix(Matrix3::identity() + k * a + k * k * b)
}

/// Principal logarithm SO(3) → ℝ³, with angle in [0, π].
///
/// At an angle of exactly π the axis sign is ambiguous; the returned vector has
/// its largest-magnitude component positive.
pub fn log_so3<T: Real>(c: &RotationMatrix<T>) -> Vector3<T> {
    let m = &c.0;
    let w = vee_unchecked(m);
    let sin_theta = w.norm();
    let cos_theta = (m.trace() - T::one()) * T::lit(0.5);
    let theta = sin_theta.atan2(cos_theta);

    if theta < T::lit(SMALL_ANGLE) {
        return w * (T::one() + theta * theta / T::lit(6.0));
    }
    if T::pi() - theta > T::lit(NEAR_PI) {
        return w * (theta / sin_theta);
    }

    // (C + Cᵀ)/2 = cos θ·I + (1 − cos θ)·n nᵀ
    let outer = (symmetrize(m) - Matrix3::identity() * cos_theta) / (T::one() - cos_theta);
    let mut k = 0;
    for i in 1..3 {
        if outer[(i, i)] > outer[(k, k)] {
            k = i;
        }
    }
    let nk = outer[(k, k)].max(T::zero()).sqrt();
    let mut axis = Vector3::from_fn(|i, _| if i == k { nk } else { outer[(i, k)] / nk });
    axis /= axis.norm();
    if axis.dot(&w) < T::zero() {
        axis = -axis;
    }
    axis * theta
}

/// Right Jacobian of the exponential: exp(v + δ) ≈ exp(v)·exp(Jr(v)·δ).
pub fn right_jacobian<T: Real>(v: &Vector3<T>) -> Matrix3<T> {
    let theta2 = v.norm_squared();
    let theta = theta2.sqrt();
    let (a, b) = if theta < T::lit(1e-3) {
        (
            T::lit(0.5) - theta2 / T::lit(24.0),
            T::lit(1.0 / 6.0) - theta2 / T::lit(120.0),
        )
    } else {
        (
            (T::one() - theta.cos()) / theta2,
            (theta - theta.sin()) / (theta2 * theta),
        )
    };
    let k = hat(v);
    Matrix3::identity() - k * a + k * k * b
}

/// Principal square root of a symmetric positive definite 3×3 matrix.
pub fn spd_sqrt<T: Real>(a: &Matrix3<T>) -> Result<Matrix3<T>> {
    spd_sqrt_with_tol(a, &T::TOLERANCES)
}

pub fn spd_sqrt_with_tol<T: Real>(a: &Matrix3<T>, tol: &Tolerances) -> Result<Matrix3<T>> {
    let (values, vectors) = check_spd(a, tol.symmetry, tol.spd_eigenvalue)?;
    let root = Matrix3::from_diagonal(&values.map(|x| x.sqrt()));
    Ok(symmetrize(&(vectors * root * vectors.transpose())))
}

/// QR factorization `A = Q·R` with `Q ∈ SO(3)` and `R` upper triangular.
///
/// The first two diagonal entries of `R` are non-negative; the sign of the
/// third carries the sign of det A.
pub fn qr_special<T: Real>(a: &Matrix3<T>) -> Result<(RotationMatrix<T>, Matrix3<T>)> {
    qr_special_with_tol(a, T::TOLERANCES.singular)
}

pub fn qr_special_with_tol<T: Real>(
    a: &Matrix3<T>,
    tol: f64,
) -> Result<(RotationMatrix<T>, Matrix3<T>)> {
    let det = a.determinant();
    let scale = a.norm();
    if !(det.abs() > T::lit(tol) * scale * scale * scale) {
        return Err(Error::Singular { det: det.as_f64() });
    }
    let qr = a.qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for i in 0..2 {
        if r[(i, i)] < T::zero() {
            q.column_mut(i).neg_mut();
            r.row_mut(i).neg_mut();
        }
    }
    if q.determinant() < T::zero() {
        q.column_mut(2).neg_mut();
        r.row_mut(2).neg_mut();
    }
    Ok((RotationMatrix(q), r))
}
