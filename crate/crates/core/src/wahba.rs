//! Static attitude determination from weighted vector observations.
//!
//! Reference directions `eⁱ` and measured body directions `b̃ⁱ` are related by
//! `eⁱ ≈ C·b̃ⁱ`. The estimate minimizes `½ Σ wᵢ ‖eⁱ − C b̃ⁱ‖²` over SO(3). With
//! the attitude profile matrix `L = Σ wᵢ eⁱ (b̃ⁱ)ᵀ = QR`, the minimizer is
//! `Ĉ = Q·((RRᵀ)⁻¹)^{1/2}·Qᵀ·L`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::linalg::condition_number;
use crate::scalar::Real;
use crate::so3::{qr_special, spd_sqrt, RotationMatrix};

/// Unit-norm tolerance for observation directions.
pub const UNIT_TOL: f64 = 1e-9;

/// Reference directions, measured body directions and their weights.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorObservations<T: Real> {
    reference: Vec<Vector3<T>>,
    body: Vec<Vector3<T>>,
    weights: Vec<T>,
}

impl<T: Real> VectorObservations<T> {
    pub fn new(reference: Vec<Vector3<T>>, body: Vec<Vector3<T>>, weights: Vec<T>) -> Result<Self> {
        let m = reference.len();
        if body.len() != m || weights.len() != m {
            return Err(Error::InvalidObservations(format!(
                "length mismatch: {} references, {} body directions, {} weights",
                m,
                body.len(),
                weights.len()
            )));
        }
        if m < 2 {
            return Err(Error::InvalidObservations(format!(
                "need at least 2 observations, got {m}"
            )));
        }
        let unit_tol = T::lit(UNIT_TOL).max(T::default_epsilon() * T::lit(64.0));
        for (i, v) in reference.iter().chain(body.iter()).enumerate() {
            if !((v.norm() - T::one()).abs() <= unit_tol) {
                return Err(Error::InvalidObservations(format!(
                    "direction {} is not unit norm (‖v‖ = {})",
                    i % m,
                    v.norm()
                )));
            }
        }
        if let Some(i) = weights.iter().position(|w| !(*w > T::zero())) {
            return Err(Error::InvalidObservations(format!(
                "weight {i} is not positive"
            )));
        }
        Ok(Self {
            reference,
            body,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.reference.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reference.is_empty()
    }

    pub fn reference(&self) -> &[Vector3<T>] {
        &self.reference
    }

    pub fn body(&self) -> &[Vector3<T>] {
        &self.body
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Iterates `(wᵢ, eⁱ, b̃ⁱ)`.
    pub fn iter(&self) -> impl Iterator<Item = (T, &Vector3<T>, &Vector3<T>)> {
        self.weights
            .iter()
            .zip(self.reference.iter().zip(self.body.iter()))
            .map(|(w, (e, b))| (*w, e, b))
    }
}

/// The attitude profile matrix together with its optimal rotation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeProfile<T: Real> {
    pub profile: Matrix3<T>,
    pub attitude: RotationMatrix<T>,
}

/// `L = Σᵢ wᵢ eⁱ (b̃ⁱ)ᵀ`.
pub fn attitude_profile_matrix<T: Real>(obs: &VectorObservations<T>) -> Matrix3<T> {
    obs.iter()
        .fold(Matrix3::zeros(), |acc, (w, e, b)| acc + e * b.transpose() * w)
}

/// Globally optimal attitude for the weighted observations.
pub fn solve_wahba<T: Real>(obs: &VectorObservations<T>) -> Result<RotationMatrix<T>> {
    Ok(solve_profile(obs)?.attitude)
}

pub fn solve_profile<T: Real>(obs: &VectorObservations<T>) -> Result<AttitudeProfile<T>> {
    let profile = attitude_profile_matrix(obs);
    let attitude = optimal_rotation(&profile)?;
    Ok(AttitudeProfile { profile, attitude })
}

/// Optimal rotation for a given attitude profile matrix.
///
/// When det L > 0 this is the QR route `Q·((RRᵀ)⁻¹)^{1/2}·Qᵀ·L`. A
/// non-positive determinant makes that product improper, so the minimizer is
/// then built from the singular vectors of L with the weakest direction flipped.
pub fn optimal_rotation<T: Real>(profile: &Matrix3<T>) -> Result<RotationMatrix<T>> {
    let (q, r) = qr_special(profile).map_err(|_| Error::DegenerateObservations)?;
    if r[(2, 2)] > T::zero() {
        let rrt_inv = (r * r.transpose())
            .try_inverse()
            .ok_or(Error::DegenerateObservations)?;
        let root = spd_sqrt(&crate::linalg::symmetrize(&rrt_inv))
            .map_err(|_| Error::DegenerateObservations)?;
        let s = q.matrix() * root * q.matrix().transpose();
        Ok(reorthonormalize(s * profile))
    } else {
        improper_profile_rotation(profile)
    }
}

/// Newton polar iterations `X ← (X + X⁻ᵀ)/2`, which remove the round-off the
/// square root picks up from an ill-conditioned L.
fn reorthonormalize<T: Real>(mut x: Matrix3<T>) -> RotationMatrix<T> {
    let defect = |m: &Matrix3<T>| (m.transpose() * m - Matrix3::identity()).norm();
    let mut current = defect(&x);
    for _ in 0..4 {
        let Some(inv) = x.try_inverse() else { break };
        let next = (x + inv.transpose()) * T::lit(0.5);
        let d = defect(&next);
        if !(d < current) {
            break;
        }
        x = next;
        current = d;
    }
    RotationMatrix::new_unchecked(x)
}

fn improper_profile_rotation<T: Real>(profile: &Matrix3<T>) -> Result<RotationMatrix<T>> {
    let svd = profile.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::DegenerateObservations);
    };
    if !(svd.singular_values.min() > T::zero()) {
        return Err(Error::DegenerateObservations);
    }
    // Singular values are sorted in decreasing order; flip the weakest direction.
    let sign = (u * v_t).determinant().signum();
    let d = Matrix3::from_diagonal(&Vector3::new(T::one(), T::one(), sign));
    Ok(RotationMatrix::new_unchecked(u * d * v_t))
}

/// `½ Σ wᵢ ‖eⁱ − C b̃ⁱ‖²`.
pub fn wahba_cost<T: Real>(obs: &VectorObservations<T>, c: &RotationMatrix<T>) -> T {
    obs.iter()
        .map(|(w, e, b)| (e - c * b).norm_squared() * w)
        .fold(T::zero(), |a, x| a + x)
        * T::lit(0.5)
}

/// `LᵀC − CᵀL`; vanishes at a critical point of the cost.
pub fn optimality_residual<T: Real>(profile: &Matrix3<T>, c: &RotationMatrix<T>) -> Matrix3<T> {
    profile.transpose() * c.matrix() - c.matrix().transpose() * profile
}

/// First-order sensitivities of the attitude estimate to direction errors.
///
/// With true directions `bⁱ = exp(S(νⁱ))·b̃ⁱ` and truth `C = Ĉ·exp(S(ζ))`, returns
/// `Aⁱ` such that `ζ ≈ Σᵢ Aⁱ νⁱ`.
pub fn measurement_jacobians<T: Real>(
    obs: &VectorObservations<T>,
    estimate: &RotationMatrix<T>,
) -> Result<Vec<Matrix3<T>>> {
    measurement_jacobians_with_tol(obs, estimate, T::TOLERANCES.max_condition)
}

pub fn measurement_jacobians_with_tol<T: Real>(
    obs: &VectorObservations<T>,
    estimate: &RotationMatrix<T>,
    max_condition: f64,
) -> Result<Vec<Matrix3<T>>> {
    let c = estimate.matrix();
    let ctl = c.transpose() * attitude_profile_matrix(obs);
    let g = Matrix3::identity() * ctl.trace() - ctl;
    let condition = condition_number(&g);
    if !(condition <= max_condition) {
        return Err(Error::IllConditioned { condition });
    }
    let g_inv = g.try_inverse().ok_or(Error::IllConditioned {
        condition: f64::INFINITY,
    })?;
    Ok(obs
        .iter()
        .map(|(w, e, b)| {
            let d = b * e.transpose() * c;
            -(g_inv * (Matrix3::identity() * d.trace() - d)) * w
        })
        .collect())
}
