//! Ellipsoid calculus in ℝᴺ and on the tangent bundle of SO(3).
//!
//! An ellipsoid `E(c, P)` is the set `{x : (x − c)ᵀ P⁻¹ (x − c) ≤ 1}` with `P`
//! symmetric positive definite. The outer bounds computed here minimize the
//! trace of the shape matrix.

use nalgebra::{Matrix3, Matrix6, SMatrix, SVector, Vector3, Vector6};

use crate::dynamics::AttitudeState;
use crate::error::{Error, Result};
use crate::linalg::{check_spd, spd_inverse, symmetrize};
use crate::scalar::Real;
use crate::so3::RotationMatrix;

/// Lower end of the search range for the intersection parameter q.
pub const Q_MIN: f64 = 1e-6;
/// Upper end of the search range for the intersection parameter q.
pub const Q_MAX: f64 = 1e6;
/// Coarse log-spaced grid used to bracket the minimizer.
pub const Q_GRID_POINTS: usize = 50;
pub const GOLDEN_MAX_ITERATIONS: usize = 200;

/// Ellipsoid in ℝᴺ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipsoid<T: Real, const N: usize> {
    center: SVector<T, N>,
    shape: SMatrix<T, N, N>,
    shape_inv: SMatrix<T, N, N>,
}

pub type Ellipsoid3<T> = Ellipsoid<T, 3>;
pub type Ellipsoid6<T> = Ellipsoid<T, 6>;

impl<T: Real, const N: usize> Ellipsoid<T, N> {
    pub fn new(center: SVector<T, N>, shape: SMatrix<T, N, N>) -> Result<Self> {
        let tol = T::TOLERANCES;
        check_spd(&shape, tol.symmetry, tol.spd_eigenvalue)?;
        let shape = symmetrize(&shape);
        Ok(Self {
            center,
            shape_inv: spd_inverse(&shape)?,
            shape,
        })
    }

    pub fn centered(shape: SMatrix<T, N, N>) -> Result<Self> {
        Self::new(SVector::zeros(), shape)
    }

    pub fn center(&self) -> &SVector<T, N> {
        &self.center
    }

    pub fn shape(&self) -> &SMatrix<T, N, N> {
        &self.shape
    }

    /// `(x − c)ᵀ P⁻¹ (x − c)`.
    pub fn quadratic_form(&self, x: &SVector<T, N>) -> T {
        let d = x - self.center;
        d.dot(&(self.shape_inv * d))
    }

    pub fn contains(&self, x: &SVector<T, N>) -> bool {
        self.quadratic_form(x) <= T::one() + T::lit(T::TOLERANCES.membership)
    }
}

/// Uncertainty set `{(Ĉ·exp(S(ζ)), ω̂ + δω) : [ζ; δω] ∈ E(0, P)}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateEllipsoid<T: Real> {
    pub center: AttitudeState<T>,
    pub shape: Matrix6<T>,
}

impl<T: Real> StateEllipsoid<T> {
    pub fn new(attitude: RotationMatrix<T>, angular_velocity: Vector3<T>, shape: Matrix6<T>) -> Result<Self> {
        let tol = T::TOLERANCES;
        check_spd(&shape, tol.symmetry, tol.spd_eigenvalue)?;
        Ok(Self {
            center: AttitudeState::new(attitude, angular_velocity),
            shape: symmetrize(&shape),
        })
    }

    pub fn attitude(&self) -> &RotationMatrix<T> {
        &self.center.attitude
    }

    pub fn angular_velocity(&self) -> &Vector3<T> {
        &self.center.angular_velocity
    }

    pub fn trace(&self) -> T {
        self.shape.trace()
    }

    /// Quadratic form of the exponential coordinates of `state` about the center.
    pub fn quadratic_form(&self, state: &AttitudeState<T>) -> Result<T> {
        let x = state.error_from(&self.center);
        let inv = spd_inverse(&self.shape)?;
        Ok(x.dot(&(inv * x)))
    }

    pub fn contains(&self, attitude: &RotationMatrix<T>, angular_velocity: &Vector3<T>) -> bool {
        state_contains(self, attitude, angular_velocity)
    }
}

pub fn contains<T: Real, const N: usize>(e: &Ellipsoid<T, N>, x: &SVector<T, N>) -> bool {
    e.contains(x)
}

/// Membership of `(C, ω)` in a state ellipsoid.
pub fn state_contains<T: Real>(e: &StateEllipsoid<T>, attitude: &RotationMatrix<T>, angular_velocity: &Vector3<T>) -> bool {
    e.quadratic_form(&AttitudeState::new(*attitude, *angular_velocity))
        .map(|q| q <= T::one() + T::lit(T::TOLERANCES.membership))
        .unwrap_or(false)
}

/// Image of `E(0, P)` under `x ↦ A x`: `A P Aᵀ`.
pub fn propagate<T: Real, const N: usize>(shape: &SMatrix<T, N, N>, map: &SMatrix<T, N, N>) -> SMatrix<T, N, N> {
    symmetrize(&(map * shape * map.transpose()))
}

/// Trace-minimal ellipsoid containing the Minkowski sum of `E(0, Pⱼ)`:
/// `(Σⱼ √tr Pⱼ)·(Σⱼ Pⱼ / √tr Pⱼ)`.
///
/// Terms may be positive semidefinite; zero-trace terms are skipped.
pub fn minimal_sum<T: Real, const N: usize>(terms: &[SMatrix<T, N, N>]) -> Result<SMatrix<T, N, N>> {
    let mut root_sum = T::zero();
    let mut weighted = SMatrix::<T, N, N>::zeros();
    for p in terms {
        let tr = p.trace();
        if !tr.is_finite() || tr < T::zero() {
            return Err(Error::InvalidInput(format!(
                "sum term has invalid trace {}",
                tr.as_f64()
            )));
        }
        if tr == T::zero() {
            continue;
        }
        let root = tr.sqrt();
        root_sum += root;
        weighted += p / root;
    }
    if root_sum == T::zero() {
        return Err(Error::AllDegenerate);
    }
    Ok(symmetrize(&(weighted * root_sum)))
}

/// Outer bound of `E(0, Pm) ∩ E(x_mf, Pf)` for a fixed parameter `q > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntersectionBound<T: Real, const N: usize> {
    pub center: SVector<T, N>,
    pub shape: SMatrix<T, N, N>,
    pub q: T,
    pub beta: T,
}

impl<T: Real, const N: usize> IntersectionBound<T, N> {
    pub fn trace(&self) -> T {
        self.shape.trace()
    }
}

/// Evaluates `x̂ = L x_mf`, `P = β(q)(I − L)Pm` with `L = Pm (Pm + Pf/q)⁻¹` and
/// `β(q) = 1 + q − x_mfᵀ Pm⁻¹ L x_mf`.
pub fn intersection_bound<T: Real, const N: usize>(
    pm: &SMatrix<T, N, N>,
    x_mf: &SVector<T, N>,
    pf: &SMatrix<T, N, N>,
    q: T,
) -> Result<IntersectionBound<T, N>> {
    let k = symmetrize(&(pm + pf / q));
    let chol = k.cholesky().ok_or(Error::NotSpd {
        min_eigenvalue: f64::NAN,
    })?;
    // Pm⁻¹ L = (Pm + Pf/q)⁻¹
    let k_inv_x = chol.solve(x_mf);
    let k_inv_pm = chol.solve(pm);
    let beta = T::one() + q - x_mf.dot(&k_inv_x);
    let center = pm * k_inv_x;
    let shape = symmetrize(&((pm - pm * k_inv_pm) * beta));
    Ok(IntersectionBound {
        center,
        shape,
        q,
        beta,
    })
}

/// Trace-minimal ellipsoid containing `E(0, Pm) ∩ E(x_mf, Pf)`.
///
/// The parameter q is bracketed on a log-spaced grid over [`Q_MIN`, `Q_MAX`]
/// and refined by golden-section search in log q.
pub fn minimal_intersection<T: Real, const N: usize>(
    pm: &SMatrix<T, N, N>,
    x_mf: &SVector<T, N>,
    pf: &SMatrix<T, N, N>,
) -> Result<IntersectionBound<T, N>> {
    let tol = T::TOLERANCES;
    check_spd(pm, tol.symmetry, tol.spd_eigenvalue)?;
    check_spd(pf, tol.symmetry, tol.spd_eigenvalue)?;

    let lo = Q_MIN.ln();
    let hi = Q_MAX.ln();
    let eval = |log_q: f64| intersection_bound(pm, x_mf, pf, T::lit(log_q.exp()));

    let grid: Vec<f64> = (0..Q_GRID_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (Q_GRID_POINTS - 1) as f64)
        .collect();
    let mut best = eval(grid[0])?;
    let mut best_idx = 0;
    for (i, &g) in grid.iter().enumerate().skip(1) {
        let b = eval(g)?;
        if b.trace() < best.trace() {
            best = b;
            best_idx = i;
        }
    }
    if !(best.beta > T::zero()) {
        return Err(Error::EmptyIntersection {
            beta: best.beta.as_f64(),
        });
    }

    let mut a = grid[best_idx.saturating_sub(1)];
    let mut b = grid[(best_idx + 1).min(Q_GRID_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    for _ in 0..GOLDEN_MAX_ITERATIONS {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc.trace() < fd.trace() {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = eval(d)?;
        }
    }
    for candidate in [fc, fd] {
        if candidate.trace() < best.trace() {
            best = candidate;
        }
    }
    if !(best.beta > T::zero()) {
        return Err(Error::EmptyIntersection {
            beta: best.beta.as_f64(),
        });
    }
    Ok(best)
}

/// Injects the attitude block: `H₁ X H₁ᵀ`.
pub fn embed_attitude_block<T: Real>(block: &Matrix3<T>) -> Matrix6<T> {
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(block);
    out
}

/// Injects the angular-velocity block: `H₂ X H₂ᵀ`.
pub fn embed_rate_block<T: Real>(block: &Matrix3<T>) -> Matrix6<T> {
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(block);
    out
}

/// Splits `[ζ; δω]`.
pub fn split6<T: Real>(x: &Vector6<T>) -> (Vector3<T>, Vector3<T>) {
    (x.fixed_rows::<3>(0).into_owned(), x.fixed_rows::<3>(3).into_owned())
}
