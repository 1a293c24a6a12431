//! Scalar abstraction shared by every numerical module.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Numerical tolerances used by the library routines.
///
/// Each scalar type carries a default set (see [`Real::TOLERANCES`]); routines
/// that take a tolerance also have a `*_with_tol` variant for overriding them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Maximum ‖A + Aᵀ‖_F accepted by `vee`.
    pub skew: f64,
    /// Maximum ‖CᵀC − I‖_F and |det C − 1| for a rotation matrix.
    pub orthogonality: f64,
    /// Relative symmetry tolerance ‖A − Aᵀ‖_F / ‖A‖_F for SPD inputs.
    pub symmetry: f64,
    /// Smallest admissible eigenvalue, relative to the largest one.
    pub spd_eigenvalue: f64,
    /// `qr_special` rejects |det A| ≤ `singular`·‖A‖³_F.
    pub singular: f64,
    /// Implicit-solve residual bound, scaled by (1 + ‖J_d‖_F).
    pub newton_residual: f64,
    /// Upper bound on the condition number of the measurement-sensitivity matrix.
    pub max_condition: f64,
    /// Slack added to 1 in ellipsoid membership tests.
    pub membership: f64,
}

impl Tolerances {
    pub const F64: Tolerances = Tolerances {
        skew: 1e-8,
        orthogonality: 1e-10,
        symmetry: 1e-10,
        spd_eigenvalue: 1e-14,
        singular: 1e-12,
        newton_residual: 1e-12,
        max_condition: 1e8,
        membership: 1e-9,
    };

    pub const F32: Tolerances = Tolerances {
        skew: 1e-4,
        orthogonality: 1e-5,
        symmetry: 1e-5,
        spd_eigenvalue: 1e-6,
        singular: 1e-6,
        newton_residual: 1e-5,
        max_condition: 1e5,
        membership: 1e-4,
    };
}

/// Floating point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive {
    const TOLERANCES: Tolerances;

    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {
    const TOLERANCES: Tolerances = Tolerances::F32;
}

impl Real for f64 {
    const TOLERANCES: Tolerances = Tolerances::F64;
}
