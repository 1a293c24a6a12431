//! Coordinate-free rigid-body attitude estimation with uncertainty ellipsoids.
//!
//! The library is generic over the floating point type (see [`Real`]); the
//! aliases at the crate root fix it to `f64`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ellipsoid;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod scalar;
pub mod sim;
pub mod so3;
pub mod wahba;

pub use error::{Error, Result};
pub use scalar::{Real, Tolerances};

pub type Rotation = so3::RotationMatrix<f64>;
pub type Ellipsoid3 = ellipsoid::Ellipsoid3<f64>;
pub type Ellipsoid6 = ellipsoid::Ellipsoid6<f64>;
pub type StateEllipsoid = ellipsoid::StateEllipsoid<f64>;
pub type AttitudeState = dynamics::AttitudeState<f64>;
pub type InertiaParams = dynamics::InertiaParams<f64>;
pub type EstimatorConfig = estimator::EstimatorConfig<f64>;
pub type VectorObservations = wahba::VectorObservations<f64>;
