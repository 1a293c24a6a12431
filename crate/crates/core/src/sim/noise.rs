use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::so3::spd_sqrt;

/// Point in the closed unit ball: uniform over the volume, or uniform over the
/// sphere when `boundary` is set.
pub fn sample_in_ball<R: Rng + ?Sized>(rng: &mut R, boundary: bool) -> Vector3<f64> {
    let direction = loop {
        let v = Vector3::from_fn(|_, _| StandardNormal.sample(rng));
        let n: f64 = v.norm();
        if n > 1e-12 {
            break v / n;
        }
    };
    let radius = if boundary {
        1.0
    } else {
        rng.random::<f64>().cbrt()
    };
    direction * radius
}

/// Point in `E(0, shape)`, mapped from the unit ball through the SPD square root.
pub fn sample_in_ellipsoid<R: Rng + ?Sized>(
    shape: &Matrix3<f64>,
    rng: &mut R,
    boundary: bool,
) -> crate::Result<Vector3<f64>> {
    let root = spd_sqrt(shape)?;
    Ok(root * sample_in_ball(rng, boundary))
}
