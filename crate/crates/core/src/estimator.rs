//! Deterministic attitude estimator: flow propagation of the uncertainty
//! ellipsoid, a measurement ellipsoid from vector and rate sensors, and a
//! filtered update that bounds their intersection.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::dynamics::{lgvi_step, linearize_step, AttitudeState, InertiaParams};
use crate::ellipsoid::{
    embed_attitude_block, embed_rate_block, minimal_intersection, minimal_sum, propagate, split6,
    StateEllipsoid,
};
use crate::error::{Error, Result};
use crate::linalg::check_spd;
use crate::scalar::Real;
use crate::so3::{exp_so3, log_so3};
use crate::wahba::{measurement_jacobians_with_tol, solve_wahba, VectorObservations};

/// Center offsets above this angle (rad) are flagged: the first-order merge of
/// the two ellipsoid frames assumes the offset is small.
pub const CENTER_OFFSET_WARNING: f64 = 0.5;

/// Sensor model and dynamics shared by every estimator stage.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorConfig<T: Real> {
    pub params: InertiaParams<T>,
    /// Integration steps between nominal measurements.
    pub substeps: usize,
    /// Reference directions `eⁱ` (unit vectors).
    pub reference: Vec<Vector3<T>>,
    pub weights: Vec<T>,
    /// Shape matrices `Sⁱ` bounding the direction errors.
    pub direction_bounds: Vec<Matrix3<T>>,
    /// Shape matrix `T` bounding the angular-velocity error.
    pub rate_bound: Matrix3<T>,
    pub max_condition: f64,
}

impl<T: Real> EstimatorConfig<T> {
    pub fn new(
        params: InertiaParams<T>,
        substeps: usize,
        reference: Vec<Vector3<T>>,
        weights: Vec<T>,
        direction_bounds: Vec<Matrix3<T>>,
        rate_bound: Matrix3<T>,
    ) -> Result<Self> {
        if substeps == 0 {
            return Err(Error::InvalidInput("substeps must be at least 1".into()));
        }
        if direction_bounds.len() != reference.len() || weights.len() != reference.len() {
            return Err(Error::InvalidInput(format!(
                "{} reference directions but {} weights and {} direction bounds",
                reference.len(),
                weights.len(),
                direction_bounds.len()
            )));
        }
        let tol = T::TOLERANCES;
        for s in direction_bounds.iter().chain(std::iter::once(&rate_bound)) {
            check_spd(s, tol.symmetry, tol.spd_eigenvalue)?;
        }
        // validates unit norms and weights
        VectorObservations::new(reference.clone(), reference.clone(), weights.clone())?;
        Ok(Self {
            params,
            substeps,
            reference,
            weights,
            direction_bounds,
            rate_bound,
            max_condition: tol.max_condition,
        })
    }
}

/// Sensor readings at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementFrame<T: Real> {
    /// Measured body directions `b̃ⁱ`, one per reference direction.
    pub directions: Vec<Vector3<T>>,
    /// Measured angular velocity `ω̃`.
    pub angular_velocity: Vector3<T>,
}

/// Advances the ellipsoid `steps` integrator steps, chaining the one-step
/// Jacobians: `P ← A P Aᵀ`.
pub fn flow_propagate<T: Real>(
    e: &StateEllipsoid<T>,
    cfg: &EstimatorConfig<T>,
    steps: usize,
) -> Result<StateEllipsoid<T>> {
    let mut current = *e;
    for k in 0..steps {
        current = flow_step(&current, &cfg.params).map_err(|err| err.at_step(k))?;
    }
    Ok(current)
}

fn flow_step<T: Real>(e: &StateEllipsoid<T>, params: &InertiaParams<T>) -> Result<StateEllipsoid<T>> {
    let a = linearize_step(&e.center, params)?;
    let center = lgvi_step(&e.center, params)?;
    Ok(StateEllipsoid {
        center,
        shape: propagate(&e.shape, &a),
    })
}

/// Ellipsoid implied by one set of sensor readings.
///
/// The center is the optimal attitude for the measured directions and the
/// measured angular velocity; the shape is the trace-minimal bound of
/// `Σᵢ H₁ Aⁱ νⁱ + H₂ υ`.
pub fn measurement_update<T: Real>(
    frame: &MeasurementFrame<T>,
    cfg: &EstimatorConfig<T>,
) -> Result<StateEllipsoid<T>> {
    let obs = VectorObservations::new(
        cfg.reference.clone(),
        frame.directions.clone(),
        cfg.weights.clone(),
    )?;
    let attitude = solve_wahba(&obs)?;
    let jacobians = measurement_jacobians_with_tol(&obs, &attitude, cfg.max_condition)?;

    let mut terms: Vec<Matrix6<T>> = jacobians
        .iter()
        .zip(cfg.direction_bounds.iter())
        .map(|(a, s)| embed_attitude_block(&(a * s * a.transpose())))
        .collect();
    terms.push(embed_rate_block(&cfg.rate_bound));
    let shape = minimal_sum(&terms)?;

    Ok(StateEllipsoid {
        center: AttitudeState::new(attitude, frame.angular_velocity),
        shape,
    })
}

/// Fused ellipsoid together with the center offset that was merged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fusion<T: Real> {
    pub ellipsoid: StateEllipsoid<T>,
    /// `[ζ̂^{mf}; δω̂^{mf}]`, the predicted center in the measurement frame.
    pub offset: Vector6<T>,
    pub q: T,
    pub beta: T,
}

/// Trace-minimal ellipsoid containing the intersection of the predicted and
/// measured ellipsoids, expressed about the measurement center.
pub fn filter_update<T: Real>(flow: &StateEllipsoid<T>, meas: &StateEllipsoid<T>) -> Result<StateEllipsoid<T>> {
    Ok(fuse(flow, meas)?.ellipsoid)
}

pub fn fuse<T: Real>(flow: &StateEllipsoid<T>, meas: &StateEllipsoid<T>) -> Result<Fusion<T>> {
    let offset = flow.center.error_from(&meas.center);
    let bound = minimal_intersection(&meas.shape, &offset, &flow.shape)?;
    let (zeta, domega) = split6(&bound.center);
    let center = AttitudeState::new(
        *meas.attitude() * exp_so3(&zeta),
        meas.angular_velocity() + domega,
    );
    Ok(Fusion {
        ellipsoid: StateEllipsoid {
            center,
            shape: bound.shape,
        },
        offset,
        q: bound.q,
        beta: bound.beta,
    })
}

/// Which stage produced a trajectory entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Initial,
    Predicted,
    /// Flow ellipsoid at a measurement step, before fusion.
    PriorToFusion,
    Measured,
    Fused,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint<T: Real> {
    pub step: usize,
    pub stage: Stage,
    pub ellipsoid: StateEllipsoid<T>,
}

/// Non-fatal events raised while running the estimator.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    /// Fusion found no intersection; the measurement ellipsoid was adopted.
    EmptyIntersection { step: usize, beta: f64 },
    /// The predicted center is far from the measured one.
    LargeCenterOffset { step: usize, angle: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T: Real> {
    pub points: Vec<TrajectoryPoint<T>>,
    pub diagnostics: Vec<Diagnostic>,
}

impl<T: Real> Trajectory<T> {
    /// Post-fusion ellipsoids in step order.
    pub fn fused(&self) -> impl Iterator<Item = &TrajectoryPoint<T>> {
        self.points.iter().filter(|p| p.stage == Stage::Fused)
    }

    /// The estimate in force at each step: initial, predicted or fused.
    pub fn estimates(&self) -> impl Iterator<Item = &TrajectoryPoint<T>> {
        self.points
            .iter()
            .filter(|p| matches!(p.stage, Stage::Initial | Stage::Predicted | Stage::Fused))
    }

    pub fn last(&self) -> Option<&TrajectoryPoint<T>> {
        self.estimates().last()
    }
}

/// Runs prediction and fusion over a measurement schedule.
///
/// `frames` carries `(step index, readings)` with strictly increasing indices.
/// With `emit_predicted` every intermediate step is recorded; the prior and
/// measured ellipsoids at each measurement step are always recorded.
pub fn run_estimator<T: Real>(
    initial: &StateEllipsoid<T>,
    frames: &[(usize, MeasurementFrame<T>)],
    cfg: &EstimatorConfig<T>,
    emit_predicted: bool,
) -> Result<Trajectory<T>> {
    if frames.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::InvalidInput(
            "measurement step indices must be strictly increasing".into(),
        ));
    }
    let mut points = vec![TrajectoryPoint {
        step: 0,
        stage: Stage::Initial,
        ellipsoid: *initial,
    }];
    let mut diagnostics = Vec::new();
    let mut current = *initial;
    let mut step = 0;

    for (target, frame) in frames {
        while step < *target {
            current = flow_step(&current, &cfg.params).map_err(|e| e.at_step(step))?;
            step += 1;
            if emit_predicted && step < *target {
                points.push(TrajectoryPoint {
                    step,
                    stage: Stage::Predicted,
                    ellipsoid: current,
                });
            }
        }
        let meas = measurement_update(frame, cfg).map_err(|e| e.at_step(step))?;
        points.push(TrajectoryPoint {
            step,
            stage: Stage::PriorToFusion,
            ellipsoid: current,
        });
        points.push(TrajectoryPoint {
            step,
            stage: Stage::Measured,
            ellipsoid: meas,
        });

        let offset_angle = log_so3(&(meas.attitude().transpose() * *current.attitude())).norm();
        if offset_angle > T::lit(CENTER_OFFSET_WARNING) {
            diagnostics.push(Diagnostic::LargeCenterOffset {
                step,
                angle: offset_angle.as_f64(),
            });
        }
        current = match filter_update(&current, &meas) {
            Ok(fused) => fused,
            Err(Error::EmptyIntersection { beta }) => {
                diagnostics.push(Diagnostic::EmptyIntersection { step, beta });
                meas
            }
            Err(e) => return Err(e.at_step(step)),
        };
        points.push(TrajectoryPoint {
            step,
            stage: Stage::Fused,
            ellipsoid: current,
        });
    }

    Ok(Trajectory {
        points,
        diagnostics,
    })
}

/// Propagates to `steps` past the last measurement, recording each step.
pub fn predict_to<T: Real>(
    trajectory: &mut Trajectory<T>,
    cfg: &EstimatorConfig<T>,
    final_step: usize,
) -> Result<()> {
    let Some(last) = trajectory.last().copied() else {
        return Ok(());
    };
    let mut current = last.ellipsoid;
    for step in (last.step + 1)..=final_step {
        current = flow_step(&current, &cfg.params).map_err(|e| e.at_step(step - 1))?;
        trajectory.points.push(TrajectoryPoint {
            step,
            stage: Stage::Predicted,
            ellipsoid: current,
        });
    }
    Ok(())
}
