use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::metrics::MetricsRecord;
use super::noise::sample_in_ball;
use super::{ScenarioConfig, SimError};
use crate::dynamics::{integrate, AttitudeState};
use crate::estimator::{predict_to, run_estimator, Diagnostic, MeasurementFrame, Stage};
use crate::so3::exp_so3;

/// Sensor readings for `truth`: `b̃ⁱ = exp(−S(νⁱ))·Cᵀeⁱ` and `ω̃ = ω − υ`, with
/// `νⁱ` and `υ` drawn from the configured bounding balls.
pub fn synthesize_measurements<R: Rng + ?Sized>(
    truth: &AttitudeState<f64>,
    cfg: &ScenarioConfig,
    rng: &mut R,
) -> MeasurementFrame<f64> {
    let dir_radius = cfg.direction_bound_rad();
    let directions = cfg
        .reference
        .iter()
        .map(|e| {
            let body = truth.attitude.transpose() * e;
            let nu = sample_in_ball(rng, cfg.boundary_noise) * dir_radius;
            let measured = exp_so3(&-nu) * body;
            measured / measured.norm()
        })
        .collect();
    let upsilon = sample_in_ball(rng, cfg.boundary_noise) * cfg.rate_bound;
    MeasurementFrame {
        directions,
        angular_velocity: truth.angular_velocity - upsilon,
    }
}

/// Metrics around one measurement event.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEvent {
    pub step: usize,
    /// Predicted ellipsoid before fusion.
    pub prior: MetricsRecord,
    pub measured: MetricsRecord,
    pub fused: MetricsRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRun {
    pub seed: u64,
    /// One record per integration step.
    pub records: Vec<MetricsRecord>,
    pub events: Vec<MeasurementEvent>,
    pub diagnostics: Vec<Diagnostic>,
    pub initial_quadratic_form: f64,
}

impl ScenarioRun {
    pub fn terminal(&self) -> &MetricsRecord {
        self.records.last().expect("at least the initial record")
    }

    /// Records at step 0 and after every fusion.
    pub fn fused_records(&self) -> Vec<MetricsRecord> {
        std::iter::once(self.records[0].clone())
            .chain(self.events.iter().map(|e| e.fused.clone()))
            .collect()
    }

    /// Whether every post-fusion ellipsoid contains the truth.
    pub fn always_contained(&self) -> bool {
        self.events.iter().all(|e| e.fused.contains_truth)
    }
}

/// Propagates the truth, synthesizes measurements on the schedule and runs the
/// estimator. Deterministic for a given configuration and seed.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioRun, SimError> {
    cfg.validate()?;
    let params = cfg.params()?;
    let est_cfg = cfg.estimator_config()?;
    let n = cfg.steps();
    let truth = integrate(&cfg.initial_truth, &params, n)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let frames: Vec<_> = cfg
        .schedule()
        .into_iter()
        .map(|k| (k, synthesize_measurements(&truth[k], cfg, &mut rng)))
        .collect();

    let mut trajectory = run_estimator(&cfg.initial_ellipsoid()?, &frames, &est_cfg, true)?;
    predict_to(&mut trajectory, &est_cfg, n)?;

    let record = |step: usize, e| MetricsRecord::new(step, step as f64 * cfg.step, e, &truth[step]);
    let records = trajectory
        .estimates()
        .map(|p| record(p.step, &p.ellipsoid))
        .collect::<Vec<_>>();
    debug_assert_eq!(records.len(), n + 1);

    let mut events = Vec::new();
    for chunk in trajectory
        .points
        .iter()
        .filter(|p| p.stage != Stage::Initial && p.stage != Stage::Predicted)
        .collect::<Vec<_>>()
        .chunks(3)
    {
        if let [prior, measured, fused] = chunk {
            events.push(MeasurementEvent {
                step: fused.step,
                prior: record(prior.step, &prior.ellipsoid),
                measured: record(measured.step, &measured.ellipsoid),
                fused: record(fused.step, &fused.ellipsoid),
            });
        }
    }

    Ok(ScenarioRun {
        seed: cfg.seed,
        records,
        events,
        diagnostics: trajectory.diagnostics,
        initial_quadratic_form: cfg.initial_quadratic_form()?,
    })
}
