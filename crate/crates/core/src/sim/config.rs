//! Scenario configuration and its flat `key = value` text format.
//!
//! ```text
//! # spacecraft in a circular orbit
//! inertia        = 1 2.8 2
//! h              = 0.00785398163397448
//! t_final        = 1.5707963267948966
//! n_measurements = 10
//! C0             = -1 0 0  0 -1 0  0 0 1
//! omega0         = 2.3160 0.4468 -0.5910
//! C0_hat         = 1 0 0  0 1 0  0 0 1
//! omega0_hat     = 2.1160 0.5468 -0.8910
//! P0             = 19.739 19.739 19.739 0.548 0.548 0.548
//! S_bound_deg    = 7
//! T_bound        = 0.122173
//! E              = 1 0 0  0 1 0  0 0 1
//! weights        = 1 1 1
//! seed           = 0
//! ```
//!
//! Every key is optional; missing keys take the values of
//! [`ScenarioConfig::spacecraft`]. `P0` accepts 6 numbers (diagonal) or 36
//! (row-major). `E` lists the reference directions one after another.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use super::SimError;
use crate::dynamics::{AttitudeState, InertiaParams};
use crate::ellipsoid::StateEllipsoid;
use crate::estimator::EstimatorConfig;
use crate::linalg::spd_inverse;
use crate::so3::RotationMatrix;

/// Integration steps per quarter orbit used by the default configuration.
pub const DEFAULT_STEPS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    /// Principal moments of inertia (normalized).
    pub inertia: [f64; 3],
    pub step: f64,
    pub t_final: f64,
    pub orbital_rate: f64,
    pub n_measurements: usize,
    pub initial_truth: AttitudeState<f64>,
    pub initial_estimate: AttitudeState<f64>,
    pub initial_shape: Matrix6<f64>,
    /// Radius (deg) of the ball bounding each direction error.
    pub direction_bound_deg: f64,
    /// Radius (rad per normalized time) of the ball bounding the rate error.
    pub rate_bound: f64,
    pub reference: Vec<Vector3<f64>>,
    pub weights: Vec<f64>,
    pub seed: u64,
    /// Draw noise on the bounding surfaces instead of uniformly inside.
    pub boundary_noise: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::spacecraft()
    }
}

impl ScenarioConfig {
    /// Spacecraft in a circular orbit, one quarter orbit with ten measurements.
    pub fn spacecraft() -> Self {
        let deg = PI / 180.0;
        let att = 180.0 * deg;
        let rate = 30.0 * deg;
        let c0 = RotationMatrix::new(Matrix3::from_diagonal(&Vector3::new(-1.0, -1.0, 1.0)))
            .expect("diagonal half turn");
        Self {
            inertia: [1.0, 2.8, 2.0],
            step: FRAC_PI_2 / DEFAULT_STEPS as f64,
            t_final: FRAC_PI_2,
            orbital_rate: 1.0,
            n_measurements: 10,
            initial_truth: AttitudeState::new(c0, Vector3::new(2.3160, 0.4468, -0.5910)),
            initial_estimate: AttitudeState::new(
                RotationMatrix::identity(),
                Vector3::new(2.1160, 0.5468, -0.8910),
            ),
            initial_shape: Matrix6::from_diagonal(&Vector6::new(
                2.0 * att * att,
                2.0 * att * att,
                2.0 * att * att,
                2.0 * rate * rate,
                2.0 * rate * rate,
                2.0 * rate * rate,
            )),
            direction_bound_deg: 7.0,
            rate_bound: 7.0 * deg,
            reference: vec![Vector3::x(), Vector3::y(), Vector3::z()],
            weights: vec![1.0; 3],
            seed: 0,
            boundary_noise: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Scales both sensor bound radii.
    pub fn with_bound_scale(mut self, scale: f64) -> Self {
        self.direction_bound_deg *= scale;
        self.rate_bound *= scale;
        self
    }

    pub fn steps(&self) -> usize {
        (self.t_final / self.step).round() as usize
    }

    /// Step indices of the measurement events, evenly spaced in (0, t_final].
    pub fn schedule(&self) -> Vec<usize> {
        let n = self.steps();
        (1..=self.n_measurements)
            .map(|j| ((j * n) as f64 / self.n_measurements as f64).round() as usize)
            .collect()
    }

    pub fn direction_bound_rad(&self) -> f64 {
        self.direction_bound_deg * PI / 180.0
    }

    pub fn direction_shape(&self) -> Matrix3<f64> {
        let r = self.direction_bound_rad();
        Matrix3::identity() * (r * r)
    }

    pub fn rate_shape(&self) -> Matrix3<f64> {
        Matrix3::identity() * (self.rate_bound * self.rate_bound)
    }

    pub fn params(&self) -> Result<InertiaParams<f64>, SimError> {
        Ok(InertiaParams::diagonal(self.inertia, self.step)
            .map_err(|e| SimError::Config(format!("inertia: {e}")))?
            .with_orbital_rate(self.orbital_rate))
    }

    pub fn estimator_config(&self) -> Result<EstimatorConfig<f64>, SimError> {
        let substeps = (self.steps() / self.n_measurements.max(1)).max(1);
        EstimatorConfig::new(
            self.params()?,
            substeps,
            self.reference.clone(),
            self.weights.clone(),
            vec![self.direction_shape(); self.reference.len()],
            self.rate_shape(),
        )
        .map_err(|e| SimError::Config(format!("sensor model: {e}")))
    }

    pub fn initial_ellipsoid(&self) -> Result<StateEllipsoid<f64>, SimError> {
        StateEllipsoid::new(
            self.initial_estimate.attitude,
            self.initial_estimate.angular_velocity,
            self.initial_shape,
        )
        .map_err(|e| SimError::Config(format!("P0: {e}")))
    }

    /// Initial error `x₀ = [log(Ĉ₀ᵀC₀); ω₀ − ω̂₀]`.
    pub fn initial_error(&self) -> Vector6<f64> {
        self.initial_truth.error_from(&self.initial_estimate)
    }

    /// `x₀ᵀ P₀⁻¹ x₀`.
    pub fn initial_quadratic_form(&self) -> Result<f64, SimError> {
        let inv = spd_inverse(&self.initial_shape).map_err(|e| SimError::Config(format!("P0: {e}")))?;
        let x = self.initial_error();
        Ok(x.dot(&(inv * x)))
    }

    /// Checks every invariant of the configuration.
    pub fn validate(&self) -> Result<(), SimError> {
        let cfg = |msg: String| Err(SimError::Config(msg));
        if !(self.step > 0.0) || !self.step.is_finite() {
            return cfg(format!("h must be positive, got {}", self.step));
        }
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return cfg(format!("t_final must be positive, got {}", self.t_final));
        }
        let n = self.t_final / self.step;
        if (n - n.round()).abs() > 1e-6 * n.max(1.0) {
            return cfg(format!(
                "t_final = {} is not a whole number of steps h = {}",
                self.t_final, self.step
            ));
        }
        if self.n_measurements > self.steps() {
            return cfg(format!(
                "{} measurements do not fit in {} steps",
                self.n_measurements,
                self.steps()
            ));
        }
        if !(self.direction_bound_deg > 0.0) || !(self.rate_bound > 0.0) {
            return cfg("sensor bounds must be positive".into());
        }
        self.estimator_config()?;
        self.initial_ellipsoid()?;
        let q = self.initial_quadratic_form()?;
        if !(q <= 1.0) {
            return cfg(format!(
                "initial truth lies outside the initial ellipsoid (x0' P0^-1 x0 = {q:.6})"
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Parses the `key = value` format on top of the default configuration.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut cfg = Self::spacecraft();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| SimError::Config(format!("line {}: {msg}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let key = key.trim();
            let value = value.trim();
            let numbers = || -> Result<Vec<f64>, SimError> {
                value
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<f64>().map_err(|_| err(format!("`{s}` is not a number"))))
                    .collect()
            };
            let exactly = |n: usize| -> Result<Vec<f64>, SimError> {
                let v = numbers()?;
                if v.len() != n {
                    return Err(err(format!("{key} needs {n} numbers, got {}", v.len())));
                }
                Ok(v)
            };
            let rotation = |v: Vec<f64>| {
                RotationMatrix::from_row_slice(&v).map_err(|e| err(format!("{key}: {e}")))
            };
            match key {
                "inertia" => {
                    let v = exactly(3)?;
                    cfg.inertia = [v[0], v[1], v[2]];
                }
                "h" => cfg.step = exactly(1)?[0],
                "t_final" => cfg.t_final = exactly(1)?[0],
                "orbital_rate" => cfg.orbital_rate = exactly(1)?[0],
                "n_measurements" => {
                    cfg.n_measurements = value
                        .parse()
                        .map_err(|_| err(format!("`{value}` is not a count")))?
                }
                "C0" => cfg.initial_truth.attitude = rotation(exactly(9)?)?,
                "omega0" => cfg.initial_truth.angular_velocity = Vector3::from_vec(exactly(3)?),
                "C0_hat" => cfg.initial_estimate.attitude = rotation(exactly(9)?)?,
                "omega0_hat" => {
                    cfg.initial_estimate.angular_velocity = Vector3::from_vec(exactly(3)?)
                }
                "P0" => {
                    let v = numbers()?;
                    cfg.initial_shape = match v.len() {
                        6 => Matrix6::from_diagonal(&Vector6::from_vec(v)),
                        36 => Matrix6::from_row_slice(&v),
                        n => return Err(err(format!("P0 needs 6 or 36 numbers, got {n}"))),
                    };
                }
                "S_bound_deg" => cfg.direction_bound_deg = exactly(1)?[0],
                "T_bound" => cfg.rate_bound = exactly(1)?[0],
                "E" => {
                    let v = numbers()?;
                    if v.is_empty() || v.len() % 3 != 0 {
                        return Err(err(format!("E needs a multiple of 3 numbers, got {}", v.len())));
                    }
                    cfg.reference = v.chunks(3).map(Vector3::from_column_slice).collect();
                }
                "weights" => cfg.weights = numbers()?,
                "seed" => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| err(format!("`{value}` is not a seed")))?
                }
                "boundary_noise" => {
                    cfg.boundary_noise = match value {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        _ => return Err(err(format!("`{value}` is not a boolean"))),
                    }
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    /// Renders the configuration in the text format accepted by [`parse`](Self::parse).
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(" ");
        let rows = |m: &Matrix3<f64>| {
            join(&(0..3).flat_map(|i| (0..3).map(move |j| m[(i, j)])).collect::<Vec<_>>())
        };
        let p0: Vec<f64> = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).map(|ij| self.initial_shape[ij]).collect();
        let e: Vec<f64> = self.reference.iter().flat_map(|v| v.iter().copied()).collect();
        format!(
            "inertia = {}\nh = {}\nt_final = {}\norbital_rate = {}\nn_measurements = {}\n\
             C0 = {}\nomega0 = {}\nC0_hat = {}\nomega0_hat = {}\nP0 = {}\n\
             S_bound_deg = {}\nT_bound = {}\nE = {}\nweights = {}\nseed = {}\nboundary_noise = {}\n",
            join(&self.inertia),
            self.step,
            self.t_final,
            self.orbital_rate,
            self.n_measurements,
            rows(self.initial_truth.attitude.matrix()),
            join(self.initial_truth.angular_velocity.as_slice()),
            rows(self.initial_estimate.attitude.matrix()),
            join(self.initial_estimate.angular_velocity.as_slice()),
            join(&p0),
            self.direction_bound_deg,
            self.rate_bound,
            join(&e),
            join(&self.weights),
            self.seed,
            self.boundary_noise,
        )
    }
}
