//! Rigid-body attitude dynamics in a gravity-gradient potential and its Lie
//! group variational integrator.
//!
//! The potential is the normalized circular-orbit gravity gradient
//! `U(C) = (3ω_c²/2)·e₃ᵀ C J Cᵀ e₃`, whose moment is
//! `M = 3ω_c²·(Cᵀe₃) × J(Cᵀe₃)`. Setting `orbital_rate = 0` gives the free
//! rigid body.
//!
//! One integrator step solves `h·S(Jωₖ + h/2·Mₖ) = Fₖ J_d − J_d Fₖᵀ` for the
//! relative rotation `Fₖ`, then `Cₖ₊₁ = Cₖ Fₖ` and
//! `Jωₖ₊₁ = Fₖᵀ Jωₖ + h/2·Fₖᵀ Mₖ + h/2·Mₖ₊₁`.

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::linalg::check_spd;
use crate::scalar::Real;
use crate::so3::{exp_so3, hat, log_so3, right_jacobian, vee_unchecked, RotationMatrix};

pub type Mat6<T> = Matrix6<T>;
pub type Vec6<T> = Vector6<T>;

/// Default iteration cap for the implicit solve.
pub const NEWTON_MAX_ITERATIONS: usize = 50;

/// Central-difference step used by [`linearize_step_fd`].
pub const FD_STEP: f64 = 1e-6;

/// Inertia, integration step and orbital rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InertiaParams<T: Real> {
    inertia: Matrix3<T>,
    inertia_inv: Matrix3<T>,
    nonstandard: Matrix3<T>,
    pub step: T,
    pub orbital_rate: T,
    pub newton_max_iterations: usize,
    pub newton_tolerance: f64,
}

impl<T: Real> InertiaParams<T> {
    pub fn new(inertia: Matrix3<T>, step: T, orbital_rate: T) -> Result<Self> {
        let tol = T::TOLERANCES;
        let (principal, _) = check_spd(&inertia, tol.symmetry, tol.spd_eigenvalue)?;
        let slack = T::lit(1e-12).max(T::default_epsilon() * T::lit(16.0)) * principal[2];
        if principal[2] > principal[0] + principal[1] + slack {
            return Err(Error::InvalidInput(format!(
                "principal moments {principal:?} violate the triangle inequality"
            )));
        }
        if !(step > T::zero()) || !step.is_finite() {
            return Err(Error::InvalidInput("integration step must be positive".into()));
        }
        if !orbital_rate.is_finite() {
            return Err(Error::InvalidInput("orbital rate must be finite".into()));
        }
        let inertia = crate::linalg::symmetrize(&inertia);
        let inertia_inv = crate::linalg::spd_inverse(&inertia)?;
        let nonstandard = Matrix3::identity() * (inertia.trace() * T::lit(0.5)) - inertia;
        Ok(Self {
            inertia,
            inertia_inv,
            nonstandard,
            step,
            orbital_rate,
            newton_max_iterations: NEWTON_MAX_ITERATIONS,
            newton_tolerance: tol.newton_residual,
        })
    }

    /// Diagonal inertia with the default orbital rate of one.
    pub fn diagonal(moments: [T; 3], step: T) -> Result<Self> {
        Self::new(
            Matrix3::from_diagonal(&Vector3::from(moments)),
            step,
            T::one(),
        )
    }

    pub fn with_step(mut self, step: T) -> Result<Self> {
        if !(step > T::zero()) {
            return Err(Error::InvalidInput("integration step must be positive".into()));
        }
        self.step = step;
        Ok(self)
    }

    pub fn with_orbital_rate(mut self, rate: T) -> Self {
        self.orbital_rate = rate;
        self
    }

    pub fn inertia(&self) -> &Matrix3<T> {
        &self.inertia
    }

    /// `J_d = ½tr(J)·I − J`.
    pub fn nonstandard_inertia(&self) -> &Matrix3<T> {
        &self.nonstandard
    }

    pub fn inertia_inverse(&self) -> &Matrix3<T> {
        &self.inertia_inv
    }
}

/// Attitude and body angular velocity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttitudeState<T: Real> {
    pub attitude: RotationMatrix<T>,
    pub angular_velocity: Vector3<T>,
}

impl<T: Real> AttitudeState<T> {
    pub fn new(attitude: RotationMatrix<T>, angular_velocity: Vector3<T>) -> Self {
        Self {
            attitude,
            angular_velocity,
        }
    }

    /// `(C·exp(S(ζ)), ω + δω)` for `x = [ζ; δω]`.
    pub fn perturbed(&self, x: &Vector6<T>) -> Self {
        let zeta = x.fixed_rows::<3>(0).into_owned();
        let domega = x.fixed_rows::<3>(3).into_owned();
        Self {
            attitude: self.attitude * exp_so3(&zeta),
            angular_velocity: self.angular_velocity + domega,
        }
    }

    /// Exponential coordinates `[log(Ĉᵀ C); ω − ω̂]` of `self` about `center`.
    pub fn error_from(&self, center: &AttitudeState<T>) -> Vector6<T> {
        let zeta = log_so3(&(center.attitude.transpose() * self.attitude));
        let domega = self.angular_velocity - center.angular_velocity;
        Vector6::new(zeta.x, zeta.y, zeta.z, domega.x, domega.y, domega.z)
    }
}

/// Nadir direction `Cᵀe₃` in the body frame.
#[inline]
fn nadir<T: Real>(c: &RotationMatrix<T>) -> Vector3<T> {
    c.matrix().row(2).transpose()
}

/// Gravity-gradient potential `U(C)`.
pub fn potential<T: Real>(c: &RotationMatrix<T>, params: &InertiaParams<T>) -> T {
    let r = nadir(c);
    let w2 = params.orbital_rate * params.orbital_rate;
    r.dot(&(params.inertia * r)) * w2 * T::lit(1.5)
}

/// Moment due to the potential, `M = 3ω_c²·r × Jr` with `r = Cᵀe₃`.
pub fn potential_moment<T: Real>(c: &RotationMatrix<T>, params: &InertiaParams<T>) -> Vector3<T> {
    let r = nadir(c);
    let w2 = params.orbital_rate * params.orbital_rate;
    r.cross(&(params.inertia * r)) * (w2 * T::lit(3.0))
}

/// Derivative of the moment with respect to a body-frame attitude perturbation
/// `C → C·exp(S(ζ))`.
pub fn moment_jacobian<T: Real>(c: &RotationMatrix<T>, params: &InertiaParams<T>) -> Matrix3<T> {
    let r = nadir(c);
    let jr = params.inertia * r;
    let w2 = params.orbital_rate * params.orbital_rate;
    (hat(&r) * params.inertia - hat(&jr)) * hat(&r) * (w2 * T::lit(3.0))
}

/// Kinetic plus potential energy.
pub fn energy<T: Real>(state: &AttitudeState<T>, params: &InertiaParams<T>) -> T {
    let w = &state.angular_velocity;
    w.dot(&(params.inertia * w)) * T::lit(0.5) + potential(&state.attitude, params)
}

/// Converged implicit solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImplicitSolution<T: Real> {
    pub rotation: RotationMatrix<T>,
    /// ‖F J_d − J_d Fᵀ − h·S(p)‖_F at the returned rotation.
    pub residual: T,
    pub iterations: usize,
}

/// `F J_d − J_d Fᵀ − h·S(p)` as a 3-vector.
fn implicit_residual<T: Real>(f: &Matrix3<T>, p: &Vector3<T>, params: &InertiaParams<T>) -> Vector3<T> {
    let fj = f * params.nonstandard;
    vee_unchecked(&(fj - fj.transpose())) - p * params.step
}

/// Solves `F J_d − J_d Fᵀ = h·S(p)` for `F ∈ SO(3)`.
pub fn solve_implicit_f<T: Real>(p: &Vector3<T>, params: &InertiaParams<T>) -> Result<RotationMatrix<T>> {
    Ok(solve_implicit(p, params)?.rotation)
}

/// Newton iteration on `F = exp(S(f))`, starting from `f = h·J⁻¹p`.
pub fn solve_implicit<T: Real>(p: &Vector3<T>, params: &InertiaParams<T>) -> Result<ImplicitSolution<T>> {
    let tol = T::lit(params.newton_tolerance) * (T::one() + params.nonstandard.norm());
    // Matrix residual norm is √2 times the vector residual norm.
    let sqrt2 = T::lit(std::f64::consts::SQRT_2);
    let mut f = params.inertia_inv * p * params.step;
    let mut rot = exp_so3(&f);
    let mut res = implicit_residual(rot.matrix(), p, params);
    let mut best = res.norm() * sqrt2;

    for iteration in 0..params.newton_max_iterations {
        if best <= tol * T::lit(0.01) {
            return Ok(ImplicitSolution {
                rotation: rot,
                residual: best,
                iterations: iteration,
            });
        }
        let a = rot.matrix() * params.nonstandard;
        let jac = (Matrix3::identity() * a.trace() - a) * rot.matrix() * right_jacobian(&f);
        let Some(step) = jac.lu().solve(&res) else {
            break;
        };
        let next_f = f - step;
        let next_rot = exp_so3(&next_f);
        let next_res = implicit_residual(next_rot.matrix(), p, params);
        let norm = next_res.norm() * sqrt2;
        if norm >= best && best <= tol {
            // Stagnated at round-off level.
            return Ok(ImplicitSolution {
                rotation: rot,
                residual: best,
                iterations: iteration,
            });
        }
        f = next_f;
        rot = next_rot;
        res = next_res;
        best = norm;
    }
    if best <= tol {
        return Ok(ImplicitSolution {
            rotation: rot,
            residual: best,
            iterations: params.newton_max_iterations,
        });
    }
    Err(Error::NoConvergence {
        iterations: params.newton_max_iterations,
        residual: best.as_f64(),
    })
}

/// One integrator step with the intermediate quantities kept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepTrace<T: Real> {
    pub state: AttitudeState<T>,
    pub relative: RotationMatrix<T>,
    pub residual: T,
    pub iterations: usize,
}

pub fn lgvi_step<T: Real>(state: &AttitudeState<T>, params: &InertiaParams<T>) -> Result<AttitudeState<T>> {
    Ok(lgvi_step_traced(state, params)?.state)
}

pub fn lgvi_step_traced<T: Real>(state: &AttitudeState<T>, params: &InertiaParams<T>) -> Result<StepTrace<T>> {
    let h = params.step;
    let half_h = h * T::lit(0.5);
    let moment = potential_moment(&state.attitude, params);
    let momentum = params.inertia * state.angular_velocity;
    let p = momentum + moment * half_h;

    let solution = solve_implicit(&p, params)?;
    let f = solution.rotation;
    let attitude = state.attitude * f;
    let next_moment = potential_moment(&attitude, params);
    let ft = f.matrix().transpose();
    let next_momentum = ft * p + next_moment * half_h;

    Ok(StepTrace {
        state: AttitudeState {
            attitude,
            angular_velocity: params.inertia_inv * next_momentum,
        },
        relative: f,
        residual: solution.residual,
        iterations: solution.iterations,
    })
}

/// Integrates `steps` times, returning every state including the initial one.
pub fn integrate<T: Real>(
    initial: &AttitudeState<T>,
    params: &InertiaParams<T>,
    steps: usize,
) -> Result<Vec<AttitudeState<T>>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(*initial);
    let mut current = *initial;
    for k in 0..steps {
        current = lgvi_step(&current, params).map_err(|e| e.at_step(k))?;
        out.push(current);
    }
    Ok(out)
}

/// Jacobian of the one-step flow in exponential coordinates `(ζ, δω)` about
/// `center`, derived by differentiating the discrete equations.
pub fn linearize_step<T: Real>(center: &AttitudeState<T>, params: &InertiaParams<T>) -> Result<Matrix6<T>> {
    let h = params.step;
    let half_h = h * T::lit(0.5);
    let j = &params.inertia;

    let trace = lgvi_step_traced(center, params)?;
    let f = trace.relative.matrix();
    let ft = f.transpose();
    let p = j * center.angular_velocity + potential_moment(&center.attitude, params) * half_h;
    let dm = moment_jacobian(&center.attitude, params);
    let dm_next = moment_jacobian(&trace.state.attitude, params);

    // δp = J δω + h/2·∂M ζ; the implicit equation gives Γ φ = h δp for F = F̂ exp(S(φ)).
    let a = f * params.nonstandard;
    let gamma = (Matrix3::identity() * a.trace() - a) * f;
    let gamma_inv = gamma.try_inverse().ok_or(Error::Singular {
        det: gamma.determinant().as_f64(),
    })?;
    let dp_dzeta = dm * half_h;
    let dp_domega = *j;
    let dphi_dzeta = gamma_inv * dp_dzeta * h;
    let dphi_domega = gamma_inv * dp_domega * h;

    // ζ' = F̂ᵀ ζ + φ
    let dz_dzeta = ft + dphi_dzeta;
    let dz_domega = dphi_domega;

    // J δω' = F̂ᵀ δp + S(F̂ᵀ p̂) φ + h/2·∂M' ζ'
    let s = hat(&(ft * p));
    let jw_dzeta = ft * dp_dzeta + s * dphi_dzeta + dm_next * dz_dzeta * half_h;
    let jw_domega = ft * dp_domega + s * dphi_domega + dm_next * dz_domega * half_h;
    let jinv = &params.inertia_inv;

    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&dz_dzeta);
    out.fixed_view_mut::<3, 3>(0, 3).copy_from(&dz_domega);
    out.fixed_view_mut::<3, 3>(3, 0).copy_from(&(jinv * jw_dzeta));
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&(jinv * jw_domega));
    Ok(out)
}

/// Central finite-difference Jacobian of the one-step flow.
pub fn linearize_step_fd<T: Real>(
    center: &AttitudeState<T>,
    params: &InertiaParams<T>,
    eps: T,
) -> Result<Matrix6<T>> {
    let next = lgvi_step(center, params)?;
    let mut out = Matrix6::zeros();
    for col in 0..6 {
        let mut dx = Vector6::zeros();
        dx[col] = eps;
        let plus = lgvi_step(&center.perturbed(&dx), params)?.error_from(&next);
        let minus = lgvi_step(&center.perturbed(&-dx), params)?.error_from(&next);
        out.set_column(col, &((plus - minus) / (eps + eps)));
    }
    Ok(out)
}
