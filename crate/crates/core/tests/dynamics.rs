use attitude_core::dynamics::{
    energy, integrate, lgvi_step, lgvi_step_traced, linearize_step, potential, potential_moment, AttitudeState,
    InertiaParams,
};
use attitude_core::so3::{exp_so3, log_so3, RotationMatrix};
use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};
use proptest::prelude::*;

fn params(h: f64) -> InertiaParams<f64> {
    InertiaParams::diagonal([1.0, 2.8, 2.0], h).unwrap()
}

fn initial() -> AttitudeState<f64> {
    AttitudeState::new(
        RotationMatrix::from_row_slice(&[-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0]).unwrap(),
        Vector3::new(2.3160, 0.4468, -0.5910),
    )
}

/// Independent one-step map: Newton on `vee(F Jd − Jd Fᵀ) = h p` with a
/// finite-difference Jacobian.
fn reference_step(state: &AttitudeState<f64>, params: &InertiaParams<f64>) -> AttitudeState<f64> {
    let h = params.step;
    let j = *params.inertia();
    let jd = Matrix3::identity() * (0.5 * j.trace()) - j;
    let m0 = potential_moment(&state.attitude, params);
    let p = j * state.angular_velocity + m0 * (h / 2.0);
    let residual = |f: &Vector3<f64>| {
        let fm = exp_so3(f).into_inner();
        let a = fm * jd - jd * fm.transpose();
        Vector3::new(a[(2, 1)], a[(0, 2)], a[(1, 0)]) - p * h
    };
    let mut f = j.try_inverse().unwrap() * p * h;
    for _ in 0..30 {
        let r = residual(&f);
        if r.norm() < 1e-15 {
            break;
        }
        let mut jac = Matrix3::zeros();
        for k in 0..3 {
            let mut d = Vector3::zeros();
            d[k] = 1e-7;
            jac.set_column(k, &((residual(&(f + d)) - residual(&(f - d))) / 2e-7));
        }
        f -= jac.lu().solve(&r).unwrap();
    }
    let fr = exp_so3(&f);
    let next = state.attitude * fr;
    let m1 = potential_moment(&next, params);
    let jw = fr.transpose().into_inner() * p + m1 * (h / 2.0);
    AttitudeState::new(next, j.try_inverse().unwrap() * jw)
}

#[test]
fn step_matches_independent_solver() {
    let p = params(0.01);
    let mut s = initial();
    for _ in 0..50 {
        let a = lgvi_step(&s, &p).unwrap();
        let b = reference_step(&s, &p);
        assert!((a.attitude.matrix() - b.attitude.matrix()).norm() < 1e-9);
        assert!((a.angular_velocity - b.angular_velocity).norm() < 1e-9);
        s = a;
    }
}

#[test]
fn moment_is_negative_potential_gradient() {
    let p = params(0.01);
    let c = exp_so3(&Vector3::new(0.4, -1.2, 0.9));
    let m = potential_moment(&c, &p);
    let eps = 1e-6;
    for k in 0..3 {
        let mut d = Vector3::zeros();
        d[k] = eps;
        let du = (potential(&(c * exp_so3(&d)), &p) - potential(&(c * exp_so3(&-d)), &p)) / (2.0 * eps);
        assert!((m[k] + du).abs() < 1e-8, "axis {k}: {} vs {}", m[k], -du);
    }
}

#[test]
fn energy_is_conserved_to_second_order() {
    let mut drift = Vec::new();
    for h in [0.02, 0.01, 0.005] {
        let p = params(h);
        let steps = (2.0 / h) as usize;
        let traj = integrate(&initial(), &p, steps).unwrap();
        let e0 = energy(&traj[0], &p);
        let worst = traj.iter().map(|s| (energy(s, &p) - e0).abs()).fold(0.0, f64::max);
        drift.push(worst);
    }
    for w in drift.windows(2) {
        let ratio = w[0] / w[1];
        assert!(ratio > 3.0 && ratio < 5.0, "{drift:?}");
    }
}

#[test]
fn spatial_angular_momentum_is_conserved_without_torque() {
    let p = params(0.05).with_orbital_rate(0.0);
    let traj = integrate(&initial(), &p, 2000).unwrap();
    let momentum = |s: &AttitudeState<f64>| s.attitude * (p.inertia() * s.angular_velocity);
    let pi0 = momentum(&traj[0]);
    for s in &traj {
        assert!((momentum(s) - pi0).norm() < 1e-12 * pi0.norm().max(1.0) * 10.0);
    }
}

#[test]
fn orthogonality_is_preserved_over_long_runs() {
    let p = params(1e-2);
    let traj = integrate(&initial(), &p, 20_000).unwrap();
    let worst = traj.iter().map(|s| s.attitude.orthogonality_defect()).fold(0.0, f64::max);
    assert!(worst < 1e-12, "{worst:e}");
}

#[test]
fn implicit_residual_stays_at_round_off() {
    let p = params(1e-2);
    let mut s = initial();
    for _ in 0..2000 {
        let t = lgvi_step_traced(&s, &p).unwrap();
        assert!(t.residual < 1e-12, "{}", t.residual);
        assert!(t.iterations <= 6);
        s = t.state;
    }
}

#[test]
fn observed_order_is_two() {
    let t = 1.0;
    let reference = {
        let h = 1e-3 / 16.0;
        *integrate(&initial(), &params(h), (t / h).round() as usize).unwrap().last().unwrap()
    };
    let err = |h: f64| {
        let end = *integrate(&initial(), &params(h), (t / h).round() as usize).unwrap().last().unwrap();
        end.error_from(&reference).norm()
    };
    let e = [err(4e-3), err(2e-3), err(1e-3)];
    for w in e.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((1.8..=2.2).contains(&order), "{e:?}");
    }
}

#[test]
fn analytic_linearization_matches_central_differences() {
    let p = params(0.01);
    let center = initial();
    let a = linearize_step(&center, &p).unwrap();
    let base = lgvi_step(&center, &p).unwrap();
    let eps = 1e-6;
    let mut fd = Matrix6::zeros();
    for k in 0..6 {
        let mut d = Vector6::zeros();
        d[k] = eps;
        let plus = lgvi_step(&center.perturbed(&d), &p).unwrap().error_from(&base);
        let minus = lgvi_step(&center.perturbed(&-d), &p).unwrap().error_from(&base);
        fd.set_column(k, &((plus - minus) / (2.0 * eps)));
    }
    assert!((a - fd).norm() < 1e-7 * fd.norm(), "{a}{fd}");
}

#[test]
fn single_precision_step_stays_on_the_group() {
    let p = InertiaParams::diagonal([1.0f32, 2.8, 2.0], 0.01).unwrap();
    let mut s = AttitudeState::new(RotationMatrix::identity(), Vector3::new(0.3f32, 1.0, -0.2));
    for _ in 0..1000 {
        s = lgvi_step(&s, &p).unwrap();
    }
    assert!(s.attitude.orthogonality_defect() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relative_rotation_tracks_body_rate(
        zeta in prop::array::uniform3(-3.0..3.0f64),
        omega in prop::array::uniform3(-5.0..5.0f64),
    ) {
        let start = AttitudeState::new(exp_so3(&Vector3::from(zeta)), Vector3::from(omega));
        let t = lgvi_step_traced(&start, &params(0.01)).unwrap();
        prop_assert!(t.relative.orthogonality_defect() < 1e-13);
        prop_assert!((log_so3(&t.relative) - Vector3::from(omega) * 0.01).norm() < 1e-2);
        prop_assert!(t.residual < 1e-12);
    }

    #[test]
    fn energy_error_is_small_over_one_orbit_fraction(
        zeta in prop::array::uniform3(-3.0..3.0f64),
        omega in prop::array::uniform3(-2.0..2.0f64),
    ) {
        let p = params(0.005);
        let start = AttitudeState::new(exp_so3(&Vector3::from(zeta)), Vector3::from(omega));
        let traj = integrate(&start, &p, 300).unwrap();
        let e0 = energy(&start, &p);
        for s in &traj {
            prop_assert!((energy(s, &p) - e0).abs() < 1e-3 * (1.0 + e0.abs()));
        }
    }
}
