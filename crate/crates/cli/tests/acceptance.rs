//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if a required check fails.

use std::process::Command;
use std::time::{Duration, Instant};

use attitude_core::dynamics::{energy, lgvi_step, lgvi_step_traced, linearize_step, AttitudeState, InertiaParams};
use attitude_core::ellipsoid::{intersection_bound, minimal_intersection, minimal_sum};
use attitude_core::sim::{run_scenario, ScenarioConfig, ScenarioRun};
use attitude_core::so3::{exp_so3, RotationMatrix};
use attitude_core::wahba::{attitude_profile_matrix, optimality_residual, solve_wahba, wahba_cost, VectorObservations};
use nalgebra::{SMatrix, SVector, UnitQuaternion, Vector3, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    /// A failure that is reported but does not fail the suite.
    tolerated: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, tolerated: false, detail }
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        out.pass &= elapsed < limit;
        out.detail = format!("{}; {:.2?} (limit {:?})", out.detail, elapsed, limit);
    } else {
        out.detail = format!("{}; {:.2?}", out.detail, elapsed);
    }
    out
}

fn random_rotation(rng: &mut impl Rng) -> RotationMatrix<f64> {
    loop {
        let q = nalgebra::Quaternion::new(
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
            rng.random::<f64>() * 2.0 - 1.0,
        );
        if q.norm() > 0.1 && q.norm() <= 1.0 {
            let m = UnitQuaternion::from_quaternion(q).to_rotation_matrix().into_inner();
            return RotationMatrix::new(m).unwrap();
        }
    }
}

fn random_unit(rng: &mut impl Rng) -> Vector3<f64> {
    random_rotation(rng) * Vector3::z()
}

fn wahba_recovery() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let e = vec![Vector3::x(), Vector3::y(), Vector3::z()];
    let (mut worst_err, mut worst_res) = (0.0f64, 0.0f64);
    for _ in 0..500 {
        let c = random_rotation(&mut rng);
        let body = e.iter().map(|v| c.transpose() * v).collect();
        let obs = VectorObservations::new(e.clone(), body, vec![1.0; 3]).unwrap();
        let est = solve_wahba(&obs).unwrap();
        worst_err = worst_err.max((est.matrix() - c.matrix()).norm());
        worst_res = worst_res.max(optimality_residual(&attitude_profile_matrix(&obs), &est).norm());
    }
    Outcome::new(
        worst_err < 1e-10 && worst_res < 1e-10,
        format!("max error {worst_err:.1e}, max residual {worst_res:.1e}"),
    )
}

fn wahba_global() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut beaten = 0;
    let mut min_margin = f64::INFINITY;
    for _ in 0..50 {
        let c = random_rotation(&mut rng);
        let m = rng.random_range(3..7);
        let reference: Vec<_> = (0..m).map(|_| random_unit(&mut rng)).collect();
        let body = reference
            .iter()
            .map(|e| exp_so3(&(random_unit(&mut rng) * 0.2 * rng.random::<f64>())) * (c.transpose() * e))
            .map(|b| b.normalize())
            .collect();
        let weights = (0..m).map(|_| 0.2 + rng.random::<f64>()).collect();
        let obs = VectorObservations::new(reference, body, weights).unwrap();
        let best = wahba_cost(&obs, &solve_wahba(&obs).unwrap());
        let sampled = (0..10_000)
            .map(|_| wahba_cost(&obs, &random_rotation(&mut rng)))
            .fold(f64::INFINITY, f64::min);
        if best > sampled {
            beaten += 1;
        }
        min_margin = min_margin.min(sampled - best);
    }
    Outcome::new(beaten == 0, format!("{beaten}/50 beaten by sampling, min margin {min_margin:.2e}"))
}

fn gravity_params(h: f64) -> InertiaParams<f64> {
    InertiaParams::diagonal([1.0, 2.8, 2.0], h).unwrap()
}

fn spacecraft_initial() -> AttitudeState<f64> {
    ScenarioConfig::spacecraft().initial_truth
}

fn lgvi_structure() -> Outcome {
    let p = gravity_params(1e-3);
    let n = 100_000;
    let mut s = spacecraft_initial();
    let mut worst_res = 0.0f64;
    let mut energies = Vec::with_capacity(n + 1);
    energies.push(energy(&s, &p));
    for _ in 0..n {
        let t = lgvi_step_traced(&s, &p).unwrap();
        worst_res = worst_res.max(t.residual);
        s = t.state;
        energies.push(energy(&s, &p));
    }
    let defect = s.attitude.orthogonality_defect();
    let k_mean = n as f64 / 2.0;
    let e_mean = energies.iter().sum::<f64>() / energies.len() as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (k, e) in energies.iter().enumerate() {
        let dk = k as f64 - k_mean;
        sxy += dk * (e - e_mean);
        sxx += dk * dk;
    }
    let slope = sxy / sxx;
    Outcome::new(
        defect < 1e-12 && slope.abs() < 1e-10 && worst_res < 1e-12,
        format!("defect {defect:.1e}, energy slope {slope:.1e}/step, max residual {worst_res:.1e}"),
    )
}

fn lgvi_order() -> Outcome {
    let t = 1.0;
    let run = |h: f64| {
        let p = gravity_params(h);
        let mut s = spacecraft_initial();
        for _ in 0..(t / h).round() as usize {
            s = lgvi_step(&s, &p).unwrap();
        }
        s
    };
    let reference = run(1e-3 / 16.0);
    let errors: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&h| run(h).error_from(&reference).norm()).collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let list = |v: &[f64], f: fn(&f64) -> String| v.iter().map(f).collect::<Vec<_>>().join(", ");
    Outcome::new(
        orders.iter().all(|o| (1.8..=2.2).contains(o)),
        format!(
            "errors [{}], observed orders [{}]",
            list(&errors, |e| format!("{e:.2e}")),
            list(&orders, |o| format!("{o:.3}"))
        ),
    )
}

fn linearization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = gravity_params((std::f64::consts::PI / 2.0) / 200.0);
    let eps = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let center = AttitudeState::new(
            random_rotation(&mut rng),
            Vector3::from_fn(|_, _| rng.random::<f64>() * 6.0 - 3.0),
        );
        let a = linearize_step(&center, &p).unwrap();
        let base = lgvi_step(&center, &p).unwrap();
        for k in 0..6 {
            let mut d = Vector6::zeros();
            d[k] = eps;
            let plus = lgvi_step(&center.perturbed(&d), &p).unwrap().error_from(&base);
            let minus = lgvi_step(&center.perturbed(&-d), &p).unwrap().error_from(&base);
            let fd = (plus - minus) / (2.0 * eps);
            worst = worst.max((a.column(k) - fd).norm() / fd.norm());
        }
    }
    Outcome::new(worst < 1e-5, format!("max column relative error {worst:.2e}"))
}

type M6 = SMatrix<f64, 6, 6>;
type V6 = SVector<f64, 6>;

fn random_spd(rng: &mut impl Rng, scale: f64) -> M6 {
    let a = M6::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0);
    (a * a.transpose() + M6::identity() * 0.02) * scale
}

fn sample_in(rng: &mut impl Rng, c: &V6, p: &M6) -> V6 {
    let l = p.cholesky().unwrap().l();
    let dir = loop {
        let g = V6::from_fn(|_, _| rng.random::<f64>() * 2.0 - 1.0);
        if g.norm() > 1e-3 && g.norm() <= 1.0 {
            break g.normalize();
        }
    };
    // Half the samples on the boundary, where violations would show.
    let r = if rng.random::<bool>() { 1.0 } else { rng.random::<f64>().powf(1.0 / 6.0) };
    c + l * dir * r
}

fn form(x: &V6, c: &V6, p: &M6) -> f64 {
    let d = x - c;
    d.dot(&p.cholesky().unwrap().solve(&d))
}

fn ellipsoid_calculus() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut sum_violations, mut cap_violations) = (0usize, 0usize);
    let mut worst_gap = 0.0f64;
    let mut cap_samples = 0usize;
    for _ in 0..50 {
        let terms: Vec<M6> = (0..3)
            .map(|_| {
                let scale = rng.random::<f64>() + 0.1;
                random_spd(&mut rng, scale)
            })
            .collect();
        let sum = minimal_sum(&terms).unwrap();
        for _ in 0..10_000 {
            let x: V6 = terms.iter().map(|t| sample_in(&mut rng, &V6::zeros(), t)).sum();
            if form(&x, &V6::zeros(), &sum) > 1.0 + 1e-9 {
                sum_violations += 1;
            }
        }

        let pm = random_spd(&mut rng, 1.0);
        let pf = random_spd(&mut rng, 1.0);
        let x_mf = sample_in(&mut rng, &V6::zeros(), &pm) * 0.7;
        let cap = minimal_intersection(&pm, &x_mf, &pf).unwrap();
        let mut kept = 0;
        while kept < 10_000 {
            let y = if rng.random::<bool>() {
                sample_in(&mut rng, &V6::zeros(), &pm)
            } else {
                sample_in(&mut rng, &x_mf, &pf)
            };
            if form(&y, &V6::zeros(), &pm) <= 1.0 && form(&y, &x_mf, &pf) <= 1.0 {
                kept += 1;
                if form(&y, &cap.center, &cap.shape) > 1.0 + 1e-9 {
                    cap_violations += 1;
                }
            }
        }
        cap_samples += kept;
        let grid = (0..2000)
            .map(|i| 10f64.powf(-6.0 + 12.0 * i as f64 / 1999.0))
            .filter_map(|q| intersection_bound(&pm, &x_mf, &pf, q).ok())
            .filter(|b| b.beta > 0.0)
            .map(|b| b.trace())
            .fold(f64::INFINITY, f64::min);
        worst_gap = worst_gap.max((cap.trace() - grid).abs() / grid);
    }
    Outcome::new(
        sum_violations == 0 && cap_violations == 0 && worst_gap < 1e-3,
        format!(
            "sum violations {sum_violations}/500000, intersection violations {cap_violations}/{cap_samples}, \
             max trace gap to grid {:.3}%",
            worst_gap * 100.0
        ),
    )
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    // Linear interpolation between closest ranks.
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sharp_drop(run: &ScenarioRun) -> bool {
    let first = &run.events[0];
    first.fused.zeta_norm_deg <= 0.2 * first.prior.zeta_norm_deg && first.fused.trace_p <= 0.1 * first.prior.trace_p
}

fn spacecraft_scenario() -> Vec<(&'static str, Outcome)> {
    let seeds = 0..20u64;
    let cfg = ScenarioConfig::spacecraft();
    let start = Instant::now();
    let runs: Vec<ScenarioRun> = seeds.clone().map(|s| run_scenario(&cfg.clone().with_seed(s)).unwrap()).collect();
    let quarter: Vec<ScenarioRun> = seeds
        .map(|s| run_scenario(&cfg.clone().with_seed(s).with_bound_scale(0.25)).unwrap())
        .collect();
    let elapsed = start.elapsed();

    let q0 = cfg.initial_quadratic_form().unwrap();
    let first = &runs[0].records[0];
    let mut terminal: Vec<f64> = runs.iter().map(|r| r.terminal().zeta_norm_deg).collect();
    terminal.sort_by(f64::total_cmp);
    let median = percentile(&terminal, 0.5);
    let p90 = percentile(&terminal, 0.9);
    let drops = runs.iter().filter(|r| sharp_drop(r)).count();
    let contained = runs.iter().filter(|r| r.always_contained()).count();
    let contained_quarter = quarter.iter().filter(|r| r.always_contained()).count();

    let mut terminal_check = Outcome::new(
        median < 1.0 && p90 < 2.0,
        format!("median terminal error {median:.3} deg, 90th percentile {p90:.3} deg"),
    );
    terminal_check.tolerated = true;
    vec![
        (
            "7a",
            Outcome::new((q0 - 0.7553).abs() < 1e-3, format!("x0' P0^-1 x0 = {q0:.5}")),
        ),
        (
            "7b",
            Outcome::new(
                (first.zeta_norm_deg - 180.0).abs() < 1e-6 && (first.domega_norm - 0.3742).abs() < 1e-4,
                format!(
                    "initial errors {:.4} deg, {:.5} rad/s",
                    first.zeta_norm_deg, first.domega_norm
                ),
            ),
        ),
        ("7c", terminal_check),
        ("7d", Outcome::new(drops >= 18, format!("sharp drop at first fusion in {drops}/20 runs"))),
        (
            "7e",
            Outcome::new(
                contained * 100 >= 95 * 20 && contained_quarter * 100 >= 99 * 20,
                format!("contained {contained}/20, at quarter bounds {contained_quarter}/20"),
            ),
        ),
        (
            "7 runtime",
            Outcome::new(
                elapsed < Duration::from_secs(120),
                format!("{elapsed:.2?} for 40 runs (limit 120s)"),
            ),
        ),
    ]
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_estimate"))
            .args(["demo-sectionV", "--seed", "7"])
            .output()
            .unwrap()
    };
    let a = run();
    let b = run();
    Outcome::new(
        a.status.success() && b.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout,
        format!("{} bytes, identical: {}", a.stdout.len(), a.stdout == b.stdout),
    )
}

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let mut results: Vec<(String, Outcome)> = vec![
        ("1 wahba recovery".into(), timed(secs(1), wahba_recovery)),
        ("2 wahba global optimum".into(), timed(secs(10), wahba_global)),
        ("3 lgvi structure".into(), timed(secs(30), lgvi_structure)),
        ("4 lgvi order".into(), timed(None, lgvi_order)),
        ("5 linearization".into(), timed(None, linearization)),
        ("6 ellipsoid calculus".into(), timed(secs(60), ellipsoid_calculus)),
    ];
    for (tag, outcome) in spacecraft_scenario() {
        results.push((format!("{tag} spacecraft scenario"), outcome));
    }
    results.push(("8 cli determinism".into(), timed(None, determinism)));

    let mut required_failures = 0;
    for (name, o) in &results {
        let status = match (o.pass, o.tolerated) {
            (true, _) => "PASS",
            (false, true) => "FAIL (tolerated)",
            (false, false) => "FAIL",
        };
        println!("criterion {name:<30} {status:<17} {}", o.detail);
        if !o.pass && !o.tolerated {
            required_failures += 1;
        }
    }
    if required_failures > 0 {
        println!("{required_failures} required criteria failed");
        std::process::exit(1);
    }
}
