//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{
    batch_minimizer, controller, dynamics_oracle, min_eigenvalue, random_params, random_samples,
    random_state, run_recursive, to_matrix,
};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcac_autopilot::autopilot::mix;
use rcac_autopilot::dynamics::{derivatives, motor_speeds_to_wrench, step, QuadParams, RigidBodyState, Wrench};
use rcac_autopilot::harness::metrics::gain_variation;
use rcac_autopilot::harness::telemetry::GAIN_NAMES;
use rcac_autopilot::harness::{simulate, RunOutput, ScenarioConfig};
use rcac_autopilot::mission::Mission;

struct Verdict {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn verdict(name: &'static str, pass: bool, detail: String) -> Verdict {
    Verdict { name, pass, detail }
}

fn rls_batch_equivalence() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let len = rng.gen_range(1..=200);
        let theta0: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p0 = 10f64.powf(rng.gen_range(-2.0..1.0));
        let sigma = rng.gen_range(0.1..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let samples = random_samples(&mut rng, n, len);
        let mut ctrl = controller(n, &theta0, p0, sigma);
        let trace = run_recursive(&mut ctrl, &samples);
        let (want, _) = batch_minimizer(&samples, &theta0, p0, sigma);
        let got = DVector::from_column_slice(&trace.last().unwrap().0);
        worst = worst.max((got - &want).norm() / want.norm().max(1e-300));
    }
    let elapsed = start.elapsed();
    verdict(
        "recursive/batch gain equivalence",
        worst < 1e-8 && elapsed < Duration::from_secs(10),
        format!("100 sequences, worst relative error {worst:.2e} (< 1e-8), {:.2} s (< 10 s)", elapsed.as_secs_f64()),
    )
}

fn covariance_properties() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut min_p = f64::INFINITY;
    let mut min_drop = f64::INFINITY;
    let mut asymmetric = 0usize;
    let mut updates = 0usize;
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let len = rng.gen_range(1..=200);
        let p0 = 10f64.powf(rng.gen_range(-2.0..1.0));
        let sigma = rng.gen_range(0.1..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let samples = random_samples(&mut rng, n, len);
        let mut ctrl = controller(n, &vec![0.0; n], p0, sigma);
        let mut previous = to_matrix(&ctrl.covariance());
        for (_, cov) in run_recursive(&mut ctrl, &samples) {
            let p = to_matrix(&cov);
            if p != p.transpose() {
                asymmetric += 1;
            }
            min_p = min_p.min(min_eigenvalue(&p));
            min_drop = min_drop.min(min_eigenvalue(&(&previous - &p)));
            previous = p;
            updates += 1;
        }
    }
    verdict(
        "covariance symmetric, positive definite, non-increasing",
        asymmetric == 0 && min_p > 0.0 && min_drop >= -1e-10,
        format!(
            "{updates} updates, asymmetric {asymmetric}, min eig(P) {min_p:.2e} (> 0), min eig(P_k - P_k+1) {min_drop:.2e} (>= -1e-10)"
        ),
    )
}

fn dynamics_oracle_check() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let params = random_params(&mut rng);
        let state = random_state(&mut rng);
        let wrench = Wrench {
            fz: rng.gen_range(-30.0..0.0),
            mx: rng.gen_range(-2.0..2.0),
            my: rng.gen_range(-2.0..2.0),
            mz: rng.gen_range(-0.5..0.5),
        };
        let got = derivatives(&state, &wrench, &params).unwrap();
        for (g, w) in got.iter().zip(dynamics_oracle(&state, &wrench, &params)) {
            worst = worst.max((g - w).abs() / (1.0 + w.abs()));
        }
    }

    let params = QuadParams::iris();
    let start = RigidBodyState {
        u: 2.0,
        v: -1.0,
        w: 0.5,
        phi: 0.3,
        theta: -0.2,
        psi: 1.0,
        p: 3.0,
        q: 0.4,
        r: 2.0,
        ..RigidBodyState::at_rest(0.0, 0.0, -10.0)
    };
    let wrench = Wrench {
        fz: -16.0,
        mx: 0.02,
        my: -0.015,
        mz: 0.01,
    };
    let run = |dt: f64| {
        let n = (1.0 / dt).round() as usize;
        (0..n).fold(start, |s, _| step(&s, &wrench, dt, &params).unwrap())
    };
    let reference = run(1e-5);
    let err = |s: RigidBodyState<f64>| {
        let two_pi = 2.0 * std::f64::consts::PI;
        let (a, b) = (s.to_array(), reference.to_array());
        (0..12)
            .map(|i| {
                let d = a[i] - b[i];
                if i == 6 || i == 8 {
                    let m = d.rem_euclid(two_pi);
                    m.min(two_pi - m)
                } else {
                    d.abs()
                }
            })
            .fold(0.0, f64::max)
    };
    let ratio = err(run(0.004)) / err(run(0.002));
    verdict(
        "dynamics oracle and RK4 order",
        worst < 1e-12 && ratio >= 12.0,
        format!("10000 states, worst relative derivative error {worst:.2e} (< 1e-12); step-halving error ratio {ratio:.2} (>= 12)"),
    )
}

fn mixer_round_trip() -> Verdict {
    let params = QuadParams::iris();
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut worst = 0.0f64;
    let mut saturated = 0;
    for _ in 0..10_000 {
        let omegas: [f64; 4] = std::array::from_fn(|_| rng.gen_range(0.01..0.99) * params.omega_max);
        let w = motor_speeds_to_wrench(&omegas, &params).unwrap();
        let cmd = mix([w.mx / params.jxx, w.my / params.jyy, w.mz / params.jzz], -w.fz, &params);
        saturated += cmd.saturated as usize;
        let back = motor_speeds_to_wrench(&cmd.omegas, &params).unwrap();
        for (a, b) in [(back.fz, w.fz), (back.mx, w.mx), (back.my, w.my), (back.mz, w.mz)] {
            worst = worst.max((a - b).abs());
        }
    }
    verdict(
        "mixer inverts the motor model",
        worst < 1e-9 && saturated == 0,
        format!("10000 feasible wrenches, worst error {worst:.2e} (< 1e-9), saturated {saturated}"),
    )
}

struct Timed {
    output: RunOutput,
    elapsed: Duration,
}

fn fly(config: ScenarioConfig) -> Timed {
    let mission = Mission::square();
    let start = Instant::now();
    let output = simulate(&config, &mission).expect("scenario runs");
    Timed {
        output,
        elapsed: start.elapsed(),
    }
}

fn bounded(run: &RunOutput) -> bool {
    !run.metrics.diverged
        && run.records.iter().all(|r| {
            r.is_finite()
                && r.state.position().iter().all(|p| p.abs() < 1000.0)
                && r.state.body_velocity().iter().all(|v| v.abs() < 100.0)
        })
}

fn completion(run: &RunOutput) -> String {
    run.metrics
        .completion_time
        .map(|t| format!("{t:.2} s"))
        .unwrap_or_else(|| "not completed".into())
}

fn zero_init_flight(adaptive: &Timed, fixed: &Timed) -> Verdict {
    let a = &adaptive.output.metrics;
    let f = &fixed.output.metrics;
    let ta = a.completion_time.unwrap_or(f64::NAN);
    let tf = f.completion_time.unwrap_or(f64::NAN);
    let pass = a.mission_completed
        && f.mission_completed
        && bounded(&adaptive.output)
        && ta <= 200.0
        && ta > tf
        && adaptive.elapsed < Duration::from_secs(30);
    verdict(
        "zero-initialized adaptive flight",
        pass,
        format!(
            "adaptive {} vs fixed {} (adaptive later), bounded {}, runtime {:.2} s (< 30 s)",
            completion(&adaptive.output),
            completion(&fixed.output),
            bounded(&adaptive.output),
            adaptive.elapsed.as_secs_f64()
        ),
    )
}

fn gain_settling(adaptive: &Timed) -> Verdict {
    let variation = gain_variation(&adaptive.output.records);
    let failing: Vec<String> = variation
        .iter()
        .zip(GAIN_NAMES)
        .filter(|((var, fin), _)| !(*var < 0.1 * fin.abs() + 1e-3))
        .map(|((var, fin), name)| format!("{name} var {var:.3e} final {fin:.3e}"))
        .collect();
    let worst = variation
        .iter()
        .map(|(var, fin)| var / (0.1 * fin.abs() + 1e-3))
        .fold(0.0, f64::max);
    verdict(
        "adaptive gains settle",
        failing.is_empty(),
        if failing.is_empty() {
            format!("all 24 gains within 10% + 1e-3 over the final 20%, worst at {:.0}% of its bound", 100.0 * worst)
        } else {
            failing.join("; ")
        },
    )
}

fn alpha_p_ordering(runs: &[(f64, &Timed)]) -> Verdict {
    let times: Vec<f64> = runs
        .iter()
        .map(|(_, r)| r.output.metrics.completion_time.unwrap_or(f64::INFINITY))
        .collect();
    let pass = times.windows(2).all(|w| w[0] >= w[1]) && times.iter().all(|t| t.is_finite());
    let listing: Vec<String> = runs
        .iter()
        .map(|(a, r)| format!("alpha_p {a}: {}", completion(&r.output)))
        .collect();
    verdict(
        "completion time non-increasing in alpha_p",
        pass,
        listing.join(", "),
    )
}

fn alpha_n_ordering(low: &Timed, nominal: &Timed) -> Verdict {
    let (l, n) = (&low.output.metrics, &nominal.output.metrics);
    verdict(
        "position error larger at alpha_n 0.1 than at 1",
        l.rms_pos_err_total() > n.rms_pos_err_total(),
        format!(
            "rms position error {:.3} m (alpha_n 0.1, {}) vs {:.3} m (alpha_n 1, {})",
            l.rms_pos_err_total(),
            completion(&low.output),
            n.rms_pos_err_total(),
            completion(&nominal.output)
        ),
    )
}

fn inertia_robustness(fixed5: &Timed, adaptive5: &Timed, adaptive1: &Timed) -> Verdict {
    let (f, a, a1) = (
        &fixed5.output.metrics,
        &adaptive5.output.metrics,
        &adaptive1.output.metrics,
    );
    let last5 = adaptive5.output.records.last().unwrap().gains;
    let last1 = adaptive1.output.records.last().unwrap().gains;
    let gain_diff = last5
        .iter()
        .zip(last1)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    let pass = f.rms_yaw_err > a.rms_yaw_err
        && f.yaw_zero_crossings > a.yaw_zero_crossings
        && a.rms_yaw_err <= 2.0 * a1.rms_yaw_err
        && gain_diff > 1e-2;
    verdict(
        "robustness to 5x plant inertia",
        pass,
        format!(
            "rms yaw fixed {:.4} vs adaptive {:.4} rad, crossings {} vs {}, adaptive {:.4} <= 2 x {:.4}, max final gain difference {:.3} (> 1e-2)",
            f.rms_yaw_err,
            a.rms_yaw_err,
            f.yaw_zero_crossings,
            a.yaw_zero_crossings,
            a.rms_yaw_err,
            a1.rms_yaw_err,
            gain_diff
        ),
    )
}

fn determinism(first: &Timed, second: &Timed) -> Verdict {
    let (a, b) = (first.output.telemetry_csv(), second.output.telemetry_csv());
    verdict(
        "repeated runs give byte-identical telemetry",
        a == b,
        format!("{} bytes vs {} bytes", a.len(), b.len()),
    )
}

fn main() {
    let adaptive = || ScenarioConfig::adaptive();
    let scenarios = vec![
        adaptive(),
        ScenarioConfig::fixed(),
        ScenarioConfig { alpha_p: 0.1, ..adaptive() },
        ScenarioConfig { alpha_p: 0.5, ..adaptive() },
        ScenarioConfig { alpha_n: 0.1, ..adaptive() },
        ScenarioConfig { inertia_scale: 5.0, ..ScenarioConfig::fixed() },
        ScenarioConfig { inertia_scale: 5.0, ..adaptive() },
        adaptive(),
    ];
    let (offline, flights) = std::thread::scope(|scope| {
        let handles: Vec<_> = scenarios
            .into_iter()
            .map(|c| scope.spawn(move || fly(c)))
            .collect();
        let offline = vec![
            rls_batch_equivalence(),
            covariance_properties(),
            dynamics_oracle_check(),
            mixer_round_trip(),
        ];
        let flights: Vec<Timed> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        (offline, flights)
    });
    let [nominal, fixed, ap01, ap05, an01, fixed5, adaptive5, repeat] = &flights[..] else {
        unreachable!()
    };

    let mut verdicts = offline;
    verdicts.push(zero_init_flight(nominal, fixed));
    verdicts.push(gain_settling(nominal));
    verdicts.push(alpha_p_ordering(&[(0.1, ap01), (0.5, ap05), (1.0, nominal)]));
    verdicts.push(alpha_n_ordering(an01, nominal));
    verdicts.push(inertia_robustness(fixed5, adaptive5, nominal));
    verdicts.push(determinism(nominal, repeat));

    let passed = verdicts.iter().filter(|v| v.pass).count();
    for v in &verdicts {
        println!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail);
    }
    println!("acceptance: {passed}/{} criteria passed", verdicts.len());
    if passed != verdicts.len() {
        std::process::exit(1);
    }
}
