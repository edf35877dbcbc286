//! End-to-end acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report is always printed; the
//! process exits non-zero when any criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rubberroll_core::bifurcation::{
    critical_points, diagram_type, equator_critical_kappa, linear_stability, permanent_rotation,
    sigma_theta_point, DiagramType,
};
use rubberroll_core::dynamics::{
    effective_potential, lift, weighted_divergence, FullState, ReducedState,
};
use rubberroll_core::geometry::{Ellipsoid, SurfaceProfile};
use rubberroll_core::integrate::{integrate_full, integrate_reduced, IntegrateOptions, Tolerances};
use rubberroll_core::model::Params;
use rubberroll_core::reconstruct::{
    classify, epsilon_min, epsilon_min_closed_form, printed_epsilon_min, reconstruct_trajectory,
    resonance_curve, rotation_number_from, AbsoluteSample, AbsoluteStart, ClassifyOptions,
    ResonanceOptions, TrajectoryClass,
};
use rubberroll_core::vec3::Vec3;
use std::f64::consts::{FRAC_PI_3, PI};
use std::process::{Command, ExitCode};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn body() -> Params {
    Params::new(0.5, 3.0, 0.5, 0.5).unwrap()
}

fn tight() -> IntegrateOptions {
    IntegrateOptions::default().with_tol(Tolerances::new(1e-12, 1e-12))
}

fn random_state(rng: &mut ChaCha8Rng) -> FullState {
    loop {
        let g = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = g.norm();
        if !(0.2..=1.0).contains(&n) {
            continue;
        }
        let g = g.normalized();
        let w = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        return FullState::new(w - g * w.dot(g), g);
    }
}

/// Largest distance between two points of a planar path.
fn diameter(pts: &[(f64, f64)]) -> f64 {
    let mut d = 0.0f64;
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            d = d.max((a.0 - b.0).hypot(a.1 - b.1));
        }
    }
    d
}

fn centre_path(samples: &[AbsoluteSample]) -> Vec<(f64, f64)> {
    samples.iter().map(|s| (s.x_c, s.y_c)).collect()
}

/// Radius of the least-squares circle through the points (algebraic fit).
fn fit_circle(pts: &[(f64, f64)]) -> f64 {
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &(x, y) in pts {
        let row = [x, y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] -= row[i] * (x * x + y * y);
        }
    }
    let det = |a: &[[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d0 = det(&m);
    let mut sol = [0.0; 3];
    for (k, slot) in sol.iter_mut().enumerate() {
        let mut mk = m;
        for i in 0..3 {
            mk[i][k] = rhs[i];
        }
        *slot = det(&mk) / d0;
    }
    let (cx, cy) = (-sol[0] / 2.0, -sol[1] / 2.0);
    (cx * cx + cy * cy - sol[2]).sqrt()
}

fn conservation() -> Outcome {
    let p = body();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = [0.0f64; 4];
    for _ in 0..20 {
        let s = random_state(&mut rng);
        match integrate_full(&s, &p, (0.0, 100.0), &tight()) {
            Ok(tr) => {
                let d = tr.stats.drift;
                for (w, x) in worst.iter_mut().zip([d.f0, d.f1, d.kappa_rel, d.eps_rel]) {
                    *w = w.max(x);
                }
            }
            Err(e) => return outcome(false, format!("integration failed: {e}")),
        }
    }
    outcome(
        worst[0] <= 1e-10 && worst[1] <= 1e-10 && worst[2] <= 1e-8 && worst[3] <= 1e-8,
        format!(
            "|dF0| {:.2e}, |dF1| {:.2e}, rel dkappa {:.2e}, rel deps {:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn reduction() -> Outcome {
    let p = body();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let opts = tight().with_output_dt(0.25);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let red = ReducedState::new(rng.gen_range(0.4..2.7), rng.gen_range(-0.3..0.3));
        let kappa = rng.gen_range(0.3..1.2) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let phi = rng.gen_range(-PI..PI);
        let full0 = lift(&red, kappa, phi, &p).unwrap();
        let a = integrate_reduced(&red, kappa, &p, (0.0, 50.0), &opts).unwrap();
        let b = integrate_full(&full0, &p, (0.0, 50.0), &opts).unwrap();
        if a.samples.len() != b.samples.len() {
            return outcome(false, "sample grids differ".into());
        }
        for ((_, x), (_, y)) in a.samples.iter().zip(&b.samples) {
            worst = worst.max((x[0] - y[5].clamp(-1.0, 1.0).acos()).abs());
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max |theta_reduced - theta_full| = {worst:.2e} over 10 orbits"),
    )
}

fn permanent_rotations() -> Outcome {
    let p = body();
    let theta0 = FRAC_PI_3;
    let pr = permanent_rotation(theta0, &p).unwrap();
    let full = integrate_full(&pr.state, &p, (0.0, 100.0), &tight().with_output_dt(0.5)).unwrap();
    let drift = full
        .samples
        .iter()
        .map(|(_, y)| (y[5].clamp(-1.0, 1.0).acos() - theta0).abs())
        .fold(0.0, f64::max);
    let rec = reconstruct_trajectory(
        &ReducedState::new(theta0, 0.0),
        pr.kappa,
        &p,
        &AbsoluteStart::default(),
        (0.0, 100.0),
        &tight().with_output_dt(0.25),
    )
    .unwrap();
    let rc = fit_circle(&centre_path(&rec.samples));
    let rp = fit_circle(
        &rec.samples
            .iter()
            .map(|s| (s.x_p, s.y_p))
            .collect::<Vec<_>>(),
    );
    // Closed forms: ρ_c = Z tanθ₀ + α sinθ₀ and ρ_p = β² tanθ₀ / Z; at
    // θ₀ = π/3 with Z = √7 these are √21 + √3/4 and 9√3/√7.
    let z = Ellipsoid::new(p).eval(theta0).z;
    let rc_expected = z * theta0.tan() + p.alpha * theta0.sin();
    let rp_expected = p.beta * p.beta * theta0.tan() / z;
    let (r3, r7) = (3f64.sqrt(), 7f64.sqrt());
    let pass = drift <= 1e-6
        && (rc - rc_expected).abs() <= 1e-6
        && (rp - rp_expected).abs() <= 1e-6
        && (rc_expected - (r7 * r3 + 0.25 * r3)).abs() < 1e-12
        && (rp_expected - 9.0 * r3 / r7).abs() < 1e-12
        && (pr.rho_c - rc).abs() <= 1e-6
        && (pr.rho_p - rp).abs() <= 1e-6;
    outcome(
        pass,
        format!(
            "theta drift {drift:.2e}; fitted centre radius {rc:.9} (closed form {rc_expected:.9}), fitted contact radius {rp:.9} (closed form {rp_expected:.9})"
        ),
    )
}

fn sigma_limits() -> Outcome {
    let p = body();
    let (k0, e0) = sigma_theta_point(1e-7, &p).unwrap();
    let (kp, ep) = sigma_theta_point(PI - 1e-7, &p).unwrap();
    let pass = k0.abs() <= 1e-6
        && (e0 - 1.5).abs() <= 1e-6
        && kp.abs() <= 1e-6
        && (ep - 0.5).abs() <= 1e-6;
    outcome(
        pass,
        format!("theta->0: ({k0:.2e}, {e0:.9}); theta->pi: ({kp:.2e}, {ep:.9})"),
    )
}

/// Brackets the sign change of `λ²` at a vertex as `β²` varies.
fn vertex_bracket(theta: f64, mut lo: f64, mut hi: f64) -> Option<(f64, f64)> {
    let lam = |b2: f64| {
        linear_stability(theta, 0.0, &Params::new_unchecked(0.5, b2.sqrt(), 0.5, 0.5))
            .map(|x| x.0)
            .ok()
    };
    let (flo, fhi) = (lam(lo)?, lam(hi)?);
    if flo.signum() == fhi.signum() {
        return None;
    }
    while hi - lo > 5e-7 {
        let mid = 0.5 * (lo + hi);
        if lam(mid)?.signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some((lo, hi))
}

fn stability_boundaries() -> Outcome {
    let upper = vertex_bracket(0.0, 1.0, 2.5);
    let lower = vertex_bracket(PI, 0.1, 0.9);
    let ok = |b: Option<(f64, f64)>, x: f64| {
        b.is_some_and(|(lo, hi)| lo <= x && x <= hi && hi - lo <= 1e-6)
    };
    outcome(
        ok(upper, 1.5) && ok(lower, 0.5),
        format!("upper vertex beta^2 in {upper:?}, lower vertex beta^2 in {lower:?}"),
    )
}

fn diagram_types() -> Outcome {
    let cases = [
        ((0.5, 0.5), DiagramType::A),
        ((0.5, 1.1), DiagramType::B),
        ((0.5, 3.0), DiagramType::C),
        ((0.0, 0.5), DiagramType::D),
        ((0.0, 1.5), DiagramType::E),
    ];
    let got: Vec<&str> = cases
        .iter()
        .map(|((a, b), _)| {
            diagram_type(&Params::new_unchecked(*a, *b, 0.5, 0.5))
                .0
                .as_str()
        })
        .collect();
    let pass = cases
        .iter()
        .zip(&got)
        .all(|((_, want), g)| want.as_str() == *g);
    outcome(pass, format!("types {}", got.join(", ")))
}

fn equator_pitchfork() -> Outcome {
    let p = Params::new_unchecked(0.0, 1.5, 0.5, 0.5);
    let kc = equator_critical_kappa(&p).unwrap_or(f64::NAN);
    let expected = ((1.5f64 * 1.5 - 1.0) / 1.5).sqrt();
    let below = critical_points(kc * (1.0 - 1e-3), &p).len();
    let above = critical_points(kc * (1.0 + 1e-3), &p).len();
    outcome(
        (kc - expected).abs() <= 1e-9 && (kc - 0.912871).abs() < 1e-6 && below == 3 && above == 1,
        format!("kappa_c = {kc:.12}, fixed points {below} -> {above}"),
    )
}

fn periodic_example() -> Outcome {
    let p = body();
    let (kappa, theta0) = (0.8, 0.4678);
    let tol = Tolerances::new(1e-13, 1e-12);
    let rn = rotation_number_from(kappa, theta0, &p, &tol).unwrap();
    let period = rn.period.unwrap();
    let rec = reconstruct_trajectory(
        &ReducedState::new(theta0, 0.0),
        kappa,
        &p,
        &AbsoluteStart::default(),
        (0.0, 7.0 * period),
        &tight().with_output_dt(period / 50.0),
    )
    .unwrap();
    let path = centre_path(&rec.samples);
    let first = path[0];
    let last = rec.samples.last().unwrap();
    let gap = (last.x_c - first.0).hypot(last.y_c - first.1);
    let closure = gap / diameter(&path);
    let eps = effective_potential(theta0, kappa, &p);
    let opts = ClassifyOptions {
        rational_tol: Some(2e-3),
        ..ClassifyOptions::default()
    };
    let class = classify(kappa, eps, 0, &p, &opts).unwrap().class;
    let closed = matches!(
        class,
        TrajectoryClass::ClosedPeriodic {
            num: -1,
            den: 7,
            ..
        }
    );
    outcome(
        (rn.value + 1.0 / 7.0).abs() <= 2e-3 && closure <= 1e-2 && closed,
        format!(
            "N = {:.6}; closure after 7 periods {closure:.2e} of the diameter; class {}",
            rn.value,
            class.name()
        ),
    )
}

fn quasi_periodic_example() -> Outcome {
    let p = body();
    let (kappa, theta0) = (1.0, 2.1);
    let eps = effective_potential(theta0, kappa, &p);
    let c = classify(kappa, eps, 0, &p, &ClassifyOptions::default()).unwrap();
    let rn = rotation_number_from(kappa, theta0, &p, &Tolerances::new(1e-13, 1e-12)).unwrap();
    let period = rn.period.unwrap();
    let rec = reconstruct_trajectory(
        &ReducedState::new(theta0, 0.0),
        kappa,
        &p,
        &AbsoluteStart::default(),
        (0.0, 50.0 * period),
        &tight().with_output_dt(period / 20.0),
    )
    .unwrap();
    let path = centre_path(&rec.samples);
    let n = path.len() as f64;
    let (cx, cy) = path
        .iter()
        .fold((0.0, 0.0), |a, b| (a.0 + b.0 / n, a.1 + b.1 / n));
    let radii: Vec<f64> = path.iter().map(|(x, y)| (x - cx).hypot(y - cy)).collect();
    let half = radii.len() / 2;
    let max_of = |r: &[f64]| r.iter().copied().fold(0.0, f64::max);
    let min_of = |r: &[f64]| r.iter().copied().fold(f64::INFINITY, f64::min);
    let (r_in, r_out) = (min_of(&radii), max_of(&radii));
    let no_growth = max_of(&radii[half..]) <= 1.01 * max_of(&radii[..half]);
    outcome(
        matches!(c.class, TrajectoryClass::QuasiPeriodicBounded { .. })
            && no_growth
            && r_in > 0.0
            && r_out.is_finite(),
        format!(
            "class {}; N = {:.6}; annulus radii [{r_in:.4}, {r_out:.4}] over 50 periods",
            c.class.name(),
            rn.value
        ),
    )
}

fn unbounded_resonance() -> Outcome {
    let p = body();
    let kappa = 0.5;
    let pts = resonance_curve(0, &p, &[kappa], &ResonanceOptions::default());
    let Some(pt) = pts.first() else {
        return outcome(false, "no N = 0 level found".into());
    };
    let crit = critical_points(kappa, &p);
    let Some(well) = crit.iter().find(|c| c.w < pt.eps) else {
        return outcome(false, "no potential well below the level".into());
    };
    let theta_lo = rubberroll_core::bifurcation::connected_components(kappa, pt.eps, &p)
        .intervals
        .iter()
        .find(|iv| iv.lo <= well.theta && well.theta <= iv.hi)
        .map(|iv| iv.lo)
        .unwrap();
    let rn = rotation_number_from(kappa, theta_lo, &p, &Tolerances::new(1e-13, 1e-12)).unwrap();
    let period = rn.period.unwrap();
    let steps = 200;
    let rec = reconstruct_trajectory(
        &ReducedState::new(theta_lo, 0.0),
        kappa,
        &p,
        &AbsoluteStart::default(),
        (0.0, 10.0 * period),
        &tight().with_output_dt(period / steps as f64),
    )
    .unwrap();
    let path = centre_path(&rec.samples);
    let at = |k: usize| path[(k * steps).min(path.len() - 1)];
    let start = at(0);
    let net: Vec<f64> = (0..=10)
        .map(|k| (at(k).0 - start.0).hypot(at(k).1 - start.1))
        .collect();
    let monotone = net.windows(2).all(|w| w[1] > w[0]);
    // Oscillation within one period after removing the mean drift.
    let (a, b) = (at(0), at(1));
    let detrended: Vec<(f64, f64)> = path[..=steps]
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let f = i as f64 / steps as f64;
            (q.0 - a.0 - f * (b.0 - a.0), q.1 - a.1 - f * (b.1 - a.1))
        })
        .collect();
    let amplitude = 0.5 * diameter(&detrended);
    let ratio = net[10] / amplitude;
    outcome(
        monotone && ratio > 5.0 && (pt.rotation).abs() <= 1e-6,
        format!(
            "eps = {:.12}, N = {:.1e}; drift over 10 periods / amplitude = {ratio:.2}",
            pt.eps, pt.rotation
        ),
    )
}

fn measure() -> Outcome {
    let p = body();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s = random_state(&mut rng);
        match weighted_divergence(&s, &p, 1e-5) {
            Ok(d) => worst = worst.max(d),
            Err(e) => return outcome(false, e.to_string()),
        }
    }
    outcome(
        worst <= 1e-6,
        format!("max relative divergence {worst:.2e} at 100 states"),
    )
}

fn formula_arbitration() -> Outcome {
    let p = body();
    let em = epsilon_min(&p);
    let closed = epsilon_min_closed_form(&p).unwrap();
    let printed = printed_epsilon_min(&p).unwrap();
    let lib_ok =
        (em - closed).abs() <= 1e-9 && (em - 3.0465).abs() < 1e-4 && (printed - 2.953).abs() < 1e-3;
    let out = Command::new(env!("CARGO_BIN_EXE_rubberroll"))
        .args(["verify", "--quick"])
        .output();
    let (cli_ok, cli_note) = match out {
        Ok(o) => {
            let text = String::from_utf8_lossy(&o.stdout);
            let identity = text
                .lines()
                .any(|l| l.starts_with("PASS  epsilon_min = U(theta*)"));
            let discrepancy = text.lines().any(|l| {
                l.starts_with("PASS  printed epsilon_min variant fails the U(theta*) identity")
            });
            (
                o.status.success() && identity && discrepancy,
                format!("verify exit {:?}", o.status.code()),
            )
        }
        Err(e) => (false, format!("verify did not run: {e}")),
    };
    outcome(
        lib_ok && cli_ok,
        format!("U(theta*) = {em:.12}, closed form {closed:.12}, printed variant {printed:.6}; {cli_note}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("conservation of the first integrals", conservation),
        ("reduced system reproduces the full system", reduction),
        ("permanent rotation traces circles", permanent_rotations),
        ("end points of the permanent-rotation curve", sigma_limits),
        ("vertex stability boundaries", stability_boundaries),
        ("bifurcation diagram types", diagram_types),
        ("equator pitchfork", equator_pitchfork),
        ("closed trajectory with N = -1/7", periodic_example),
        ("quasi-periodic bounded trajectory", quasi_periodic_example),
        ("unbounded resonant drift", unbounded_resonance),
        ("invariant measure", measure),
        ("minimum-energy formula arbitration", formula_arbitration),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = std::panic::catch_unwind(run).unwrap_or_else(|_| outcome(false, "panicked".into()));
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
