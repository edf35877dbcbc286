//! `verify`: invariant and oracle checks with one pass/fail line each.

use crate::args::{Settings, VerifyArgs};
use crate::commands::bifurcation::diagram_json;
use crate::error::{CliError, CliResult};
use crate::output::fmt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rubberroll_core::bifurcation::{
    branch_of, connected_components, diagram, effective_potential, equilibrium_residual, g0,
    inclined_equilibrium, inclined_equilibrium_closed_form, linear_stability, omega0_sq,
    permanent_rotation, printed_inclined_equilibrium, sigma_theta_point, CurveOptions, Stability,
};
use rubberroll_core::dynamics::{integrals, lift, weighted_divergence, FullState, ReducedState};
use rubberroll_core::geometry::{BSign, Ellipsoid, SurfaceProfile};
use rubberroll_core::integrate::{integrate_full, integrate_reduced, IntegrateOptions, Tolerances};
use rubberroll_core::model::Params;
use rubberroll_core::reconstruct::{
    epsilon_min, epsilon_min_closed_form, printed_epsilon_min, reconstruct_trajectory,
    rotation_number_from, AbsoluteStart,
};
use rubberroll_core::vec3::Vec3;
use serde_json::Value;
use std::io::Write;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, pass: bool, detail: String) -> Self {
        Self { name, pass, detail }
    }
}

pub const DEFAULT_PARAMS: Params = Params::new_unchecked(0.5, 3.0, 0.5, 0.5);

fn random_state(rng: &mut ChaCha8Rng, scale: f64) -> FullState {
    loop {
        let g = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if g.norm() < 0.2 {
            continue;
        }
        let g = g.normalized();
        let w = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ) * scale;
        return FullState::new(w - g * w.dot(g), g);
    }
}

/// Reduced energy from the surface functions with the chosen sign of `B`,
/// compared with the energy of the full state.
fn check_b_sign(p: &Params, sign: BSign, rng: &mut ChaCha8Rng) -> Check {
    let surf = Ellipsoid::with_b_sign(*p, sign);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let theta = rng.gen_range(0.2..2.9);
        let pt = rng.gen_range(-1.0..1.0);
        let kappa = rng.gen_range(-1.0..1.0);
        let phi = rng.gen_range(-3.0..3.0);
        let Ok(full) = lift(&ReducedState::new(theta, pt), kappa, phi, p) else {
            continue;
        };
        let e = surf.eval(theta);
        let s = theta.sin();
        let reduced = e.b * pt * pt / 2.0 + kappa * kappa / (2.0 * s * s) + e.u;
        let exact = integrals(&full, p).eps;
        worst = worst.max((reduced - exact).abs() / exact.abs().max(1.0));
    }
    let label = match sign {
        BSign::Derived => "derived",
        BSign::Printed => "printed",
    };
    Check::new(
        "reduced energy matches full energy",
        worst <= 1e-12,
        format!("B sign `{label}`: max relative mismatch {}", fmt(worst)),
    )
}

fn check_measure(p: &Params, rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let s = random_state(rng, 1.5);
        if let Ok(d) = weighted_divergence(&s, p, 1e-5) {
            worst = worst.max(d);
        }
    }
    Check::new(
        "invariant measure",
        worst <= 1e-6,
        format!("max relative divergence {}", fmt(worst)),
    )
}

fn check_sigma(p: &Params) -> Check {
    let mut worst = 0.0f64;
    let mut count = 0;
    for i in 1..200 {
        let t = std::f64::consts::PI * i as f64 / 200.0;
        if (t - std::f64::consts::FRAC_PI_2).abs() < 1e-2 {
            continue;
        }
        if let Some((k, e)) = sigma_theta_point(t, p) {
            let scale = k * k * (t.cos() / t.sin().powi(3)).abs() + 1.0;
            worst = worst.max(g0(t, k, p).abs() / scale);
            worst = worst.max((effective_potential(t, k, p) - e).abs() / e.abs().max(1.0));
            count += 1;
        }
    }
    Check::new(
        "permanent rotations are fixed points",
        worst <= 1e-10,
        format!("{count} samples, max residual {}", fmt(worst)),
    )
}

fn check_inclined(p: &Params) -> Vec<Check> {
    let mut out = Vec::new();
    match inclined_equilibrium(p) {
        Some(ts) if p.alpha > 0.0 => {
            let r = equilibrium_residual(ts, p);
            let closed = inclined_equilibrium_closed_form(p).unwrap_or(f64::NAN);
            out.push(Check::new(
                "inclined equilibrium",
                r.abs() <= 1e-12 && (closed - ts).abs() <= 1e-9,
                format!(
                    "theta* = {}, residual {}, closed form {}",
                    fmt(ts),
                    fmt(r),
                    fmt(closed)
                ),
            ));
            if let Some(pr) = printed_inclined_equilibrium(p) {
                let rp = equilibrium_residual(pr, p);
                out.push(Check::new(
                    "printed theta* variant is not an equilibrium",
                    rp.abs() > 1e-6,
                    format!("printed variant {} leaves residual {}", fmt(pr), fmt(rp)),
                ));
            }
        }
        _ => out.push(Check::new(
            "inclined equilibrium",
            true,
            "none for these parameters".into(),
        )),
    }
    let em = epsilon_min(p);
    match epsilon_min_closed_form(p) {
        Some(cf) => {
            out.push(Check::new(
                "epsilon_min = U(theta*)",
                (em - cf).abs() <= 1e-9,
                format!(
                    "U(theta*) = {}, beta*sqrt((beta^2-1+alpha^2)/(beta^2-1)) = {}, difference {}",
                    fmt(em),
                    fmt(cf),
                    fmt(em - cf)
                ),
            ));
            if let Some(pr) = printed_epsilon_min(p) {
                out.push(Check::new(
                    "printed epsilon_min variant fails the U(theta*) identity",
                    (pr - em).abs() > 1e-6,
                    format!(
                        "beta*sqrt((1+alpha^2-beta^2)/(1-beta^2)) = {} differs from U(theta*) = {} by {}",
                        fmt(pr),
                        fmt(em),
                        fmt(pr - em)
                    ),
                ));
            }
        }
        None => out.push(Check::new(
            "epsilon_min",
            em == 1.0 + p.alpha,
            format!("epsilon_min = {}", fmt(em)),
        )),
    }
    out
}

fn check_vertices(p: &Params) -> Check {
    let b2 = p.beta * p.beta;
    let expect = |boundary: f64| {
        if b2 > boundary {
            Stability::Center
        } else {
            Stability::Saddle
        }
    };
    let top = linear_stability(0.0, 0.0, p).map(|x| x.1);
    let bottom = linear_stability(std::f64::consts::PI, 0.0, p).map(|x| x.1);
    let near = |boundary: f64| (b2 - boundary).abs() < 1e-12;
    let ok_top = near(1.0 + p.alpha) || top == Ok(expect(1.0 + p.alpha));
    let ok_bottom = near(1.0 - p.alpha) || bottom == Ok(expect(1.0 - p.alpha));
    Check::new(
        "vertex stability",
        ok_top && ok_bottom,
        format!(
            "upper vertex {:?}, lower vertex {:?}",
            top.map(|s| s.as_str()),
            bottom.map(|s| s.as_str())
        ),
    )
}

/// Serializes a coarse diagram and checks the fields and types of the JSON.
fn check_diagram_schema(p: &Params) -> Check {
    let d = diagram(
        p,
        &CurveOptions {
            max_chord: 5e-2,
            kappa_limit: 2.0,
        },
    );
    let text = diagram_json(&d, p).to_string();
    let parsed: Result<Value, _> = serde_json::from_str(&text);
    let problems = match parsed {
        Err(e) => vec![format!("not valid JSON: {e}")],
        Ok(v) => schema_problems(&v),
    };
    Check::new(
        "diagram JSON round trip",
        problems.is_empty(),
        if problems.is_empty() {
            format!("type {}", d.diagram_type.as_str())
        } else {
            problems.join("; ")
        },
    )
}

/// Lists the deviations of a diagram document from the expected layout.
pub fn schema_problems(v: &Value) -> Vec<String> {
    let mut out = Vec::new();
    for key in ["alpha", "beta", "nu", "eta"] {
        if !v["params"][key].is_number() {
            out.push(format!("params.{key} is not a number"));
        }
    }
    if !matches!(v["type"].as_str(), Some("a" | "b" | "c" | "d" | "e")) {
        out.push("type is not one of a-e".into());
    }
    for key in ["boundary", "two_component_region"] {
        if !v[key].is_boolean() {
            out.push(format!("{key} is not a boolean"));
        }
    }
    match v["points"].as_array() {
        Some(pts) if pts.len() == 2 => {
            for pt in pts {
                if !(pt["kappa"].is_number() && pt["eps"].is_number() && pt["stable"].is_boolean())
                {
                    out.push("malformed point".into());
                }
            }
        }
        _ => out.push("points must hold the two vertical equilibria".into()),
    }
    match v["curves"].as_array() {
        Some(curves) => {
            for c in curves {
                let ok = c["label"].is_string()
                    && c["samples"].as_array().is_some_and(|s| {
                        s.iter().all(|x| {
                            x["kappa"].is_number()
                                && x["eps"].is_number()
                                && x["stability"].is_string()
                        })
                    });
                if !ok {
                    out.push("malformed curve".into());
                }
            }
        }
        None => out.push("curves is not an array".into()),
    }
    if !v["rpm_boundary"].is_array() {
        out.push("rpm_boundary is not an array".into());
    }
    out
}

fn check_conservation(p: &Params, rng: &mut ChaCha8Rng) -> Check {
    let opts = IntegrateOptions::default().with_tol(Tolerances::new(1e-12, 1e-12));
    let mut worst = [0.0f64; 4];
    let mut failures = 0;
    for _ in 0..5 {
        let s = random_state(rng, 1.0);
        match integrate_full(&s, p, (0.0, 50.0), &opts) {
            Ok(tr) => {
                let d = tr.stats.drift;
                for (w, x) in worst.iter_mut().zip([d.f0, d.f1, d.kappa_rel, d.eps_rel]) {
                    *w = w.max(x);
                }
            }
            Err(_) => failures += 1,
        }
    }
    let pass = failures == 0
        && worst[0] <= 1e-10
        && worst[1] <= 1e-10
        && worst[2] <= 1e-8
        && worst[3] <= 1e-8;
    Check::new(
        "first integrals are conserved",
        pass,
        format!(
            "max drift F0 {}, F1 {}, kappa {}, energy {}; {failures} failed run(s)",
            fmt(worst[0]),
            fmt(worst[1]),
            fmt(worst[2]),
            fmt(worst[3])
        ),
    )
}

fn check_reduction(p: &Params, rng: &mut ChaCha8Rng) -> Check {
    let opts = IntegrateOptions::default()
        .with_tol(Tolerances::new(1e-12, 1e-12))
        .with_output_dt(0.5);
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..3 {
        let theta = rng.gen_range(0.4..2.7);
        let pt = rng.gen_range(-0.3..0.3);
        let kappa = rng.gen_range(0.3..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let phi = rng.gen_range(-3.0..3.0);
        let red = ReducedState::new(theta, pt);
        let (Ok(full0), Ok(tr)) = (
            lift(&red, kappa, phi, p),
            integrate_reduced(&red, kappa, p, (0.0, 20.0), &opts),
        ) else {
            failures += 1;
            continue;
        };
        match integrate_full(&full0, p, (0.0, 20.0), &opts) {
            Ok(tf) => {
                for ((_, a), (_, b)) in tr.samples.iter().zip(&tf.samples) {
                    let th_full = b[5].clamp(-1.0, 1.0).acos();
                    worst = worst.max((a[0] - th_full).abs());
                }
            }
            Err(_) => failures += 1,
        }
    }
    Check::new(
        "reduced system matches the full system",
        failures == 0 && worst <= 1e-6,
        format!(
            "max |theta_reduced - theta_full| {}; {failures} failed run(s)",
            fmt(worst)
        ),
    )
}

fn check_permanent_rotation(p: &Params) -> Check {
    let Some(theta0) = (1..60)
        .map(|i| std::f64::consts::PI * i as f64 / 60.0)
        .find(|&t| omega0_sq(t, p).is_ok_and(|w| w > 1e-3) && permanent_rotation(t, p).is_ok())
    else {
        return Check::new(
            "permanent rotation keeps its inclination",
            true,
            "no permanent rotation exists".into(),
        );
    };
    let pr = match permanent_rotation(theta0, p) {
        Ok(pr) => pr,
        Err(e) => {
            return Check::new(
                "permanent rotation keeps its inclination",
                false,
                e.to_string(),
            )
        }
    };
    let opts = IntegrateOptions::default()
        .with_tol(Tolerances::new(1e-12, 1e-12))
        .with_output_dt(1.0);
    match integrate_full(&pr.state, p, (0.0, 100.0), &opts) {
        Ok(tr) => {
            let worst = tr
                .samples
                .iter()
                .map(|(_, y)| (y[5].clamp(-1.0, 1.0).acos() - theta0).abs())
                .fold(0.0, f64::max);
            Check::new(
                "permanent rotation keeps its inclination",
                worst <= 1e-6,
                format!("theta0 = {}, max deviation {}", fmt(theta0), fmt(worst)),
            )
        }
        Err(e) => Check::new(
            "permanent rotation keeps its inclination",
            false,
            e.to_string(),
        ),
    }
}

/// Rotation number from the reduced quadrature against the precession angle
/// accumulated by the absolute-space reconstruction over one period.
fn check_rotation_number(p: &Params) -> Check {
    let tol = Tolerances::new(1e-12, 1e-11);
    let opts = IntegrateOptions::default().with_tol(Tolerances::new(1e-12, 1e-12));
    let mut worst = 0.0f64;
    let mut evaluated = 0;
    for &(k, t) in &[(0.6, 0.8), (0.9, 1.2), (-0.4, 2.2)] {
        let Ok(rn) = rotation_number_from(k, t, p, &tol) else {
            continue;
        };
        let eps = effective_potential(t, k, p);
        let Some(lo) = branch_of(t, k, eps, p).and_then(|b| {
            connected_components(k, eps, p)
                .intervals
                .get(b)
                .map(|iv| iv.lo)
        }) else {
            continue;
        };
        let Some(period) = rn.period else { continue };
        let start = AbsoluteStart::default();
        let Ok(rec) = reconstruct_trajectory(
            &ReducedState::new(lo, 0.0),
            k,
            p,
            &start,
            (0.0, period),
            &opts,
        ) else {
            continue;
        };
        let Some(last) = rec.samples.last() else {
            continue;
        };
        let n = -last.psi / (2.0 * std::f64::consts::PI);
        worst = worst.max((n - rn.value).abs());
        evaluated += 1;
    }
    Check::new(
        "rotation number matches the reconstructed precession",
        evaluated == 3 && worst <= 1e-8,
        format!("{evaluated} orbit(s), max difference {}", fmt(worst)),
    )
}

/// Runs the checks; `quick` restricts to the inexpensive ones.
pub fn run_checks(p: &Params, sign: BSign, quick: bool, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![
        check_b_sign(p, sign, &mut rng),
        check_measure(p, &mut rng),
        check_sigma(p),
    ];
    out.extend(check_inclined(p));
    out.push(check_vertices(p));
    out.push(check_diagram_schema(p));
    if !quick {
        out.push(check_conservation(p, &mut rng));
        out.push(check_reduction(p, &mut rng));
        out.push(check_permanent_rotation(p));
        out.push(check_rotation_number(p));
    }
    out
}

pub fn run(a: &VerifyArgs) -> CliResult<()> {
    let s = Settings::load(&a.common)?;
    let p = s.params(Some(DEFAULT_PARAMS))?;
    let sign: BSign = match s.string("b_sign", a.b_sign.as_deref()) {
        Some(raw) => raw.parse()?,
        None => BSign::default(),
    };
    let quick = s.flag("quick", a.quick);
    let seed = s.usize("seed", a.seed.map(|x| x as usize))?.unwrap_or(7) as u64;
    let checks = run_checks(&p, sign, quick, seed);
    let mut out = std::io::stdout().lock();
    writeln!(
        out,
        "parameters: alpha = {}, beta = {}, nu = {}, eta = {}",
        p.alpha, p.beta, p.nu, p.eta
    )?;
    for c in &checks {
        writeln!(
            out,
            "{}  {}: {}",
            if c.pass { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    writeln!(
        out,
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    )?;
    out.flush()?;
    if failed > 0 {
        return Err(CliError::Verify(failed));
    }
    Ok(())
}
