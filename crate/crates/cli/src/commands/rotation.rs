//! `rotation-number`, `resonance` and `classify`.

use crate::args::{parse_range, ClassifyArgs, ResonanceArgs, RotationArgs, Settings};
use crate::error::{CliError, CliResult};
use crate::output::{csv_writer, fmt, num, sink, write_json};
use rayon::prelude::*;
use rubberroll_core::bifurcation::{branch_of, effective_potential};
use rubberroll_core::dynamics::{reduced_energy, ReducedState};
use rubberroll_core::integrate::Tolerances;
use rubberroll_core::model::Params;
use rubberroll_core::reconstruct::{
    classify, kappa_max, resonance_curve, rotation_number, Classification, ClassifyOptions,
    ResonanceOptions, TrajectoryClass,
};
use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;

/// Tighter defaults for rotation numbers, whose accuracy is limited by the
/// integration; user-supplied tolerances still win.
fn rotation_tolerances(s: &Settings) -> CliResult<Tolerances> {
    let mut tol = s.tolerances()?;
    if s.f64("tol_abs", s.common.tol_abs)?.is_none() {
        tol.abs = 1e-13;
    }
    if s.f64("tol_rel", s.common.tol_rel)?.is_none() {
        tol.rel = 1e-12;
    }
    Ok(tol)
}

fn grid(
    s: &Settings,
    key: &str,
    list: Option<&[f64]>,
    range: Option<&str>,
) -> CliResult<Option<Vec<f64>>> {
    let range_key = format!("{key}_range");
    match (s.list(key, list)?, s.string(&range_key, range)) {
        (Some(_), Some(_)) => Err(CliError::Input(format!(
            "give either --{key} or --{key}-range, not both"
        ))),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(r)) => parse_range(&r).map(Some),
        (None, None) => Ok(None),
    }
}

/// One row of the rotation-number table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationRow {
    pub kappa: f64,
    pub eps: f64,
    pub n: f64,
    pub err: f64,
}

pub fn run_rotation(a: &RotationArgs) -> CliResult<()> {
    let s = Settings::load(&a.common)?;
    let p = s.params(None)?;
    let tol = rotation_tolerances(&s)?;
    let branch = s.usize("branch", a.branch)?.unwrap_or(0);
    let kappas = grid(&s, "kappa", a.kappa.as_deref(), a.kappa_range.as_deref())?
        .ok_or_else(|| CliError::Input("missing --kappa or --kappa-range".into()))?;
    let energies = grid(&s, "energy", a.energy.as_deref(), a.energy_range.as_deref())?;
    let thetas = s.list("theta0", a.theta0.as_deref())?;
    // Work items as (κ, ε, branch), in row-major order.
    let items: Vec<(f64, f64, usize)> = match (energies, thetas) {
        (Some(_), Some(_)) => {
            return Err(CliError::Input(
                "give energies or --theta0 values, not both".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Input(
                "missing --energy, --energy-range or --theta0".into(),
            ))
        }
        (Some(es), None) => kappas
            .iter()
            .flat_map(|&k| es.iter().map(move |&e| (k, e, branch)))
            .collect(),
        (None, Some(ts)) => kappas
            .iter()
            .flat_map(|&k| ts.iter().map(move |&t| (k, t)))
            .map(|(k, t)| {
                let e = effective_potential(t, k, &p);
                let b = branch_of(t, k, e, &p).unwrap_or(0);
                (k, e, b)
            })
            .collect(),
    };
    let rows: Vec<Option<RotationRow>> = items
        .par_iter()
        .map(|&(k, e, b)| match rotation_number(k, e, b, &p, &tol) {
            Ok(r) => Some(RotationRow {
                kappa: k,
                eps: e,
                n: r.value,
                err: r.error,
            }),
            Err(err) => {
                log::info!("skipping (kappa, eps) = ({k}, {e}): {err}");
                None
            }
        })
        .collect();
    let mut w = csv_writer(sink(s.out().as_deref())?);
    w.write_record(["kappa", "eps", "N", "N_err"])?;
    let mut skipped = 0usize;
    for row in &rows {
        match row {
            Some(r) => w.write_record([fmt(r.kappa), fmt(r.eps), fmt(r.n), fmt(r.err)])?,
            None => skipped += 1,
        }
    }
    w.flush()?;
    if skipped > 0 {
        writeln!(
            std::io::stderr(),
            "{skipped} grid point(s) outside the region of possible motions were skipped"
        )?;
    }
    Ok(())
}

pub fn run_resonance(a: &ResonanceArgs) -> CliResult<()> {
    let s = Settings::load(&a.common)?;
    let p = s.params(None)?;
    let mut opts = ResonanceOptions {
        tol: rotation_tolerances(&s)?,
        ..ResonanceOptions::default()
    };
    opts.branch = s.usize("branch", a.branch)?.unwrap_or(0);
    if let Some(x) = s.f64("eps_span", a.eps_span)? {
        opts.eps_span = x;
    }
    if let Some(x) = s.usize("eps_samples", a.eps_samples)? {
        opts.eps_samples = x.max(2);
    }
    let orders: Vec<i64> = match (&a.n, s.string("n", None)) {
        (Some(v), _) => v.clone(),
        (None, Some(raw)) => raw
            .split(',')
            .map(|x| {
                x.trim()
                    .parse()
                    .map_err(|_| CliError::Input(format!("cannot parse resonance order `{x}`")))
            })
            .collect::<CliResult<_>>()?,
        (None, None) => vec![0],
    };
    let range = s
        .string("kappa_range", a.kappa_range.as_deref())
        .unwrap_or_else(|| "0.05:1.2:24".to_string());
    let kappas = parse_range(&range)?;
    let out = s.out();
    let per_order = out
        .as_ref()
        .is_some_and(|o| o.to_string_lossy().contains("{n}"));
    if per_order {
        let template = out
            .as_ref()
            .map(|o| o.to_string_lossy().to_string())
            .unwrap_or_default();
        for &n in &orders {
            let pts = resonance_curve(n, &p, &kappas, &opts);
            let path = PathBuf::from(template.replace("{n}", &n.to_string()));
            let mut w = csv_writer(sink(Some(&path))?);
            w.write_record(["n", "kappa", "eps", "N"])?;
            for pt in &pts {
                w.write_record([n.to_string(), fmt(pt.kappa), fmt(pt.eps), fmt(pt.rotation)])?;
            }
            w.flush()?;
        }
    } else {
        let mut w = csv_writer(sink(out.as_deref())?);
        w.write_record(["n", "kappa", "eps", "N"])?;
        for &n in &orders {
            for pt in resonance_curve(n, &p, &kappas, &opts) {
                w.write_record([n.to_string(), fmt(pt.kappa), fmt(pt.eps), fmt(pt.rotation)])?;
            }
        }
        w.flush()?;
    }
    if s.flag("kappa_max", a.kappa_max) {
        let mut err = std::io::stderr().lock();
        match kappa_max(&p) {
            Some(k) => writeln!(
                err,
                "kappa_max = {} at eps = {} (N = {}, dN/deps = {})",
                fmt(k.kappa),
                fmt(k.eps),
                fmt(k.rotation),
                fmt(k.slope)
            )?,
            None => writeln!(
                err,
                "kappa_max: no bounded n = 0 resonance curve for these parameters"
            )?,
        }
    }
    Ok(())
}

/// JSON form of a classification.
pub fn classification_json(kappa: f64, eps: f64, branch: usize, c: &Classification) -> Value {
    let witness = match c.class {
        TrajectoryClass::Point { theta } => json!({ "theta": num(theta) }),
        TrajectoryClass::Circle { theta0, radius } => {
            json!({ "theta0": num(theta0), "radius": num(radius) })
        }
        TrajectoryClass::UnboundedLine => json!({}),
        TrajectoryClass::Segment { asymptotic } => json!({ "asymptotic": asymptotic }),
        TrajectoryClass::UnboundedResonant { n, rotation } => json!({ "n": n, "N": num(rotation) }),
        TrajectoryClass::ClosedPeriodic {
            num: pn,
            den,
            rotation,
        } => {
            json!({ "p": pn, "q": den, "N": num(rotation) })
        }
        TrajectoryClass::QuasiPeriodicBounded { rotation } => json!({ "N": num(rotation) }),
        TrajectoryClass::AsymptoticToCircles { theta } => json!({ "theta": num(theta) }),
        TrajectoryClass::AsymptoticToLines { theta } => json!({ "theta": num(theta) }),
    };
    json!({
        "kappa": num(kappa),
        "eps": num(eps),
        "branch": branch,
        "class": c.class.name(),
        "witness": witness,
        "N": c.rotation.map(|r| num(r.value)),
        "N_err": c.rotation.map(|r| num(r.error)),
        "period": c.rotation.and_then(|r| r.period).map(num),
        "near_separatrix": c.near_separatrix,
    })
}

/// Level `(κ, ε, branch)` from the classify flags.
pub fn classify_level(s: &Settings, a: &ClassifyArgs, p: &Params) -> CliResult<(f64, f64, usize)> {
    let kappa = s
        .f64("kappa", a.kappa)?
        .ok_or_else(|| CliError::Input("missing --kappa".into()))?;
    let energy = s.f64("energy", a.energy)?;
    let theta0 = s.f64("theta0", a.theta0)?;
    let branch = s.usize("branch", a.branch)?;
    match (energy, theta0) {
        (Some(_), Some(_)) => Err(CliError::Input(
            "give either --energy or --theta0, not both".into(),
        )),
        (None, None) => Err(CliError::Input("missing --energy or --theta0".into())),
        (Some(e), None) => Ok((kappa, e, branch.unwrap_or(0))),
        (None, Some(t)) => {
            let pt = s.f64("ptheta0", a.ptheta0)?.unwrap_or(0.0);
            let e = reduced_energy(&ReducedState::new(t, pt), kappa, p);
            let b = match branch {
                Some(b) => b,
                None => branch_of(t, kappa, e, p).ok_or_else(|| {
                    CliError::Input(format!(
                        "theta0 = {t} lies on no component of the level set"
                    ))
                })?,
            };
            Ok((kappa, e, b))
        }
    }
}

pub fn run_classify(a: &ClassifyArgs) -> CliResult<()> {
    let s = Settings::load(&a.common)?;
    let p = s.params(None)?;
    let (kappa, eps, branch) = classify_level(&s, a, &p)?;
    let mut opts = ClassifyOptions {
        tol: rotation_tolerances(&s)?,
        ..ClassifyOptions::default()
    };
    opts.rational_tol = s.f64("rational_tol", a.rational_tol)?;
    if let Some(q) = s.usize("q_max", a.q_max.map(|q| q as usize))? {
        opts.q_max = q as u64;
    }
    let c = classify(kappa, eps, branch, &p, &opts)?;
    if c.near_separatrix {
        log::warn!("level lies close to a separatrix; the class may be ambiguous");
    }
    write_json(
        s.out().as_deref(),
        &classification_json(kappa, eps, branch, &c),
    )
}
