//! `simulate`: integrate one trajectory and write it as CSV.

use crate::args::{Settings, SimulateArgs};
use crate::error::{CliError, CliResult};
use crate::output::{csv_writer, fmt, sink};
use rubberroll_core::bifurcation::effective_potential;
use rubberroll_core::dynamics::{FullState, ReducedState};
use rubberroll_core::geometry::{Ellipsoid, SurfaceProfile};
use rubberroll_core::integrate::IntegrateOptions;
use rubberroll_core::model::Params;
use rubberroll_core::reconstruct::{
    epsilon_min, reconstruct_full, reconstruct_trajectory, AbsoluteSample, AbsoluteStart,
    Reconstruction,
};
use rubberroll_core::vec3::Vec3;
use std::io::Write;

pub const HEADER: [&str; 12] = [
    "t", "theta", "p_theta", "psi", "phi", "x_c", "y_c", "z_c", "x_p", "y_p", "E_drift", "F1_drift",
];

/// Initial data of a run: exactly one of the two styles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialCondition {
    Reduced { state: ReducedState, kappa: f64 },
    Full(FullState),
}

/// Momentum at `θ₀` on level `ε`, taking the non-negative root.
fn momentum_for_energy(theta0: f64, kappa: f64, eps: f64, p: &Params) -> CliResult<f64> {
    let w = effective_potential(theta0, kappa, p);
    let b = Ellipsoid::new(*p).eval(theta0).b;
    if eps < w {
        return Err(CliError::Input(format!(
            "energy {eps} lies below the effective potential {w} at theta0 = {theta0}"
        )));
    }
    Ok((2.0 * (eps - w) / b).sqrt())
}

pub fn initial_condition(
    s: &Settings,
    a: &SimulateArgs,
    p: &Params,
) -> CliResult<InitialCondition> {
    let omega = s.list("omega", a.omega.as_deref())?;
    let gamma = s.list("gamma", a.gamma.as_deref())?;
    let theta0 = s.f64("theta0", a.theta0)?;
    let kappa = s.f64("kappa", a.kappa)?;
    let ptheta0 = s.f64("ptheta0", a.ptheta0)?;
    let energy = s.f64("energy", a.energy)?;
    let above = s.f64("energy_above_min", a.energy_above_min)?;
    let full_style = omega.is_some() || gamma.is_some();
    let reduced_style = theta0.is_some()
        || kappa.is_some()
        || ptheta0.is_some()
        || energy.is_some()
        || above.is_some();
    match (full_style, reduced_style) {
        (true, true) => Err(CliError::Input(
            "give either --omega/--gamma or --theta0/--kappa initial data, not both".into(),
        )),
        (false, false) => Err(CliError::Input(
            "missing initial data: give --theta0 and --kappa, or --omega and --gamma".into(),
        )),
        (true, false) => {
            let (Some(w), Some(g)) = (omega, gamma) else {
                return Err(CliError::Input(
                    "--omega and --gamma must be given together".into(),
                ));
            };
            if w.len() != 3 || g.len() != 3 {
                return Err(CliError::Input(
                    "--omega and --gamma take three comma-separated components".into(),
                ));
            }
            Ok(InitialCondition::Full(FullState::new(
                Vec3::new(w[0], w[1], w[2]),
                Vec3::new(g[0], g[1], g[2]),
            )))
        }
        (false, true) => {
            let theta0 = theta0.ok_or_else(|| CliError::Input("missing --theta0".into()))?;
            let kappa = kappa.ok_or_else(|| CliError::Input("missing --kappa".into()))?;
            let given = [ptheta0.is_some(), energy.is_some(), above.is_some()]
                .iter()
                .filter(|&&x| x)
                .count();
            if given > 1 {
                return Err(CliError::Input(
                    "give at most one of --ptheta0, --energy, --energy-above-min".into(),
                ));
            }
            let pt = match (ptheta0, energy, above) {
                (Some(pt), _, _) => pt,
                (_, Some(e), _) => momentum_for_energy(theta0, kappa, e, p)?,
                (_, _, Some(d)) => momentum_for_energy(theta0, kappa, epsilon_min(p) + d, p)?,
                _ => 0.0,
            };
            Ok(InitialCondition::Reduced {
                state: ReducedState::new(theta0, pt),
                kappa,
            })
        }
    }
}

fn record(s: &AbsoluteSample) -> [String; 12] {
    [
        s.t,
        s.theta,
        s.p_theta,
        s.psi,
        s.phi,
        s.x_c,
        s.y_c,
        s.z_c,
        s.x_p,
        s.y_p,
        s.energy_drift,
        s.f1_drift,
    ]
    .map(fmt)
}

pub fn run(a: &SimulateArgs) -> CliResult<()> {
    let s = Settings::load(&a.common)?;
    let p = s.params(None)?;
    let tol = s.tolerances()?;
    let ic = initial_condition(&s, a, &p)?;
    let tmax = s.f64("tmax", a.tmax)?.unwrap_or(100.0);
    let dt = s.f64("dt", a.dt)?.unwrap_or(0.1);
    if !(tmax.is_finite() && dt > 0.0 && dt.is_finite()) {
        return Err(CliError::Input(format!(
            "need finite --tmax and positive --dt (got {tmax}, {dt})"
        )));
    }
    let start = AbsoluteStart {
        psi: s.f64("psi0", a.psi0)?.unwrap_or(0.0),
        phi: s.f64("phi0", a.phi0)?.unwrap_or(0.0),
        x: s.f64("x0", a.x0)?.unwrap_or(0.0),
        y: s.f64("y0", a.y0)?.unwrap_or(0.0),
    };
    let opts = IntegrateOptions::default().with_tol(tol).with_output_dt(dt);
    let rec: Reconstruction = match ic {
        InitialCondition::Reduced { state, kappa } => {
            reconstruct_trajectory(&state, kappa, &p, &start, (0.0, tmax), &opts)?
        }
        InitialCondition::Full(state) => reconstruct_full(&state, &p, &start, (0.0, tmax), &opts)?,
    };
    let mut w = csv_writer(sink(s.out().as_deref())?);
    w.write_record(HEADER)?;
    for sample in &rec.samples {
        w.write_record(record(sample))?;
    }
    w.flush()?;
    let f1 = rec.samples.iter().map(|x| x.f1_drift).fold(0.0, f64::max);
    let mut err = std::io::stderr().lock();
    writeln!(err, "max relative energy drift: {}", fmt(rec.energy_drift))?;
    writeln!(err, "max |F1| drift: {}", fmt(f1))?;
    writeln!(
        err,
        "steps: {} accepted, {} rejected",
        rec.steps.accepted, rec.steps.rejected
    )?;
    if rec.flagged {
        log::warn!("invariant drift exceeded the configured limit");
    }
    Ok(())
}
