//! `bifurcation`: the diagram on the `(κ, ε)` plane as JSON.

use crate::args::{BifurcationArgs, Settings};
use crate::error::CliResult;
use crate::output::{num, write_json};
use rubberroll_core::bifurcation::{
    diagram, equator_critical_kappa, inclined_equilibrium, BifurcationDiagram, CurveOptions,
};
use rubberroll_core::model::Params;
use rubberroll_core::reconstruct::epsilon_min;
use serde_json::{json, Value};

/// JSON form of a diagram. Curves are emitted for both signs of `κ`.
pub fn diagram_json(d: &BifurcationDiagram, p: &Params) -> Value {
    let mut curves = Vec::new();
    for c in &d.curves {
        for sign in [1.0, -1.0] {
            let samples: Vec<Value> = c
                .samples
                .iter()
                .map(|s| {
                    json!({
                        "theta0": num(s.theta0),
                        "kappa": num(sign * s.kappa),
                        "eps": num(s.eps),
                        "stability": s.stability.as_str(),
                    })
                })
                .collect();
            curves.push(
                json!({ "label": c.label.as_str(), "sign": sign as i32, "samples": samples }),
            );
        }
    }
    let points: Vec<Value> = d
        .points
        .iter()
        .map(|pt| {
            json!({
                "label": pt.label,
                "kappa": num(pt.kappa),
                "eps": num(pt.eps),
                "isolated": pt.isolated,
                "stable": pt.stable,
            })
        })
        .collect();
    let cusp = d
        .cusp
        .map(|c| json!({ "theta": num(c.theta), "kappa": num(c.kappa), "eps": num(c.eps) }));
    let rpm: Vec<Value> = d
        .rpm_boundary
        .iter()
        .map(|&(k, e)| json!([num(k), num(e)]))
        .collect();
    json!({
        "params": { "alpha": num(p.alpha), "beta": num(p.beta), "nu": num(p.nu), "eta": num(p.eta) },
        "type": d.diagram_type.as_str(),
        "boundary": d.boundary,
        "two_component_region": d.two_component_region,
        "epsilon_min": num(epsilon_min(p)),
        "inclined_equilibrium": inclined_equilibrium(p).map(num),
        "equator_critical_kappa": equator_critical_kappa(p).map(num),
        "cusp": cusp,
        "points": points,
        "curves": curves,
        "rpm_boundary": rpm,
    })
}

pub fn run(a: &BifurcationArgs) -> CliResult<()> {
    let s = Settings::load(&a.common)?;
    let p = s.params(None)?;
    let mut opts = CurveOptions::default();
    if let Some(k) = s.f64("kappa_limit", a.kappa_limit)? {
        opts.kappa_limit = k;
    }
    if let Some(c) = s.f64("max_chord", a.max_chord)? {
        opts.max_chord = c;
    }
    if !(opts.kappa_limit > 0.0 && opts.max_chord > 0.0) {
        return Err(crate::error::CliError::Input(
            "--kappa-limit and --max-chord must be positive".into(),
        ));
    }
    let d = diagram(&p, &opts);
    write_json(s.out().as_deref(), &diagram_json(&d, &p))
}
