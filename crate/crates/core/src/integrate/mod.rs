//! Adaptive integration of the full and reduced systems, section events,
//! period measurement and the pole chart used when `κ = 0`.
//!
//! # Pole chart
//!
//! For `κ = 0` the reduced equation has no centrifugal term and its
//! coefficients `B`, `U` are even about `θ = 0` and `θ = π`. The reduced
//! system is therefore integrated in an extended chart where `θ` runs over
//! the whole circle: passing through a pole corresponds to the body rolling
//! over its vertex. Folding back to `θ ∈ [0, π]` is done by [`pole_glue`]:
//! `θ ↦ −θ` (or `2π − θ`), `p_θ ↦ −p_θ`, and both Euler angles `φ`, `ψ`
//! advance by `π`. The fixed-frame position of the body is continuous
//! across the fold.

pub mod dop853;

use crate::bifurcation::{connected_components, ComponentKind};
use crate::dynamics::{full_rhs_raw, integrals_with, reduced_accel, FullState, ReducedState};
use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, SurfaceProfile};
use crate::model::Params;
use crate::scalar::Scalar;
use core::ops::ControlFlow;

pub use dop853::{DenseSegment, Dop853, OdeSystem, StepStats, Tolerances};

/// The full system in `(ω, γ)` as an [`OdeSystem`]; `γ` is renormalized to
/// unit length after every accepted step.
#[derive(Clone, Copy, Debug)]
pub struct FullSystem<S> {
    pub surface: S,
}

impl<T: Scalar, S: SurfaceProfile<T>> OdeSystem<T, 6> for FullSystem<S> {
    fn rhs(&self, y: &[T; 6], dy: &mut [T; 6]) {
        let s = FullState::from_array(y);
        match full_rhs_raw(s.omega, s.gamma, &self.surface) {
            Some((wd, gd)) => {
                *dy = [wd.x, wd.y, wd.z, gd.x, gd.y, gd.z];
            }
            None => *dy = [T::nan(); 6],
        }
    }

    fn project(&self, y: &mut [T; 6]) -> T {
        normalize_slice(&mut y[3..6])
    }
}

/// Rescales a 3-vector stored in a slice to unit length and returns the
/// magnitude of the correction.
pub(crate) fn normalize_slice<T: Scalar>(v: &mut [T]) -> T {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n > T::zero() {
        for x in v.iter_mut() {
            *x = *x / n;
        }
    }
    (n - T::one()).abs()
}

/// The reduced system in `(θ, p_θ)` at fixed `κ`.
#[derive(Clone, Copy, Debug)]
pub struct ReducedSystem<T> {
    pub surface: Ellipsoid<T>,
    pub kappa: T,
}

impl<T: Scalar> ReducedSystem<T> {
    pub fn new(p: &Params<T>, kappa: T) -> Self {
        Self {
            surface: Ellipsoid::new(*p),
            kappa,
        }
    }
}

impl<T: Scalar> OdeSystem<T, 2> for ReducedSystem<T> {
    fn rhs(&self, y: &[T; 2], dy: &mut [T; 2]) {
        let e = self.surface.eval(y[0]);
        dy[0] = y[1];
        dy[1] = reduced_accel(y[0], y[1], self.kappa, &e);
    }
}

/// Which sign changes of an event function count as crossings.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Rising,
    Falling,
    Either,
}

/// Finds a crossing of `y[comp] = level` inside a dense segment. The event
/// time is bracketed on the interpolant by the Illinois method and then
/// polished by one Newton step using the vector field.
pub fn locate_crossing<T: Scalar, S: OdeSystem<T, N>, const N: usize>(
    sys: &S,
    seg: &DenseSegment<T, N>,
    comp: usize,
    level: T,
    dir: Direction,
) -> Option<(T, [T; N])> {
    let g0 = seg.y0()[comp] - level;
    let g1 = seg.y1()[comp] - level;
    let forward = seg.h > T::zero();
    // Orient "rising" with respect to the direction of time.
    let rising = if forward {
        g0 < T::zero() && g1 >= T::zero()
    } else {
        g0 > T::zero() && g1 <= T::zero()
    };
    let falling = if forward {
        g0 > T::zero() && g1 <= T::zero()
    } else {
        g0 < T::zero() && g1 >= T::zero()
    };
    let hit = match dir {
        Direction::Rising => rising,
        Direction::Falling => falling,
        Direction::Either => rising || falling,
    };
    if !hit {
        return None;
    }
    let g = |t: T| seg.eval_component(t, comp) - level;
    let (mut a, mut b) = (seg.t0, seg.t1());
    let (mut fa, mut fb) = (g0, g1);
    let tol = T::lit(1e-13) * a.abs().max(b.abs()).max(T::one());
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= tol || fb == T::zero() {
            break;
        }
        let c = (a * fb - b * fa) / (fb - fa);
        let c = if (c - a) * (c - b) < T::zero() {
            c
        } else {
            (a + b) / T::lit(2.0)
        };
        let fc = g(c);
        if fc == T::zero() {
            a = c;
            b = c;
            fa = fc;
            fb = fc;
            break;
        }
        if (fc > T::zero()) == (fb > T::zero()) {
            b = c;
            fb = fc;
            if side == -1 {
                fa = fa / T::lit(2.0);
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb = fb / T::lit(2.0);
            }
            side = 1;
        }
    }
    let _ = fa;
    let mut t = if fb == T::zero() {
        b
    } else {
        (a + b) / T::lit(2.0)
    };
    let y = seg.eval(t);
    let mut dy = [T::zero(); N];
    sys.rhs(&y, &mut dy);
    if dy[comp] != T::zero() && dy[comp].is_finite() {
        let tn = t - (y[comp] - level) / dy[comp];
        let (lo, hi) = if forward {
            (seg.t0, seg.t1())
        } else {
            (seg.t1(), seg.t0)
        };
        if tn >= lo && tn <= hi {
            t = tn;
        }
    }
    Some((t, seg.eval(t)))
}

/// Steps `sys` from `(t0, y0)` to `t1`, calling `on_step` with each
/// accepted segment and the (projected) state at its end.
pub fn drive<T, S, F, const N: usize>(
    sys: &S,
    t0: T,
    y0: [T; N],
    t1: T,
    tol: Tolerances<T>,
    mut on_step: F,
) -> Result<StepStats<T>>
where
    T: Scalar,
    S: OdeSystem<T, N>,
    F: FnMut(&DenseSegment<T, N>, T, &[T; N]) -> Result<ControlFlow<()>>,
{
    let mut st = Dop853::new(sys, t0, y0, t1, tol)?;
    let forward = t1 >= t0;
    while if forward { st.t() < t1 } else { st.t() > t1 } {
        let seg = st.step(t1)?;
        if let ControlFlow::Break(()) = on_step(&seg, st.t(), st.y())? {
            break;
        }
    }
    Ok(st.stats())
}

/// Kinds of recorded events.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    /// `p_θ` crosses zero upwards (lower turning point).
    SectionRising,
    /// `p_θ` crosses zero downwards (upper turning point).
    SectionFalling,
    /// `θ` passes through a pole (only in the `κ = 0` chart).
    PolePassage,
}

/// A located event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event<T, const N: usize> {
    pub t: T,
    pub y: [T; N],
    pub kind: EventKind,
}

/// Largest deviations of the first integrals from their initial values.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct InvariantDrift<T = f64> {
    /// `|Δ(γ, γ)|`.
    pub f0: T,
    /// `|Δ(ω, γ)|`.
    pub f1: T,
    /// Relative drift of `κ` (absolute when `κ = 0`).
    pub kappa_rel: T,
    /// Relative drift of the energy.
    pub eps_rel: T,
}

/// Work and quality statistics of a trajectory.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrajectoryStats<T = f64> {
    pub steps: StepStats<T>,
    pub drift: InvariantDrift<T>,
    /// Set when a drift exceeds [`IntegrateOptions::drift_limit`].
    pub flagged: bool,
}

/// Output of an integration.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T, const N: usize> {
    /// `(t, state)` pairs with strictly increasing `t`.
    pub samples: Vec<(T, [T; N])>,
    pub events: Vec<Event<T, N>>,
    pub stats: TrajectoryStats<T>,
}

/// Integration settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegrateOptions<T = f64> {
    pub tol: Tolerances<T>,
    /// Uniform output spacing; `None` records every accepted step.
    pub output_dt: Option<T>,
    /// Record `p_θ = 0` crossings (reduced system only).
    pub sections: bool,
    /// Drift level above which the trajectory is flagged.
    pub drift_limit: T,
}

impl<T: Scalar> Default for IntegrateOptions<T> {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            output_dt: None,
            sections: true,
            drift_limit: T::lit(1e-8),
        }
    }
}

impl<T: Scalar> IntegrateOptions<T> {
    pub fn with_tol(mut self, tol: Tolerances<T>) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_output_dt(mut self, dt: T) -> Self {
        self.output_dt = Some(dt);
        self
    }
}

/// Initial data for [`integrate`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Initial<T> {
    Full(FullState<T>),
    Reduced { state: ReducedState<T>, kappa: T },
}

/// Result of [`integrate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Integrated<T> {
    Full(Trajectory<T, 6>),
    Reduced(Trajectory<T, 2>),
}

/// Integrates either system over `t_span`.
pub fn integrate<T: Scalar>(
    init: Initial<T>,
    p: &Params<T>,
    t_span: (T, T),
    opts: &IntegrateOptions<T>,
) -> Result<Integrated<T>> {
    match init {
        Initial::Full(s) => integrate_full(&s, p, t_span, opts).map(Integrated::Full),
        Initial::Reduced { state, kappa } => {
            integrate_reduced(&state, kappa, p, t_span, opts).map(Integrated::Reduced)
        }
    }
}

pub(crate) struct Recorder<T, const N: usize> {
    next_out: Option<T>,
    dt: Option<T>,
    pub(crate) samples: Vec<(T, [T; N])>,
}

impl<T: Scalar, const N: usize> Recorder<T, N> {
    pub(crate) fn new(t0: T, y0: [T; N], dt: Option<T>) -> Self {
        Self {
            next_out: dt.map(|d| t0 + d),
            dt,
            samples: vec![(t0, y0)],
        }
    }

    pub(crate) fn record(
        &mut self,
        seg: &DenseSegment<T, N>,
        t_end: T,
        y_end: &[T; N],
        final_step: bool,
    ) {
        match (self.dt, self.next_out) {
            (Some(dt), Some(mut next)) => {
                let forward = seg.h > T::zero();
                let slack = dt * T::lit(1e-9);
                while (forward && next <= t_end + slack) || (!forward && next >= t_end - slack) {
                    let y = if (next - t_end).abs() <= slack {
                        *y_end
                    } else {
                        seg.eval(next)
                    };
                    self.samples.push((
                        if (next - t_end).abs() <= slack {
                            t_end
                        } else {
                            next
                        },
                        y,
                    ));
                    next = next + if forward { dt } else { -dt };
                }
                self.next_out = Some(next);
                if final_step && self.samples.last().map(|s| s.0) != Some(t_end) {
                    self.samples.push((t_end, *y_end));
                }
            }
            _ => self.samples.push((t_end, *y_end)),
        }
    }
}

pub(crate) fn rel_drift<T: Scalar>(now: T, start: T) -> T {
    let d = (now - start).abs();
    if start.abs() > T::lit(1e-300) {
        d / start.abs()
    } else {
        d
    }
}

fn is_final<T: Scalar>(t: T, t1: T) -> bool {
    t == t1
}

/// Integrates the full system. The initial state must satisfy
/// `‖γ‖ = 1` and `(ω, γ) = 0` to `1e-9`.
pub fn integrate_full<T: Scalar>(
    init: &FullState<T>,
    p: &Params<T>,
    t_span: (T, T),
    opts: &IntegrateOptions<T>,
) -> Result<Trajectory<T, 6>> {
    integrate_full_with(init, &Ellipsoid::new(*p), t_span, opts)
}

/// Integrates the full system for any surface profile.
pub fn integrate_full_with<T: Scalar, S: SurfaceProfile<T> + Copy>(
    init: &FullState<T>,
    surface: &S,
    t_span: (T, T),
    opts: &IntegrateOptions<T>,
) -> Result<Trajectory<T, 6>> {
    if !init.is_valid(T::lit(1e-9)) {
        return Err(Error::InvalidState(format!(
            "|gamma| - 1 = {}, (omega, gamma) = {}",
            (init.gamma.norm() - T::one()).as_f64(),
            init.omega.dot(init.gamma).as_f64()
        )));
    }
    let sys = FullSystem { surface: *surface };
    let i0 = integrals_with(init, surface);
    let (t0, t1) = t_span;
    let mut rec = Recorder::new(t0, init.to_array(), opts.output_dt);
    let mut drift = InvariantDrift::<T>::default();
    let stats = drive(&sys, t0, init.to_array(), t1, opts.tol, |seg, t, y| {
        let i = integrals_with(&FullState::from_array(y), surface);
        drift.f0 = drift.f0.max((i.f0 - i0.f0).abs());
        drift.f1 = drift.f1.max((i.f1 - i0.f1).abs());
        drift.kappa_rel = drift.kappa_rel.max(rel_drift(i.kappa, i0.kappa));
        drift.eps_rel = drift.eps_rel.max(rel_drift(i.eps, i0.eps));
        rec.record(seg, t, y, is_final(t, t1));
        Ok(ControlFlow::Continue(()))
    })?;
    if stats.max_projection > T::zero() {
        log::debug!(
            "largest renormalization of gamma: {:e}",
            stats.max_projection.as_f64()
        );
    }
    let flagged = [drift.f0, drift.f1, drift.kappa_rel, drift.eps_rel]
        .iter()
        .any(|&d| d > opts.drift_limit);
    if flagged {
        log::warn!(
            "invariant drift above {:e}: {:?}",
            opts.drift_limit.as_f64(),
            drift
        );
    }
    Ok(Trajectory {
        samples: rec.samples,
        events: Vec::new(),
        stats: TrajectoryStats {
            steps: stats,
            drift,
            flagged,
        },
    })
}

/// Integrates the reduced system at fixed `κ`. For `κ = 0` the state lives
/// in the extended pole chart (see the module docs) and pole passages are
/// recorded as events; otherwise `θ` must stay inside `(0, π)`.
pub fn integrate_reduced<T: Scalar>(
    init: &ReducedState<T>,
    kappa: T,
    p: &Params<T>,
    t_span: (T, T),
    opts: &IntegrateOptions<T>,
) -> Result<Trajectory<T, 2>> {
    let pole_mode = kappa == T::zero();
    if !pole_mode && !(init.theta > T::zero() && init.theta < T::PI()) {
        return Err(Error::ThetaOutOfRange(init.theta.as_f64()));
    }
    let sys = ReducedSystem::new(p, kappa);
    let energy =
        |y: &[T; 2]| crate::dynamics::reduced_energy(&ReducedState::new(y[0], y[1]), kappa, p);
    let y0 = [init.theta, init.p_theta];
    let e0 = energy(&y0);
    let (t0, t1) = t_span;
    let mut rec = Recorder::new(t0, y0, opts.output_dt);
    let mut events = Vec::new();
    let mut drift = InvariantDrift::<T>::default();
    let stats = drive(&sys, t0, y0, t1, opts.tol, |seg, t, y| {
        if !pole_mode && !(y[0] > T::zero() && y[0] < T::PI()) {
            return Err(Error::PoleWithNonzeroKappa);
        }
        drift.eps_rel = drift.eps_rel.max(rel_drift(energy(y), e0));
        if opts.sections {
            for (dir, kind) in [
                (Direction::Rising, EventKind::SectionRising),
                (Direction::Falling, EventKind::SectionFalling),
            ] {
                if let Some((te, ye)) = locate_crossing(&sys, seg, 1, T::zero(), dir) {
                    events.push(Event { t: te, y: ye, kind });
                }
            }
        }
        if pole_mode {
            let (a, b) = (seg.y0()[0], seg.y1()[0]);
            let (ka, kb) = ((a / T::PI()).floor(), (b / T::PI()).floor());
            if ka != kb {
                let level = ka.max(kb) * T::PI();
                if let Some((te, ye)) = locate_crossing(&sys, seg, 0, level, Direction::Either) {
                    events.push(Event {
                        t: te,
                        y: ye,
                        kind: EventKind::PolePassage,
                    });
                }
            }
        }
        rec.record(seg, t, y, is_final(t, t1));
        Ok(ControlFlow::Continue(()))
    })?;
    let flagged = drift.eps_rel > opts.drift_limit;
    events.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(core::cmp::Ordering::Equal));
    Ok(Trajectory {
        samples: rec.samples,
        events,
        stats: TrajectoryStats {
            steps: stats,
            drift,
            flagged,
        },
    })
}

/// Reduced state together with the two Euler angles that the reduced
/// description leaves out.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChartState<T = f64> {
    pub theta: T,
    pub p_theta: T,
    pub phi: T,
    pub psi: T,
}

/// Continues a `κ = 0` state through a pole: `θ` is reflected about the
/// pole, `p_θ` changes sign and both `φ` and `ψ` advance by `π`. The body's
/// orientation and position in the fixed frame are unchanged.
pub fn pole_glue<T: Scalar>(state: &ChartState<T>, kappa: T) -> Result<ChartState<T>> {
    if kappa != T::zero() {
        return Err(Error::InvalidGlue);
    }
    let tol = T::lit(1e-8);
    let near_north = state.theta.abs() <= tol;
    let near_south = (state.theta - T::PI()).abs() <= tol;
    if !(near_north || near_south) {
        return Err(Error::InvalidGlue);
    }
    let pole = if near_north { T::zero() } else { T::PI() };
    Ok(flip(state, T::lit(2.0) * pole - state.theta))
}

fn flip<T: Scalar>(s: &ChartState<T>, theta: T) -> ChartState<T> {
    ChartState {
        theta,
        p_theta: -s.p_theta,
        phi: s.phi + T::PI(),
        psi: s.psi + T::PI(),
    }
}

/// Maps a state of the extended `κ = 0` chart to the physical chart
/// `θ ∈ [0, π]`, applying [`pole_glue`] as many times as needed.
pub fn fold_chart<T: Scalar>(s: &ChartState<T>) -> ChartState<T> {
    let two_pi = T::lit(2.0) * T::PI();
    let mut th = s.theta % two_pi;
    if th > T::PI() {
        th = th - two_pi;
    } else if th <= -T::PI() {
        th = th + two_pi;
    }
    let mut out = ChartState { theta: th, ..*s };
    // Full turns of θ through both poles compose two flips: φ and ψ advance by 2π.
    if th < T::zero() {
        out = flip(&out, -th);
    }
    out
}

/// Kind of reduced motion on one connected component of a level set.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrbitKind {
    /// `θ` oscillates between two turning points.
    Libration,
    /// `κ = 0` only: `θ` advances monotonically through both poles.
    Rotation,
}

/// Period of a reduced orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectionPeriod<T = f64> {
    /// Period of `θ`; `None` for a fixed point.
    pub period: Option<T>,
    /// Lower turning point (extended chart for `κ = 0` librations through a pole).
    pub theta_min: T,
    /// Upper turning point.
    pub theta_max: T,
    pub fixed_point: bool,
    pub kind: OrbitKind,
}

/// Measures the period of the reduced orbit on level `(κ, ε)`, component
/// `branch` (components are ordered by increasing `θ`).
pub fn section_period<T: Scalar>(
    kappa: T,
    eps: T,
    branch: usize,
    p: &Params<T>,
    tol: &Tolerances<T>,
) -> Result<SectionPeriod<T>> {
    let comps = connected_components(kappa, eps, p);
    if comps.intervals.is_empty() {
        return Err(Error::OutsideRpm {
            kappa: kappa.as_f64(),
            eps: eps.as_f64(),
        });
    }
    let comp = comps.intervals.get(branch).ok_or(Error::NoSuchBranch {
        branch,
        count: comps.intervals.len(),
    })?;
    if comp.is_degenerate(eps) {
        return Ok(SectionPeriod {
            period: None,
            theta_min: comp.theta_at_min,
            theta_max: comp.theta_at_min,
            fixed_point: true,
            kind: OrbitKind::Libration,
        });
    }
    let sys = ReducedSystem::new(p, kappa);
    let horizon = T::lit(1e7);
    match comp.kind {
        ComponentKind::FullCircle => {
            // Start at θ = 0 moving forward; one period is a 2π advance of θ.
            let e = sys.surface.eval(T::zero());
            let p0 = (T::lit(2.0) * (eps - e.u) / e.b).max(T::zero()).sqrt();
            let level = T::lit(2.0) * T::PI();
            let mut period = None;
            drive(
                &sys,
                T::zero(),
                [T::zero(), p0],
                horizon,
                *tol,
                |seg, _, _| {
                    if let Some((t, _)) = locate_crossing(&sys, seg, 0, level, Direction::Rising) {
                        period = Some(t);
                        return Ok(ControlFlow::Break(()));
                    }
                    Ok(ControlFlow::Continue(()))
                },
            )?;
            let period =
                period.ok_or_else(|| Error::RootFinding("no full turn detected".into()))?;
            Ok(SectionPeriod {
                period: Some(period),
                theta_min: comp.lo,
                theta_max: comp.hi,
                fixed_point: false,
                kind: OrbitKind::Rotation,
            })
        }
        _ => {
            let half = half_period(&sys, comp.lo, tol)?;
            Ok(SectionPeriod {
                period: Some(T::lit(2.0) * half.0),
                theta_min: comp.lo,
                theta_max: half.1,
                fixed_point: false,
                kind: OrbitKind::Libration,
            })
        }
    }
}

/// Integrates from the lower turning point `(θ_lo, 0)` to the next upper
/// turning point, returning its time and `θ`.
fn half_period<T: Scalar>(
    sys: &ReducedSystem<T>,
    theta_lo: T,
    tol: &Tolerances<T>,
) -> Result<(T, T)> {
    let mut found = None;
    drive(
        sys,
        T::zero(),
        [theta_lo, T::zero()],
        T::lit(1e7),
        *tol,
        |seg, _, _| {
            if let Some((t, y)) = locate_crossing(sys, seg, 1, T::zero(), Direction::Falling) {
                found = Some((t, y[0]));
                return Ok(ControlFlow::Break(()));
            }
            Ok(ControlFlow::Continue(()))
        },
    )?;
    found.ok_or_else(|| Error::RootFinding("no upper turning point detected".into()))
}
