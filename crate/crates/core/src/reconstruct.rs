//! Motion in absolute space: Euler angles, the paths of the center of mass
//! and of the contact point, the rotation number of the precession and the
//! resulting classification of trajectories.
//!
//! Orientation is described by Euler angles `(θ, ψ, φ)` with
//! `γ = (sinθ sinφ, sinθ cosφ, cosθ)`. The reduced system fixes `θ(t)`;
//! `ψ` and `φ` follow by quadrature and the center of mass
//! `ζ = x_c + i y_c` obeys
//! `ζ̇ = −U(θ) e^{iψ} (κ/(J(θ) sinθ) + i θ̇)`.
//! The same quantities are also available from direct integration of the
//! body-frame kinematics ([`KinematicSystem`]), which serves as an oracle.

use crate::bifurcation::{
    connected_components, critical_points, cusp, diagram_type, inclined_equilibrium,
    linear_stability, permanent_rotation, ComponentKind, CriticalKind, DiagramType, Interval,
};
use crate::dynamics::{full_rhs_raw, reduced_accel, reduced_energy, FullState, ReducedState};
use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, SurfaceProfile};
use crate::integrate::{
    drive, fold_chart, locate_crossing, rel_drift, ChartState, Direction, IntegrateOptions,
    OdeSystem, Recorder, StepStats, Tolerances,
};
use crate::model::Params;
use crate::roots::bisect;
use crate::scalar::Scalar;
use crate::vec3::Vec3;
use core::ops::ControlFlow;
use rayon::prelude::*;

/// Rates `(ψ̇, φ̇, ω₃)` at inclination `θ`:
/// `ω₃ = κ/J`, `φ̇ = ω₃/sin²θ`, `ψ̇ = −κ cosθ/(J sin²θ)`.
pub fn quadrature_rates<T: Scalar>(theta: T, kappa: T, p: &Params<T>) -> Result<(T, T, T)> {
    let (s, c) = theta.sin_cos();
    if !(s.abs() > T::lit(1e-12)) {
        return Err(Error::PoleState);
    }
    let j = Ellipsoid::new(*p).eval(theta).j;
    let w3 = kappa / j;
    Ok((-kappa * c / (j * s * s), w3 / (s * s), w3))
}

/// Signed horizontal offset of the contact point from the center of mass,
/// measured along `(sinψ, −cosψ)`:
/// `h = sinθ ((β² − 1) cosθ/Z − α)`.
fn contact_offset<T: Scalar>(theta: T, z: T, p: &Params<T>) -> T {
    let (s, c) = theta.sin_cos();
    s * ((p.beta * p.beta - T::one()) * c / z - p.alpha)
}

/// Reduced system augmented by `ψ`, `φ` and the center of mass:
/// state `(θ, p_θ, ψ, φ, x_c, y_c)`. For `κ = 0` it runs in the extended
/// pole chart, where `ψ` and `φ` are constant.
#[derive(Clone, Copy, Debug)]
pub struct AbsoluteSystem<T> {
    pub surface: Ellipsoid<T>,
    pub kappa: T,
}

impl<T: Scalar> OdeSystem<T, 6> for AbsoluteSystem<T> {
    fn rhs(&self, y: &[T; 6], dy: &mut [T; 6]) {
        let (theta, pt, psi) = (y[0], y[1], y[2]);
        let e = self.surface.eval(theta);
        let (s, c) = theta.sin_cos();
        dy[0] = pt;
        dy[1] = reduced_accel(theta, pt, self.kappa, &e);
        let roll = if self.kappa == T::zero() {
            dy[2] = T::zero();
            dy[3] = T::zero();
            T::zero()
        } else {
            dy[2] = -self.kappa * c / (e.j * s * s);
            dy[3] = self.kappa / (e.j * s * s);
            self.kappa / (e.j * s)
        };
        // ζ̇ = −U e^{iψ} (roll + i p_θ)
        let (sp, cp) = psi.sin_cos();
        dy[4] = -e.u * (cp * roll - sp * pt);
        dy[5] = -e.u * (sp * roll + cp * pt);
    }
}

/// Reduced system augmented by `ψ` only; used for rotation numbers.
#[derive(Clone, Copy, Debug)]
struct PrecessionSystem<T> {
    surface: Ellipsoid<T>,
    kappa: T,
}

impl<T: Scalar> OdeSystem<T, 3> for PrecessionSystem<T> {
    fn rhs(&self, y: &[T; 3], dy: &mut [T; 3]) {
        let e = self.surface.eval(y[0]);
        let (s, c) = y[0].sin_cos();
        dy[0] = y[1];
        dy[1] = reduced_accel(y[0], y[1], self.kappa, &e);
        dy[2] = -self.kappa * c / (e.j * s * s);
    }
}

/// Direct kinematics in the body frame: `(ω, γ, a, b, x_c, y_c)`, where `a`
/// and `b` are the fixed horizontal axes written in the body frame. Every
/// fixed vector obeys `ẋ = x × ω`; the center of mass moves with
/// `v = r × ω`, whose fixed-frame components are `(v·a, v·b)`.
#[derive(Clone, Copy, Debug)]
pub struct KinematicSystem<S> {
    pub surface: S,
}

impl<T: Scalar, S: SurfaceProfile<T>> OdeSystem<T, 14> for KinematicSystem<S> {
    fn rhs(&self, y: &[T; 14], dy: &mut [T; 14]) {
        let v = |i: usize| Vec3::new(y[i], y[i + 1], y[i + 2]);
        let (omega, gamma, a, b) = (v(0), v(3), v(6), v(9));
        let Some((wd, gd)) = full_rhs_raw(omega, gamma, &self.surface) else {
            *dy = [T::nan(); 14];
            return;
        };
        let r = self.surface.contact_vector(gamma);
        let vel = r.cross(omega);
        let (ad, bd) = (a.cross(omega), b.cross(omega));
        dy[..3].copy_from_slice(&wd.to_array());
        dy[3..6].copy_from_slice(&gd.to_array());
        dy[6..9].copy_from_slice(&ad.to_array());
        dy[9..12].copy_from_slice(&bd.to_array());
        dy[12] = vel.dot(a);
        dy[13] = vel.dot(b);
    }

    fn project(&self, y: &mut [T; 14]) -> T {
        let mut worst = T::zero();
        for k in [3, 6, 9] {
            worst = worst.max(crate::integrate::normalize_slice(&mut y[k..k + 3]));
        }
        worst
    }
}

/// The fixed horizontal axes `(a, b)` in the body frame for Euler angles
/// `(θ, ψ, φ)`.
pub fn horizontal_axes<T: Scalar>(theta: T, psi: T, phi: T) -> (Vec3<T>, Vec3<T>) {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = psi.sin_cos();
    let (sf, cf) = phi.sin_cos();
    let a = Vec3::new(cp * cf - ct * sp * sf, -cp * sf - ct * sp * cf, st * sp);
    let b = Vec3::new(sp * cf + ct * cp * sf, -sp * sf + ct * cp * cf, -st * cp);
    (a, b)
}

/// Initial kinematic state for [`KinematicSystem`].
pub fn kinematic_state<T: Scalar>(s: &FullState<T>, psi: T, x: T, y: T) -> [T; 14] {
    let theta = s.gamma.z.max(-T::one()).min(T::one()).acos();
    let phi = s.gamma.x.atan2(s.gamma.y);
    let (a, b) = horizontal_axes(theta, psi, phi);
    let mut out = [T::zero(); 14];
    out[..6].copy_from_slice(&s.to_array());
    out[6..9].copy_from_slice(&a.to_array());
    out[9..12].copy_from_slice(&b.to_array());
    out[12] = x;
    out[13] = y;
    out
}

/// One sample of a reconstructed motion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AbsoluteSample<T = f64> {
    pub t: T,
    pub theta: T,
    pub p_theta: T,
    /// Precession angle, accumulated continuously.
    pub psi: T,
    /// Proper rotation angle.
    pub phi: T,
    pub x_c: T,
    pub y_c: T,
    /// Height of the center of mass, `α cosθ + Z(θ)`.
    pub z_c: T,
    pub x_p: T,
    pub y_p: T,
    /// Relative energy drift at this sample.
    pub energy_drift: T,
    /// `|(ω, γ)|` at this sample.
    pub f1_drift: T,
}

/// Samples of a kinematic state as an [`AbsoluteSample`].
pub fn sample_from_kinematics<T: Scalar, S: SurfaceProfile<T>>(
    t: T,
    y: &[T; 14],
    surface: &S,
) -> AbsoluteSample<T> {
    let v = |i: usize| Vec3::new(y[i], y[i + 1], y[i + 2]);
    let (omega, gamma, a, b) = (v(0), v(3), v(6), v(9));
    let theta = gamma.z.max(-T::one()).min(T::one()).acos();
    let phi = gamma.x.atan2(gamma.y);
    let psi = a.z.atan2(-b.z);
    let (sf, cf) = phi.sin_cos();
    let r = surface.contact_vector(gamma);
    AbsoluteSample {
        t,
        theta,
        p_theta: omega.x * cf - omega.y * sf,
        psi,
        phi,
        x_c: y[12],
        y_c: y[13],
        z_c: -r.dot(gamma),
        x_p: y[12] + r.dot(a),
        y_p: y[13] + r.dot(b),
        energy_drift: T::zero(),
        f1_drift: omega.dot(gamma).abs(),
    }
}

/// Initial angles and position for a reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AbsoluteStart<T = f64> {
    pub psi: T,
    pub phi: T,
    pub x: T,
    pub y: T,
}

/// A reconstructed motion.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction<T = f64> {
    pub samples: Vec<AbsoluteSample<T>>,
    pub steps: StepStats<T>,
    /// Largest relative energy drift.
    pub energy_drift: T,
    pub flagged: bool,
}

/// Reconstructs the motion in absolute space from a reduced initial state.
/// Angles and the center of mass are integrated together with `(θ, p_θ)`
/// on the same adaptive grid; output follows `opts.output_dt`. For `κ = 0`
/// the integration runs in the pole chart and each sample is folded back to
/// `θ ∈ [0, π]`.
pub fn reconstruct_trajectory<T: Scalar>(
    init: &ReducedState<T>,
    kappa: T,
    p: &Params<T>,
    start: &AbsoluteStart<T>,
    t_span: (T, T),
    opts: &IntegrateOptions<T>,
) -> Result<Reconstruction<T>> {
    let pole_mode = kappa == T::zero();
    if !pole_mode && !(init.theta > T::zero() && init.theta < T::PI()) {
        return Err(Error::ThetaOutOfRange(init.theta.as_f64()));
    }
    let sys = AbsoluteSystem {
        surface: Ellipsoid::new(*p),
        kappa,
    };
    let energy = |y: &[T; 6]| reduced_energy(&ReducedState::new(y[0], y[1]), kappa, p);
    let y0 = [
        init.theta,
        init.p_theta,
        start.psi,
        start.phi,
        start.x,
        start.y,
    ];
    let e0 = energy(&y0);
    let (t0, t1) = t_span;
    let mut rec = Recorder::new(t0, y0, opts.output_dt);
    let mut drift = T::zero();
    let steps = drive(&sys, t0, y0, t1, opts.tol, |seg, t, y| {
        if !pole_mode && !(y[0] > T::zero() && y[0] < T::PI()) {
            return Err(Error::PoleWithNonzeroKappa);
        }
        drift = drift.max(rel_drift(energy(y), e0));
        rec.record(seg, t, y, t == t1);
        Ok(ControlFlow::Continue(()))
    })?;
    let samples = rec
        .samples
        .iter()
        .map(|(t, y)| {
            let folded = fold_chart(&ChartState {
                theta: y[0],
                p_theta: y[1],
                phi: y[3],
                psi: y[2],
            });
            let (theta, pt, psi, phi) = if pole_mode {
                (folded.theta, folded.p_theta, folded.psi, folded.phi)
            } else {
                (y[0], y[1], y[2], y[3])
            };
            let e = sys.surface.eval(theta);
            let h = contact_offset(theta, e.z, p);
            let (sp, cp) = psi.sin_cos();
            AbsoluteSample {
                t: *t,
                theta,
                p_theta: pt,
                psi,
                phi,
                x_c: y[4],
                y_c: y[5],
                z_c: e.u,
                x_p: y[4] + h * sp,
                y_p: y[5] - h * cp,
                energy_drift: rel_drift(energy(y), e0),
                f1_drift: T::zero(),
            }
        })
        .collect();
    let flagged = drift > opts.drift_limit;
    Ok(Reconstruction {
        samples,
        steps,
        energy_drift: drift,
        flagged,
    })
}

/// Integrates the body-frame kinematics directly (the oracle for
/// [`reconstruct_trajectory`]).
pub fn reconstruct_full<T: Scalar>(
    init: &FullState<T>,
    p: &Params<T>,
    start: &AbsoluteStart<T>,
    t_span: (T, T),
    opts: &IntegrateOptions<T>,
) -> Result<Reconstruction<T>> {
    if !init.is_valid(T::lit(1e-9)) {
        return Err(Error::InvalidState(format!(
            "|gamma| - 1 = {}, (omega, gamma) = {}",
            (init.gamma.norm() - T::one()).as_f64(),
            init.omega.dot(init.gamma).as_f64()
        )));
    }
    let surface = Ellipsoid::new(*p);
    let sys = KinematicSystem { surface };
    let y0 = kinematic_state(init, start.psi, start.x, start.y);
    let energy = |y: &[T; 14]| {
        crate::dynamics::integrals_with(
            &FullState::from_array(&[y[0], y[1], y[2], y[3], y[4], y[5]]),
            &surface,
        )
        .eps
    };
    let e0 = energy(&y0);
    let (t0, t1) = t_span;
    let mut rec = Recorder::new(t0, y0, opts.output_dt);
    let mut drift = T::zero();
    let steps = drive(&sys, t0, y0, t1, opts.tol, |seg, t, y| {
        drift = drift.max(rel_drift(energy(y), e0));
        rec.record(seg, t, y, t == t1);
        Ok(ControlFlow::Continue(()))
    })?;
    let samples = rec
        .samples
        .iter()
        .map(|(t, y)| AbsoluteSample {
            energy_drift: rel_drift(energy(y), e0),
            ..sample_from_kinematics(*t, y, &surface)
        })
        .collect();
    let flagged = drift > opts.drift_limit;
    Ok(Reconstruction {
        samples,
        steps,
        energy_drift: drift,
        flagged,
    })
}

/// Rotation number of the precession over one period of `θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationNumber<T = f64> {
    /// `N = −(1/2π) ∫₀^{T_θ} ψ̇ dt`.
    pub value: T,
    /// Error estimate from a tolerance comparison.
    pub error: T,
    /// Period `T_θ`; for a fixed point, the linearized period (if stable).
    pub period: Option<T>,
    /// Evaluated at a fixed point of the reduced system from the
    /// linearization frequency.
    pub fixed_point: bool,
}

/// Integrates `(θ, p_θ, ψ)` from the lower turning point to the upper one;
/// returns `(t_half, ψ_half)`.
fn precession_half<T: Scalar>(
    kappa: T,
    theta_lo: T,
    p: &Params<T>,
    tol: &Tolerances<T>,
) -> Result<(T, T)> {
    let sys = PrecessionSystem {
        surface: Ellipsoid::new(*p),
        kappa,
    };
    let mut found = None;
    drive(
        &sys,
        T::zero(),
        [theta_lo, T::zero(), T::zero()],
        T::lit(1e7),
        *tol,
        |seg, _, _| {
            if let Some((t, y)) = locate_crossing(&sys, seg, 1, T::zero(), Direction::Falling) {
                found = Some((t, y[2]));
                return Ok(ControlFlow::Break(()));
            }
            Ok(ControlFlow::Continue(()))
        },
    )?;
    found.ok_or_else(|| Error::RootFinding("no upper turning point detected".into()))
}

fn component<T: Scalar>(kappa: T, eps: T, branch: usize, p: &Params<T>) -> Result<Interval<T>> {
    let comps = connected_components(kappa, eps, p);
    if comps.intervals.is_empty() {
        return Err(Error::OutsideRpm {
            kappa: kappa.as_f64(),
            eps: eps.as_f64(),
        });
    }
    comps
        .intervals
        .get(branch)
        .copied()
        .ok_or(Error::NoSuchBranch {
            branch,
            count: comps.intervals.len(),
        })
}

fn rotation_on<T: Scalar>(
    kappa: T,
    eps: T,
    comp: &Interval<T>,
    p: &Params<T>,
    tol: &Tolerances<T>,
) -> Result<RotationNumber<T>> {
    if comp.is_degenerate(eps) {
        let theta0 = comp.theta_at_min;
        let (lambda_sq, _) = linear_stability(theta0, kappa, p)?;
        let psi_dot = if kappa == T::zero() {
            T::zero()
        } else {
            quadrature_rates(theta0, kappa, p)?.0
        };
        if lambda_sq < T::zero() {
            let nu = (-lambda_sq).sqrt();
            return Ok(RotationNumber {
                value: -psi_dot / nu,
                error: T::zero(),
                period: Some(T::lit(2.0) * T::PI() / nu),
                fixed_point: true,
            });
        }
        return Ok(RotationNumber {
            value: T::zero(),
            error: T::zero(),
            period: None,
            fixed_point: true,
        });
    }
    if kappa == T::zero() {
        let period = crate::integrate::section_period(kappa, eps, 0, p, tol)
            .ok()
            .and_then(|s| s.period);
        return Ok(RotationNumber {
            value: T::zero(),
            error: T::zero(),
            period,
            fixed_point: false,
        });
    }
    let (th, psi) = precession_half(kappa, comp.lo, p, tol)?;
    let value = -psi / T::PI();
    let loose = Tolerances {
        abs: tol.abs * T::lit(10.0),
        rel: tol.rel * T::lit(10.0),
        ..*tol
    };
    let (_, psi_loose) = precession_half(kappa, comp.lo, p, &loose)?;
    let error = (value + psi_loose / T::PI()).abs() + T::lit(1e-12) * (T::one() + value.abs());
    Ok(RotationNumber {
        value,
        error,
        period: Some(T::lit(2.0) * th),
        fixed_point: false,
    })
}

/// Rotation number on component `branch` of the level set `(κ, ε)`.
/// `N = 0` when `κ = 0`; at a fixed point of the reduced system the
/// linearization variant `N = −ψ̇/sqrt(−λ²)` is returned with a flag.
pub fn rotation_number<T: Scalar>(
    kappa: T,
    eps: T,
    branch: usize,
    p: &Params<T>,
    tol: &Tolerances<T>,
) -> Result<RotationNumber<T>> {
    let comp = component(kappa, eps, branch, p)?;
    rotation_on(kappa, eps, &comp, p, tol)
}

/// Rotation number of the orbit through `(θ₀, p_θ = 0)`.
pub fn rotation_number_from<T: Scalar>(
    kappa: T,
    theta0: T,
    p: &Params<T>,
    tol: &Tolerances<T>,
) -> Result<RotationNumber<T>> {
    let eps = crate::bifurcation::effective_potential(theta0, kappa, p);
    let branch = crate::bifurcation::branch_of(theta0, kappa, eps, p).ok_or(Error::OutsideRpm {
        kappa: kappa.as_f64(),
        eps: eps.as_f64(),
    })?;
    rotation_number(kappa, eps, branch, p, tol)
}

/// The nine kinds of trajectory of the center of mass, with witness data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TrajectoryClass<T = f64> {
    /// The body stays at rest.
    Point { theta: T },
    /// Permanent rotation: circle of the given radius.
    Circle { theta0: T, radius: T },
    /// Straight line traversed to infinity.
    UnboundedLine,
    /// Oscillation along a straight segment; `asymptotic` when the motion
    /// tends to an equilibrium at an end of the segment.
    Segment { asymptotic: bool },
    /// Resonance `N = n ∈ ℤ`: unbounded drift along a fixed direction.
    UnboundedResonant { n: i64, rotation: T },
    /// Rational `N = num/den`: closed after `den` periods of `θ`.
    ClosedPeriodic { num: i64, den: u64, rotation: T },
    /// Irrational `N`: bounded, dense in an annulus.
    QuasiPeriodicBounded { rotation: T },
    /// On a separatrix: tends to the permanent rotation at `theta`.
    AsymptoticToCircles { theta: T },
    /// On a separatrix: tends to a straight-line motion through `theta`.
    AsymptoticToLines { theta: T },
}

impl<T> TrajectoryClass<T> {
    pub fn name(&self) -> &'static str {
        match self {
            TrajectoryClass::Point { .. } => "point",
            TrajectoryClass::Circle { .. } => "circle",
            TrajectoryClass::UnboundedLine => "unbounded_line",
            TrajectoryClass::Segment { .. } => "segment",
            TrajectoryClass::UnboundedResonant { .. } => "unbounded_resonant",
            TrajectoryClass::ClosedPeriodic { .. } => "closed_periodic",
            TrajectoryClass::QuasiPeriodicBounded { .. } => "quasi_periodic_bounded",
            TrajectoryClass::AsymptoticToCircles { .. } => "asymptotic_to_circles",
            TrajectoryClass::AsymptoticToLines { .. } => "asymptotic_to_lines",
        }
    }
}

/// Tolerances of [`classify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassifyOptions<T = f64> {
    pub tol: Tolerances<T>,
    /// Largest denominator accepted for a rational rotation number.
    pub q_max: u64,
    /// Fixed acceptance tolerance for `|N − p/q|`; by default `5·N_err + 1e-9`.
    pub rational_tol: Option<T>,
    /// Relative distance to a separatrix level counted as "on" it.
    pub separatrix_tol: T,
    /// Relative distance below which the result is flagged as ambiguous.
    pub separatrix_warn: T,
}

impl<T: Scalar> Default for ClassifyOptions<T> {
    fn default() -> Self {
        Self {
            tol: Tolerances::new(T::lit(1e-13), T::lit(1e-12)),
            q_max: 64,
            rational_tol: None,
            separatrix_tol: T::lit(1e-9),
            separatrix_warn: T::lit(1e-7),
        }
    }
}

/// Result of [`classify`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification<T = f64> {
    pub class: TrajectoryClass<T>,
    pub rotation: Option<RotationNumber<T>>,
    /// The level lies close to a separatrix, beyond the resolution at which
    /// the two can be told apart reliably.
    pub near_separatrix: bool,
}

/// Continued-fraction search for `p/q` with `q ≤ q_max` and `|x − p/q| ≤ tol`.
pub fn rational_approximation<T: Scalar>(x: T, q_max: u64, tol: T) -> Option<(i64, u64)> {
    let xf = x.as_f64();
    let tol = tol.as_f64();
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = xf;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let a = a as i64;
        let (h2, k2) = (a * h1 + h0, a * k1 + k0);
        if k2 as u64 > q_max {
            break;
        }
        if (xf - h2 as f64 / k2 as f64).abs() <= tol {
            return Some((h2, k2 as u64));
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a as f64;
        if frac.abs() < 1e-300 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

/// Classifies the motion on component `branch` of the level set `(κ, ε)`.
///
/// Decision order: fixed points of the reduced system (point, circle or
/// equatorial line); `κ = 0` (segment or meridian line); separatrix levels
/// (asymptotic classes); otherwise the rotation number decides between
/// resonant, closed and quasi-periodic motion.
pub fn classify<T: Scalar>(
    kappa: T,
    eps: T,
    branch: usize,
    p: &Params<T>,
    opts: &ClassifyOptions<T>,
) -> Result<Classification<T>> {
    let comps = connected_components(kappa, eps, p);
    if comps.intervals.is_empty() {
        return Err(Error::OutsideRpm {
            kappa: kappa.as_f64(),
            eps: eps.as_f64(),
        });
    }
    let comp = *comps.intervals.get(branch).ok_or(Error::NoSuchBranch {
        branch,
        count: comps.intervals.len(),
    })?;
    let plain = |class| {
        Ok(Classification {
            class,
            rotation: None,
            near_separatrix: false,
        })
    };
    let half_pi = T::FRAC_PI_2();
    let eq_tol = T::lit(1e-9);

    if comp.is_degenerate(eps) {
        let theta = comp.theta_at_min;
        if kappa == T::zero() {
            return plain(TrajectoryClass::Point { theta });
        }
        if p.alpha == T::zero() && (theta - half_pi).abs() <= eq_tol {
            return plain(TrajectoryClass::UnboundedLine);
        }
        let radius = permanent_rotation(theta, p)
            .map(|r| r.rho_c)
            .unwrap_or(T::nan());
        return plain(TrajectoryClass::Circle {
            theta0: theta,
            radius,
        });
    }

    // Separatrix levels: maxima of W on or at the edge of this component.
    let scale = eps.abs().max(T::one());
    let mut near = false;
    for c in comps
        .critical
        .iter()
        .filter(|c| c.kind == CriticalKind::Maximum)
    {
        let inside = if kappa == T::zero() {
            c.theta >= comp.lo.min(T::zero()) - eq_tol || c.theta <= comp.hi + eq_tol
        } else {
            c.theta >= comp.lo - eq_tol && c.theta <= comp.hi + eq_tol
        };
        if !inside {
            continue;
        }
        let d = (eps - c.w).abs() / scale;
        if d <= opts.separatrix_tol {
            let at_pole = c.theta.sin().abs() < T::lit(1e-12);
            let class = if kappa == T::zero() {
                if at_pole {
                    TrajectoryClass::AsymptoticToLines { theta: c.theta }
                } else {
                    TrajectoryClass::Segment { asymptotic: true }
                }
            } else if p.alpha == T::zero() && (c.theta - half_pi).abs() <= eq_tol {
                TrajectoryClass::AsymptoticToLines { theta: c.theta }
            } else {
                TrajectoryClass::AsymptoticToCircles { theta: c.theta }
            };
            return plain(class);
        }
        if d <= opts.separatrix_warn {
            near = true;
        }
    }

    if kappa == T::zero() {
        let class = match comp.kind {
            ComponentKind::FullCircle => TrajectoryClass::UnboundedLine,
            _ => TrajectoryClass::Segment { asymptotic: false },
        };
        let rotation = rotation_on(kappa, eps, &comp, p, &opts.tol).ok();
        return Ok(Classification {
            class,
            rotation,
            near_separatrix: near,
        });
    }

    let rot = rotation_on(kappa, eps, &comp, p, &opts.tol)?;
    let n = rot.value;
    let tol = opts
        .rational_tol
        .unwrap_or(T::lit(5.0) * rot.error + T::lit(1e-9));
    let class = if (n - n.round()).abs() <= tol {
        TrajectoryClass::UnboundedResonant {
            n: n.round().as_f64() as i64,
            rotation: n,
        }
    } else if let Some((num, den)) = rational_approximation(n, opts.q_max, tol) {
        TrajectoryClass::ClosedPeriodic {
            num,
            den,
            rotation: n,
        }
    } else {
        TrajectoryClass::QuasiPeriodicBounded { rotation: n }
    };
    Ok(Classification {
        class,
        rotation: Some(rot),
        near_separatrix: near,
    })
}

/// Minimum energy at `κ = 0` above which the body can roll over both
/// vertices: `1 + α` when `β² ≤ 1 + α`, else `U(θ*)`.
pub fn epsilon_min<T: Scalar>(p: &Params<T>) -> T {
    let b2 = p.beta * p.beta;
    if b2 <= T::one() + p.alpha {
        return T::one() + p.alpha;
    }
    match inclined_equilibrium(p) {
        Some(ts) => Ellipsoid::new(*p).eval(ts).u,
        None => T::one() + p.alpha,
    }
}

/// Closed form `β·sqrt((β² − 1 + α²)/(β² − 1))` of [`epsilon_min`] for
/// `β² > 1 + α`.
pub fn epsilon_min_closed_form<T: Scalar>(p: &Params<T>) -> Option<T> {
    let b2 = p.beta * p.beta;
    (b2 > T::one() + p.alpha)
        .then(|| p.beta * ((b2 - T::one() + p.alpha * p.alpha) / (b2 - T::one())).sqrt())
}

/// The variant `β·sqrt((1 + α² − β²)/(1 − β²))` found in print; it differs
/// from `U(θ*)` by the sign of `α²` and is kept for comparison only.
pub fn printed_epsilon_min<T: Scalar>(p: &Params<T>) -> Option<T> {
    let b2 = p.beta * p.beta;
    let r = (T::one() + p.alpha * p.alpha - b2) / (T::one() - b2);
    (r >= T::zero() && b2 != T::one()).then(|| p.beta * r.sqrt())
}

/// Settings of [`resonance_curve`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceOptions<T = f64> {
    /// Index of the potential well (minima of `W` ordered by `θ`).
    pub branch: usize,
    /// Extent of the scanned `ε` slice above the highest relevant level.
    pub eps_span: T,
    /// Uniform samples per slice (refined near separatrix levels).
    pub eps_samples: usize,
    /// Acceptance threshold for `|N + n|` after polishing.
    pub residual: T,
    pub tol: Tolerances<T>,
}

impl<T: Scalar> Default for ResonanceOptions<T> {
    fn default() -> Self {
        Self {
            branch: 0,
            eps_span: T::one(),
            eps_samples: 40,
            residual: T::lit(1e-6),
            tol: Tolerances::new(T::lit(1e-13), T::lit(1e-12)),
        }
    }
}

/// A point `(κ, ε)` on a resonance curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonancePoint<T = f64> {
    pub kappa: T,
    pub eps: T,
    /// `N(κ, ε)` at the returned point.
    pub rotation: T,
}

/// `N` on the component containing the bottom of the well at `theta_well`.
fn rotation_in_well<T: Scalar>(
    kappa: T,
    eps: T,
    theta_well: T,
    p: &Params<T>,
    tol: &Tolerances<T>,
) -> Option<T> {
    let comps = connected_components(kappa, eps, p);
    let comp = comps
        .intervals
        .iter()
        .find(|c| c.lo <= theta_well && theta_well <= c.hi)?;
    if comp.is_degenerate(eps) {
        return None;
    }
    rotation_on(kappa, eps, comp, p, tol).ok().map(|r| r.value)
}

fn slice_levels<T: Scalar>(lo: T, hi: T, saddles: &[T], n: usize) -> Vec<T> {
    let mut v: Vec<T> = (1..=n)
        .map(|i| lo + (hi - lo) * T::of_usize(i) / T::of_usize(n))
        .collect();
    for &s in saddles {
        for k in 1..=9 {
            for m in [T::one(), T::lit(3.0)] {
                let d = m * T::lit(10f64.powi(-k));
                for x in [s - d, s + d] {
                    if x > lo && x <= hi {
                        v.push(x);
                    }
                }
            }
        }
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    v.dedup();
    v
}

/// Golden-section search on `[a, c]` for the extremum of `f` that points
/// toward zero (a minimum if `f > 0`, else a maximum). Returns the first
/// point where `f` changes sign, if any.
fn approach_zero<T: Scalar, F: Fn(T) -> Option<T>>(
    f: &F,
    mut a: T,
    mut c: T,
    positive: bool,
) -> Option<T> {
    let r = T::lit(0.618_033_988_749_894_9);
    let key = |x: T| f(x).map(|v| if positive { v } else { -v });
    let mut x1 = c - r * (c - a);
    let mut x2 = a + r * (c - a);
    let (mut k1, mut k2) = (key(x1)?, key(x2)?);
    for _ in 0..60 {
        if k1 <= T::zero() {
            return Some(x1);
        }
        if k2 <= T::zero() {
            return Some(x2);
        }
        if k1 < k2 {
            c = x2;
            x2 = x1;
            k2 = k1;
            x1 = c - r * (c - a);
            k1 = key(x1)?;
        } else {
            a = x1;
            x1 = x2;
            k1 = k2;
            x2 = a + r * (c - a);
            k2 = key(x2)?;
        }
        if c - a <= T::lit(1e-14) * c.abs().max(T::one()) {
            break;
        }
    }
    None
}

/// Roots `ε` of `N(κ, ε) = −n` on one `κ` slice.
fn resonance_on_slice<T: Scalar>(
    n: i64,
    kappa: T,
    p: &Params<T>,
    opts: &ResonanceOptions<T>,
) -> Vec<ResonancePoint<T>> {
    if kappa == T::zero() {
        return Vec::new();
    }
    let crit = critical_points(kappa, p);
    let wells: Vec<_> = crit
        .iter()
        .filter(|c| c.kind == CriticalKind::Minimum)
        .collect();
    let Some(well) = wells.get(opts.branch) else {
        return Vec::new();
    };
    let saddles: Vec<T> = crit
        .iter()
        .filter(|c| c.kind == CriticalKind::Maximum)
        .map(|c| c.w)
        .collect();
    let lo = well.w;
    let top = saddles.iter().copied().filter(|&s| s > lo).fold(lo, T::max);
    let hi = top + opts.eps_span;
    let target = -T::lit(n as f64);
    let levels = slice_levels(lo, hi, &saddles, opts.eps_samples);
    let f = |e: T| rotation_in_well(kappa, e, well.theta, p, &opts.tol).map(|x| x - target);
    let mut samples: Vec<(T, Option<T>)> = levels.iter().map(|&e| (e, f(e))).collect();
    // A sampled value nearest to zero between two farther ones may hide a
    // narrow excursion across zero (near a fold of the resonance curve).
    let mut extra = Vec::new();
    for w in samples.windows(3) {
        let [(a, Some(fa)), (_, Some(fm)), (c, Some(fc))] = *w else {
            continue;
        };
        let positive = fm > T::zero();
        if (fa > T::zero()) != positive
            || (fc > T::zero()) != positive
            || fm.abs() >= fa.abs()
            || fm.abs() >= fc.abs()
            || saddles.iter().any(|&s| s >= a && s <= c)
        {
            continue;
        }
        if let Some(x) = approach_zero(&f, a, c, positive) {
            extra.push((x, f(x)));
        }
    }
    samples.extend(extra);
    samples.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(core::cmp::Ordering::Equal));
    let (levels, values): (Vec<T>, Vec<Option<T>>) = samples.into_iter().unzip();
    let mut out = Vec::new();
    for i in 0..levels.len().saturating_sub(1) {
        let (a, b) = (levels[i], levels[i + 1]);
        let (Some(fa), Some(fb)) = (values[i], values[i + 1]) else {
            continue;
        };
        if (fa > T::zero()) == (fb > T::zero()) {
            continue;
        }
        if saddles.iter().any(|&s| s >= a && s <= b) {
            continue;
        }
        let g = |e: T| f(e).unwrap_or(T::nan());
        let Some(root) = bisect(g, a, b, T::lit(1e-15) * hi.abs().max(T::one())) else {
            continue;
        };
        let Some(res) = f(root) else { continue };
        if res.abs() <= opts.residual {
            out.push(ResonancePoint {
                kappa,
                eps: root,
                rotation: res + target,
            });
        } else {
            log::debug!(
                "discarding resonance candidate at kappa={} eps={}: residual {}",
                kappa.as_f64(),
                root.as_f64(),
                res.as_f64()
            );
        }
    }
    out
}

/// Samples the resonance curve `N(κ, ε) = −n` over the given values of `κ`.
/// Slices are processed in parallel; the result is ordered by `κ`, then `ε`.
/// `κ = 0` is skipped, since there `N ≡ 0` on the whole slice.
pub fn resonance_curve<T: Scalar>(
    n: i64,
    p: &Params<T>,
    kappas: &[T],
    opts: &ResonanceOptions<T>,
) -> Vec<ResonancePoint<T>> {
    kappas
        .par_iter()
        .map(|&k| resonance_on_slice(n, k, p, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Largest `κ` of the `N = 0` resonance curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaMax<T = f64> {
    pub kappa: T,
    pub eps: T,
    /// `N` at the returned point.
    pub rotation: T,
    /// `∂N/∂ε` at the returned point.
    pub slope: T,
}

fn n_left<T: Scalar>(kappa: T, eps: T, p: &Params<T>, tol: &Tolerances<T>) -> Option<T> {
    let comp = component(kappa, eps, 0, p).ok()?;
    if comp.is_degenerate(eps) {
        return None;
    }
    rotation_on(kappa, eps, &comp, p, tol).ok().map(|r| r.value)
}

/// Maximum over `ε` of `N` at fixed `κ` in the window `[a, b]`, refined by
/// bisection on a central difference of `N`.
fn max_over_eps<T: Scalar>(
    kappa: T,
    a: T,
    b: T,
    p: &Params<T>,
    tol: &Tolerances<T>,
) -> Option<(T, T)> {
    let n = 48;
    let grid: Vec<T> = (0..=n)
        .map(|i| a + (b - a) * T::of_usize(i) / T::of_usize(n))
        .collect();
    let vals: Vec<Option<T>> = grid.par_iter().map(|&e| n_left(kappa, e, p, tol)).collect();
    let (i, _) = vals
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(core::cmp::Ordering::Equal))?;
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(n)];
    let h = T::lit(1e-5);
    let slope = |e: T| match (n_left(kappa, e + h, p, tol), n_left(kappa, e - h, p, tol)) {
        (Some(x), Some(y)) => (x - y) / (T::lit(2.0) * h),
        _ => T::nan(),
    };
    let e = if slope(lo) > T::zero() && slope(hi) < T::zero() {
        bisect(slope, lo, hi, T::lit(1e-12))?
    } else {
        grid[i]
    };
    Some((e, n_left(kappa, e, p, tol)?))
}

/// Largest `κ` reached by the `N = 0` resonance curve, for
/// `α > 0`, `β² > 1 + α`. Past the cusp the maximum of `N` over `ε` decreases
/// with `κ`; `κ_max` is where it reaches zero, located by bisection in `κ`
/// with the maximum over `ε` recomputed on each slice.
pub fn kappa_max<T: Scalar>(p: &Params<T>) -> Option<KappaMax<T>> {
    let (kind, _) = diagram_type(p);
    if kind != DiagramType::C || p.alpha == T::zero() {
        return None;
    }
    let c = cusp(p)?;
    if c.kappa <= T::zero() {
        return None;
    }
    let tol = Tolerances::new(T::lit(1e-13), T::lit(1e-13));
    let window = T::lit(0.5);
    let peak = |k: T| max_over_eps(k, c.eps - window, c.eps + window, p, &tol);
    let step = c.kappa * T::lit(0.005);
    let mut lo = c.kappa * (T::one() + T::lit(1e-4));
    let first = peak(lo)?;
    if !(first.1 > T::zero()) {
        return None;
    }
    let mut hi = None;
    for i in 1..=200 {
        let k = lo + step * T::of_usize(i);
        match peak(k) {
            Some((_, v)) if v > T::zero() => {}
            Some(_) => {
                hi = Some(k);
                lo = k - step;
                break;
            }
            None => return None,
        }
    }
    let mut hi = hi?;
    for _ in 0..60 {
        if hi - lo <= T::lit(1e-11) {
            break;
        }
        let mid = (lo + hi) / T::lit(2.0);
        match peak(mid) {
            Some((_, v)) if v > T::zero() => lo = mid,
            _ => hi = mid,
        }
    }
    let kappa = (lo + hi) / T::lit(2.0);
    let (eps, rotation) = peak(kappa)?;
    let h = T::lit(1e-5);
    let slope =
        (n_left(kappa, eps + h, p, &tol)? - n_left(kappa, eps - h, p, &tol)?) / (T::lit(2.0) * h);
    Some(KappaMax {
        kappa,
        eps,
        rotation,
        slope,
    })
}
