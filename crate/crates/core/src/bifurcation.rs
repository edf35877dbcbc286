//! Fixed points of the reduced system, their images on the `(κ, ε)` plane
//! and the resulting bifurcation diagrams.
//!
//! With `A(θ) = cosθ/sin³θ`, the reduced system at rest has the generalized
//! force `G₀(θ; κ) = κ² A(θ) − U′(θ)`, the negative derivative of the
//! effective potential `W(θ; κ) = κ²/(2 sin²θ) + U(θ)`. Its zeros are
//! permanent rotations (the body rolls along a circle at constant
//! inclination); at `κ = 0` the poles are the vertical equilibria.

use crate::dynamics::{effective_potential_from, reduced_force, FullState};
use crate::error::{Error, Result};
use crate::geometry::{Ellipsoid, SurfaceEval, SurfaceProfile};
use crate::model::Params;
use crate::roots::{all_roots, bisect, bisect_newton};
use crate::scalar::Scalar;
use crate::vec3::Vec3;
use rayon::prelude::*;

fn surface<T: Scalar>(p: &Params<T>) -> Ellipsoid<T> {
    Ellipsoid::new(*p)
}

/// `G₀(θ; κ)`.
pub fn g0<T: Scalar>(theta: T, kappa: T, p: &Params<T>) -> T {
    reduced_force(theta, kappa, &surface(p).eval(theta))
}

/// `∂G₀/∂θ`, in closed form.
pub fn g0_prime<T: Scalar>(theta: T, kappa: T, p: &Params<T>) -> T {
    g0_prime_from(theta, kappa, &surface(p).eval(theta))
}

fn g0_prime_from<T: Scalar>(theta: T, kappa: T, e: &SurfaceEval<T>) -> T {
    let centrifugal = if kappa == T::zero() {
        T::zero()
    } else {
        let (s, c) = theta.sin_cos();
        let s2 = s * s;
        -kappa * kappa * (s2 + T::lit(3.0) * c * c) / (s2 * s2)
    };
    centrifugal - e.ddu
}

/// Effective potential `W(θ; κ)`.
pub fn effective_potential<T: Scalar>(theta: T, kappa: T, p: &Params<T>) -> T {
    effective_potential_from(theta, kappa, &surface(p).eval(theta))
}

/// Squared rolling rate of a permanent rotation at inclination `θ`,
/// `ω₀² = −η sin²θ (cosθ(1 − β²) + αZ) / (cosθ Z (η(Z + α cosθ)² + cos²θ + ν sin²θ))`.
/// May be negative, in which case no permanent rotation exists at `θ`.
pub fn omega0_sq<T: Scalar>(theta: T, p: &Params<T>) -> Result<T> {
    let (s, c) = theta.sin_cos();
    if s.abs() < T::lit(1e-12) || c.abs() < T::lit(1e-12) {
        return Err(Error::EquatorOrPole);
    }
    let z = surface(p).eval(theta).z;
    let w = z + p.alpha * c;
    let num = -p.eta * s * s * (c * (T::one() - p.beta * p.beta) + p.alpha * z);
    let den = c * z * (p.eta * w * w + c * c + p.nu * s * s);
    Ok(num / den)
}

/// Numerator factor `cosθ(1 − β²) + αZ(θ)` whose zero is the inclined
/// equilibrium.
pub fn equilibrium_residual<T: Scalar>(theta: T, p: &Params<T>) -> T {
    let c = theta.cos();
    c * (T::one() - p.beta * p.beta) + p.alpha * surface(p).eval(theta).z
}

/// Inclination `θ*` of the equilibrium in which the body rests tilted on
/// the plane, found by bisection on [`equilibrium_residual`]. Exists iff
/// `β² ≥ 1 + α` (with `cos θ* > 0`) or `β² ≤ 1 − α` (with `cos θ* < 0`),
/// excluding the sphere.
pub fn inclined_equilibrium<T: Scalar>(p: &Params<T>) -> Option<T> {
    let b2 = p.beta * p.beta;
    let one = T::one();
    let f = |th: T| equilibrium_residual(th, p);
    let half_pi = T::FRAC_PI_2();
    if p.alpha == T::zero() {
        return if b2 != one { Some(half_pi) } else { None };
    }
    let tol = T::lit(1e-15);
    if b2 >= one + p.alpha {
        bisect(f, T::zero(), half_pi, tol)
    } else if b2 <= one - p.alpha {
        bisect(f, half_pi, T::PI(), tol)
    } else {
        None
    }
}

/// Closed form of [`inclined_equilibrium`]:
/// `cos²θ* = α²β²/((1 − β²)(1 − β² − α²))`, `sign cos θ* = sign(β² − 1)`.
pub fn inclined_equilibrium_closed_form<T: Scalar>(p: &Params<T>) -> Option<T> {
    let one = T::one();
    let b2 = p.beta * p.beta;
    let a2 = p.alpha * p.alpha;
    if b2 == one {
        return None;
    }
    let c2 = a2 * b2 / ((one - b2) * (one - b2 - a2));
    if !(c2 >= T::zero() && c2 <= one) {
        return None;
    }
    let c = c2.sqrt() * (b2 - one).signum();
    Some(c.acos())
}

/// The variant `θ = arccos(αβ/sqrt((1 − β²)(1 + α² − β²)))` found in print.
/// It does not annul [`equilibrium_residual`]; it is kept for comparison.
pub fn printed_inclined_equilibrium<T: Scalar>(p: &Params<T>) -> Option<T> {
    let one = T::one();
    let b2 = p.beta * p.beta;
    let d = (one - b2) * (one + p.alpha * p.alpha - b2);
    if !(d > T::zero()) {
        return None;
    }
    let c = p.alpha * p.beta / d.sqrt();
    (c.abs() <= one).then(|| c.acos())
}

/// `κ²` along the permanent-rotation family, `sin⁴θ₀ ((β² − 1)/Z − α/cosθ₀)`.
pub fn sigma_theta_kappa_sq<T: Scalar>(theta0: T, p: &Params<T>) -> T {
    let (s, c) = theta0.sin_cos();
    let z = surface(p).eval(theta0).z;
    let s2 = s * s;
    s2 * s2 * ((p.beta * p.beta - T::one()) / z - p.alpha / c)
}

/// Energy along the permanent-rotation family,
/// `(3Z² − 1)/(2Z) + α(3cos²θ₀ − 1)/(2cosθ₀)`.
pub fn sigma_theta_energy<T: Scalar>(theta0: T, p: &Params<T>) -> T {
    let c = theta0.cos();
    let z = surface(p).eval(theta0).z;
    let (two, three) = (T::lit(2.0), T::lit(3.0));
    (three * z * z - T::one()) / (two * z) + p.alpha * (three * c * c - T::one()) / (two * c)
}

/// `(κ ≥ 0, ε)` of the permanent rotation at `θ₀`, if admissible.
pub fn sigma_theta_point<T: Scalar>(theta0: T, p: &Params<T>) -> Option<(T, T)> {
    let k2 = sigma_theta_kappa_sq(theta0, p);
    (k2 >= T::zero() && k2.is_finite()).then(|| (k2.sqrt(), sigma_theta_energy(theta0, p)))
}

/// Linear type of a fixed point of the reduced system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stability {
    /// `λ² < 0`: elliptic, stable.
    Center,
    /// `λ² > 0`: hyperbolic, unstable.
    Saddle,
    /// `λ² = 0` to rounding.
    Degenerate,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Center => "center",
            Stability::Saddle => "saddle",
            Stability::Degenerate => "degenerate",
        }
    }

    pub fn is_stable(self) -> bool {
        self == Stability::Center
    }
}

/// Linearization `λ² = G₀′(θ₀)/B(θ₀)` at a fixed point `(θ₀, 0)`.
pub fn linear_stability<T: Scalar>(theta0: T, kappa: T, p: &Params<T>) -> Result<(T, Stability)> {
    let e = surface(p).eval(theta0);
    let at_pole = kappa == T::zero() && theta0.sin().abs() < T::lit(1e-12);
    if !at_pole {
        if !(theta0 > T::zero() && theta0 < T::PI()) {
            return Err(Error::ThetaOutOfRange(theta0.as_f64()));
        }
        let g = reduced_force(theta0, kappa, &e);
        let s = theta0.sin();
        let scale = kappa * kappa * theta0.cos().abs() / (s * s * s) + e.du.abs() + T::one();
        if !(g.abs() <= T::lit(1e-8) * scale) {
            return Err(Error::NotFixedPoint(g.as_f64()));
        }
    }
    let lambda_sq = g0_prime_from(theta0, kappa, &e) / e.b;
    let kind = classify_lambda(lambda_sq);
    Ok((lambda_sq, kind))
}

fn classify_lambda<T: Scalar>(lambda_sq: T) -> Stability {
    if lambda_sq.abs() <= T::lit(1e-12) {
        Stability::Degenerate
    } else if lambda_sq < T::zero() {
        Stability::Center
    } else {
        Stability::Saddle
    }
}

/// A permanent rotation: rolling at constant inclination `θ₀`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PermanentRotation<T = f64> {
    pub theta0: T,
    /// Magnitude of the angular velocity.
    pub omega0: T,
    pub kappa: T,
    pub eps: T,
    /// Radius of the circle traced by the center of mass.
    pub rho_c: T,
    /// Radius of the circle traced by the contact point.
    pub rho_p: T,
    pub stability: Stability,
    pub lambda_sq: T,
    /// Body-frame state with `φ = 0`:
    /// `ω = ω₀ u`, `u` the unit vector along `γ × (e₃ × γ)`.
    pub state: FullState<T>,
}

/// Builds the permanent rotation at inclination `θ₀`.
pub fn permanent_rotation<T: Scalar>(theta0: T, p: &Params<T>) -> Result<PermanentRotation<T>> {
    let w2 = omega0_sq(theta0, p)?;
    if w2 < T::zero() {
        return Err(Error::Inadmissible(w2.as_f64()));
    }
    let omega0 = w2.sqrt();
    let (s, c) = theta0.sin_cos();
    let e = surface(p).eval(theta0);
    let gamma = Vec3::new(T::zero(), s, c);
    let u = (Vec3::e3() - gamma * c).normalized();
    let omega = u * omega0;
    let kappa = e.j * omega.z;
    let eps = kappa * kappa / (T::lit(2.0) * s * s) + e.u;
    let tan = s / c;
    let rho_c = e.z * tan + p.alpha * s;
    let rho_p = p.beta * p.beta * tan / e.z;
    let (lambda_sq, stability) = linear_stability(theta0, kappa, p)?;
    Ok(PermanentRotation {
        theta0,
        omega0,
        kappa,
        eps,
        rho_c: rho_c.abs(),
        rho_p: rho_p.abs(),
        stability,
        lambda_sq,
        state: FullState::new(omega, gamma),
    })
}

/// The five qualitative types of bifurcation diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DiagramType {
    /// `α > 0`, `β² < 1 − α`.
    A,
    /// `α > 0`, `1 − α < β² < 1 + α`.
    B,
    /// `α > 0`, `β² > 1 + α`.
    C,
    /// `α = 0`, `β² < 1`.
    D,
    /// `α = 0`, `β² > 1`.
    E,
}

impl DiagramType {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagramType::A => "a",
            DiagramType::B => "b",
            DiagramType::C => "c",
            DiagramType::D => "d",
            DiagramType::E => "e",
        }
    }
}

/// Region of `(α, β²)`; boundary values resolve to the type on the larger-`β²`
/// side and set the boundary flag.
pub fn diagram_type<T: Scalar>(p: &Params<T>) -> (DiagramType, bool) {
    let one = T::one();
    let b2 = p.beta * p.beta;
    let near = |x: T, y: T| (x - y).abs() <= T::lit(1e-12) * y.abs().max(one);
    if p.alpha == T::zero() {
        if near(b2, one) {
            (DiagramType::E, true)
        } else if b2 < one {
            (DiagramType::D, false)
        } else {
            (DiagramType::E, false)
        }
    } else if near(b2, one + p.alpha) {
        (DiagramType::C, true)
    } else if near(b2, one - p.alpha) {
        (DiagramType::B, true)
    } else if b2 < one - p.alpha {
        (DiagramType::A, false)
    } else if b2 < one + p.alpha {
        (DiagramType::B, false)
    } else {
        (DiagramType::C, false)
    }
}

/// Cusp of the permanent-rotation curve, where `G₀ = ∂G₀/∂θ = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cusp<T = f64> {
    pub theta: T,
    pub kappa: T,
    pub eps: T,
}

/// `H = F′A − FA′` with `F = −U′`, `A = cosθ/sin³θ`; the cusp is its root.
fn cusp_function<T: Scalar>(theta: T, p: &Params<T>) -> T {
    let e = surface(p).eval(theta);
    let (s, c) = theta.sin_cos();
    let s2 = s * s;
    let a = c / (s2 * s);
    let da = -(s2 + T::lit(3.0) * c * c) / (s2 * s2);
    -e.ddu * a + e.du * da
}

/// Finds the cusp. It exists for `α > 0`, `β² > 1 + α` and lies at the
/// maximum of `κ²` on `(0, θ*)`; at `β² = 1 + α` it is born at `θ = 0`.
pub fn cusp<T: Scalar>(p: &Params<T>) -> Option<Cusp<T>> {
    let one = T::one();
    if p.alpha == T::zero() {
        return None;
    }
    let b2 = p.beta * p.beta;
    if (b2 - (one + p.alpha)).abs() <= T::lit(1e-12) {
        return Some(Cusp {
            theta: T::zero(),
            kappa: T::zero(),
            eps: one + p.alpha,
        });
    }
    if b2 < one + p.alpha {
        return None;
    }
    let theta_star = inclined_equilibrium(p)?;
    let lo = theta_star * T::lit(1e-6);
    let hi = theta_star * (one - T::lit(1e-9));
    let roots = all_roots(|t| cusp_function(t, p), lo, hi, 2000, T::lit(1e-15));
    let theta = roots.into_iter().max_by(|a, b| {
        sigma_theta_kappa_sq(*a, p)
            .partial_cmp(&sigma_theta_kappa_sq(*b, p))
            .unwrap_or(core::cmp::Ordering::Equal)
    })?;
    let (kappa, eps) = sigma_theta_point(theta, p)?;
    Some(Cusp { theta, kappa, eps })
}

/// Critical value `κ_c = sqrt((β² − 1)/β)` above which equatorial rolling of
/// a balanced oblate body is stable.
pub fn equator_critical_kappa<T: Scalar>(p: &Params<T>) -> Option<T> {
    let b2 = p.beta * p.beta;
    (p.alpha == T::zero() && b2 > T::one()).then(|| ((b2 - T::one()) / p.beta).sqrt())
}

/// Labels of the curves of the diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CurveLabel {
    /// Permanent rotations with `θ₀ ∈ (0, θ_c)` (or `(0, π/2)` when balanced).
    SigmaS0,
    /// Permanent rotations with `θ₀ ∈ (θ_c, θ*]`.
    SigmaU,
    /// Permanent rotations with `θ₀ > π/2`.
    SigmaSPi,
    /// Rolling along the equator (`α = 0`).
    SigmaHalfPi,
}

impl CurveLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            CurveLabel::SigmaS0 => "sigma_s0",
            CurveLabel::SigmaU => "sigma_u",
            CurveLabel::SigmaSPi => "sigma_spi",
            CurveLabel::SigmaHalfPi => "sigma_half_pi",
        }
    }
}

/// One sample of a bifurcation curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveSample<T = f64> {
    pub theta0: T,
    pub kappa: T,
    pub eps: T,
    pub stability: Stability,
}

/// A sampled bifurcation curve with `κ ≥ 0`; the diagram is symmetric
/// under `κ ↦ −κ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve<T = f64> {
    pub label: CurveLabel,
    pub samples: Vec<CurveSample<T>>,
}

/// Sampling controls for curves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveOptions<T = f64> {
    /// Largest chord between consecutive samples on the `(κ, ε)` plane.
    pub max_chord: T,
    /// Curves are truncated where `κ` exceeds this value.
    pub kappa_limit: T,
}

impl<T: Scalar> Default for CurveOptions<T> {
    fn default() -> Self {
        Self {
            max_chord: T::lit(1e-3),
            kappa_limit: T::lit(3.0),
        }
    }
}

fn stability_or_degenerate<T: Scalar>(theta0: T, kappa: T, p: &Params<T>) -> Stability {
    linear_stability(theta0, kappa, p)
        .map(|x| x.1)
        .unwrap_or(Stability::Degenerate)
}

fn sample_at<T: Scalar>(theta0: T, p: &Params<T>) -> Option<CurveSample<T>> {
    let (kappa, eps) = sigma_theta_point(theta0, p)?;
    let stability = if theta0.sin().abs() < T::lit(1e-12) {
        stability_or_degenerate(theta0, T::zero(), p)
    } else {
        stability_or_degenerate(theta0, kappa, p)
    };
    Some(CurveSample {
        theta0,
        kappa,
        eps,
        stability,
    })
}

/// Adaptive sampling of the permanent-rotation family over `[a, b]`.
fn sample_branch<T: Scalar>(
    a: T,
    b: T,
    p: &Params<T>,
    opts: &CurveOptions<T>,
) -> Vec<CurveSample<T>> {
    let dist = |x: &CurveSample<T>, y: &CurveSample<T>| {
        ((x.kappa - y.kappa).powi(2) + (x.eps - y.eps).powi(2)).sqrt()
    };
    let n0 = 64;
    let grid: Vec<T> = (0..=n0)
        .map(|i| a + (b - a) * T::of_usize(i) / T::of_usize(n0))
        .collect();
    let mut out: Vec<CurveSample<T>> = Vec::new();
    for w in grid.windows(2) {
        let (Some(s0), Some(s1)) = (sample_at(w[0], p), sample_at(w[1], p)) else {
            continue;
        };
        if out.is_empty() {
            out.push(s0);
        }
        // Depth-first refinement with an explicit stack, emitting in order.
        let mut stack = vec![(s0, s1, 0u32)];
        while let Some((l, r, depth)) = stack.pop() {
            if dist(&l, &r) <= opts.max_chord || depth >= 40 {
                out.push(r);
                continue;
            }
            let mid = (l.theta0 + r.theta0) / T::lit(2.0);
            match sample_at(mid, p) {
                Some(m) => {
                    stack.push((m, r, depth + 1));
                    stack.push((l, m, depth + 1));
                }
                None => out.push(r),
            }
        }
    }
    out
}

/// `θ₀` on `(π/2, π)` side where `κ(θ₀)` equals `kappa_limit`, or `None` if
/// `κ` stays below it.
fn kappa_cutoff<T: Scalar>(lo: T, hi: T, p: &Params<T>, kappa_limit: T) -> Option<T> {
    let f = |t: T| sigma_theta_kappa_sq(t, p) - kappa_limit * kappa_limit;
    bisect(f, lo, hi, T::lit(1e-14))
}

/// Samples the permanent-rotation curves over the admissible ranges of `θ₀`:
/// `(π/2, θ*)` for type a, `(π/2, π)` for type b, `(0, θ*] ∪ (π/2, π)` for
/// type c and `(0, π/2) ∪ (π/2, π)` for type e.
pub fn sigma_theta_curve<T: Scalar>(p: &Params<T>, opts: &CurveOptions<T>) -> Vec<Curve<T>> {
    let (kind, _) = diagram_type(p);
    let half_pi = T::FRAC_PI_2();
    let pi = T::PI();
    let mut out = Vec::new();
    let upper_start = |end: T| -> Option<T> {
        // Just above π/2, κ → ∞ when α > 0; start where κ = kappa_limit.
        if p.alpha > T::zero() {
            let near = half_pi + T::lit(1e-9);
            if sigma_theta_kappa_sq(near, p) <= opts.kappa_limit * opts.kappa_limit {
                return Some(near);
            }
            kappa_cutoff(near, end, p, opts.kappa_limit)
        } else {
            Some(half_pi)
        }
    };
    match kind {
        DiagramType::A => {
            if let Some(ts) = inclined_equilibrium(p) {
                if let Some(start) = upper_start(ts) {
                    out.push(Curve {
                        label: CurveLabel::SigmaSPi,
                        samples: sample_branch(start, ts, p, opts),
                    });
                }
            }
        }
        DiagramType::B => {
            if let Some(start) = upper_start(pi) {
                out.push(Curve {
                    label: CurveLabel::SigmaSPi,
                    samples: sample_branch(start, pi, p, opts),
                });
            }
        }
        DiagramType::C => {
            let ts = inclined_equilibrium(p).unwrap_or(half_pi);
            let tc = cusp(p).map(|c| c.theta).unwrap_or(T::zero());
            if tc > T::zero() {
                out.push(Curve {
                    label: CurveLabel::SigmaS0,
                    samples: sample_branch(T::zero(), tc, p, opts),
                });
            }
            out.push(Curve {
                label: CurveLabel::SigmaU,
                samples: sample_branch(tc, ts, p, opts),
            });
            if let Some(start) = upper_start(pi) {
                out.push(Curve {
                    label: CurveLabel::SigmaSPi,
                    samples: sample_branch(start, pi, p, opts),
                });
            }
        }
        DiagramType::D => {}
        DiagramType::E => {
            if p.beta > T::one() {
                let h = half_pi * T::lit(1e-9);
                out.push(Curve {
                    label: CurveLabel::SigmaS0,
                    samples: sample_branch(T::zero(), half_pi - h, p, opts),
                });
                out.push(Curve {
                    label: CurveLabel::SigmaSPi,
                    samples: sample_branch(half_pi + h, pi, p, opts),
                });
            }
        }
    }
    for c in &mut out {
        c.samples
            .retain(|s| s.kappa <= opts.kappa_limit * (T::one() + T::lit(1e-12)));
    }
    out
}

/// Equatorial rolling of a balanced body: `ε = κ²/2 + β` on `κ ∈ [0, κ_max]`.
pub fn equator_parabola<T: Scalar>(p: &Params<T>, kappa_max: T, n: usize) -> Result<Curve<T>> {
    if p.alpha != T::zero() {
        return Err(Error::RequiresBalanced);
    }
    let n = n.max(1);
    let half_pi = T::FRAC_PI_2();
    let samples = (0..=n)
        .map(|i| {
            let kappa = kappa_max * T::of_usize(i) / T::of_usize(n);
            CurveSample {
                theta0: half_pi,
                kappa,
                eps: kappa * kappa / T::lit(2.0) + p.beta,
                stability: stability_or_degenerate(half_pi, kappa, p),
            }
        })
        .collect();
    Ok(Curve {
        label: CurveLabel::SigmaHalfPi,
        samples,
    })
}

/// An equilibrium (vertical rest position) on the diagram.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagramPoint<T = f64> {
    pub label: &'static str,
    pub kappa: T,
    pub eps: T,
    /// Not the endpoint of any curve.
    pub isolated: bool,
    pub stable: bool,
}

/// The bifurcation diagram on the `(κ, ε)` plane.
#[derive(Clone, Debug, PartialEq)]
pub struct BifurcationDiagram<T = f64> {
    pub params: Params<T>,
    pub diagram_type: DiagramType,
    /// Parameters lie on a boundary between two types.
    pub boundary: bool,
    pub curves: Vec<Curve<T>>,
    pub points: Vec<DiagramPoint<T>>,
    pub cusp: Option<Cusp<T>>,
    /// Some `(κ, ε)` has a level set with two connected components.
    pub two_component_region: bool,
    /// Lower boundary of the region of possible motions, `ε = min_θ W(θ; κ)`,
    /// sampled on `κ ≥ 0`.
    pub rpm_boundary: Vec<(T, T)>,
}

/// Assembles the complete diagram.
pub fn diagram<T: Scalar>(p: &Params<T>, opts: &CurveOptions<T>) -> BifurcationDiagram<T> {
    let (diagram_type, boundary) = diagram_type(p);
    let one = T::one();
    let b2 = p.beta * p.beta;
    let mut curves = sigma_theta_curve(p, opts);
    if p.alpha == T::zero() {
        if let Ok(c) = equator_parabola(p, opts.kappa_limit, 600) {
            curves.push(c);
        }
    }
    let points = vec![
        DiagramPoint {
            label: "sigma_0",
            kappa: T::zero(),
            eps: one + p.alpha,
            isolated: b2 < one + p.alpha,
            stable: stability_or_degenerate(T::zero(), T::zero(), p).is_stable(),
        },
        DiagramPoint {
            label: "sigma_pi",
            kappa: T::zero(),
            eps: one - p.alpha,
            isolated: b2 < one - p.alpha,
            stable: stability_or_degenerate(T::PI(), T::zero(), p).is_stable(),
        },
    ];
    let n = 60usize;
    let kappas: Vec<T> = (0..=n)
        .map(|i| opts.kappa_limit * T::of_usize(i) / T::of_usize(n))
        .collect();
    let scan: Vec<(T, usize)> = kappas
        .par_iter()
        .map(|&k| {
            let cps = critical_points(k, p);
            let minima = cps
                .iter()
                .filter(|c| c.kind == CriticalKind::Minimum)
                .count();
            let wmin = cps
                .iter()
                .filter(|c| c.kind == CriticalKind::Minimum)
                .map(|c| c.w)
                .fold(T::infinity(), |a, b| a.min(b));
            (wmin, minima)
        })
        .collect();
    let two_component_region = scan.iter().any(|&(_, m)| m >= 2);
    let rpm_boundary = kappas
        .iter()
        .zip(scan.iter())
        .map(|(&k, &(w, _))| (k, w))
        .collect();
    BifurcationDiagram {
        params: *p,
        diagram_type,
        boundary,
        curves,
        points,
        cusp: cusp(p),
        two_component_region,
        rpm_boundary,
    }
}

/// Kind of critical point of the effective potential.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CriticalKind {
    Minimum,
    Maximum,
}

/// A critical point of `W(θ; κ)`, i.e. a fixed point of the reduced system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint<T = f64> {
    pub theta: T,
    pub w: T,
    pub kind: CriticalKind,
}

fn grid_bounds<T: Scalar>(kappa: T, p: &Params<T>) -> (T, T) {
    // Below θ_a the centrifugal term alone exceeds every level of interest;
    // `U ≤ β + 1`, so `W > 4(β + 2)` there.
    let cap = T::lit(2.0) * (p.beta + T::lit(2.0));
    let s = (kappa.abs() / (T::lit(2.0) * cap).sqrt()).min(T::one());
    let theta_a = T::lit(0.5) * s.asin();
    (theta_a, T::PI() - theta_a)
}

/// Fixed points of the reduced system at `κ`: the critical points of `W` on
/// `(0, π)`, plus the poles when `κ = 0`. Sorted by `θ`.
pub fn critical_points<T: Scalar>(kappa: T, p: &Params<T>) -> Vec<CriticalPoint<T>> {
    let surf = surface(p);
    let pole_mode = kappa == T::zero();
    let (a, b) = if pole_mode {
        (T::zero(), T::PI())
    } else {
        grid_bounds(kappa, p)
    };
    let g = |t: T| reduced_force(t, kappa, &surf.eval(t));
    let tol = T::lit(1e-15);
    let mut thetas = Vec::new();
    if pole_mode {
        thetas.push(T::zero());
        // Skip the poles themselves, where G₀ vanishes identically.
        let d = T::lit(1e-7);
        for r in all_roots(g, a + d, b - d, 4000, tol) {
            thetas.push(r);
        }
        thetas.push(T::PI());
    } else {
        thetas = all_roots(g, a, b, 4000, tol);
    }
    thetas
        .into_iter()
        .map(|t| {
            let e = surf.eval(t);
            let curv = -g0_prime_from(t, kappa, &e);
            let kind = if curv > T::zero() {
                CriticalKind::Minimum
            } else if curv < T::zero() {
                CriticalKind::Maximum
            } else {
                // Degenerate: decide by neighbouring values.
                let h = T::lit(1e-4);
                let w0 = effective_potential_from(t, kappa, &e);
                let wl = effective_potential_from(t - h, kappa, &surf.eval(t - h));
                if wl >= w0 {
                    CriticalKind::Minimum
                } else {
                    CriticalKind::Maximum
                }
            };
            CriticalPoint {
                theta: t,
                w: effective_potential_from(t, kappa, &e),
                kind,
            }
        })
        .collect()
}

/// How a component of a level set sits relative to the poles.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentKind {
    /// `θ` oscillates inside `(0, π)`.
    Interior,
    /// `κ = 0`: the oscillation passes through `θ = 0`; `lo < 0` in the
    /// extended chart.
    ThroughNorthPole,
    /// `κ = 0`: the oscillation passes through `θ = π`; `hi > π`.
    ThroughSouthPole,
    /// `κ = 0`: `θ` runs through both poles without turning.
    FullCircle,
}

/// One connected component of `{θ : W(θ; κ) ≤ ε}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval<T = f64> {
    /// Lower turning point (extended chart for pole passages).
    pub lo: T,
    /// Upper turning point.
    pub hi: T,
    pub kind: ComponentKind,
    /// Location and value of the minimum of `W` on the component.
    pub theta_at_min: T,
    pub w_min: T,
}

impl<T: Scalar> Interval<T> {
    /// The component has collapsed onto a fixed point.
    pub fn is_degenerate(&self, eps: T) -> bool {
        self.kind != ComponentKind::FullCircle
            && (eps - self.w_min) <= T::lit(1e-11) * eps.abs().max(T::one())
    }
}

/// Connected components of a level set of the reduced system.
#[derive(Clone, Debug, PartialEq)]
pub struct Components<T = f64> {
    pub intervals: Vec<Interval<T>>,
    /// Critical points of `W` at this `κ`.
    pub critical: Vec<CriticalPoint<T>>,
}

impl<T: Scalar> Components<T> {
    pub fn count(&self) -> usize {
        self.intervals.len()
    }
}

/// Counts and locates the components of `{θ : κ²/(2 sin²θ) + U(θ) ≤ ε}`.
pub fn connected_components<T: Scalar>(kappa: T, eps: T, p: &Params<T>) -> Components<T> {
    let surf = surface(p);
    let critical = critical_points(kappa, p);
    let pole_mode = kappa == T::zero();
    let w = |t: T| effective_potential_from(t, kappa, &surf.eval(t));
    let dw = |t: T| -reduced_force(t, kappa, &surf.eval(t));
    let (a, b) = if pole_mode {
        (T::zero(), T::PI())
    } else {
        grid_bounds(kappa, p)
    };
    // Monotone pieces between consecutive critical points.
    let mut knots = vec![a];
    knots.extend(critical.iter().map(|c| c.theta).filter(|&t| t > a && t < b));
    knots.push(b);
    let deg_tol = T::lit(1e-11) * eps.abs().max(T::one());
    let mut raw: Vec<(T, T)> = Vec::new();
    let mut open: Option<T> = None;
    for win in knots.windows(2) {
        let (x0, x1) = (win[0], win[1]);
        let (f0, f1) = (w(x0) - eps, w(x1) - eps);
        if open.is_none() && f0 <= T::zero() {
            open = Some(x0);
        }
        if (f0 <= T::zero()) != (f1 <= T::zero()) {
            let r = bisect_newton(|t| w(t) - eps, dw, x0, x1, T::lit(1e-14)).unwrap_or(x0);
            if f0 <= T::zero() {
                raw.push((open.take().unwrap_or(x0), r));
            } else {
                open = Some(r);
            }
        }
    }
    if let Some(lo) = open {
        raw.push((lo, b));
    }
    // Fixed points exactly at the level form degenerate components.
    for c in critical.iter().filter(|c| c.kind == CriticalKind::Minimum) {
        if (c.w - eps).abs() <= deg_tol && !raw.iter().any(|&(l, h)| c.theta >= l && c.theta <= h) {
            raw.push((c.theta, c.theta));
        }
    }
    raw.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(core::cmp::Ordering::Equal));

    let pi = T::PI();
    let min_on = |lo: T, hi: T| -> (T, T) {
        critical
            .iter()
            .filter(|c| c.kind == CriticalKind::Minimum && c.theta >= lo && c.theta <= hi)
            .map(|c| (c.theta, c.w))
            .fold(
                (lo, T::infinity()),
                |acc, x| if x.1 < acc.1 { x } else { acc },
            )
    };
    let intervals = raw
        .into_iter()
        .map(|(lo, hi)| {
            let (theta_at_min, mut w_min) = min_on(lo, hi);
            if !w_min.is_finite() {
                w_min = w(lo).min(w(hi));
            }
            let touches_north = pole_mode && lo <= T::zero();
            let touches_south = pole_mode && hi >= pi;
            let (lo2, hi2, kind) = match (touches_north, touches_south) {
                (true, true) => (T::zero(), T::lit(2.0) * pi, ComponentKind::FullCircle),
                (true, false) => (-hi, hi, ComponentKind::ThroughNorthPole),
                (false, true) => (lo, T::lit(2.0) * pi - lo, ComponentKind::ThroughSouthPole),
                (false, false) => (lo, hi, ComponentKind::Interior),
            };
            Interval {
                lo: lo2,
                hi: hi2,
                kind,
                theta_at_min,
                w_min,
            }
        })
        .collect();
    Components {
        intervals,
        critical,
    }
}

/// Index of the component containing `θ` (physical chart), if any.
pub fn branch_of<T: Scalar>(theta: T, kappa: T, eps: T, p: &Params<T>) -> Option<usize> {
    let comps = connected_components(kappa, eps, p);
    let slack = T::lit(1e-9);
    comps.intervals.iter().position(|iv| match iv.kind {
        ComponentKind::Interior => theta >= iv.lo - slack && theta <= iv.hi + slack,
        ComponentKind::ThroughNorthPole => theta.abs() <= iv.hi + slack,
        ComponentKind::ThroughSouthPole => theta >= iv.lo - slack,
        ComponentKind::FullCircle => true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn q(alpha: f64, beta: f64) -> Params {
        Params::new_unchecked(alpha, beta, 0.5, 0.5)
    }

    #[test]
    fn omega0_examples() {
        for i in 1..10 {
            let th = 0.3 * i as f64;
            if (th - core::f64::consts::FRAC_PI_2).abs() > 1e-3 {
                assert!(
                    omega0_sq(th, &Params::new_unchecked(0.0, 1.0, 1.0, 1.0))
                        .unwrap()
                        .abs()
                        < 1e-16
                );
            }
        }
        let p = q(0.5, 3.0);
        let ts = inclined_equilibrium(&p).unwrap();
        assert!(omega0_sq(ts, &p).unwrap().abs() < 1e-12);
        assert!(omega0_sq(core::f64::consts::FRAC_PI_3, &p).unwrap() > 0.0);
        assert!(omega0_sq(0.0, &p).is_err());
        assert!(omega0_sq(core::f64::consts::FRAC_PI_2, &p).is_err());
    }

    #[test]
    fn inclined_equilibrium_examples() {
        let p = q(0.5, 3.0);
        let ts = inclined_equilibrium(&p).unwrap();
        assert_relative_eq!(ts.cos(), 1.5 / (8.0f64 * 8.25).sqrt(), max_relative = 1e-12);
        assert!(equilibrium_residual(ts, &p).abs() < 1e-12);
        assert_relative_eq!(
            inclined_equilibrium_closed_form(&p).unwrap(),
            ts,
            max_relative = 1e-12
        );
        let p = q(0.5, 0.5);
        let ts = inclined_equilibrium(&p).unwrap();
        assert_relative_eq!(
            ts.cos(),
            -0.25 / (0.75f64 * 0.5).sqrt(),
            max_relative = 1e-12
        );
        assert_relative_eq!(
            inclined_equilibrium_closed_form(&p).unwrap(),
            ts,
            max_relative = 1e-12
        );
        assert_eq!(
            inclined_equilibrium(&q(0.0, 1.5)),
            Some(core::f64::consts::FRAC_PI_2)
        );
        assert_eq!(inclined_equilibrium(&q(0.5, 1.1)), None);
        // The printed variant leaves a residual of about −0.05.
        let printed = printed_inclined_equilibrium(&q(0.5, 3.0)).unwrap();
        let r = equilibrium_residual(printed, &q(0.5, 3.0));
        assert!(r < -0.04 && r > -0.06, "{r}");
    }

    #[test]
    fn permanent_rotation_radii() {
        let p = q(0.5, 3.0);
        let pr = permanent_rotation(core::f64::consts::FRAC_PI_3, &p).unwrap();
        let s3 = 3f64.sqrt();
        assert_relative_eq!(pr.rho_c, 7f64.sqrt() * s3 + 0.25 * s3, max_relative = 1e-12);
        assert_relative_eq!(pr.rho_c, 5.0156, max_relative = 1e-4);
        assert_relative_eq!(pr.rho_p, 9.0 * s3 / 7f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(
            pr.kappa.powi(2),
            sigma_theta_kappa_sq(core::f64::consts::FRAC_PI_3, &p),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            pr.eps,
            sigma_theta_energy(core::f64::consts::FRAC_PI_3, &p),
            max_relative = 1e-10
        );
        assert!(pr.state.is_valid(1e-14));
        let small = permanent_rotation(1e-4, &p).unwrap();
        assert!(small.rho_c < 1e-3 && small.rho_p < 1e-2);
        let wide = permanent_rotation(core::f64::consts::FRAC_PI_2 + 1e-6, &p).unwrap();
        assert!(wide.rho_c > 1e5);
        assert!(matches!(
            permanent_rotation(1.4, &p),
            Err(Error::Inadmissible(_))
        ));
    }

    #[test]
    fn vertical_equilibria_stability() {
        let p = q(0.5, 1.1);
        assert_eq!(
            linear_stability(core::f64::consts::PI, 0.0, &p).unwrap().1,
            Stability::Center
        );
        assert_eq!(linear_stability(0.0, 0.0, &p).unwrap().1, Stability::Saddle);
        assert_relative_eq!(g0_prime(0.0, 0.0, &p), 1.5 - 1.21, max_relative = 1e-12);
        assert!(matches!(
            linear_stability(1.0, 0.0, &p),
            Err(Error::NotFixedPoint(_))
        ));
    }

    #[test]
    fn equator_stability_threshold() {
        let p = q(0.0, 1.5);
        let kc = equator_critical_kappa(&p).unwrap();
        assert_relative_eq!(kc, (1.25f64 / 1.5).sqrt(), max_relative = 1e-15);
        let half = core::f64::consts::FRAC_PI_2;
        assert_eq!(
            linear_stability(half, kc * 1.01, &p).unwrap().1,
            Stability::Center
        );
        assert_eq!(
            linear_stability(half, kc * 0.99, &p).unwrap().1,
            Stability::Saddle
        );
        assert_eq!(equator_critical_kappa(&q(0.5, 1.5)), None);
    }

    #[test]
    fn cusp_at_the_maximum_of_kappa() {
        let p = q(0.5, 3.0);
        let c = cusp(&p).unwrap();
        let ts = inclined_equilibrium(&p).unwrap();
        assert!(c.theta > 0.0 && c.theta < ts);
        let k2 = c.kappa * c.kappa;
        assert!(g0(c.theta, c.kappa, &p).abs() < 1e-10);
        assert!(g0_prime(c.theta, c.kappa, &p).abs() < 1e-10);
        assert!(sigma_theta_kappa_sq(c.theta - 1e-3, &p) < k2);
        assert!(sigma_theta_kappa_sq(c.theta + 1e-3, &p) < k2);
        assert_eq!(
            linear_stability(
                c.theta * 0.9,
                sigma_theta_point(c.theta * 0.9, &p).unwrap().0,
                &p
            )
            .unwrap()
            .1,
            Stability::Center
        );
        let after = c.theta + 0.5 * (ts - c.theta);
        assert_eq!(
            linear_stability(after, sigma_theta_point(after, &p).unwrap().0, &p)
                .unwrap()
                .1,
            Stability::Saddle
        );
        assert!(cusp(&q(0.0, 1.5)).is_none());
        assert!(cusp(&q(0.5, 1.1)).is_none());
        let born = cusp(&Params::new_unchecked(0.5, 1.5f64.sqrt(), 0.5, 0.5)).unwrap();
        assert_eq!(born.theta, 0.0);
    }

    #[test]
    fn diagram_types() {
        let t = |a, b| diagram_type(&q(a, b));
        assert_eq!(t(0.5, 0.5), (DiagramType::A, false));
        assert_eq!(t(0.5, 1.1), (DiagramType::B, false));
        assert_eq!(t(0.5, 3.0), (DiagramType::C, false));
        assert_eq!(t(0.0, 0.5), (DiagramType::D, false));
        assert_eq!(t(0.0, 1.5), (DiagramType::E, false));
        assert_eq!(t(0.0, 1.0), (DiagramType::E, true));
        assert_eq!(t(0.5, 1.5f64.sqrt()), (DiagramType::C, true));
        assert_eq!(t(0.5, 0.5f64.sqrt()), (DiagramType::B, true));
    }

    #[test]
    fn curve_endpoints_and_ranges() {
        let p = q(0.5, 3.0);
        let (k, e) = sigma_theta_point(1e-5, &p).unwrap();
        assert!(k < 1e-6 && (e - 1.5).abs() < 1e-6);
        let (k, e) = sigma_theta_point(core::f64::consts::PI - 1e-5, &p).unwrap();
        assert!(k < 1e-6 && (e - 0.5).abs() < 1e-6);
        let curves = sigma_theta_curve(&q(0.5, 0.5), &CurveOptions::default());
        assert_eq!(curves.len(), 1);
        let ts = inclined_equilibrium(&q(0.5, 0.5)).unwrap();
        assert!(curves[0]
            .samples
            .iter()
            .all(|s| s.theta0 > core::f64::consts::FRAC_PI_2 && s.theta0 <= ts));
    }

    #[test]
    fn diagram_contents() {
        let d = diagram(
            &q(0.5, 3.0),
            &CurveOptions {
                max_chord: 1e-2,
                kappa_limit: 2.0,
            },
        );
        assert_eq!(d.diagram_type, DiagramType::C);
        assert!(d.two_component_region);
        assert!(d.curves.iter().any(|c| c.label == CurveLabel::SigmaU));
        assert!(d.cusp.is_some());
        let s0 = d.points.iter().find(|x| x.label == "sigma_0").unwrap();
        assert!(s0.stable && !s0.isolated);
        for c in &d.curves {
            for w in c.samples.windows(2) {
                let chord =
                    ((w[1].kappa - w[0].kappa).powi(2) + (w[1].eps - w[0].eps).powi(2)).sqrt();
                assert!(chord <= 1e-2 + 1e-12, "{:?} {chord}", c.label);
            }
        }
        let d = diagram(&q(0.0, 0.5), &CurveOptions::default());
        assert_eq!(d.curves.len(), 1);
        assert!(d.points.iter().all(|x| x.isolated && !x.stable));
        let e = diagram(&q(0.0, 1.5), &CurveOptions::default());
        assert!(e.two_component_region);
        assert!(e.points.iter().all(|x| !x.isolated && x.stable));
    }

    #[test]
    fn components_of_level_sets() {
        let p = q(0.5, 3.0);
        assert_eq!(connected_components(0.5, 1.0, &p).count(), 0);
        // Between σ_s0 and σ_u at κ = 0.5 there are two tori.
        let cps = critical_points(0.5, &p);
        assert_eq!(cps.len(), 3);
        let level = 0.5 * (cps[0].w + cps[1].w);
        let c = connected_components(0.5, level, &p);
        assert_eq!(c.count(), 2);
        assert!(c.intervals[0].hi < cps[1].theta && c.intervals[1].lo > cps[1].theta);
        // κ = 0 above the inclined-equilibrium level: rolling over the poles.
        let c = connected_components(0.0, 3.2, &p);
        assert_eq!(c.count(), 1);
        assert_eq!(c.intervals[0].kind, ComponentKind::FullCircle);
        let c = connected_components(0.0, 2.0, &p);
        assert_eq!(c.count(), 2);
        assert_eq!(c.intervals[0].kind, ComponentKind::ThroughNorthPole);
        assert_eq!(c.intervals[1].kind, ComponentKind::ThroughSouthPole);
        assert_eq!(branch_of(0.1, 0.0, 2.0, &p), Some(0));
        assert_eq!(branch_of(3.0, 0.0, 2.0, &p), Some(1));
    }

    proptest! {
        #[test]
        fn curve_samples_are_fixed_points(a in 0.05f64..0.95, b in 0.2f64..3.5, t in 0.02f64..3.12) {
            let p = q(a, b);
            if let Some((k, e)) = sigma_theta_point(t, &p) {
                if (t - core::f64::consts::FRAC_PI_2).abs() > 1e-3 {
                    let scale = k * k * (t.cos() / t.sin().powi(3)).abs() + 1.0;
                    prop_assert!(g0(t, k, &p).abs() <= 1e-10 * scale);
                    let w = effective_potential(t, k, &p);
                    prop_assert!((w - e).abs() <= 1e-12 * w.abs().max(1.0) * 10.0);
                }
            }
        }

        #[test]
        fn kappa_sq_is_eliminated_from_g0(a in 0.0f64..1.0, b in 0.2f64..3.5, t in 0.02f64..3.12) {
            prop_assume!((t - core::f64::consts::FRAC_PI_2).abs() > 1e-3);
            let p = q(a, b);
            let e = surface(&p).eval(t);
            let (s, c) = t.sin_cos();
            let from_g0 = e.du * s.powi(3) / c;
            let k2 = sigma_theta_kappa_sq(t, &p);
            prop_assert!((k2 - from_g0).abs() <= 1e-12 * k2.abs().max(1.0));
        }

        #[test]
        fn g0_prime_matches_finite_difference(a in 0.0f64..1.0, b in 0.2f64..3.5, t in 0.1f64..3.0, k in 0.0f64..2.0) {
            let p = q(a, b);
            let h = 1e-5;
            let fd = (g0(t + h, k, &p) - g0(t - h, k, &p)) / (2.0 * h);
            let an = g0_prime(t, k, &p);
            prop_assert!((fd - an).abs() <= 1e-6 * an.abs().max(1.0));
        }

        #[test]
        fn balanced_diagram_is_symmetric(b in 1.05f64..3.5, t in 0.05f64..1.5) {
            let p = q(0.0, b);
            let (k1, e1) = sigma_theta_point(t, &p).unwrap();
            let (k2, e2) = sigma_theta_point(core::f64::consts::PI - t, &p).unwrap();
            prop_assert!((k1 - k2).abs() <= 1e-12 * k1.max(1.0));
            prop_assert!((e1 - e2).abs() <= 1e-12 * e1.abs().max(1.0));
        }
    }
}
