//! Equations of motion.
//!
//! The full system evolves the body-frame angular velocity `ω` and vertical
//! `γ` under the rubber-rolling constraints (no slip at the contact point and
//! no spin about the vertical, i.e. `(ω, γ) = 0`):
//!
//! ```text
//! J ω̇ = −ω × Jω − r × (ω × ṙ) − γ × r + μ γ,    γ̇ = γ × ω,
//! J = I + ‖r‖² Id − r ⊗ r,    I = diag(1, 1, ν)/η,
//! ```
//!
//! with the multiplier `μ` fixed by `(ω̇, γ) = 0`. On the level set of the
//! linear integral `κ = J(θ) ω₃` the motion reduces to one degree of freedom
//! in the nutation angle `θ`.

use crate::error::{Error, Result};
use crate::geometry::{gamma_of, Ellipsoid, SurfaceEval, SurfaceProfile};
use crate::model::Params;
use crate::scalar::Scalar;
use crate::vec3::{Sym3, Vec3};

/// Body-frame angular velocity and vertical unit vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FullState<T = f64> {
    pub omega: Vec3<T>,
    pub gamma: Vec3<T>,
}

impl<T: Scalar> FullState<T> {
    pub fn new(omega: Vec3<T>, gamma: Vec3<T>) -> Self {
        Self { omega, gamma }
    }

    /// Packs the state as `(ω₁, ω₂, ω₃, γ₁, γ₂, γ₃)`.
    pub fn to_array(&self) -> [T; 6] {
        let (w, g) = (self.omega, self.gamma);
        [w.x, w.y, w.z, g.x, g.y, g.z]
    }

    pub fn from_array(a: &[T; 6]) -> Self {
        Self {
            omega: Vec3::new(a[0], a[1], a[2]),
            gamma: Vec3::new(a[3], a[4], a[5]),
        }
    }

    /// Checks `‖γ‖ = 1` and `(ω, γ) = 0` to `tol`.
    pub fn is_valid(&self, tol: T) -> bool {
        (self.gamma.norm() - T::one()).abs() <= tol && self.omega.dot(self.gamma).abs() <= tol
    }
}

/// Nutation angle and its rate for the one-degree-of-freedom system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedState<T = f64> {
    pub theta: T,
    pub p_theta: T,
}

impl<T: Scalar> ReducedState<T> {
    pub fn new(theta: T, p_theta: T) -> Self {
        Self { theta, p_theta }
    }
}

/// First integrals of the full system.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integrals<T = f64> {
    /// Geometric integral `(γ, γ)`.
    pub f0: T,
    /// Constraint integral `(ω, γ)`.
    pub f1: T,
    /// Linear integral `J(θ) ω₃`.
    pub kappa: T,
    /// Energy.
    pub eps: T,
}

/// The inertia-like tensor `I + ‖r‖² Id − r ⊗ r` of the rolling body.
pub fn contact_tensor<T: Scalar>(r: Vec3<T>, p: &Params<T>) -> Sym3<T> {
    let inv_eta = T::one() / p.eta;
    Sym3::diag(Vec3::new(inv_eta, inv_eta, p.nu * inv_eta))
        .add_scaled_identity_minus_outer(r.norm_sq(), r)
}

/// Right-hand side of the full system, evaluated without input checks.
/// Returns `None` only if the tensor is singular.
pub fn full_rhs_raw<T: Scalar, S: SurfaceProfile<T>>(
    omega: Vec3<T>,
    gamma: Vec3<T>,
    surface: &S,
) -> Option<(Vec3<T>, Vec3<T>)> {
    let r = surface.contact_vector(gamma);
    let gamma_dot = gamma.cross(omega);
    let r_dot = surface.contact_velocity(gamma, gamma_dot);
    let j = contact_tensor(r, surface.params());
    let f = omega.cross(j.mul_vec(omega)) + r.cross(omega.cross(r_dot)) + gamma.cross(r);
    let jinv_gamma = j.solve(gamma)?;
    let mu = f.dot(jinv_gamma) / gamma.dot(jinv_gamma);
    let omega_dot = j.solve(gamma * mu - f)?;
    Some((omega_dot, gamma_dot))
}

/// Right-hand side `(ω̇, γ̇)` of the full system for the ellipsoid.
pub fn full_rhs<T: Scalar>(s: &FullState<T>, p: &Params<T>) -> Result<(Vec3<T>, Vec3<T>)> {
    full_rhs_with(s, &Ellipsoid::new(*p))
}

/// Right-hand side `(ω̇, γ̇)` of the full system for any profile.
pub fn full_rhs_with<T: Scalar, S: SurfaceProfile<T>>(
    s: &FullState<T>,
    surface: &S,
) -> Result<(Vec3<T>, Vec3<T>)> {
    let n = s.gamma.norm();
    if !((n - T::one()).abs() <= T::lit(1e-9).max(T::eps() * T::lit(8.0))) {
        return Err(Error::NonUnitGamma(n.as_f64()));
    }
    full_rhs_raw(s.omega, s.gamma, surface).ok_or(Error::SingularTensor)
}

/// Generalized force of the reduced equation at rest, `G₀ = κ² cosθ/sin³θ − U′(θ)`.
/// Fixed points of the reduced system are its zeros.
#[inline]
pub fn reduced_force<T: Scalar>(theta: T, kappa: T, e: &SurfaceEval<T>) -> T {
    let centrifugal = if kappa == T::zero() {
        T::zero()
    } else {
        let (s, c) = theta.sin_cos();
        kappa * kappa * c / (s * s * s)
    };
    centrifugal - e.du
}

/// `θ̈` of the reduced system, evaluated without range checks.
#[inline]
pub fn reduced_accel<T: Scalar>(theta: T, p_theta: T, kappa: T, e: &SurfaceEval<T>) -> T {
    (reduced_force(theta, kappa, e) - e.db * p_theta * p_theta / T::lit(2.0)) / e.b
}

fn check_reduced_theta<T: Scalar>(theta: T, kappa: T) -> Result<()> {
    if kappa != T::zero() {
        let interior = theta > T::zero() && theta < T::PI();
        if !interior || theta.sin() == T::zero() {
            return Err(Error::PoleWithNonzeroKappa);
        }
    }
    Ok(())
}

/// Right-hand side `(θ̇, ṗ_θ)` of the reduced system. For `κ = 0` the
/// equation is regular at the poles and any `θ` is accepted.
pub fn reduced_rhs<T: Scalar>(s: &ReducedState<T>, kappa: T, p: &Params<T>) -> Result<(T, T)> {
    check_reduced_theta(s.theta, kappa)?;
    let e = Ellipsoid::new(*p).eval(s.theta);
    Ok((s.p_theta, reduced_accel(s.theta, s.p_theta, kappa, &e)))
}

/// Energy of the reduced system, `B p²/2 + κ²/(2 sin²θ) + U`.
pub fn reduced_energy<T: Scalar>(s: &ReducedState<T>, kappa: T, p: &Params<T>) -> T {
    let e = Ellipsoid::new(*p).eval(s.theta);
    e.b * s.p_theta * s.p_theta / T::lit(2.0) + effective_potential_from(s.theta, kappa, &e)
}

/// Effective potential `W(θ) = κ²/(2 sin²θ) + U(θ)`.
pub fn effective_potential<T: Scalar>(theta: T, kappa: T, p: &Params<T>) -> T {
    effective_potential_from(theta, kappa, &Ellipsoid::new(*p).eval(theta))
}

#[inline]
pub(crate) fn effective_potential_from<T: Scalar>(theta: T, kappa: T, e: &SurfaceEval<T>) -> T {
    if kappa == T::zero() {
        e.u
    } else {
        let s = theta.sin();
        kappa * kappa / (T::lit(2.0) * s * s) + e.u
    }
}

/// Evaluates the first integrals at a full state.
pub fn integrals<T: Scalar>(s: &FullState<T>, p: &Params<T>) -> Integrals<T> {
    integrals_with(s, &Ellipsoid::new(*p))
}

/// Evaluates the first integrals for any profile.
pub fn integrals_with<T: Scalar, S: SurfaceProfile<T>>(
    s: &FullState<T>,
    surface: &S,
) -> Integrals<T> {
    let (w, g) = (s.omega, s.gamma);
    let r = surface.contact_vector(g);
    let rg = r.dot(g);
    let j = contact_tensor(r, surface.params());
    Integrals {
        f0: g.dot(g),
        f1: w.dot(g),
        kappa: surface.j_of(g.z, rg) * w.z,
        eps: w.dot(j.mul_vec(w)) / T::lit(2.0) - rg,
    }
}

/// Density of the invariant measure of the full system, as a function of
/// `γ₃`: `ρ = (1/η + ‖r‖²) J(γ₃)`.
pub fn measure_density<T: Scalar>(gamma3: T, p: &Params<T>) -> Result<T> {
    if !(gamma3.abs() <= T::one()) {
        return Err(Error::Gamma3OutOfRange(gamma3.abs().as_f64()));
    }
    Ok(measure_density_raw(gamma3, p))
}

pub(crate) fn measure_density_raw<T: Scalar>(gamma3: T, p: &Params<T>) -> T {
    let one = T::one();
    let sin2 = (one - gamma3 * gamma3).max(T::zero());
    let b2 = p.beta * p.beta;
    let z = (b2 * sin2 + gamma3 * gamma3).sqrt();
    let q = gamma3 + p.alpha * z;
    let r2 = (b2 * b2 * sin2 + q * q) / (z * z);
    let w = z + p.alpha * gamma3;
    let j = ((gamma3 * gamma3 + p.nu * sin2) / p.eta + w * w).sqrt();
    (one / p.eta + r2) * j
}

/// Divergence of the weighted field `ρ(γ₃)·(ω̇, γ̇)` at `s`, by central
/// differences with step `h` in the ambient space, relative to the size of
/// the weighted field. Vanishes, up to discretization, for an invariant
/// density.
pub fn weighted_divergence<T: Scalar>(s: &FullState<T>, p: &Params<T>, h: T) -> Result<T> {
    let surface = Ellipsoid::new(*p);
    let weighted = |y: &[T; 6]| -> Result<[T; 6]> {
        let st = FullState::from_array(y);
        let (wd, gd) = full_rhs_raw(st.omega, st.gamma, &surface).ok_or(Error::SingularTensor)?;
        let rho = measure_density_raw(st.gamma.z, p);
        let f = FullState::new(wd, gd).to_array();
        Ok(f.map(|x| x * rho))
    };
    let y0 = s.to_array();
    let mut div = T::zero();
    for j in 0..6 {
        let (mut yp, mut ym) = (y0, y0);
        yp[j] = yp[j] + h;
        ym[j] = ym[j] - h;
        div = div + (weighted(&yp)?[j] - weighted(&ym)?[j]) / (T::lit(2.0) * h);
    }
    let size = weighted(&y0)?
        .iter()
        .fold(T::zero(), |a, &x| a + x * x)
        .sqrt();
    Ok(div.abs() / size.max(T::eps()))
}

/// Result of projecting a full state onto the reduced description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Reduction<T = f64> {
    pub state: ReducedState<T>,
    pub kappa: T,
    /// Proper-rotation angle, from `γ₁ = sinθ sinφ`, `γ₂ = sinθ cosφ`.
    pub phi: T,
    /// Instantaneous precession rate `ψ̇`.
    pub psi_rate: T,
}

/// Extracts `(θ, p_θ)`, `κ` and `φ` from a full state.
pub fn reduce<T: Scalar>(s: &FullState<T>, p: &Params<T>) -> Result<Reduction<T>> {
    let g = s.gamma.normalized();
    let theta = g.z.max(-T::one()).min(T::one()).acos();
    let sin = theta.sin();
    if !(sin.abs() > T::lit(1e-12)) {
        return Err(Error::PoleState);
    }
    let phi = g.x.atan2(g.y);
    let (sp, cp) = phi.sin_cos();
    let p_theta = s.omega.x * cp - s.omega.y * sp;
    let e = Ellipsoid::new(*p).eval(theta);
    let kappa = e.j * s.omega.z;
    let psi_rate = -kappa * theta.cos() / (e.j * sin * sin);
    Ok(Reduction {
        state: ReducedState::new(theta, p_theta),
        kappa,
        phi,
        psi_rate,
    })
}

/// Reconstructs the full state from `(θ, p_θ)`, `κ` and `φ`.
pub fn lift<T: Scalar>(
    r: &ReducedState<T>,
    kappa: T,
    phi: T,
    p: &Params<T>,
) -> Result<FullState<T>> {
    let (s, c) = r.theta.sin_cos();
    if !(s.abs() > T::lit(1e-12)) {
        return Err(Error::PoleState);
    }
    let e = Ellipsoid::new(*p).eval(r.theta);
    let w3 = kappa / e.j;
    let cot = c / s;
    let (sp, cp) = phi.sin_cos();
    let omega = Vec3::new(
        r.p_theta * cp - w3 * cot * sp,
        -r.p_theta * sp - w3 * cot * cp,
        w3,
    );
    Ok(FullState::new(omega, gamma_of(r.theta, phi)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BSign;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_body() -> Params {
        Params::new_unchecked(0.5, 3.0, 0.5, 0.5)
    }

    #[test]
    fn resting_on_a_vertex_is_an_equilibrium() {
        let s = FullState::new(Vec3::zero(), Vec3::e3());
        let (wd, gd) = full_rhs(&s, &reference_body()).unwrap();
        assert_eq!(gd, Vec3::zero());
        assert!(wd.max_abs() < 1e-15);
        let i = integrals(&s, &reference_body());
        assert_eq!((i.f0, i.f1, i.kappa), (1.0, 0.0, 0.0));
        assert_relative_eq!(i.eps, 1.5);
        let i = integrals(
            &FullState::new(Vec3::zero(), -Vec3::e3()),
            &reference_body(),
        );
        assert_relative_eq!(i.eps, 0.5);
    }

    #[test]
    fn resting_at_the_inclined_equilibrium() {
        // Root of cosθ(1 − β²) + αZ(θ) for α = 0.5, β = 3.
        let q = reference_body();
        let c = 1.5 / (8.0f64 * 8.25).sqrt();
        let s = FullState::new(Vec3::zero(), Vec3::new((1.0 - c * c).sqrt(), 0.0, c));
        let (wd, _) = full_rhs(&s, &q).unwrap();
        assert!(wd.max_abs() < 1e-13, "{wd:?}");
    }

    #[test]
    fn rhs_rejects_non_unit_gamma() {
        let s = FullState::new(Vec3::zero(), Vec3::new(0.0, 0.0, 1.1));
        assert!(matches!(
            full_rhs(&s, &reference_body()),
            Err(Error::NonUnitGamma(_))
        ));
    }

    #[test]
    fn reduced_rhs_examples() {
        let q = reference_body();
        let (_, a) = reduced_rhs(
            &ReducedState::new(core::f64::consts::FRAC_PI_2, 0.0),
            0.0,
            &q,
        )
        .unwrap();
        assert_relative_eq!(a, 0.5 / 11.25, max_relative = 1e-14);
        let sphere = Params::new_unchecked(0.0, 1.0, 1.0, 1.0);
        for i in 0..=10 {
            let th = -1.0 + 0.5 * i as f64;
            let (_, a) = reduced_rhs(&ReducedState::new(th, 0.0), 0.0, &sphere).unwrap();
            assert!(a.abs() < 1e-15);
        }
        assert_eq!(
            reduced_rhs(&ReducedState::new(0.0, 0.1), 0.3, &q),
            Err(Error::PoleWithNonzeroKappa)
        );
        assert!(reduced_rhs(&ReducedState::new(0.0, 0.1), 0.0, &q).is_ok());
    }

    #[test]
    fn lift_reduce_round_trip_and_conventions() {
        let q = reference_body();
        let f = lift(
            &ReducedState::new(core::f64::consts::FRAC_PI_2, 0.0),
            0.0,
            0.0,
            &q,
        )
        .unwrap();
        assert!(f.omega.max_abs() < 1e-16);
        assert!((f.gamma - Vec3::new(0.0, 1.0, 0.0)).max_abs() < 1e-16);
        let th0: f64 = 0.7;
        let red = reduce(
            &FullState::new(Vec3::zero(), Vec3::new(0.0, th0.sin(), th0.cos())),
            &q,
        )
        .unwrap();
        assert_eq!(red.phi, 0.0);
        assert!(reduce(&FullState::new(Vec3::zero(), Vec3::e3()), &q).is_err());
        assert!(lift(&ReducedState::new(0.0, 0.0), 0.0, 0.0, &q).is_err());
    }

    #[test]
    fn printed_b_sign_disagrees_with_full_energy() {
        let q = reference_body();
        let r = ReducedState::new(1.0, 0.4);
        let full = lift(&r, 0.6, 0.2, &q).unwrap();
        let eps = integrals(&full, &q).eps;
        let printed = Ellipsoid::with_b_sign(q, BSign::Printed).eval(1.0);
        let eps_printed = printed.b * 0.16 / 2.0 + 0.36 / (2.0 * 1f64.sin().powi(2)) + printed.u;
        assert_relative_eq!(eps, reduced_energy(&r, 0.6, &q), max_relative = 1e-13);
        assert!((eps - eps_printed).abs() > 1e-3);
    }

    fn params_strategy() -> impl Strategy<Value = Params> {
        (0.0f64..=1.0, 0.2f64..4.0, 0.05f64..=2.0, 0.1f64..5.0)
            .prop_map(|(a, b, n, e)| Params::new_unchecked(a, b, n, e))
    }

    proptest! {
        #[test]
        fn measure_density_is_invariant(
            q in params_strategy(), g in prop::array::uniform3(-1.0f64..1.0),
            w in prop::array::uniform3(-1.5f64..1.5),
        ) {
            let gamma = Vec3::from_array(g);
            prop_assume!(gamma.norm() > 0.1);
            let gamma = gamma.normalized();
            let omega = Vec3::from_array(w);
            let omega = omega - gamma * omega.dot(gamma);
            let d = weighted_divergence(&FullState::new(omega, gamma), &q, 1e-5).unwrap();
            prop_assert!(d < 1e-6, "relative divergence {d}");
        }

        #[test]
        fn lift_satisfies_constraints_and_inverts_reduce(
            q in params_strategy(), th in 0.05f64..3.09, pt in -2.0f64..2.0,
            k in -2.0f64..2.0, phi in -3.1f64..3.1,
        ) {
            let r = ReducedState::new(th, pt);
            let f = lift(&r, k, phi, &q).unwrap();
            prop_assert!(f.is_valid(1e-12));
            let back = reduce(&f, &q).unwrap();
            prop_assert!((back.state.theta - th).abs() < 1e-10);
            prop_assert!((back.state.p_theta - pt).abs() < 1e-10);
            prop_assert!((back.kappa - k).abs() < 1e-10 * k.abs().max(1.0));
            prop_assert!((back.phi - phi).abs() < 1e-10);
            let again = lift(&back.state, back.kappa, back.phi, &q).unwrap();
            prop_assert!((again.omega - f.omega).max_abs() <= 1e-12 * f.omega.max_abs().max(1.0) * 10.0);
        }

        #[test]
        fn energies_agree(q in params_strategy(), th in 0.05f64..3.09, pt in -2.0f64..2.0,
                          k in -2.0f64..2.0, phi in -3.1f64..3.1) {
            let r = ReducedState::new(th, pt);
            let f = lift(&r, k, phi, &q).unwrap();
            let i = integrals(&f, &q);
            let e = reduced_energy(&r, k, &q);
            prop_assert!((i.eps - e).abs() <= 1e-11 * e.abs().max(1.0));
            prop_assert!((i.kappa - k).abs() <= 1e-12 * k.abs().max(1.0));
        }

        #[test]
        fn constraint_is_preserved_by_the_field(q in params_strategy(), th in 0.05f64..3.09, pt in -2.0f64..2.0,
                                                k in -2.0f64..2.0, phi in -3.1f64..3.1) {
            let f = lift(&ReducedState::new(th, pt), k, phi, &q).unwrap();
            let (wd, gd) = full_rhs(&f, &q).unwrap();
            let d = wd.dot(f.gamma) + f.omega.dot(gd);
            prop_assert!(d.abs() <= 1e-12 * wd.max_abs().max(1.0));
        }

        #[test]
        fn reduced_field_matches_full_field(q in params_strategy(), th in 0.1f64..3.0, pt in -1.5f64..1.5,
                                            k in -1.5f64..1.5, phi in -3.1f64..3.1) {
            // θ̈ from the full system: θ = arccos γ₃, so θ̈ follows from γ̈₃.
            let f = lift(&ReducedState::new(th, pt), k, phi, &q).unwrap();
            let (wd, gd) = full_rhs(&f, &q).unwrap();
            let gdd = gd.cross(f.omega) + f.gamma.cross(wd);
            let (s, c) = th.sin_cos();
            let thetadot = -gd.z / s;
            let thetaddot = -(gdd.z + c * thetadot * thetadot) / s;
            let (td, pd) = reduced_rhs(&ReducedState::new(th, pt), k, &q).unwrap();
            prop_assert!((td - thetadot).abs() <= 1e-10 * pt.abs().max(1.0));
            prop_assert!((pd - thetaddot).abs() <= 1e-8 * pd.abs().max(1.0));
        }

        #[test]
        fn reversibility_of_the_field(q in params_strategy(), th in 0.1f64..3.0, pt in -1.5f64..1.5,
                                      k in -1.5f64..1.5, phi in -3.1f64..3.1) {
            let f = lift(&ReducedState::new(th, pt), k, phi, &q).unwrap();
            let (wd, gd) = full_rhs(&f, &q).unwrap();
            let (wd2, gd2) = full_rhs(&FullState::new(-f.omega, f.gamma), &q).unwrap();
            prop_assert!((wd - wd2).max_abs() <= 1e-12 * wd.max_abs().max(1.0));
            prop_assert!((gd + gd2).max_abs() <= 1e-15 * gd.max_abs().max(1.0));
        }

        #[test]
        fn measure_density_balanced_symmetry(beta in 0.2f64..4.0, nu in 0.05f64..2.0, eta in 0.1f64..5.0, g3 in 0.0f64..=1.0) {
            let q = Params::new_unchecked(0.0, beta, nu, eta);
            let a = measure_density(g3, &q).unwrap();
            let b = measure_density(-g3, &q).unwrap();
            prop_assert!((a - b).abs() <= 1e-13 * a);
        }
    }

    #[test]
    fn sphere_density_depends_only_on_j() {
        let q = Params::new_unchecked(0.0, 1.0, 0.5, 2.0);
        for &g3 in &[-1.0, -0.3, 0.0, 0.6, 1.0] {
            let j = ((g3 * g3 + 0.5 * (1.0 - g3 * g3)) / 2.0 + 1.0f64).sqrt();
            assert_relative_eq!(
                measure_density(g3, &q).unwrap(),
                1.5 * j,
                max_relative = 1e-14
            );
        }
        assert!(measure_density(1.5, &q).is_err());
    }
}
