//! Surface functions of the ellipsoid of revolution.
//!
//! With `γ` the vertical unit vector in the body frame and `θ` the angle
//! between `γ` and the symmetry axis, the contact vector (from the center of
//! mass to the contact point, in units of `b3`) is
//! `r(γ) = −Bγ/sqrt(γ·Bγ) − α e₃` with `B = diag(β², β², 1)`.
//! The reduced one-degree-of-freedom equations need, as functions of `θ`,
//! the height `Z` of the geometric center, the potential `U`, the effective
//! inertia coefficient `B` and the coefficient `J` of the linear integral.

use crate::error::{Error, Result};
use crate::model::Params;
use crate::scalar::Scalar;
use crate::vec3::Vec3;

/// Which cross term to use inside the effective inertia coefficient `B(θ)`.
///
/// `Derived` uses `(cosθ + αZ)²`, which is what `B − 1/η = ‖r‖²` forces.
/// `Printed` uses `(αZ − cosθ)²`, a variant circulating in the literature; it
/// is kept only so its inconsistency with the full equations can be shown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BSign {
    Derived,
    Printed,
}

impl Default for BSign {
    fn default() -> Self {
        if cfg!(feature = "printed-b-sign") {
            BSign::Printed
        } else {
            BSign::Derived
        }
    }
}

impl core::str::FromStr for BSign {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derived" => Ok(BSign::Derived),
            "printed" | "paper" => Ok(BSign::Printed),
            other => Err(Error::Config(format!(
                "unknown B sign `{other}` (expected derived|printed)"
            ))),
        }
    }
}

/// Surface functions and their `θ`-derivatives at one inclination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceEval<T> {
    /// Height of the geometric center above the plane.
    pub z: T,
    /// Potential energy `α cosθ + Z`.
    pub u: T,
    /// Effective inertia coefficient of the reduced equation.
    pub b: T,
    /// Coefficient of the linear integral, `κ = J ω₃`.
    pub j: T,
    pub dz: T,
    pub du: T,
    pub db: T,
    pub dj: T,
    /// Second derivative of the potential (needed for linear stability).
    pub ddu: T,
}

/// A body-of-revolution surface seen through the quantities the reduced
/// dynamics needs. The ellipsoid is the shipped implementation.
pub trait SurfaceProfile<T: Scalar>: Send + Sync {
    /// Parameters of the body.
    fn params(&self) -> &Params<T>;
    /// Surface functions at `θ`. Implementations must be smooth in `θ` across
    /// the poles (even in `θ` about 0 and π) so the pole chart can use them.
    fn eval(&self, theta: T) -> SurfaceEval<T>;
    /// Contact vector for a (near-)unit `γ`; no normalization check.
    fn contact_vector(&self, gamma: Vec3<T>) -> Vec3<T>;
    /// Time derivative of the contact vector along `γ̇`.
    fn contact_velocity(&self, gamma: Vec3<T>, gamma_dot: Vec3<T>) -> Vec3<T>;
    /// `J` as a function of `γ₃` and of `(r, γ)`.
    fn j_of(&self, gamma3: T, r_dot_gamma: T) -> T {
        let p = self.params();
        let g2 = gamma3 * gamma3;
        ((g2 + p.nu * (T::one() - g2)) / p.eta + r_dot_gamma * r_dot_gamma).sqrt()
    }
}

/// Ellipsoid of revolution with semiaxes `(β, β, 1)` and center-of-mass
/// offset `α` along the symmetry axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipsoid<T = f64> {
    pub params: Params<T>,
    pub b_sign: BSign,
}

impl<T: Scalar> Ellipsoid<T> {
    pub fn new(params: Params<T>) -> Self {
        Self {
            params,
            b_sign: BSign::default(),
        }
    }

    pub fn with_b_sign(params: Params<T>, b_sign: BSign) -> Self {
        Self { params, b_sign }
    }

    #[inline]
    fn bdiag(&self) -> Vec3<T> {
        let b2 = self.params.beta * self.params.beta;
        Vec3::new(b2, b2, T::one())
    }

    /// `Z` as a function of `γ₃ = cosθ`.
    #[inline]
    pub fn z_of_gamma3(&self, gamma3: T) -> T {
        let b2 = self.params.beta * self.params.beta;
        (b2 * (T::one() - gamma3 * gamma3) + gamma3 * gamma3).sqrt()
    }
}

impl<T: Scalar> SurfaceProfile<T> for Ellipsoid<T> {
    fn params(&self) -> &Params<T> {
        &self.params
    }

    fn eval(&self, theta: T) -> SurfaceEval<T> {
        let Params {
            alpha,
            beta,
            nu,
            eta,
        } = self.params;
        let one = T::one();
        let two = T::lit(2.0);
        let (s, c) = theta.sin_cos();
        let b2 = beta * beta;
        let k = b2 - one;

        let z = (b2 * s * s + c * c).sqrt();
        let dz = k * s * c / z;
        let ddz = k * ((c * c - s * s) / z - s * c * dz / (z * z));

        let u = alpha * c + z;
        let du = -alpha * s + dz;
        let ddu = -alpha * c + ddz;

        // B = 1/η + N/Z², where N is the squared norm of the contact vector
        // scaled by Z.
        let (n, dn) = match self.b_sign {
            BSign::Derived => {
                let q = c + alpha * z;
                (
                    b2 * b2 * s * s + q * q,
                    two * b2 * b2 * s * c + two * q * (-s + alpha * dz),
                )
            }
            BSign::Printed => {
                let q = alpha * z - c;
                (
                    b2 * b2 * s * s + q * q,
                    two * b2 * b2 * s * c + two * q * (alpha * dz + s),
                )
            }
        };
        let z2 = z * z;
        let b = one / eta + n / z2;
        let db = dn / z2 - two * n * dz / (z2 * z);

        let w = z + alpha * c;
        let m = (c * c + nu * s * s) / eta + w * w;
        let dm = two * (nu - one) * s * c / eta + two * w * (dz - alpha * s);
        let j = m.sqrt();
        let dj = dm / (two * j);

        SurfaceEval {
            z,
            u,
            b,
            j,
            dz,
            du,
            db,
            dj,
            ddu,
        }
    }

    fn contact_vector(&self, gamma: Vec3<T>) -> Vec3<T> {
        let bg = gamma.hadamard(self.bdiag());
        let s = gamma.dot(bg).sqrt();
        -(bg * (T::one() / s)) - Vec3::e3() * self.params.alpha
    }

    fn contact_velocity(&self, gamma: Vec3<T>, gamma_dot: Vec3<T>) -> Vec3<T> {
        let d = self.bdiag();
        let bg = gamma.hadamard(d);
        let bgd = gamma_dot.hadamard(d);
        let s2 = gamma.dot(bg);
        let s = s2.sqrt();
        -(bgd * (T::one() / s)) + bg * (gamma.dot(bgd) / (s2 * s))
    }
}

/// Contact vector for a unit `γ`, rejecting non-unit input.
pub fn contact_vector<T: Scalar>(gamma: Vec3<T>, p: &Params<T>) -> Result<Vec3<T>> {
    let n = gamma.norm();
    if !((n - T::one()).abs() <= T::lit(1e-9).max(T::eps() * T::lit(8.0))) {
        return Err(Error::NonUnitGamma(n.as_f64()));
    }
    Ok(Ellipsoid::new(*p).contact_vector(gamma))
}

/// Surface functions at an interior inclination `θ ∈ (0, π)`.
pub fn profile<T: Scalar>(theta: T, p: &Params<T>) -> Result<SurfaceEval<T>> {
    profile_with(theta, &Ellipsoid::new(*p))
}

/// Surface functions at an interior inclination for a chosen profile.
pub fn profile_with<T: Scalar, S: SurfaceProfile<T>>(
    theta: T,
    surface: &S,
) -> Result<SurfaceEval<T>> {
    if !(theta > T::zero() && theta < T::PI()) {
        return Err(Error::ThetaOutOfRange(theta.as_f64()));
    }
    Ok(surface.eval(theta))
}

/// Surface functions at any inclination, including the poles. At `θ ∈ {0, π}`
/// the values are the limits `Z = 1`, `U = 1 ± α`; outside `[0, π]` the
/// functions are continued evenly about the poles.
pub fn profile_extended<T: Scalar>(theta: T, p: &Params<T>) -> SurfaceEval<T> {
    Ellipsoid::new(*p).eval(theta)
}

/// Meridian profile `(χ₁, χ₂)` as functions of `γ₃ = cosθ`: the contact
/// vector is `r = χ₁ (γ₁, γ₂, 0) + χ₂ e₃`.
pub fn meridian_profile<T: Scalar>(gamma3: T, p: &Params<T>) -> Result<(T, T)> {
    if !(gamma3.abs() <= T::one()) {
        return Err(Error::Gamma3OutOfRange(gamma3.abs().as_f64()));
    }
    let z = Ellipsoid::new(*p).z_of_gamma3(gamma3);
    Ok((-p.beta * p.beta / z, -gamma3 / z - p.alpha))
}

/// The unit vertical in the body frame at inclination `θ` and proper
/// rotation `φ`: `γ = (sinθ sinφ, sinθ cosφ, cosθ)`.
pub fn gamma_of<T: Scalar>(theta: T, phi: T) -> Vec3<T> {
    let (s, c) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(s * sp, s * cp, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(alpha: f64, beta: f64, nu: f64, eta: f64) -> Params {
        Params::new_unchecked(alpha, beta, nu, eta)
    }

    #[test]
    fn contact_vector_on_axes() {
        let q = p(0.5, 3.0, 0.5, 0.5);
        let r = contact_vector(Vec3::e3(), &q).unwrap();
        assert_relative_eq!(r.z, -1.5);
        assert_eq!((r.x, r.y), (0.0, 0.0));
        let r = contact_vector(Vec3::new(1.0, 0.0, 0.0), &q).unwrap();
        assert_relative_eq!(r.x, -3.0);
        assert_relative_eq!(r.z, -0.5);
        assert!(matches!(
            contact_vector(Vec3::new(1.0, 1.0, 0.0), &q),
            Err(Error::NonUnitGamma(_))
        ));
    }

    #[test]
    fn contact_vector_projection_at_quarter_turn() {
        let q = p(0.5, 3.0, 0.5, 0.5);
        let th = core::f64::consts::FRAC_PI_4;
        let g = gamma_of(th, 0.3);
        let r = contact_vector(g, &q).unwrap();
        let e = profile(th, &q).unwrap();
        assert_relative_eq!(r.dot(g), -e.z - 0.5 * th.cos(), max_relative = 1e-14);
    }

    #[test]
    fn equator_values() {
        let e = profile(core::f64::consts::FRAC_PI_2, &p(0.5, 3.0, 0.5, 0.5)).unwrap();
        assert_relative_eq!(e.z, 3.0, max_relative = 1e-15);
        assert_relative_eq!(e.u, 3.0, max_relative = 1e-15);
        assert_relative_eq!(e.b, 11.25, max_relative = 1e-14);
        // B − 1/η equals ‖r‖² at the equator for either sign.
        let printed = Ellipsoid::with_b_sign(p(0.5, 3.0, 0.5, 0.5), BSign::Printed)
            .eval(core::f64::consts::FRAC_PI_2);
        assert_relative_eq!(printed.b, 11.25, max_relative = 1e-14);
    }

    #[test]
    fn sphere_is_flat() {
        for i in 1..20 {
            let th = i as f64 * 0.15;
            let e = profile(th, &p(0.0, 1.0, 1.0, 1.0)).unwrap();
            assert_relative_eq!(e.z, 1.0, max_relative = 1e-15);
            assert_relative_eq!(e.u, 1.0, max_relative = 1e-15);
            assert!(e.du.abs() < 1e-15);
        }
    }

    #[test]
    fn interior_only_without_pole_mode() {
        let q = p(0.5, 3.0, 0.5, 0.5);
        assert!(profile(0.0, &q).is_err());
        assert!(profile(core::f64::consts::PI, &q).is_err());
        let top = profile_extended(0.0, &q);
        assert_relative_eq!(top.z, 1.0);
        assert_relative_eq!(top.u, 1.5);
        let bottom = profile_extended(core::f64::consts::PI, &q);
        assert_relative_eq!(bottom.u, 0.5, max_relative = 1e-15);
        assert_relative_eq!(meridian_profile(1.0, &q).unwrap().0, -9.0);
    }

    #[test]
    fn meridian_profile_values() {
        let q = p(0.5, 3.0, 0.5, 0.5);
        let (c1, c2) = meridian_profile(1.0, &q).unwrap();
        assert_relative_eq!(c1, -9.0);
        assert_relative_eq!(c2, -1.5);
        let (c1, c2) = meridian_profile(0.0, &q).unwrap();
        assert_relative_eq!(c1, -3.0);
        assert_relative_eq!(c2, -0.5);
        assert!(meridian_profile(1.0 + 1e-9, &q).is_err());
    }

    /// The meridian functions of a body of revolution satisfy
    /// `dχ₂/dγ₃ = χ₁ − ((1 − γ₃²)/γ₃) dχ₁/dγ₃`.
    #[test]
    fn meridian_profile_compatibility_relation() {
        let q = p(0.5, 3.0, 0.5, 0.5);
        for &g3 in &[0.5, -0.3, 0.9, 0.1] {
            let h = 1e-5;
            let f = |x: f64| meridian_profile(x, &q).unwrap();
            let d1 = (f(g3 + h).0 - f(g3 - h).0) / (2.0 * h);
            let d2 = (f(g3 + h).1 - f(g3 - h).1) / (2.0 * h);
            let rhs = f(g3).0 - (1.0 - g3 * g3) / g3 * d1;
            assert_relative_eq!(d2, rhs, max_relative = 1e-6);
        }
    }

    #[test]
    fn single_precision_evaluation() {
        let q = Params::<f32>::new_unchecked(0.5, 3.0, 0.5, 0.5);
        let e = profile(core::f32::consts::FRAC_PI_2, &q).unwrap();
        assert!((e.b - 11.25).abs() < 1e-4);
    }

    #[test]
    fn printed_sign_breaks_the_norm_identity_off_the_equator() {
        let q = p(0.5, 3.0, 0.5, 0.5);
        let th = 1.0;
        let r = Ellipsoid::new(q).contact_vector(gamma_of(th, 0.0));
        let printed = Ellipsoid::with_b_sign(q, BSign::Printed).eval(th);
        assert!(((printed.b - 1.0 / q.eta) - r.norm_sq()).abs() > 1e-2);
    }

    fn params_strategy() -> impl Strategy<Value = Params> {
        (0.0f64..=1.0, 0.2f64..4.0, 0.05f64..=2.0, 0.1f64..5.0)
            .prop_map(|(a, b, n, e)| p(a, b, n, e))
    }

    proptest! {
        #[test]
        fn b_minus_inverse_eta_is_contact_norm(q in params_strategy(), th in 0.01f64..3.13) {
            let e = profile(th, &q).unwrap();
            let r = Ellipsoid::new(q).contact_vector(gamma_of(th, 0.0));
            let lhs = e.b - 1.0 / q.eta;
            prop_assert!((lhs - r.norm_sq()).abs() <= 1e-10 * r.norm_sq());
        }

        #[test]
        fn potential_is_minus_contact_projection(q in params_strategy(), th in 0.01f64..3.13, phi in -3.0f64..3.0) {
            let g = gamma_of(th, phi);
            let e = profile(th, &q).unwrap();
            let r = Ellipsoid::new(q).contact_vector(g);
            prop_assert!((r.dot(g) + e.z + q.alpha * th.cos()).abs() <= 1e-12 * e.u.abs().max(1.0));
            prop_assert!((e.u + r.dot(g)).abs() <= 1e-12 * e.u.abs().max(1.0));
        }

        #[test]
        fn reflection_about_equator(q in params_strategy(), th in 0.01f64..3.13) {
            let e = profile(th, &q).unwrap();
            let f = profile(core::f64::consts::PI - th, &q).unwrap();
            prop_assert!((e.z - f.z).abs() <= 1e-13 * e.z);
            let mirrored = profile(core::f64::consts::PI - th, &p(-q.alpha, q.beta, q.nu, q.eta)).unwrap();
            prop_assert!((e.u - mirrored.u).abs() <= 1e-13 * e.u.abs().max(1.0));
            if q.alpha == 0.0 {
                prop_assert!((e.u - f.u).abs() <= 1e-13 * e.u);
            }
        }

        #[test]
        fn balanced_potential_is_symmetric(beta in 0.2f64..4.0, th in 0.01f64..3.13) {
            let q = p(0.0, beta, 1.0, 1.0);
            let e = profile(th, &q).unwrap();
            let f = profile(core::f64::consts::PI - th, &q).unwrap();
            prop_assert!((e.u - f.u).abs() <= 1e-13 * e.u);
        }

        #[test]
        fn j_squared_decomposition(q in params_strategy(), th in 0.01f64..3.13) {
            let e = profile(th, &q).unwrap();
            let (s, c) = th.sin_cos();
            let lhs = e.j * e.j - (c * c + q.nu * s * s) / q.eta;
            let w = e.z + q.alpha * c;
            prop_assert!((lhs - w * w).abs() <= 1e-10 * (w * w).max(1e-300));
        }

        #[test]
        fn evaluation_invariants_and_derivatives(q in params_strategy(), th in 0.05f64..3.09) {
            let e = profile(th, &q).unwrap();
            prop_assert!(e.z > 0.0 && e.j > 0.0 && e.b > 1.0 / q.eta);
            let h = 1e-5;
            let a = profile(th + h, &q).unwrap();
            let b = profile(th - h, &q).unwrap();
            let close = |d: f64, fd: f64, scale: f64| (d - fd).abs() <= 1e-6 * fd.abs().max(scale);
            prop_assert!(close(e.dz, (a.z - b.z) / (2.0 * h), e.z));
            prop_assert!(close(e.du, (a.u - b.u) / (2.0 * h), e.u.abs().max(1.0)));
            prop_assert!(close(e.db, (a.b - b.b) / (2.0 * h), e.b));
            prop_assert!(close(e.dj, (a.j - b.j) / (2.0 * h), e.j));
            prop_assert!(close(e.ddu, (a.du - b.du) / (2.0 * h), e.u.abs().max(1.0)));
        }

        #[test]
        fn contact_velocity_is_directional_derivative(q in params_strategy(), th in 0.05f64..3.09, phi in -3.0f64..3.0,
                                                      w in prop::array::uniform3(-1.0f64..1.0)) {
            let surf = Ellipsoid::new(q);
            let g = gamma_of(th, phi);
            let gd = g.cross(Vec3::from_array(w));
            let h = 1e-6;
            let fd = (surf.contact_vector(g + gd * h) - surf.contact_vector(g - gd * h)) * (0.5 / h);
            let an = surf.contact_velocity(g, gd);
            prop_assert!((fd - an).max_abs() <= 1e-6 * an.max_abs().max(1.0));
        }
    }
}
