//! Parameter containers, nondimensionalization and validation.
//!
//! Everything downstream consumes only [`Params`]: lengths are measured in
//! units of the polar semiaxis `b3`, masses in units of `m` and time in units
//! of `sqrt(b3/g)`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::collections::BTreeMap;

/// Physical description of the body, in SI units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DimensionalBody<T = f64> {
    /// Mass [kg].
    pub m: T,
    /// Gravitational acceleration [m/s²].
    pub g: T,
    /// Offset of the center of mass from the geometric center along the
    /// symmetry axis [m].
    pub a: T,
    /// Equatorial semiaxis [m].
    pub b1: T,
    /// Polar semiaxis [m].
    pub b3: T,
    /// Equatorial central moment of inertia [kg·m²].
    pub i1: T,
    /// Axial central moment of inertia [kg·m²].
    pub i3: T,
}

impl<T: Scalar> DimensionalBody<T> {
    /// Lists every violated physical invariant.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("m", self.m),
            ("g", self.g),
            ("b1", self.b1),
            ("b3", self.b3),
            ("i1", self.i1),
            ("i3", self.i3),
        ] {
            if !(v.is_finite() && v > T::zero()) {
                out.push(format!("{name} must be finite and positive (got {v})"));
            }
        }
        if !(self.a.is_finite() && self.a >= T::zero()) {
            out.push(format!(
                "a must be finite and non-negative (got {})",
                self.a
            ));
        }
        out
    }
}

/// Characteristic scales used to make the equations dimensionless.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Scales<T = f64> {
    pub length: T,
    pub mass: T,
    pub time: T,
}

/// The four dimensionless parameters governing the motion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params<T = f64> {
    /// Center-of-mass offset `a/b3`, in `[0, 1]`.
    pub alpha: T,
    /// Aspect ratio `b1/b3`, in `(0, ∞)`.
    pub beta: T,
    /// Inertia ratio `i3/i1`, in `(0, 2]`.
    pub nu: T,
    /// Mass/inertia ratio `m·b3²/i1`, in `(0, ∞)`.
    pub eta: T,
}

impl<T: Scalar> Params<T> {
    /// Builds a parameter set without validation.
    pub const fn new_unchecked(alpha: T, beta: T, nu: T, eta: T) -> Self {
        Self {
            alpha,
            beta,
            nu,
            eta,
        }
    }

    /// Builds a validated parameter set.
    pub fn new(alpha: T, beta: T, nu: T, eta: T) -> Result<Self> {
        let p = Self::new_unchecked(alpha, beta, nu, eta);
        let diags = p.validate();
        if diags.is_empty() {
            Ok(p)
        } else {
            Err(Error::InvalidParams(diags))
        }
    }

    /// Returns the list of violated invariants; empty when the set is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let (zero, one, two) = (T::zero(), T::one(), T::lit(2.0));
        let a = self.alpha;
        if !(a.is_finite() && a >= zero && a <= one) {
            out.push(format!("α out of [0,1] (got {a})"));
        }
        let b = self.beta;
        if !(b.is_finite() && b > zero) {
            out.push(format!("β out of (0,∞) (got {b})"));
        }
        let n = self.nu;
        if !(n.is_finite() && n > zero && n <= two) {
            out.push(format!("ν out of (0,2] (got {n})"));
        }
        let e = self.eta;
        if !(e.is_finite() && e > zero) {
            out.push(format!("η out of (0,∞) (got {e})"));
        }
        out
    }

    /// Reads the four parameters from `alpha=…`, `beta=…`, `nu=…`, `eta=…`
    /// entries.
    pub fn from_config(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| -> Result<T> {
            let raw = map
                .get(k)
                .ok_or_else(|| Error::Config(format!("missing key `{k}`")))?;
            parse_number(k, raw)
        };
        Self::new(get("alpha")?, get("beta")?, get("nu")?, get("eta")?)
    }

    /// Converts every field to another scalar type.
    pub fn cast<U: Scalar>(&self) -> Params<U> {
        Params {
            alpha: U::lit(self.alpha.as_f64()),
            beta: U::lit(self.beta.as_f64()),
            nu: U::lit(self.nu.as_f64()),
            eta: U::lit(self.eta.as_f64()),
        }
    }
}

/// Values of the two integrals that label a reduced orbit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralConstants<T = f64> {
    /// Dimensionless value of the linear integral.
    pub kappa: T,
    /// Dimensionless energy.
    pub eps: T,
}

/// Converts a physical body into dimensionless parameters and the scales
/// used for the conversion.
pub fn nondimensionalize<T: Scalar>(body: &DimensionalBody<T>) -> Result<(Params<T>, Scales<T>)> {
    let diags = body.validate();
    if !diags.is_empty() {
        return Err(Error::InvalidParams(diags));
    }
    let p = Params::new(
        body.a / body.b3,
        body.b1 / body.b3,
        body.i3 / body.i1,
        body.m * body.b3 * body.b3 / body.i1,
    )?;
    let scales = Scales {
        length: body.b3,
        mass: body.m,
        time: (body.b3 / body.g).sqrt(),
    };
    Ok((p, scales))
}

/// Parses a `key=value` configuration text. Blank lines and lines starting
/// with `#` are ignored; later keys override earlier ones.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", lineno + 1)))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        map.insert(k.to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Parses a decimal floating-point value for configuration key `key`.
pub fn parse_number<T: Scalar>(key: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse::<f64>()
        .map(T::lit)
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{raw}` as a number")))
}
