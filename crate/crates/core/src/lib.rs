//! Engine for an ellipsoid of revolution rolling without slipping or
//! spinning on a horizontal plane.
//!
//! The crate is organized bottom-up:
//!
//! * [`model`] — dimensionless parameters and their validation;
//! * [`geometry`] — surface functions of the ellipsoid;
//! * [`dynamics`] — full and reduced equations of motion, first integrals,
//!   invariant measure;
//! * [`integrate`] — adaptive integration, section events, periods and the
//!   pole chart;
//! * [`bifurcation`] — permanent rotations, stability, bifurcation diagrams;
//! * [`reconstruct`] — absolute-space motion, rotation numbers, resonances
//!   and the classification of trajectories.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! `*64` aliases below name the double-precision instantiations used by the
//! command-line tool.

// `!(x <= tol)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod integrate;
pub mod model;
pub mod reconstruct;
pub mod roots;
pub mod scalar;
pub mod vec3;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision parameters.
pub type Params64 = model::Params<f64>;
/// Single-precision parameters.
pub type Params32 = model::Params<f32>;
/// Double-precision full state.
pub type FullState64 = dynamics::FullState<f64>;
/// Double-precision reduced state.
pub type ReducedState64 = dynamics::ReducedState<f64>;
/// Double-precision 3-vector.
pub type Vec3f64 = vec3::Vec3<f64>;
