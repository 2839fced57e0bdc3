//! Parabolic oscillation functionals and John--Nirenberg machinery on
//! piecewise-constant space-time fields.
//!
//! Everything here is built around exactly integrable data: fields are
//! constant on half-open grid cells, so box integrals, truncated power
//! averages, level-set measures and the minimizing constants of the lagged
//! oscillation functional are computed exactly (up to floating-point
//! rounding), not approximated by quadrature. On top of that sit the
//! desk-scale norms (`PBMO+` as a max over candidate rectangles, `PJN_q+` as
//! a maximum-weight disjoint packing), the stopping-time decomposition with
//! its explicit constant chain, and the chaining construction that changes
//! the time lag.
//!
//! The core is generic over the scalar type via [`Real`]; concrete `f64`
//! aliases are exported at the crate root.

// Parameter validation uses `!(a < b)` on purpose: the negated form also
// rejects NaN, which `a >= b` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod chains;
pub mod czdecomp;
pub mod field;
pub mod float;
pub mod geometry;
pub mod io;
pub mod oscillation;
pub mod packing;

mod error;

pub use error::{Error, Result};
pub use float::Real;

/// Default scalar used by the CLI and the concrete aliases below.
pub type Scalar = f64;

pub type Rect = geometry::ParabolicRectangle<Scalar>;
pub type StBox = geometry::SpaceTimeBox<Scalar>;
pub type Params = geometry::GeometryParams<Scalar>;
pub type Lag = geometry::TimeLag<Scalar>;
pub type Field = field::GridField<Scalar>;
