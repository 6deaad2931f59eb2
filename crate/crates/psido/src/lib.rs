//! Numerical global pseudodifferential calculus on manifolds carrying a
//! linearization: a smooth family of global diffeomorphisms `psi_x: T_xM -> M`
//! with `psi_x(0) = x` and unit differential at the origin.
//!
//! The crate provides
//! * exact combinatorics for higher chain rules and frame-chart plumbing
//!   ([`geometry`]),
//! * concrete model geometries (flat and deformed Euclidean space, the
//!   hyperbolic plane) together with the maps a linearization induces on a
//!   frame chart: midpoint/difference coordinates, scaling flows, parallel
//!   transport ([`models`]),
//! * sampled functions, seminorms and decay-exponent fits ([`grid`]),
//! * quantization: symbol <-> kernel passage for a one-parameter family of
//!   orderings, operator application, ordering conversion, amplitude
//!   reduction, adjoints ([`quantize`]),
//! * operator composition and truncated star-product expansions ([`compose`]),
//! * finite-difference certification of the growth/decay hypotheses the
//!   calculus rests on ([`verify`]).
//!
//! Dimensions 1 and 2 are supported throughout.

pub mod cli;
pub mod compose;
pub mod geometry;
pub mod grid;
pub mod models;
pub mod quantize;
pub mod verify;

mod error;

pub use error::{Error, Result};
