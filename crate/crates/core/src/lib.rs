//! Trajectory design and navigation assessment for a spacecraft operating in
//! close proximity to a binary asteroid.

// Negated comparisons are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod dispersion;
pub mod dynamics;
pub mod error;
pub mod knowledge;
pub mod measurements;
pub mod rng;

pub use error::{Error, Result};
