//! Lattice simulation of two-valued local sets of the planar Gaussian free field
//! and of imaginary multiplicative chaos, with closed-form targets to test against.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod brownian;
pub mod chaos;
mod error;
pub mod estimators;
pub mod experiment;
pub mod geometry;
pub mod lattice;
pub mod rng;
pub mod stats;
pub mod tvs;

pub use error::{Error, Result};
