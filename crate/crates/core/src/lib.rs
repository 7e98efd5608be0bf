//! Tropical polynomial division and its use for compressing ReLU networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`scalar`] and [`poly`] define tropical polynomials over exact rationals or `f64`;
//! * [`lp`] is a dense two-phase simplex solver;
//! * [`polyhedral`] converts between H- and V-representations by double description;
//! * [`exact`], [`approx`] and [`composite`] implement the division algorithms;
//! * [`nn`] turns trained one-hidden-layer networks into compressed maxout or ReLU models.

pub mod approx;
pub mod composite;
pub mod error;
pub mod exact;
pub mod lp;
pub mod nn;
pub mod poly;
pub mod polyhedral;
pub mod rng;
pub mod scalar;
pub mod wire;

pub use error::{Error, Result};
pub use poly::{DivisionProblem, DivisionResult, TropicalPolynomial, TropicalTerm};
pub use scalar::{ExtReal, Rational, Scalar};
