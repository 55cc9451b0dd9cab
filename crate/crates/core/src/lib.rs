//! Identifiability analysis and parameter learning for mixtures of two
//! multinomial logits (2-MNL).
//!
//! A 2-MNL over `n` items is a pair of weight vectors `(a, b)` on the
//! simplex together with a mixing parameter `lambda > 0`: on a slate `T` it
//! picks `a` with probability `1/(1+lambda)` and `b` otherwise, then chooses
//! an item proportionally to the selected weights.
//!
//! The crate is organised bottom-up:
//!
//! - [`choice`]: model types, exact slate distributions, oracle tables,
//!   instance generation and choice sampling.
//! - [`poly`]: closed-form cubic/quartic solvers, deflation, Sylvester
//!   resultants and a Sturm-sequence root counter.
//! - [`reduction`]: the pair systems, their univariate quartics and the
//!   resultant gates.
//! - [`identify`]: solution enumeration and identifiability reports.
//! - [`learn`]: the linear-query learner, from an exact oracle or samples.
//! - [`experiments`]: reproducible numerical experiments used by the CLI.
//!
//! Every numeric routine that matters for exact verification is generic over
//! [`Scalar`], which is implemented for `f64` and for arbitrary-precision
//! rationals.

pub mod choice;
pub mod error;
pub mod experiments;
pub mod identify;
pub mod learn;
pub mod poly;
pub mod reduction;
pub mod rng;
pub mod scalar;

pub use choice::{
    EmpiricalTable, MixtureModel, OracleTable, Slate, WeightVector,
};
pub use error::{Error, Result};
pub use scalar::{Rational, Scalar};
