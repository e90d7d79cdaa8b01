//! Protocol laboratory for grant-free access with K-repetition and a
//! Reed–Solomon coded super time frame (STF).
//!
//! The crate offers three views of the same system:
//!
//! * [`decoder`], a set-level oracle for iterative interference cancellation;
//! * [`generic_iic`], a matrix-branching model of the access point that also
//!   counts memory and decoding work;
//! * [`analytics`], closed-form access probabilities with exact and
//!   floating evaluators.
//!
//! [`montecarlo`] ties them together by simulation.

pub mod analytics;
pub mod combinatorics;
pub mod decoder;
pub mod error;
pub mod experiments;
pub mod generic_iic;
pub mod model;
pub mod montecarlo;
pub mod rng;

pub use error::{Error, Result};
