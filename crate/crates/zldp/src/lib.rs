pub mod dd;
pub mod dirichlet;
pub mod error;
pub mod experiments;
pub mod ladder;
pub mod ledger;
pub mod majorant;
pub mod model;
pub mod output;
pub mod primes;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod zeta;

pub use error::{Error, Result};

/// Working precision of the sampling code. Generic routines take any
/// [`scalar::Real`] or [`scalar::Field`]; the samplers are fixed to this.
pub type Float = f64;
/// Exact field for barrier-constant arithmetic.
pub type Exact = num_rational::BigRational;
pub type Complex = num_complex::Complex<Float>;
