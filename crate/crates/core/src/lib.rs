//! Classical simulation of multi-level amplitude estimation for functionals of
//! discrete distributions (power sums, Tsallis, Shannon and Rényi entropies).
//!
//! The pipeline mirrors the quantum algorithm block by block: a purified oracle
//! is encoded as a matrix whose singular values are `sqrt(p_i)/2`, discriminators
//! split the spectrum into dyadic levels, a bounded polynomial is applied to the
//! singular values of each level, and amplitude estimation reads out each
//! level's squared norm. Every oracle use is charged to a [`multilevel::QueryLedger`].

pub mod ae;
pub mod discrim;
pub mod dist;
pub mod encode;
pub mod entropy;
mod error;
pub mod multilevel;
pub mod par;
pub mod poly;
pub mod svt;

pub use error::{Error, Result};
