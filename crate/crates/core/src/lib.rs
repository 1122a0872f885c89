//! Floor-quotient sums `S_f(x) = Σ_{n≤x} f(⌊x/n⌋)` for the von Mangoldt function
//! and the k-fold divisor functions, together with the machinery used to study
//! their error term: certified main-term constants, the Vaaler approximation of
//! the sawtooth, a concrete Vaughan decomposition, exact exponent-pair algebra,
//! exact min-max balancing of exponent forms and an exponential-sum laboratory.

pub mod balance;
pub mod cache;
pub mod constants;
pub mod error;
pub mod expsum;
pub mod exppair;
pub mod factor;
pub mod floor_sums;
pub mod interval;
pub mod rational;
pub mod sieve;
pub mod summation;
pub mod vaaler;
pub mod vaughan;

pub use error::{Error, Result};
