//! Polynomial-chaos toolkit: multi-index combinatorics, Wick algebra,
//! chaos-space calculus, and solvers for linear evolution and stationary
//! equations driven by Wick-multiplicative noise.

pub mod builtins;
pub mod calculus;
pub mod chaos;
pub mod error;
pub mod evolution;
pub mod multiindex;
pub mod operators;
pub mod quad;
pub mod stationary;

pub use chaos::{ChaosExpansion, Coeff, Kind, KondratievNorm};
pub use error::{CoreError, Result};
pub use multiindex::{MultiIndex, Truncation};
pub use operators::{CoordinatewiseFamily, LinearOp, WickFamily};
