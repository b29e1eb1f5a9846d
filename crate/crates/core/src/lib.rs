//! Exponential sums modulo prime powers, their residue-class moments, and
//! the Voronoi machinery linking modular-form coefficients in arithmetic
//! progressions to Salie and Kloosterman sums.

pub mod coeffs;
pub mod error;
pub mod expsum;
pub mod harness;
pub mod modarith;
pub mod qrprimes;
pub mod reduce;
pub mod saliemoments;
pub mod voronoi;

pub use error::{Error, Result};
pub use modarith::PrimePowerModulus;
