//! Numerical laboratory for the specific energy of 180-degree walls in soft
//! ferromagnetic films: exchange, anisotropy and stray-field energy on a strip
//! cross-section, the Neel and asymmetric Bloch wall constructions, constrained
//! relaxation, lower-bound audits and the thickness cross-over sweep.

pub mod error;
pub mod fields;
pub mod energy;
pub mod constructions;
pub mod minimize;
pub mod bounds;
pub mod sweep;
pub mod fieldio;
pub mod cli;

pub use error::{Result, WallError};
pub use fields::{MagnetizationField, MaterialParams, Profile1D, StripGrid};
