//! Natural diagonal lifted structures on the cotangent bundle of a space form.
//!
//! The crate builds the almost product structure `P`, the lifted metric `G`
//! and the fundamental 2-form `Ω(X, Y) = G(X, PY)` on `T*M` from scalar
//! coefficient functions of the energy density, and checks numerically,
//! with exact AD derivatives, when `P` squares to the identity, when it is
//! integrable, when `G` is compatible with it and when `Ω` is closed.

pub mod ad;
pub mod coefficients;
pub mod config;
mod error;
pub mod lifted;
pub mod linalg;
pub mod phase;
pub mod report;
pub mod run;
pub mod spaceform;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
