//! Transient buildup of the probability density inside one-dimensional
//! double-barrier resonant tunneling structures after a reflecting shutter
//! is opened at t = 0.

pub mod analysis;
pub mod cli;
pub mod ddouble;
pub mod dynamics;
pub mod error;
pub mod quadrature;
pub mod resonances;
pub mod special;
pub mod stationary;
pub mod units;

pub use error::{Error, Result};
