//! Spatial correlations of two-particle ring states.

pub mod density;
pub mod error;
pub mod fock;
pub mod kind;
pub mod modes;
pub mod oracle;
pub mod pairs;
pub mod par;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod svg;

pub use error::{Error, Result};
