//! Approximately holomorphic peak sections of asymptotically holomorphic line
//! bundles on flat complex tori, at grid scale.
//!
//! The pipeline runs cohomology → bundle → operators → spectral → peaks →
//! embedding, and [`lab`] drives it from a flat config file.

pub mod bundle;
pub mod cohomology;
pub mod embedding;
pub mod error;
pub mod geometry;
pub mod lab;
pub mod operators;
pub mod peaks;
pub mod spectral;

pub use error::{Error, Result};
