//! Numerical engine for conformal hypersurface geometry.
//!
//! Every derivative is carried by a truncated Taylor polynomial ([`jets::Jet`]);
//! geometric pipelines assemble tensor fields of jets and evaluate them at points.

pub mod jets;
pub mod expr;
pub mod error;
pub mod tensor;
pub mod metric;
pub mod curvature;
pub mod hypersurface;
pub mod samples;
pub mod tractor;
pub mod yamabe;
pub mod action;
pub mod checks;

pub use error::{Error, Result};
