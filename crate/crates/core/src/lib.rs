//! Spectral laboratory for a magnetic Schrödinger operator with random
//! impurities on a cylinder confined by soft walls.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod model;
pub mod observables;
pub mod spectral;

pub use error::{Error, Result};
