//! Linearised quantum Langevin model of a cavity mode coupled to the two
//! in-plane motional modes of a levitated nanoparticle.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod langevin;
pub mod model;
pub mod oracle;
pub mod spectra;

pub use error::{Error, Result};
