//! Generalized quasi-arithmetic means over strictly increasing, possibly
//! discontinuous generators, and a decision engine for the functional
//! inequalities built from them.

pub mod analyze;
pub mod certify;
pub mod cli;
pub mod error;
pub mod funcspace;
pub mod means;
pub mod numeric;
pub mod problems;

pub use error::{Error, Result};
