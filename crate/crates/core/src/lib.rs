//! Weyl-type integration formulas for polar-like actions of compact
//! classical groups.

pub mod actions;
pub mod cli;
pub mod ensembles;
pub mod error;
pub mod groups;
pub mod integrate;
pub mod kernel;
pub mod stats;
pub mod weights;

pub use error::{Error, Result};
