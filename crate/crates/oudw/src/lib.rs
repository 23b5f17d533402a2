//! File formats, configuration, JSON records and parallel Monte Carlo
//! drivers on top of [`oudw_core`]. The `oudw` binary is a thin layer over
//! this crate.

pub mod config;
pub mod csv_io;
pub mod error;
pub mod mc;
pub mod records;

pub use error::{Error, Result};
