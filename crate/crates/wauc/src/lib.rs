//! File formats, reports, the parallel runner and the `wauc` command line
//! built on [`wauc_core`].

pub mod cli;
pub mod dataset;
pub mod error;
pub mod report;
pub mod runner;
pub mod scenario;
pub mod selector;

pub use error::{Error, Result};
