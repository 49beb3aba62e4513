//! File formats, experiment campaigns and the command-line front end for
//! [`l1l2_core`].

pub mod bench;
pub mod config;
mod error;
pub mod fmt;
pub mod io;

pub use error::{Error, Result};
pub use l1l2_core as core;
