//! `smatv` command line tool and HTTP service.

pub mod cli;
pub mod service;

pub use cli::{run, EXIT_CLEAN, EXIT_ERROR, EXIT_VIOLATIONS};
