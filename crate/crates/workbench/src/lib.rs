//! Command line and HTTP session service around `glc3d-core`.

pub mod cli;
pub mod http;
pub mod report;
pub mod session;
