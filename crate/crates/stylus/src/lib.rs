//! Command-line front end for the stylometry toolkit: experiment configs,
//! report bundles, pipeline stages and bundle analyses.

pub mod analyze;
pub mod bundle;
pub mod cli;
pub mod config;
pub mod pipeline;
