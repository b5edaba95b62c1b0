//! Command-line companion to the core allocation models: configuration
//! files, scenario sweeps, table and plot-script emission.

pub mod config;
pub mod scenario;
