//! Monte Carlo experiments, figure presets and the acceptance suite for
//! the H-CRAN energy-efficiency optimizer.

pub mod acceptance;
pub mod channel_io;
pub mod config;
pub mod experiment;
pub mod figures;
pub mod stats;

pub use hcran_core;
