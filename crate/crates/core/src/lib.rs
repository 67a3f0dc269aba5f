//! Energy-efficient RB assignment and power allocation for the downlink of
//! an OFDMA heterogeneous cloud RAN.
//!
//! The crate is `no_std` and only needs an allocator. It holds the system
//! model, reproducible channel snapshots, the Dinkelbach / dual
//! decomposition optimizer, the baseline allocators and scenario models,
//! and a brute-force oracle for small instances.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod baselines;
pub mod channel;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod oracle;
pub mod system;
pub mod units;

pub use error::{Error, Result};
