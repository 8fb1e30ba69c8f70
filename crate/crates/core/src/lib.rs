//! Slot-level simulator of a single-cell mmWave network assisted by
//! network-controlled repeaters (NCRs).
//!
//! Layers, bottom up: [`geometry`] and [`antenna`] describe the map and the
//! arrays, [`channel`] the propagation, [`ncr`] the repeater model,
//! [`link`] beam sweeping and association, [`phy`] SINR and link adaptation,
//! [`mac`] the slot loop, and [`metrics`] the statistics and exports.

pub mod antenna;
pub mod channel;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod link;
pub mod mac;
pub mod metrics;
pub mod ncr;
pub mod network;
pub mod phy;
pub mod rng;

pub use error::{Error, Result};
pub use mac::{run_simulation, SimConfig};
