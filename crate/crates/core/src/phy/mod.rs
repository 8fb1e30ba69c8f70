//! Per-RB SINR evaluation and link adaptation.

pub mod bler;
pub mod sinr;

pub use bler::{
    outer_loop_update, sinr_to_mcs, BlerTable, LinkAdaptationState, McsSelection, MCS_SPECTRAL_EFFICIENCY,
};
pub use sinr::{interference_power, noise_power, sinr, useful_power, Direction, RbGains, SinrBreakdown};
