//! Constant-bit-rate packet sources.

use serde::{Deserialize, Serialize};

use crate::channel::SLOT_DURATION_S;
use crate::error::{Error, Result};
use crate::geometry::NodeId;
use crate::phy::Direction;

use super::scheduler::Bearer;

pub const CBR_PACKET_BITS: u64 = 3072;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CbrSource {
    pub ue: NodeId,
    pub direction: Direction,
    pub packet_bits: u64,
    /// Inter-arrival time in slots; may be fractional.
    pub period_slots: f64,
}

impl CbrSource {
    pub fn from_rate(ue: NodeId, direction: Direction, rate_mbps: f64) -> Result<Self> {
        if !(rate_mbps.is_finite() && rate_mbps > 0.0) {
            return Err(Error::Config(format!("traffic rate must be positive, got {rate_mbps}")));
        }
        let period_s = CBR_PACKET_BITS as f64 / (rate_mbps * 1e6);
        Ok(Self { ue, direction, packet_bits: CBR_PACKET_BITS, period_slots: period_s / SLOT_DURATION_S })
    }

    /// Packets generated in slots `0..=slot`; the first arrives at slot 0.
    pub fn arrivals_through(&self, slot: u64) -> u64 {
        (slot as f64 / self.period_slots).floor() as u64 + 1
    }

    pub fn arrivals_in(&self, slot: u64) -> u64 {
        match slot {
            0 => 1,
            s => self.arrivals_through(s) - self.arrivals_through(s - 1),
        }
    }
}

/// Enqueues this slot's packets. `bearers` must hold one bearer per source,
/// in the same order.
pub fn generate_traffic(sources: &[CbrSource], bearers: &mut [Bearer], slot: u64) -> Result<()> {
    if sources.len() != bearers.len() {
        return Err(Error::DimensionMismatch(format!("{} sources for {} bearers", sources.len(), bearers.len())));
    }
    for (src, b) in sources.iter().zip(bearers.iter_mut()) {
        for _ in 0..src.arrivals_in(slot) {
            b.enqueue(src.packet_bits, slot);
        }
    }
    Ok(())
}
