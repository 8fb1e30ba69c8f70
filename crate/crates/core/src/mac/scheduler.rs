//! Longest-waiting-first RB scheduler.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::NodeId;
use crate::phy::Direction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub bits_left: u64,
    pub arrival_slot: u64,
}

/// Per-UE, per-direction FIFO.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bearer {
    pub ue: NodeId,
    pub direction: Direction,
    pub queue: VecDeque<Packet>,
    /// Slot from which the current wait is counted; `None` while empty.
    pub waiting_since: Option<u64>,
    /// Position in the allocation order of the slot this bearer was last
    /// served in. Breaks ties between bearers served in the same slot.
    pub service_rank: usize,
}

impl Bearer {
    pub fn new(ue: NodeId, direction: Direction) -> Self {
        Self { ue, direction, queue: VecDeque::new(), waiting_since: None, service_rank: 0 }
    }

    pub fn enqueue(&mut self, bits: u64, slot: u64) {
        if self.queue.is_empty() {
            self.waiting_since = Some(slot);
        }
        self.queue.push_back(Packet { bits_left: bits, arrival_slot: slot });
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn backlog_bits(&self) -> u64 {
        self.queue.iter().map(|p| p.bits_left).sum()
    }

    pub fn wait(&self, slot: u64) -> u64 {
        self.waiting_since.map_or(0, |s| slot.saturating_sub(s))
    }

    /// Removes up to `bits` from the head of the queue; returns bits removed.
    pub fn drain_bits(&mut self, mut bits: u64, _slot: u64) -> u64 {
        let mut drained = 0;
        while bits > 0 {
            let Some(head) = self.queue.front_mut() else { break };
            let take = head.bits_left.min(bits);
            head.bits_left -= take;
            bits -= take;
            drained += take;
            if head.bits_left == 0 {
                self.queue.pop_front();
            }
        }
        if self.queue.is_empty() {
            self.waiting_since = None;
        }
        drained
    }

    /// Restarts the wait after the bearer was served in `slot` as the
    /// `rank`-th bearer of that slot's allocation order.
    pub fn mark_served(&mut self, slot: u64, rank: usize) {
        self.waiting_since = if self.queue.is_empty() { None } else { Some(slot) };
        self.service_rank = rank;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotSchedule {
    pub slot: u64,
    pub direction: Direction,
    /// RB → index into the bearer slice.
    pub rbs: Vec<Option<usize>>,
}

impl SlotSchedule {
    /// Bearers in order of first allocation, with their RB lists.
    pub fn allocations(&self) -> Vec<(usize, Vec<usize>)> {
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        for (rb, b) in self.rbs.iter().enumerate() {
            if let Some(b) = *b {
                match out.iter_mut().find(|(x, _)| *x == b) {
                    Some((_, v)) => v.push(rb),
                    None => out.push((b, vec![rb])),
                }
            }
        }
        out
    }

    pub fn used_rbs(&self) -> usize {
        self.rbs.iter().filter(|r| r.is_some()).count()
    }
}

/// Walks RBs in ascending order. Each RB goes to the eligible bearer with
/// the longest wait whose backlog is not yet covered at its per-RB capacity
/// `bits_per_rb[i]`. Equal waits keep the previous service order, then the
/// lowest UE id wins. RBs left once every backlog is covered are shared
/// cyclically among the scheduled bearers, starting at an offset that
/// rotates with the slot, so that no RB idles while data is queued.
pub fn rr_schedule(
    bearers: &[Bearer],
    slot: u64,
    direction: Direction,
    bits_per_rb: &[u64],
    num_rbs: usize,
) -> Result<SlotSchedule> {
    if bits_per_rb.len() != bearers.len() {
        return Err(Error::DimensionMismatch(format!("{} capacities for {} bearers", bits_per_rb.len(), bearers.len())));
    }
    let eligible = |i: usize| bearers[i].direction == direction && !bearers[i].is_empty();
    if let Some(i) = (0..bearers.len()).find(|&i| eligible(i) && bits_per_rb[i] == 0) {
        return Err(Error::InvalidInput(format!("bearer {i} has zero per-RB capacity")));
    }
    let mut granted = vec![0u64; bearers.len()];
    let mut rbs = vec![None; num_rbs];
    let mut order: Vec<usize> = Vec::new();
    for slot_rb in rbs.iter_mut() {
        let pick = (0..bearers.len())
            .filter(|&i| eligible(i) && granted[i] < bearers[i].backlog_bits())
            .min_by_key(|&i| (std::cmp::Reverse(bearers[i].wait(slot)), bearers[i].service_rank, bearers[i].ue));
        match pick {
            Some(i) => {
                granted[i] += bits_per_rb[i];
                if !order.contains(&i) {
                    order.push(i);
                }
                *slot_rb = Some(i);
            }
            None => break,
        }
    }
    if !order.is_empty() {
        let start = (slot % order.len() as u64) as usize;
        for (k, slot_rb) in rbs.iter_mut().filter(|r| r.is_none()).enumerate() {
            *slot_rb = Some(order[(start + k) % order.len()]);
        }
    }
    let sched = SlotSchedule { slot, direction, rbs };
    assert!(
        sched.used_rbs() == num_rbs || (0..bearers.len()).all(|i| !eligible(i)),
        "work conservation violated in slot {slot}"
    );
    Ok(sched)
}
