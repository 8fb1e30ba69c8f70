//! Useful, interference and noise power on one RB, for direct plus
//! amplify-and-forward paths summed in the power domain.
//!
//! The same construction serves both directions. A *signal* `y` is the
//! transmission intended for (DL) or originating from (UL) UE `y`; a
//! *receiver* `x` is the antenna/filter pair that decodes signal `x`.
//!
//! | field        | DL                                   | UL                                   |
//! |--------------|--------------------------------------|--------------------------------------|
//! | `direct[x][y]` | gNB (beam of y) → UE x             | UE y → gNB (rx beam of x)            |
//! | `hop1[r][y]`   | gNB (beam of y) → NCR r            | UE y → NCR r                         |
//! | `hop2[r][x]`   | NCR r → UE x                       | NCR r → gNB (rx beam of x)           |

use serde::{Deserialize, Serialize};

use crate::antenna::db_to_linear;
use crate::error::{Error, Result};

pub const THERMAL_NOISE_DBM_HZ: f64 = -174.0;
pub const NOISE_FIGURE_DB: f64 = 9.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = "DL")]
    Dl,
    #[serde(rename = "UL")]
    Ul,
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Direction::Dl => "DL",
            Direction::Ul => "UL",
        })
    }
}

/// Thermal noise over `bandwidth_hz` including the receiver noise figure, dBm.
pub fn noise_power_dbm(bandwidth_hz: f64) -> f64 {
    THERMAL_NOISE_DBM_HZ + 10.0 * bandwidth_hz.log10() + NOISE_FIGURE_DB
}

/// Effective power gains of all links involved on one RB.
#[derive(Clone, Debug, PartialEq)]
pub struct RbGains {
    pub direct: Vec<Vec<f64>>,
    pub hop1: Vec<Vec<f64>>,
    pub hop2: Vec<Vec<f64>>,
    /// Linear NCR gain per NCR on this RB (zero when not forwarding).
    pub ncr_gain: Vec<f64>,
    /// Transmit power per signal, mW.
    pub tx_power: Vec<f64>,
    /// Noise power per RB at every receiver, mW.
    pub noise: f64,
}

impl RbGains {
    pub fn num_signals(&self) -> usize {
        self.tx_power.len()
    }

    pub fn num_ncrs(&self) -> usize {
        self.ncr_gain.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_signals();
        let r = self.num_ncrs();
        let bad = self.direct.len() != n
            || self.direct.iter().any(|row| row.len() != n)
            || self.hop1.len() != r
            || self.hop2.len() != r
            || self.hop1.iter().chain(&self.hop2).any(|row| row.len() != n);
        if bad {
            return Err(Error::DimensionMismatch(format!("RB gains for {n} signals and {r} NCRs")));
        }
        let all = self
            .direct
            .iter()
            .chain(&self.hop1)
            .chain(&self.hop2)
            .flatten()
            .chain(&self.ncr_gain)
            .chain(&self.tx_power)
            .chain(std::iter::once(&self.noise));
        for v in all {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::InvalidInput(format!("power gain {v} is not a finite non-negative value")));
            }
        }
        Ok(())
    }

    fn check_receiver(&self, x: usize) -> Result<()> {
        if x >= self.num_signals() {
            return Err(Error::InvalidInput(format!("receiver {x} is not scheduled on this RB")));
        }
        Ok(())
    }

    /// Power of signal `y` arriving at receiver `x` over all paths.
    fn received(&self, x: usize, y: usize) -> f64 {
        let p = self.tx_power[y];
        let mut s = self.direct[x][y] * p;
        for r in 0..self.num_ncrs() {
            s += self.hop2[r][x] * self.ncr_gain[r] * self.hop1[r][y] * p;
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinrBreakdown {
    pub useful: f64,
    pub interference: f64,
    pub noise: f64,
    pub sinr: f64,
    pub rb: usize,
    pub direction: Direction,
}

impl SinrBreakdown {
    pub fn sinr_db(&self) -> f64 {
        10.0 * self.sinr.log10()
    }
}

pub fn useful_power(g: &RbGains, x: usize) -> Result<f64> {
    g.check_receiver(x)?;
    Ok(g.received(x, x))
}

pub fn interference_power(g: &RbGains, x: usize) -> Result<f64> {
    g.check_receiver(x)?;
    Ok((0..g.num_signals()).filter(|&y| y != x).map(|y| g.received(x, y)).sum())
}

/// Receiver noise plus the noise each NCR amplifies toward the receiver.
pub fn noise_power(g: &RbGains, x: usize) -> Result<f64> {
    g.check_receiver(x)?;
    let mut bracket = 1.0;
    for r in 0..g.num_ncrs() {
        bracket += g.hop2[r][x] * g.ncr_gain[r];
    }
    Ok(g.noise * bracket)
}

pub fn sinr(g: &RbGains, x: usize, rb: usize, direction: Direction) -> Result<SinrBreakdown> {
    let useful = useful_power(g, x)?;
    let interference = interference_power(g, x)?;
    let noise = noise_power(g, x)?;
    Ok(SinrBreakdown { useful, interference, noise, sinr: useful / (interference + noise), rb, direction })
}

/// Noise per RB in mW for the given RB bandwidth.
pub fn noise_per_rb_mw(bandwidth_hz: f64) -> f64 {
    db_to_linear(noise_power_dbm(bandwidth_hz))
}
