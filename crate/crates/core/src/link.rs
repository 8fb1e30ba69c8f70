//! Beam sweeping, measurement reports and the direct-vs-NCR association.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::NodeId;
use crate::ncr::{capped_gain, AccessBeam};
use crate::network::{Network, NUM_RBS};

/// Beam-sweep periods in slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSchedule {
    pub t_backhaul: u64,
    pub t_access: u64,
}

impl Default for SweepSchedule {
    fn default() -> Self {
        // 1 s and 20 ms at 0.25 ms slots.
        Self { t_backhaul: 4000, t_access: 80 }
    }
}

impl SweepSchedule {
    pub fn new(t_backhaul: u64, t_access: u64) -> Result<Self> {
        let s = Self { t_backhaul, t_access };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_access == 0 {
            return Err(Error::Config("t_access must be positive".into()));
        }
        if self.t_backhaul < self.t_access {
            return Err(Error::Config(format!(
                "t_backhaul ({}) must not be shorter than t_access ({})",
                self.t_backhaul, self.t_access
            )));
        }
        Ok(())
    }

    pub fn is_backhaul_slot(&self, slot: u64) -> bool {
        slot.is_multiple_of(self.t_backhaul)
    }

    pub fn is_access_slot(&self, slot: u64) -> bool {
        slot.is_multiple_of(self.t_access)
    }
}

/// Frozen gNB/NCR backhaul beam pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackhaulPair {
    pub ncr: NodeId,
    pub gnb_beam: usize,
    pub ncr_beam: usize,
    /// `|γ_{b,r}|²` of the pair, band-averaged at sweep time.
    pub gain: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ServingPath {
    Direct,
    Via { ncr: NodeId, panel: usize },
}

impl std::fmt::Display for ServingPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServingPath::Direct => write!(f, "direct"),
            ServingPath::Via { ncr, panel } => write!(f, "via-{}-p{}", ncr, panel),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Candidate {
    GnbBeam { beam: usize },
    NcrBeam { ncr: NodeId, panel: usize, beam: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateRsrp {
    pub candidate: Candidate,
    pub rsrp_dbm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub ue: NodeId,
    /// Only candidates with finite RSRP; NCR beams of a non-forwarding NCR
    /// are excluded.
    pub candidates: Vec<CandidateRsrp>,
    pub reporting_path: ServingPath,
}

impl MeasurementReport {
    /// Best access beam per NCR (index into `ncrs`), in NCR order.
    pub fn best_per_ncr(&self, ncrs: &[NodeId]) -> Vec<Option<AccessBeam>> {
        ncrs.iter()
            .map(|id| {
                let mut best: Option<(f64, AccessBeam)> = None;
                for c in &self.candidates {
                    if let Candidate::NcrBeam { ncr, panel, beam } = c.candidate {
                        if ncr == *id && best.is_none_or(|(r, _)| c.rsrp_dbm > r) {
                            best = Some((c.rsrp_dbm, AccessBeam { panel, beam }));
                        }
                    }
                }
                best.map(|(_, b)| b)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub ue: NodeId,
    pub path: ServingPath,
    pub gnb_beam: usize,
    pub ncr_beam: Option<usize>,
    pub rsrp_dbm: f64,
    pub valid_from: u64,
}

/// Selects, for each NCR, the beam pair maximising `|γ_{b,r}|²`. Ties go to
/// the lowest gNB beam, then the lowest NCR beam.
pub fn sweep_backhaul(net: &Network, slot: u64) -> Vec<BackhaulPair> {
    net.ncrs
        .iter()
        .enumerate()
        .map(|(r, ncr)| {
            let fade = Network::wideband_gain(&net.gnb_ncr[r], slot);
            let mut best = (f64::NEG_INFINITY, 0, 0);
            for (j, gb) in net.gnb_to_ncr[r].iter().enumerate() {
                for (i, nb) in net.ncr_to_gnb[r].iter().enumerate() {
                    let v = gb * nb;
                    if v > best.0 {
                        best = (v, j, i);
                    }
                }
            }
            BackhaulPair { ncr: ncr.id(), gnb_beam: best.1, ncr_beam: best.2, gain: best.0 * fade }
        })
        .collect()
}

/// Per-RB gNB transmit power at full-band load, used as the sweep reference.
pub fn reference_power_mw(net: &Network) -> f64 {
    crate::antenna::db_to_linear(net.gnb.tx_power_dbm) / NUM_RBS as f64
}

/// Gain an NCR would apply while forwarding a full-band reference signal
/// over its backhaul pair; zero when forwarding is disabled.
pub fn reference_gain(net: &Network, r: usize, pair: &BackhaulPair, ncr_enabled: bool) -> f64 {
    if !ncr_enabled {
        return 0.0;
    }
    let ncr = &net.ncrs[r];
    capped_gain(reference_power_mw(net) * NUM_RBS as f64 * pair.gain, ncr.max_gain_db, ncr.max_output_dbm)
}

/// One report per UE with end-to-end RSRP of every gNB beam and every NCR
/// access beam. Via-NCR candidates go through the frozen backhaul pairs and
/// the reference gain.
pub fn sweep_access(
    net: &Network,
    backhaul: &[BackhaulPair],
    previous: Option<&[Association]>,
    ncr_enabled: bool,
    slot: u64,
) -> Result<Vec<MeasurementReport>> {
    if backhaul.len() != net.ncrs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} backhaul pairs for {} NCRs",
            backhaul.len(),
            net.ncrs.len()
        )));
    }
    let p = reference_power_mw(net);
    let gains: Vec<f64> =
        backhaul.iter().enumerate().map(|(r, pair)| reference_gain(net, r, pair, ncr_enabled)).collect();
    (0..net.num_ues())
        .map(|u| {
            let mut candidates = Vec::new();
            let fade = Network::wideband_gain(&net.gnb_ue[u], slot);
            for (beam, bg) in net.tables.gnb_to_ue[u].iter().enumerate() {
                candidates.push(CandidateRsrp { candidate: Candidate::GnbBeam { beam }, rsrp_dbm: to_dbm(p * fade * bg) });
            }
            for (r, ncr) in net.ncrs.iter().enumerate() {
                if gains[r] <= 0.0 {
                    continue;
                }
                let hop2 = Network::wideband_gain(&net.ncr_ue[r][u], slot);
                let front = p * backhaul[r].gain * gains[r] * hop2;
                for (panel, beams) in net.tables.ncr_to_ue[r][u].iter().enumerate() {
                    for (beam, bg) in beams.iter().enumerate() {
                        let rsrp = to_dbm(front * bg);
                        if rsrp.is_finite() {
                            candidates.push(CandidateRsrp {
                                candidate: Candidate::NcrBeam { ncr: ncr.id(), panel, beam },
                                rsrp_dbm: rsrp,
                            });
                        }
                    }
                }
            }
            candidates.retain(|c| c.rsrp_dbm.is_finite());
            if candidates.is_empty() {
                return Err(Error::InvalidInput(format!("UE {} hears no beam", net.ues[u].id)));
            }
            let reporting_path = previous.and_then(|a| a.get(u)).map_or(ServingPath::Direct, |a| a.path);
            Ok(MeasurementReport { ue: net.ues[u].id, candidates, reporting_path })
        })
        .collect()
}

fn to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Orders candidates for the tie rule: direct before via, then lowest node
/// id, panel and beam.
fn tie_key(c: &Candidate) -> (u8, u32, usize, usize) {
    match *c {
        Candidate::GnbBeam { beam } => (0, 0, 0, beam),
        Candidate::NcrBeam { ncr, panel, beam } => (1, ncr.0, panel, beam),
    }
}

/// Argmax-RSRP association. `backhaul` supplies the gNB beam of via-NCR
/// paths.
pub fn associate(reports: &[MeasurementReport], backhaul: &[BackhaulPair], slot: u64) -> Result<Vec<Association>> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no measurement reports".into()));
    }
    reports
        .iter()
        .map(|rep| {
            let best = rep
                .candidates
                .iter()
                .filter(|c| c.rsrp_dbm.is_finite())
                .min_by(|a, b| b.rsrp_dbm.total_cmp(&a.rsrp_dbm).then_with(|| tie_key(&a.candidate).cmp(&tie_key(&b.candidate))))
                .ok_or_else(|| Error::InvalidInput(format!("empty report for UE {}", rep.ue)))?;
            let (path, gnb_beam, ncr_beam) = match best.candidate {
                Candidate::GnbBeam { beam } => (ServingPath::Direct, beam, None),
                Candidate::NcrBeam { ncr, panel, beam } => {
                    let pair = backhaul
                        .iter()
                        .find(|p| p.ncr == ncr)
                        .ok_or_else(|| Error::InvalidInput(format!("no backhaul pair for NCR {ncr}")))?;
                    (ServingPath::Via { ncr, panel }, pair.gnb_beam, Some(beam))
                }
            };
            Ok(Association { ue: rep.ue, path, gnb_beam, ncr_beam, rsrp_dbm: best.rsrp_dbm, valid_from: slot })
        })
        .collect()
}

/// Appends association rows `slot,ue,path,gnb_beam,ncr_beam,rsrp_dbm`.
pub fn write_association_trace<W: Write>(out: W, rows: &[Association], header: bool) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(["slot", "ue", "path", "gnb_beam", "ncr_beam", "rsrp_dbm"])?;
    }
    for a in rows {
        w.write_record([
            a.valid_from.to_string(),
            a.ue.0.to_string(),
            a.path.to_string(),
            a.gnb_beam.to_string(),
            a.ncr_beam.map_or(String::new(), |b| b.to_string()),
            format!("{:.4}", a.rsrp_dbm),
        ])?;
    }
    w.flush()?;
    Ok(())
}
