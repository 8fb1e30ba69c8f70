//! Instantiated topology of one run: nodes, codebooks, channel links and the
//! per-sweep beam-gain tables used to evaluate `|γ|²` cheaply.
//!
//! All channels are rank one, so for beams `f` (tx) and `d` (rx)
//! `|d H f|² = |A h|² · B_tx(f) · B_rx(d)` where `B` is the beam power gain
//! toward the link direction. The tables cache `B` per beam; only `h` varies
//! per slot and RB.

use crate::antenna::{build_codebook, Codebook, UraPanel};
use crate::channel::{
    los_draw, los_probability_umi, ChannelConfig, ChannelLink, LinkGeometry, LinkKey, LosModel, RB_BANDWIDTH_HZ,
    SLOT_DURATION_S,
};
use crate::error::Result;
use crate::geometry::{
    drop_ues, los_blocked, place_nodes, DeploymentScenario, MadridGrid, NetworkNode, NodeId, NodeKind, Point3,
};
use crate::ncr::NcrNode;

pub const NUM_RBS: usize = 66;

/// LOS state of a link toward a UE under the configured LOS model.
fn access_los(cfg: &ChannelConfig, seed: u64, grid: &MadridGrid, a: (NodeId, Point3), b: (NodeId, Point3)) -> bool {
    if los_blocked(a.1, b.1, grid) {
        return false;
    }
    match cfg.los_model {
        LosModel::Geometric => true,
        LosModel::Stochastic => los_draw(LinkKey::new(a.0, b.0), seed) < los_probability_umi(a.1.distance_2d(b.1)),
    }
}

/// Codebook geometry shared by all gNB/NCR panels.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct CodebookConfig {
    pub n_az: usize,
    pub n_el: usize,
}

impl Default for CodebookConfig {
    fn default() -> Self {
        Self { n_az: 13, n_el: 5 }
    }
}

#[derive(Clone, Debug)]
pub struct NcrCodebooks {
    pub backhaul: Codebook,
    pub access: Vec<Codebook>,
}

/// Beam power gains toward the current UE positions.
#[derive(Clone, Debug, Default)]
pub struct BeamGainTables {
    /// `[ue][gnb beam]`
    pub gnb_to_ue: Vec<Vec<f64>>,
    /// `[ncr][ue][access panel][beam]`
    pub ncr_to_ue: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Clone, Debug)]
pub struct Network {
    pub grid: MadridGrid,
    pub channel_cfg: ChannelConfig,
    pub seed: u64,
    pub gnb: NetworkNode,
    pub gnb_codebook: Codebook,
    pub ncrs: Vec<NcrNode>,
    pub ncr_codebooks: Vec<NcrCodebooks>,
    pub ues: Vec<NetworkNode>,
    /// `[ue]`
    pub gnb_ue: Vec<ChannelLink>,
    /// `[ncr][ue]`
    pub ncr_ue: Vec<Vec<ChannelLink>>,
    /// `[ncr]`, always LOS (planned backhaul).
    pub gnb_ncr: Vec<ChannelLink>,
    /// `[ncr][gnb beam]` gNB beam gain toward each NCR.
    pub gnb_to_ncr: Vec<Vec<f64>>,
    /// `[ncr][backhaul beam]` NCR backhaul beam gain toward the gNB.
    pub ncr_to_gnb: Vec<Vec<f64>>,
    pub tables: BeamGainTables,
}

impl Network {
    pub fn build(
        scenario: &DeploymentScenario,
        grid: &MadridGrid,
        ue_count: usize,
        channel_cfg: &ChannelConfig,
        codebook: CodebookConfig,
        max_gain_db: f64,
        seed: u64,
    ) -> Result<Self> {
        let nodes = place_nodes(scenario, grid)?;
        let gnb = nodes[0].clone();
        let ncrs = nodes[1..]
            .iter()
            .map(|n| NcrNode::from_node(n.clone(), gnb.id, max_gain_db))
            .collect::<Result<Vec<_>>>()?;
        let ues = drop_ues(ue_count, grid, seed)?;

        let gnb_codebook = build_codebook(&gnb.panels[0], codebook.n_az, codebook.n_el)?;
        let ncr_codebooks = ncrs
            .iter()
            .map(|n| {
                Ok(NcrCodebooks {
                    backhaul: build_codebook(&n.backhaul_panel, codebook.n_az, codebook.n_el)?,
                    access: n
                        .access_panels
                        .iter()
                        .map(|p| build_codebook(p, codebook.n_az, codebook.n_el))
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let ue_link = |from: &NetworkNode, ue: &NetworkNode| {
            let los = access_los(channel_cfg, seed, grid, (from.id, from.position), (ue.id, ue.position));
            ChannelLink::new(
                from.id,
                ue.id,
                LinkGeometry { pos_a: from.position, pos_b: ue.position, los, static_link: false },
                channel_cfg,
                seed,
            )
        };
        let gnb_ue = ues.iter().map(|u| ue_link(&gnb, u)).collect::<Result<Vec<_>>>()?;
        let ncr_ue = ncrs
            .iter()
            .map(|n| ues.iter().map(|u| ue_link(&n.node, u)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let gnb_ncr = ncrs
            .iter()
            .map(|n| {
                ChannelLink::new(
                    gnb.id,
                    n.id(),
                    LinkGeometry { pos_a: gnb.position, pos_b: n.node.position, los: true, static_link: true },
                    channel_cfg,
                    seed,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let gnb_to_ncr = ncrs
            .iter()
            .enumerate()
            .map(|(r, _)| beam_gains(&gnb.panels[0], &gnb_codebook, gnb_ncr[r].direction_from(gnb.id)))
            .collect();
        let ncr_to_gnb = ncrs
            .iter()
            .enumerate()
            .map(|(r, n)| beam_gains(&n.backhaul_panel, &ncr_codebooks[r].backhaul, gnb_ncr[r].direction_from(n.id())))
            .collect();

        let mut net = Self {
            grid: grid.clone(),
            channel_cfg: channel_cfg.clone(),
            seed,
            gnb,
            gnb_codebook,
            ncrs,
            ncr_codebooks,
            ues,
            gnb_ue,
            ncr_ue,
            gnb_ncr,
            gnb_to_ncr,
            ncr_to_gnb,
            tables: BeamGainTables::default(),
        };
        net.refresh_tables();
        Ok(net)
    }

    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    /// Moves UEs to `positions`, refreshing LOS, large-scale state and the
    /// beam-gain tables.
    pub fn update_ue_positions(&mut self, positions: &[Point3]) -> Result<()> {
        for (u, pos) in positions.iter().enumerate() {
            self.ues[u].position = *pos;
            let ue = (self.ues[u].id, *pos);
            let los = access_los(&self.channel_cfg, self.seed, &self.grid, (self.gnb.id, self.gnb.position), ue);
            update_link(&mut self.gnb_ue[u], self.gnb.id, self.gnb.position, self.ues[u].id, *pos, los, &self.channel_cfg)?;
            for (r, ncr) in self.ncrs.iter().enumerate() {
                let los = access_los(&self.channel_cfg, self.seed, &self.grid, (ncr.id(), ncr.node.position), ue);
                update_link(&mut self.ncr_ue[r][u], ncr.id(), ncr.node.position, self.ues[u].id, *pos, los, &self.channel_cfg)?;
            }
        }
        self.refresh_tables();
        Ok(())
    }

    fn refresh_tables(&mut self) {
        let gnb_panel = &self.gnb.panels[0];
        let gnb_to_ue = self
            .gnb_ue
            .iter()
            .map(|l| beam_gains(gnb_panel, &self.gnb_codebook, l.direction_from(self.gnb.id)))
            .collect();
        let ncr_to_ue = self
            .ncrs
            .iter()
            .enumerate()
            .map(|(r, n)| {
                self.ncr_ue[r]
                    .iter()
                    .map(|l| {
                        let dir = l.direction_from(n.id());
                        n.access_panels
                            .iter()
                            .zip(&self.ncr_codebooks[r].access)
                            .map(|(p, cb)| beam_gains(p, cb, dir))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        self.tables = BeamGainTables { gnb_to_ue, ncr_to_ue };
    }

    /// Band-averaged `|A h|²` of a link at `slot`.
    pub fn wideband_gain(link: &ChannelLink, slot: u64) -> f64 {
        (0..NUM_RBS).map(|k| link.scalar(slot, k).norm_sqr()).sum::<f64>() / NUM_RBS as f64
    }

    pub fn ue_index(&self, id: NodeId) -> Option<usize> {
        self.ues.iter().position(|u| u.id == id)
    }

    pub fn ncr_index(&self, id: NodeId) -> Option<usize> {
        self.ncrs.iter().position(|n| n.id() == id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NetworkNode> {
        std::iter::once(&self.gnb).chain(self.ncrs.iter().map(|n| &n.node)).chain(self.ues.iter())
    }

    pub fn kind_count(&self, kind: NodeKind) -> usize {
        self.nodes().filter(|n| n.kind == kind).count()
    }
}

fn update_link(
    link: &mut ChannelLink,
    a: NodeId,
    pos_a: Point3,
    b: NodeId,
    pos_b: Point3,
    los: bool,
    cfg: &ChannelConfig,
) -> Result<()> {
    let (lo, hi) = if link.key.lo == a { (pos_a, pos_b) } else { (pos_b, pos_a) };
    debug_assert!(link.key.lo == a || link.key.lo == b);
    link.update_positions(lo, hi, los, cfg)
}

/// Beam power gain of every codebook entry toward `dir`.
pub fn beam_gains(panel: &UraPanel, codebook: &Codebook, dir: Point3) -> Vec<f64> {
    codebook.beams.iter().map(|b| panel.beam_gain(b, dir)).collect()
}

/// Seconds since the start of the run at the beginning of `slot`.
pub fn slot_time(slot: u64) -> f64 {
    slot as f64 * SLOT_DURATION_S
}

/// Frequency offset of `rb` from the band edge.
pub fn rb_offset_hz(rb: usize) -> f64 {
    rb as f64 * RB_BANDWIDTH_HZ
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, ScenarioId};
    use crate::ncr::DEFAULT_MAX_GAIN_DB;

    fn build(los_model: LosModel, seed: u64) -> Network {
        let grid = build_grid();
        let sc = DeploymentScenario::preset(ScenarioId::S4TwoNcrCorners, &grid).unwrap();
        let cfg = ChannelConfig { los_model, ..ChannelConfig::default() };
        Network::build(&sc, &grid, 72, &cfg, CodebookConfig::default(), DEFAULT_MAX_GAIN_DB, seed).unwrap()
    }

    #[test]
    fn stochastic_los_only_removes_geometric_los() {
        let geo = build(LosModel::Geometric, 3);
        let sto = build(LosModel::Stochastic, 3);
        let (mut kept, mut total) = (0, 0);
        for r in 0..geo.ncrs.len() {
            for u in 0..geo.ues.len() {
                let (g, s) = (geo.ncr_ue[r][u].large.los, sto.ncr_ue[r][u].large.los);
                assert!(g || !s, "stochastic LOS where geometry blocks");
                total += usize::from(g);
                kept += usize::from(s);
            }
        }
        assert!(kept < total && kept > 0, "{kept}/{total}");
        for r in 0..geo.ncrs.len() {
            assert!(sto.gnb_ncr[r].large.los);
        }
    }
}
