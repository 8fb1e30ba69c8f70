//! Network-controlled repeater: MT/Fwd split, panels and the
//! amplify-and-forward power gain.

use serde::{Deserialize, Serialize};

use crate::antenna::{db_to_linear, UraPanel};
use crate::error::{Error, Result};
use crate::geometry::{NetworkNode, NodeId, NodeKind};

pub const DEFAULT_MAX_GAIN_DB: f64 = 90.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NcrNode {
    pub node: NetworkNode,
    pub backhaul_panel: UraPanel,
    pub access_panels: Vec<UraPanel>,
    pub max_gain_db: f64,
    /// Total output power cap summed over the forwarded RBs.
    pub max_output_dbm: f64,
    pub controlling_gnb: NodeId,
}

impl NcrNode {
    pub fn from_node(node: NetworkNode, controlling_gnb: NodeId, max_gain_db: f64) -> Result<Self> {
        if node.kind != NodeKind::Ncr {
            return Err(Error::InvalidInput(format!("node {} is not an NCR", node.id)));
        }
        let (backhaul, access) = node
            .panels
            .split_first()
            .ok_or_else(|| Error::InvalidInput(format!("NCR {} has no panels", node.id)))?;
        if access.is_empty() || access.len() > 2 {
            return Err(Error::InvalidInput(format!(
                "NCR {} needs 1 or 2 access panels, has {}",
                node.id,
                access.len()
            )));
        }
        Ok(Self {
            backhaul_panel: backhaul.clone(),
            access_panels: access.to_vec(),
            max_gain_db,
            max_output_dbm: node.tx_power_dbm,
            controlling_gnb,
            node,
        })
    }

    pub fn id(&self) -> NodeId {
        self.node.id
    }
}

/// Access-side selection for one forwarded RB.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessBeam {
    pub panel: usize,
    pub beam: usize,
}

/// Side control information delivered to the NCR-MT for one slot. The
/// NCR-Fwd applies exactly this configuration and nothing else.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideControlInfo {
    pub slot: u64,
    pub forwarding: bool,
    pub backhaul_beam: usize,
    /// Access panel/beam per RB; `None` for RBs not forwarded.
    pub access: Vec<Option<AccessBeam>>,
    /// Linear power gain applied to every forwarded RB.
    pub gain: f64,
}

impl SideControlInfo {
    pub fn off(slot: u64, rbs: usize) -> Self {
        Self { slot, forwarding: false, backhaul_beam: 0, access: vec![None; rbs], gain: 0.0 }
    }

    /// Gain actually applied on `rb`.
    pub fn gain_on(&self, rb: usize) -> f64 {
        match (self.forwarding, self.access.get(rb)) {
            (true, Some(Some(_))) => self.gain,
            _ => 0.0,
        }
    }
}

/// Flat per-RB linear gain such that the summed output over the occupied RBs
/// equals `min(P_max, P_in + g_max)`. Input powers are per RB in dBm; `-inf`
/// marks an unoccupied RB.
pub fn set_gain(ncr: &NcrNode, input_power_dbm: &[f64]) -> Result<f64> {
    if input_power_dbm.iter().any(|p| p.is_nan() || *p == f64::INFINITY) {
        return Err(Error::InvalidInput("non-finite NCR input power".into()));
    }
    let total_mw: f64 = input_power_dbm.iter().map(|p| db_to_linear(*p)).sum();
    Ok(capped_gain(total_mw, ncr.max_gain_db, ncr.max_output_dbm))
}

/// Same policy on a linear total input (mW).
pub fn capped_gain(total_input_mw: f64, max_gain_db: f64, max_output_dbm: f64) -> f64 {
    let g_max = db_to_linear(max_gain_db);
    if total_input_mw <= 0.0 {
        return g_max;
    }
    g_max.min(db_to_linear(max_output_dbm) / total_input_mw)
}

/// Power of the forwarded summand `|γ_rx|² · g · |γ_bx|² · p`, given the
/// effective power gains of the two hops.
pub fn forwarded_term(gain: f64, hop1_gain: f64, hop2_gain: f64, tx_power: f64) -> f64 {
    hop2_gain * gain * hop1_gain * tx_power
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_grid, place_nodes, DeploymentScenario, ScenarioId};

    fn ncr() -> NcrNode {
        let g = build_grid();
        let sc = DeploymentScenario::preset(ScenarioId::S2OneNcrOnePanel, &g).unwrap();
        let nodes = place_nodes(&sc, &g).unwrap();
        NcrNode::from_node(nodes[1].clone(), NodeId::GNB, DEFAULT_MAX_GAIN_DB).unwrap()
    }

    #[test]
    fn power_cap_example() {
        let n = ncr();
        let g = set_gain(&n, &[-70.0; 66]).unwrap();
        let g_db = 10.0 * g.log10();
        let out_rb = -70.0 + g_db;
        assert!((out_rb - (33.0 - 10.0 * 66f64.log10())).abs() < 1e-9);
        assert!((g_db - 84.80).abs() < 0.01, "{g_db}");
    }

    #[test]
    fn halving_input_doubles_gain_when_capped() {
        let n = ncr();
        let g1 = set_gain(&n, &[-50.0; 10]).unwrap();
        let g2 = set_gain(&n, &[-50.0 - 10.0 * 2f64.log10(); 10]).unwrap();
        assert!((g2 / g1 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn weak_input_hits_max_gain_and_output_never_exceeds_cap() {
        let n = ncr();
        let g = set_gain(&n, &[-150.0; 66]).unwrap();
        assert!((10.0 * g.log10() - 90.0).abs() < 1e-9);
        for p in [-120.0, -90.0, -60.0, -30.0, 0.0] {
            let g = set_gain(&n, &[p; 66]).unwrap();
            let out = 66.0 * db_to_linear(p) * g;
            assert!(10.0 * out.log10() <= 33.0 + 1e-9);
        }
        assert!(set_gain(&n, &[f64::NAN]).is_err());
    }

    #[test]
    fn off_state_forwards_nothing() {
        let sci = SideControlInfo::off(0, 66);
        assert_eq!(sci.gain_on(3), 0.0);
        assert_eq!(forwarded_term(0.0, 1.0, 1.0, 1.0), 0.0);
        assert_eq!(forwarded_term(1.0, 1.0, 1.0, 1.0), 1.0);
    }

    #[test]
    fn forwarded_term_matches_product() {
        let (g, a, b, p) = (3.7e8, 2.1e-7, 4.4e-9, 0.05);
        let oracle = b * g * a * p;
        assert!((forwarded_term(g, a, b, p) - oracle).abs() <= 1e-12 * oracle);
    }

    #[test]
    fn non_ncr_node_rejected() {
        let g = build_grid();
        let sc = DeploymentScenario::preset(ScenarioId::S1Baseline, &g).unwrap();
        let nodes = place_nodes(&sc, &g).unwrap();
        assert!(NcrNode::from_node(nodes[0].clone(), NodeId::GNB, 90.0).is_err());
    }
}
