//! Slot loop: sweeps, traffic, scheduling, per-RB SINR, link adaptation and
//! sample collection.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::antenna::db_to_linear;
use crate::channel::{ChannelConfig, RB_BANDWIDTH_HZ, SLOT_DURATION_S};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, step_mobility, DeploymentScenario, MobilityState, Point3};
use crate::link::{associate, sweep_access, sweep_backhaul, Association, BackhaulPair, ServingPath, SweepSchedule};
use crate::metrics::{MetricsBundle, SinrSample, TbStats};
use crate::ncr::{capped_gain, AccessBeam, DEFAULT_MAX_GAIN_DB};
use crate::network::{CodebookConfig, Network, NUM_RBS};
use crate::phy::bler::{cqi_for_mcs, select};
use crate::phy::sinr::noise_per_rb_mw;
use crate::phy::{outer_loop_update, sinr, BlerTable, Direction, LinkAdaptationState, RbGains, MCS_SPECTRAL_EFFICIENCY};
use crate::rng::{stream_rng, tag};

use super::scheduler::{rr_schedule, Bearer, SlotSchedule};
use super::tdd::slot_type;
use super::traffic::{generate_traffic, CbrSource};

pub const SUBCARRIERS_PER_RB: f64 = 12.0;
pub const SYMBOLS_PER_SLOT: f64 = 14.0;
pub const OVERHEAD_FRACTION: f64 = 0.2;
pub const DEFAULT_WARMUP_SLOTS: u64 = 100;

/// Transport-block bits one RB carries at `mcs`.
pub fn bits_per_rb(mcs: usize) -> u64 {
    (MCS_SPECTRAL_EFFICIENCY[mcs] * SUBCARRIERS_PER_RB * SYMBOLS_PER_SLOT * (1.0 - OVERHEAD_FRACTION)).floor() as u64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scenario: DeploymentScenario,
    pub seed: u64,
    pub slots: u64,
    pub ues: usize,
    pub traffic_mbps: f64,
    pub sweeps: SweepSchedule,
    pub channel: ChannelConfig,
    pub codebook: CodebookConfig,
    pub ncr_max_gain_db: f64,
    /// When false every NCR forwards nothing (gain zero).
    pub ncr_enabled: bool,
    pub warmup_slots: u64,
}

impl SimConfig {
    pub fn new(scenario: DeploymentScenario, seed: u64) -> Self {
        Self {
            scenario,
            seed,
            slots: 4000,
            ues: 72,
            traffic_mbps: 2.0,
            sweeps: SweepSchedule::default(),
            channel: ChannelConfig::default(),
            codebook: CodebookConfig::default(),
            ncr_max_gain_db: DEFAULT_MAX_GAIN_DB,
            ncr_enabled: true,
            warmup_slots: DEFAULT_WARMUP_SLOTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slots == 0 {
            return Err(Error::Config("duration must be at least one slot".into()));
        }
        if self.ues == 0 {
            return Err(Error::Config("UE count must be positive".into()));
        }
        if !(self.traffic_mbps.is_finite() && self.traffic_mbps > 0.0) {
            return Err(Error::Config(format!("traffic rate must be positive, got {}", self.traffic_mbps)));
        }
        if self.codebook.n_az == 0 || self.codebook.n_el == 0 {
            return Err(Error::Config("codebook dimensions must be positive".into()));
        }
        self.sweeps.validate()
    }

    pub fn simulated_seconds(&self) -> f64 {
        self.slots as f64 * SLOT_DURATION_S
    }
}

/// Per-slot state of the frozen link-management decisions.
struct LinkState {
    backhaul: Vec<BackhaulPair>,
    assoc: Vec<Association>,
    /// `[ue][ncr]` access beam each NCR uses when forwarding to that UE.
    access: Vec<Vec<Option<AccessBeam>>>,
    decisions: u64,
    via_decisions: u64,
}

struct Engine {
    cfg: SimConfig,
    net: Network,
    mobility: MobilityState,
    table: BlerTable,
    sources: Vec<CbrSource>,
    /// Index `2·ue + {0: DL, 1: UL}`.
    bearers: Vec<Bearer>,
    la: Vec<LinkAdaptationState>,
    /// Last effective SINR per bearer, dB.
    estimate: Vec<Option<f64>>,
    out_of_range: Vec<bool>,
    link: Option<LinkState>,
    noise_mw: f64,
    samples: Vec<SinrSample>,
    dl: TbStats,
    ul: TbStats,
}

pub fn run_simulation(cfg: &SimConfig) -> Result<MetricsBundle> {
    cfg.validate()?;
    let mut eng = Engine::new(cfg.clone())?;
    for slot in 0..cfg.slots {
        eng.step(slot)?;
    }
    Ok(eng.finish())
}

fn bearer_index(ue: usize, dir: Direction) -> usize {
    2 * ue + usize::from(dir == Direction::Ul)
}

impl Engine {
    fn new(cfg: SimConfig) -> Result<Self> {
        let grid = build_grid();
        let net = Network::build(
            &cfg.scenario,
            &grid,
            cfg.ues,
            &cfg.channel,
            cfg.codebook,
            cfg.ncr_max_gain_db,
            cfg.seed,
        )?;
        let mobility = MobilityState::new(&net.ues, &grid, cfg.channel.ue_speed_mps, cfg.seed)?;
        let mut sources = Vec::with_capacity(2 * cfg.ues);
        let mut bearers = Vec::with_capacity(2 * cfg.ues);
        for ue in &net.ues {
            for dir in [Direction::Dl, Direction::Ul] {
                sources.push(CbrSource::from_rate(ue.id, dir, cfg.traffic_mbps)?);
                bearers.push(Bearer::new(ue.id, dir));
            }
        }
        let n = bearers.len();
        Ok(Self {
            net,
            mobility,
            table: BlerTable::packaged()?,
            sources,
            bearers,
            la: vec![LinkAdaptationState::default(); n],
            estimate: vec![None; n],
            out_of_range: vec![false; n],
            link: None,
            noise_mw: noise_per_rb_mw(RB_BANDWIDTH_HZ),
            samples: Vec::new(),
            dl: TbStats::default(),
            ul: TbStats::default(),
            cfg,
        })
    }

    fn step(&mut self, slot: u64) -> Result<()> {
        if slot > 0 {
            step_mobility(&mut self.mobility, &self.net.grid, SLOT_DURATION_S, self.cfg.seed)?;
        }
        if self.cfg.sweeps.is_access_slot(slot) {
            self.sweep(slot)?;
        }
        generate_traffic(&self.sources, &mut self.bearers, slot)?;

        let dir = slot_type(slot);
        let caps: Vec<u64> = (0..self.bearers.len())
            .map(|i| {
                if self.bearers[i].direction != dir || self.bearers[i].is_empty() {
                    return 1;
                }
                let est = self.estimate[i].unwrap_or(0.0);
                let sel = select(&self.table, &mut self.la[i], est);
                self.out_of_range[i] = sel.out_of_range;
                bits_per_rb(sel.mcs).max(1)
            })
            .collect();
        let sched = rr_schedule(&self.bearers, slot, dir, &caps, NUM_RBS)?;
        if sched.used_rbs() == 0 {
            return Ok(());
        }
        let per_rb = self.evaluate(&sched, slot)?;
        for (rank, (b, rbs)) in sched.allocations().into_iter().enumerate() {
            let eff = rbs.iter().map(|k| per_rb[*k]).sum::<f64>() / rbs.len() as f64;
            self.transmit(b, rbs.len(), eff, slot, rank);
        }
        Ok(())
    }

    fn sweep(&mut self, slot: u64) -> Result<()> {
        if slot > 0 {
            let positions: Vec<Point3> = self.mobility.ues.iter().map(|u| u.position).collect();
            self.net.update_ue_positions(&positions)?;
        }
        let backhaul = match self.link.take() {
            Some(l) if !self.cfg.sweeps.is_backhaul_slot(slot) => l,
            prev => {
                let (decisions, via) = prev.map_or((0, 0), |l| (l.decisions, l.via_decisions));
                LinkState {
                    backhaul: sweep_backhaul(&self.net, slot),
                    assoc: Vec::new(),
                    access: Vec::new(),
                    decisions,
                    via_decisions: via,
                }
            }
        };
        let mut ls = backhaul;
        let prev = (!ls.assoc.is_empty()).then_some(ls.assoc.as_slice());
        let reports = sweep_access(&self.net, &ls.backhaul, prev, self.cfg.ncr_enabled, slot)?;
        let assoc = associate(&reports, &ls.backhaul, slot)?;
        let ncr_ids: Vec<_> = self.net.ncrs.iter().map(|n| n.id()).collect();
        ls.access = reports.iter().map(|r| r.best_per_ncr(&ncr_ids)).collect();
        let ref_mw = db_to_linear(self.net.gnb.tx_power_dbm) / NUM_RBS as f64;
        for (u, a) in assoc.iter().enumerate() {
            // First CSI: sweep RSRP against noise, UL shifted by the power gap.
            let snr = a.rsrp_dbm - 10.0 * self.noise_mw.log10();
            let ul_gap = 10.0 * (ref_mw / (db_to_linear(self.net.ues[u].tx_power_dbm) / NUM_RBS as f64)).log10();
            for (dir, guess) in [(Direction::Dl, snr), (Direction::Ul, snr - ul_gap)] {
                let i = bearer_index(u, dir);
                if self.estimate[i].is_none() {
                    self.estimate[i] = Some(guess);
                }
            }
            ls.decisions += 1;
            ls.via_decisions += u64::from(a.path != ServingPath::Direct);
        }
        ls.assoc = assoc;
        self.link = Some(ls);
        Ok(())
    }

    /// SINR in dB on every used RB of the slot.
    fn evaluate(&self, sched: &SlotSchedule, slot: u64) -> Result<Vec<f64>> {
        let ls = self.link.as_ref().ok_or_else(|| Error::InvalidInput("no association before first slot".into()))?;
        let net = &self.net;
        let nr = net.ncrs.len();
        let allocs = sched.allocations();
        let mut rb_len = vec![0usize; self.bearers.len()];
        for (b, rbs) in &allocs {
            rb_len[*b] = rbs.len();
        }
        let dir = sched.direction;
        let gnb_mw = db_to_linear(net.gnb.tx_power_dbm);

        // Per-RB link gains for the single signal on each RB.
        struct Rb {
            direct: f64,
            hop1: Vec<f64>,
            hop2: Vec<f64>,
            p: f64,
        }
        let mut rbs: Vec<Option<Rb>> = Vec::with_capacity(NUM_RBS);
        for (k, b) in sched.rbs.iter().enumerate() {
            let Some(b) = *b else {
                rbs.push(None);
                continue;
            };
            let u = b / 2;
            let j = ls.assoc[u].gnb_beam;
            let p = match dir {
                Direction::Dl => gnb_mw / sched.used_rbs() as f64,
                Direction::Ul => db_to_linear(net.ues[u].tx_power_dbm) / rb_len[b] as f64,
            };
            let direct = net.gnb_ue[u].scalar(slot, k).norm_sqr() * net.tables.gnb_to_ue[u][j];
            let mut backhaul = Vec::with_capacity(nr);
            let mut access = Vec::with_capacity(nr);
            for r in 0..nr {
                let pair = &ls.backhaul[r];
                backhaul.push(
                    net.gnb_ncr[r].scalar(slot, k).norm_sqr() * net.gnb_to_ncr[r][j] * net.ncr_to_gnb[r][pair.ncr_beam],
                );
                access.push(match ls.access[u][r] {
                    Some(ab) => net.ncr_ue[r][u].scalar(slot, k).norm_sqr() * net.tables.ncr_to_ue[r][u][ab.panel][ab.beam],
                    None => 0.0,
                });
            }
            let (hop1, hop2) = match dir {
                Direction::Dl => (backhaul, access),
                Direction::Ul => (access, backhaul),
            };
            rbs.push(Some(Rb { direct, hop1, hop2, p }));
        }

        // Flat gain per NCR from its total input over the occupied RBs.
        let gains: Vec<f64> = (0..nr)
            .map(|r| {
                if !self.cfg.ncr_enabled {
                    return 0.0;
                }
                let input: f64 = rbs.iter().flatten().map(|x| x.p * x.hop1[r]).sum();
                let ncr = &net.ncrs[r];
                capped_gain(input, ncr.max_gain_db, ncr.max_output_dbm)
            })
            .collect();

        let mut out = vec![f64::NAN; NUM_RBS];
        for (k, rb) in rbs.iter().enumerate() {
            let Some(rb) = rb else { continue };
            let g = RbGains {
                direct: vec![vec![rb.direct]],
                hop1: rb.hop1.iter().map(|h| vec![*h]).collect(),
                hop2: rb.hop2.iter().map(|h| vec![*h]).collect(),
                ncr_gain: gains.clone(),
                tx_power: vec![rb.p],
                noise: self.noise_mw,
            };
            out[k] = sinr(&g, 0, k, dir)?.sinr_db();
        }
        Ok(out)
    }

    fn transmit(&mut self, b: usize, n_rbs: usize, eff_db: f64, slot: u64, rank: usize) {
        let dir = self.bearers[b].direction;
        let state = self.la[b];
        let bler = self.table.bler(state.mcs, eff_db);
        let u = b / 2;
        let mut rng = stream_rng(self.cfg.seed, &[tag::CRC, slot, u as u64, dir as u64]);
        let ok = rng.random::<f64>() >= bler;
        let stats = match dir {
            Direction::Dl => &mut self.dl,
            Direction::Ul => &mut self.ul,
        };
        stats.transmitted += 1;
        stats.errors += u64::from(!ok);
        stats.out_of_range += u64::from(self.out_of_range[b]);
        if ok {
            let tb = bits_per_rb(state.mcs) * n_rbs as u64;
            stats.bits_delivered += self.bearers[b].drain_bits(tb, slot);
        }
        self.bearers[b].mark_served(slot, rank);
        self.la[b] = outer_loop_update(LinkAdaptationState { cqi: cqi_for_mcs(state.mcs), ..state }, ok);
        self.estimate[b] = Some(eff_db);
        if slot >= self.cfg.warmup_slots {
            self.samples.push(SinrSample {
                ue: self.net.ues[u].id,
                group: self.net.ues[u].block_group,
                direction: dir,
                slot,
                sinr_db: eff_db,
            });
        }
    }

    fn finish(self) -> MetricsBundle {
        let via = self.link.as_ref().map_or(0.0, |l| {
            if l.decisions == 0 {
                0.0
            } else {
                l.via_decisions as f64 / l.decisions as f64
            }
        });
        MetricsBundle {
            scenario: self.cfg.scenario.name.clone(),
            seed: self.cfg.seed,
            slots: self.cfg.slots,
            samples: self.samples,
            dl: self.dl,
            ul: self.ul,
            via_ncr_fraction: via,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScenarioId;

    fn cfg(id: ScenarioId, seed: u64, slots: u64) -> SimConfig {
        let sc = DeploymentScenario::preset(id, &build_grid()).unwrap();
        SimConfig { slots, ..SimConfig::new(sc, seed) }
    }

    #[test]
    fn tb_size() {
        assert_eq!(bits_per_rb(0), 31);
        assert_eq!(bits_per_rb(28), 746);
    }

    #[test]
    fn validation() {
        let mut c = cfg(ScenarioId::S1Baseline, 1, 0);
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        c.slots = 4000;
        assert!((c.simulated_seconds() - 1.0).abs() < 1e-12);
        c.ues = 0;
        assert!(c.validate().is_err());
        c.ues = 3;
        c.sweeps = SweepSchedule { t_backhaul: 10, t_access: 80 };
        assert!(c.validate().is_err());
    }

    #[test]
    fn short_run_is_deterministic_and_sane() {
        let c = cfg(ScenarioId::S4TwoNcrCorners, 7, 400);
        let a = run_simulation(&c).unwrap();
        let b = run_simulation(&c).unwrap();
        assert_eq!(a, b);
        assert!(!a.samples.is_empty());
        assert!(a.samples.iter().all(|s| s.sinr_db.is_finite() && s.slot >= 100));
        assert!(a.dl.transmitted > 0 && a.ul.transmitted > 0);
    }

    #[test]
    fn disabled_ncrs_reproduce_the_baseline() {
        let base = run_simulation(&cfg(ScenarioId::S1Baseline, 3, 300)).unwrap();
        let mut c = cfg(ScenarioId::S3OneNcrTwoPanels, 3, 300);
        c.ncr_enabled = false;
        let off = run_simulation(&c).unwrap();
        assert_eq!(off.samples, base.samples);
    }
}
