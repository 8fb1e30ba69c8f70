//! Run configuration files (TOML or JSON) and seed ranges.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::geometry::{build_grid, DeploymentScenario, NcrPlacement, ScenarioId};
use crate::link::SweepSchedule;
use crate::mac::SimConfig;
use crate::mac::engine::DEFAULT_WARMUP_SLOTS;
use crate::ncr::DEFAULT_MAX_GAIN_DB;
use crate::network::CodebookConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    List(Vec<u64>),
    Range(String),
}

impl SeedSpec {
    pub fn resolve(&self) -> Result<Vec<u64>> {
        match self {
            SeedSpec::List(v) if v.is_empty() => Err(Error::Config("seed list is empty".into())),
            SeedSpec::List(v) => Ok(v.clone()),
            SeedSpec::Range(s) => parse_seeds(s),
        }
    }
}

/// Parses `a..b` (inclusive), `a..=b`, or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    let bad = || Error::Config(format!("invalid seed range `{s}`"));
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if b < a {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    let v = s.split(',').map(|x| x.trim().parse::<u64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
    if v.is_empty() {
        return Err(bad());
    }
    Ok(v)
}

/// Scenario names understood by the CLI and config files.
pub fn resolve_scenarios(names: &[String], custom: &[NcrPlacement]) -> Result<Vec<DeploymentScenario>> {
    let grid = build_grid();
    let mut out = Vec::new();
    for n in names {
        match n.trim().to_ascii_lowercase().as_str() {
            "all" => {
                for id in ScenarioId::PRESETS {
                    out.push(DeploymentScenario::preset(id, &grid)?);
                }
            }
            "custom" => {
                if custom.is_empty() {
                    return Err(Error::Config("scenario `custom` needs [[custom_ncr]] entries".into()));
                }
                out.push(DeploymentScenario::custom("custom", custom.to_vec()));
            }
            other => out.push(DeploymentScenario::preset(ScenarioId::parse(other)?, &grid)?),
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no scenario selected".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenarios: Vec<String>,
    pub seeds: SeedSpec,
    pub slots: u64,
    pub ues: usize,
    pub traffic_mbps: f64,
    pub warmup_slots: u64,
    pub ncr_max_gain_db: f64,
    pub sweeps: SweepSchedule,
    pub channel: ChannelConfig,
    pub codebook: CodebookConfig,
    pub custom_ncr: Vec<NcrPlacement>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenarios: vec!["all".into()],
            seeds: SeedSpec::Range("1..10".into()),
            slots: 4000,
            ues: 72,
            traffic_mbps: 2.0,
            warmup_slots: DEFAULT_WARMUP_SLOTS,
            ncr_max_gain_db: DEFAULT_MAX_GAIN_DB,
            sweeps: SweepSchedule::default(),
            channel: ChannelConfig::default(),
            codebook: CodebookConfig::default(),
            custom_ncr: Vec::new(),
        }
    }
}

impl RunConfig {
    pub fn from_str(text: &str, json: bool) -> Result<Self> {
        let cfg: Self = if json { serde_json::from_str(text)? } else { toml::from_str(text)? };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::from_str(&text, json)
    }

    pub fn validate(&self) -> Result<()> {
        let scenarios = resolve_scenarios(&self.scenarios, &self.custom_ncr)?;
        let seeds = self.seeds.resolve()?;
        self.sim_config(&scenarios[0], seeds[0]).validate()
    }

    pub fn sim_config(&self, scenario: &DeploymentScenario, seed: u64) -> SimConfig {
        SimConfig {
            scenario: scenario.clone(),
            seed,
            slots: self.slots,
            ues: self.ues,
            traffic_mbps: self.traffic_mbps,
            sweeps: self.sweeps,
            channel: self.channel.clone(),
            codebook: self.codebook,
            ncr_max_gain_db: self.ncr_max_gain_db,
            ncr_enabled: true,
            warmup_slots: self.warmup_slots,
        }
    }
}
