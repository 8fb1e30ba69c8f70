//! SINR-to-BLER curves, MCS selection and outer-loop link adaptation.
//!
//! The packaged curves (`data/bler_curves.txt`) are logistic AWGN
//! approximations anchored on the spectral efficiencies of the NR 64QAM MCS
//! table: each MCS reaches 10% BLER at `10·log10(2^SE − 1) + 1.5 dB`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spectral efficiency (bit/s/Hz) of MCS 0..=28.
pub const MCS_SPECTRAL_EFFICIENCY: [f64; 29] = [
    0.2344, 0.3066, 0.3770, 0.4902, 0.6016, 0.7402, 0.8770, 1.0273, 1.1758, 1.3262, 1.3281, 1.4766, 1.6953, 1.9141,
    2.1602, 2.4063, 2.5703, 2.5664, 2.7305, 3.0293, 3.3223, 3.6094, 3.9023, 4.2129, 4.5234, 4.8164, 5.1152, 5.3320,
    5.5547,
];

/// Spectral efficiency of CQI 1..=15.
pub const CQI_SPECTRAL_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152,
    5.5547,
];

pub const TARGET_BLER: f64 = 0.10;
pub const CURVE_GAP_DB: f64 = 1.5;
/// Logistic steepness, 1/dB.
pub const CURVE_SLOPE_PER_DB: f64 = 2.5;
pub const GRID_MIN_DB: f64 = -15.0;
pub const GRID_MAX_DB: f64 = 30.0;
pub const GRID_STEP_DB: f64 = 0.25;
pub const OFFSET_DOWN_DB: f64 = 1.0;
pub const OFFSET_UP_DB: f64 = 0.1;
pub const OFFSET_LIMIT_DB: f64 = 20.0;

pub const CURVES_VERSION: u32 = 1;
const PACKAGED: &str = include_str!("../../data/bler_curves.txt");

#[derive(Clone, Debug, PartialEq)]
pub struct BlerCurve {
    pub sinr_db: Vec<f64>,
    pub bler: Vec<f64>,
}

impl BlerCurve {
    /// Linear interpolation, clamped at the ends of the grid.
    pub fn bler_at(&self, sinr_db: f64) -> f64 {
        let xs = &self.sinr_db;
        let n = xs.len();
        if sinr_db <= xs[0] {
            return self.bler[0];
        }
        if sinr_db >= xs[n - 1] {
            return self.bler[n - 1];
        }
        let i = xs.partition_point(|x| *x <= sinr_db) - 1;
        let t = (sinr_db - xs[i]) / (xs[i + 1] - xs[i]);
        self.bler[i] + t * (self.bler[i + 1] - self.bler[i])
    }

    /// SINR where the interpolated curve crosses `target`.
    fn crossing(&self, target: f64) -> f64 {
        for i in 0..self.sinr_db.len() - 1 {
            let (b0, b1) = (self.bler[i], self.bler[i + 1]);
            if b0 > target && b1 <= target {
                let t = (b0 - target) / (b0 - b1);
                return self.sinr_db[i] + t * (self.sinr_db[i + 1] - self.sinr_db[i]);
            }
        }
        if self.bler[0] <= target {
            self.sinr_db[0]
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlerTable {
    pub version: u32,
    pub curves: Vec<BlerCurve>,
    /// 10%-BLER SINR of each MCS on the interpolated curves.
    pub thresholds_db: Vec<f64>,
}

/// Logistic curve value; shared by the generator and the tests.
pub fn logistic_bler(mcs: usize, sinr_db: f64) -> f64 {
    let s10 = nominal_threshold_db(mcs);
    let centre = s10 - (1.0 / TARGET_BLER - 1.0).ln() / CURVE_SLOPE_PER_DB;
    1.0 / (1.0 + (CURVE_SLOPE_PER_DB * (sinr_db - centre)).exp())
}

pub fn nominal_threshold_db(mcs: usize) -> f64 {
    10.0 * (2f64.powf(MCS_SPECTRAL_EFFICIENCY[mcs]) - 1.0).log10() + CURVE_GAP_DB
}

impl BlerTable {
    fn from_curves(version: u32, curves: Vec<BlerCurve>) -> Self {
        let thresholds_db = curves.iter().map(|c| c.crossing(TARGET_BLER)).collect();
        Self { version, curves, thresholds_db }
    }

    pub fn generate() -> Self {
        let steps = ((GRID_MAX_DB - GRID_MIN_DB) / GRID_STEP_DB).round() as usize;
        let grid: Vec<f64> = (0..=steps).map(|i| GRID_MIN_DB + i as f64 * GRID_STEP_DB).collect();
        let curves = (0..MCS_SPECTRAL_EFFICIENCY.len())
            .map(|m| BlerCurve { sinr_db: grid.clone(), bler: grid.iter().map(|s| logistic_bler(m, *s)).collect() })
            .collect();
        Self::from_curves(CURVES_VERSION, curves)
    }

    /// The curves shipped with the crate.
    pub fn packaged() -> Result<Self> {
        Self::parse(PACKAGED)
    }

    pub fn num_mcs(&self) -> usize {
        self.curves.len()
    }

    pub fn bler(&self, mcs: usize, sinr_db: f64) -> f64 {
        self.curves[mcs].bler_at(sinr_db)
    }

    /// Text form: `# bler-curves v<N>` header, `#` comments, then
    /// whitespace-separated `mcs sinr_db bler` rows grouped by MCS.
    pub fn to_text(&self) -> String {
        let mut s = format!("# bler-curves v{}\n", self.version);
        s.push_str("# columns: mcs sinr_db bler\n");
        s.push_str(&format!(
            "# logistic AWGN approximation, 10% BLER at 10*log10(2^SE-1)+{CURVE_GAP_DB} dB, slope {CURVE_SLOPE_PER_DB}/dB\n"
        ));
        for (m, c) in self.curves.iter().enumerate() {
            for (x, b) in c.sinr_db.iter().zip(&c.bler) {
                s.push_str(&format!("{m} {x} {b:e}\n"));
            }
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut version = None;
        let mut curves: Vec<BlerCurve> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: &str| Error::BlerTable { line: i + 1, msg: msg.to_string() };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("bler-curves v") {
                    version = Some(v.trim().parse::<u32>().map_err(|_| err("bad version"))?);
                }
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err("expected `mcs sinr_db bler`"));
            }
            let mcs: usize = f[0].parse().map_err(|_| err("bad mcs"))?;
            let x: f64 = f[1].parse().map_err(|_| err("bad sinr"))?;
            let b: f64 = f[2].parse().map_err(|_| err("bad bler"))?;
            if !(0.0..=1.0).contains(&b) {
                return Err(err("bler outside [0, 1]"));
            }
            if mcs == curves.len() {
                curves.push(BlerCurve { sinr_db: Vec::new(), bler: Vec::new() });
            } else if mcs + 1 != curves.len() {
                return Err(err("mcs rows must be contiguous and ascending"));
            }
            let c = curves.last_mut().expect("pushed above");
            if c.sinr_db.last().is_some_and(|p| *p >= x) {
                return Err(err("sinr grid must be increasing"));
            }
            c.sinr_db.push(x);
            c.bler.push(b);
        }
        let version = version.ok_or(Error::BlerTable { line: 1, msg: "missing version header".into() })?;
        if curves.is_empty() || curves.iter().any(|c| c.sinr_db.len() < 2) {
            return Err(Error::BlerTable { line: 0, msg: "need at least two points per curve".into() });
        }
        Ok(Self::from_curves(version, curves))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkAdaptationState {
    pub offset_db: f64,
    pub cqi: u8,
    pub mcs: usize,
    pub target_bler: f64,
}

impl Default for LinkAdaptationState {
    fn default() -> Self {
        Self { offset_db: 0.0, cqi: 0, mcs: 0, target_bler: TARGET_BLER }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McsSelection {
    pub mcs: usize,
    /// Set when even MCS 0 misses the target BLER.
    pub out_of_range: bool,
}

/// Highest MCS meeting the target BLER at `sinr_db + offset`.
pub fn sinr_to_mcs(table: &BlerTable, state: &LinkAdaptationState, sinr_db: f64) -> McsSelection {
    let s = sinr_db + state.offset_db;
    match table.thresholds_db.iter().rposition(|t| *t <= s) {
        Some(mcs) => McsSelection { mcs, out_of_range: false },
        None => McsSelection { mcs: 0, out_of_range: true },
    }
}

/// CQI whose efficiency does not exceed that of `mcs`.
pub fn cqi_for_mcs(mcs: usize) -> u8 {
    let se = MCS_SPECTRAL_EFFICIENCY[mcs];
    CQI_SPECTRAL_EFFICIENCY.iter().rposition(|e| *e <= se).map_or(0, |i| i as u8 + 1)
}

/// Applies an MCS decision to the state.
pub fn select(table: &BlerTable, state: &mut LinkAdaptationState, sinr_db: f64) -> McsSelection {
    let sel = sinr_to_mcs(table, state, sinr_db);
    state.mcs = sel.mcs;
    state.cqi = cqi_for_mcs(sel.mcs);
    sel
}

pub fn outer_loop_update(state: LinkAdaptationState, crc_ok: bool) -> LinkAdaptationState {
    let step = if crc_ok { OFFSET_UP_DB } else { -OFFSET_DOWN_DB };
    LinkAdaptationState {
        offset_db: (state.offset_db + step).clamp(-OFFSET_LIMIT_DB, OFFSET_LIMIT_DB),
        ..state
    }
}
