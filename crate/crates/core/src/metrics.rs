//! SINR samples, empirical CDFs, percentile tables and their CSV/JSON forms.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{BlockGroup, NodeId};
use crate::phy::Direction;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinrSample {
    pub ue: NodeId,
    pub group: BlockGroup,
    pub direction: Direction,
    pub slot: u64,
    pub sinr_db: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupFilter {
    All,
    Central,
    Side,
}

impl GroupFilter {
    pub const ALL: [GroupFilter; 3] = [GroupFilter::All, GroupFilter::Central, GroupFilter::Side];

    pub fn matches(&self, g: BlockGroup) -> bool {
        match self {
            GroupFilter::All => true,
            GroupFilter::Central => g == BlockGroup::Central,
            GroupFilter::Side => g == BlockGroup::Side,
        }
    }
}

impl std::fmt::Display for GroupFilter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupFilter::All => "all",
            GroupFilter::Central => "central",
            GroupFilter::Side => "side",
        })
    }
}

/// Transport-block counters of one direction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TbStats {
    pub transmitted: u64,
    pub errors: u64,
    pub out_of_range: u64,
    pub bits_delivered: u64,
}

impl TbStats {
    pub fn bler(&self) -> f64 {
        if self.transmitted == 0 {
            0.0
        } else {
            self.errors as f64 / self.transmitted as f64
        }
    }
}

/// Output of one simulated (scenario, seed) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsBundle {
    pub scenario: String,
    pub seed: u64,
    pub slots: u64,
    pub samples: Vec<SinrSample>,
    pub dl: TbStats,
    pub ul: TbStats,
    /// Fraction of association decisions that chose an NCR path.
    pub via_ncr_fraction: f64,
}

impl MetricsBundle {
    pub fn filtered(&self, group: GroupFilter, direction: Direction) -> Vec<f64> {
        filter_values(&self.samples, group, direction)
    }
}

pub fn filter_values(samples: &[SinrSample], group: GroupFilter, direction: Direction) -> Vec<f64> {
    samples
        .iter()
        .filter(|s| s.direction == direction && group.matches(s.group))
        .map(|s| s.sinr_db)
        .collect()
}

/// Empirical CDF as `(x, F(x))` steps at each distinct value.
pub fn cdf(samples: &[SinrSample], group: GroupFilter, direction: Direction) -> Result<Vec<(f64, f64)>> {
    let values = filter_values(samples, group, direction);
    cdf_of(&values)
}

pub fn cdf_of(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::EmptySamples("cdf of an empty sample set".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, x) in v.iter().enumerate() {
        let p = (i + 1) as f64 / n;
        match out.last_mut() {
            Some(last) if last.0 == *x => last.1 = p,
            _ => out.push((*x, p)),
        }
    }
    Ok(out)
}

/// Type-7 quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Result<f64> {
    if sorted.is_empty() {
        return Err(Error::EmptySamples("quantile of an empty sample set".into()));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!("quantile level {q} outside [0, 1]")));
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

/// `quantile(scenario, q) − quantile(baseline, q)` in dB.
pub fn percentile_delta(scenario: &[f64], baseline: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!("quantile level {q} outside (0, 1)")));
    }
    Ok(quantile(scenario, q)? - quantile(baseline, q)?)
}

pub const REPORT_LEVELS: [f64; 3] = [0.1, 0.5, 0.9];

const REPORT_HEADER: [&str; 10] =
    ["scenario", "direction", "group", "samples", "p10", "p50", "p90", "delta_p10", "delta_p50", "delta_p90"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentileRow {
    pub scenario: String,
    pub direction: Direction,
    pub group: GroupFilter,
    pub samples: usize,
    pub p10: f64,
    pub p50: f64,
    pub p90: f64,
    pub delta_p10: f64,
    pub delta_p50: f64,
    pub delta_p90: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercentileReport {
    pub baseline: String,
    pub seeds: Vec<u64>,
    pub slots: u64,
    pub rows: Vec<PercentileRow>,
}

impl PercentileReport {
    /// Builds the table from pooled samples per scenario. The baseline must
    /// be one of the scenarios.
    pub fn build(
        scenarios: &[(String, Vec<SinrSample>)],
        baseline: &str,
        seeds: Vec<u64>,
        slots: u64,
    ) -> Result<Self> {
        let base = scenarios
            .iter()
            .find(|(n, _)| n == baseline)
            .ok_or_else(|| Error::InvalidInput(format!("baseline {baseline} not among the scenarios")))?;
        let mut rows = Vec::new();
        for (name, samples) in scenarios {
            for direction in [Direction::Dl, Direction::Ul] {
                for group in GroupFilter::ALL {
                    let mut v = filter_values(samples, group, direction);
                    let mut b = filter_values(&base.1, group, direction);
                    if v.is_empty() || b.is_empty() {
                        continue;
                    }
                    v.sort_by(f64::total_cmp);
                    b.sort_by(f64::total_cmp);
                    let q = |x: &[f64], l| quantile_sorted(x, l);
                    let (p10, p50, p90) = (q(&v, 0.1)?, q(&v, 0.5)?, q(&v, 0.9)?);
                    rows.push(PercentileRow {
                        scenario: name.clone(),
                        direction,
                        group,
                        samples: v.len(),
                        p10,
                        p50,
                        p90,
                        delta_p10: p10 - q(&b, 0.1)?,
                        delta_p50: p50 - q(&b, 0.5)?,
                        delta_p90: p90 - q(&b, 0.9)?,
                    });
                }
            }
        }
        Ok(Self { baseline: baseline.to_string(), seeds, slots, rows })
    }

    pub fn row(&self, scenario: &str, direction: Direction, group: GroupFilter) -> Option<&PercentileRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.direction == direction && r.group == group)
    }

    /// Floats are written in shortest round-trip form so that
    /// [`read_csv`](Self::read_csv) restores them bit for bit.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_HEADER)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                r.direction.to_string(),
                r.group.to_string(),
                r.samples.to_string(),
                r.p10.to_string(),
                r.p50.to_string(),
                r.p90.to_string(),
                r.delta_p10.to_string(),
                r.delta_p50.to_string(),
                r.delta_p90.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Re-reads rows written by [`write_csv`](Self::write_csv); metadata is
    /// supplied by the caller.
    pub fn read_csv<R: Read>(input: R, baseline: &str, seeds: Vec<u64>, slots: u64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        if r.headers()?.iter().ne(REPORT_HEADER) {
            return Err(Error::InvalidInput("unexpected percentile CSV header".into()));
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| Error::InvalidInput(format!("missing column {i}")));
            let num = |i: usize| -> Result<f64> {
                field(i)?.parse().map_err(|_| Error::InvalidInput(format!("bad number in column {i}")))
            };
            let direction = match field(1)? {
                "DL" => Direction::Dl,
                "UL" => Direction::Ul,
                d => return Err(Error::InvalidInput(format!("bad direction {d}"))),
            };
            let group = match field(2)? {
                "all" => GroupFilter::All,
                "central" => GroupFilter::Central,
                "side" => GroupFilter::Side,
                g => return Err(Error::InvalidInput(format!("bad group {g}"))),
            };
            rows.push(PercentileRow {
                scenario: field(0)?.to_string(),
                direction,
                group,
                samples: field(3)?.parse().map_err(|_| Error::InvalidInput("bad sample count".into()))?,
                p10: num(4)?,
                p50: num(5)?,
                p90: num(6)?,
                delta_p10: num(7)?,
                delta_p50: num(8)?,
                delta_p90: num(9)?,
            });
        }
        Ok(Self { baseline: baseline.to_string(), seeds, slots, rows })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Sample rows `scenario,seed,ue,group,direction,slot,sinr_db`.
pub fn write_samples_csv<W: Write>(out: W, bundles: &[&MetricsBundle]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "seed", "ue", "group", "direction", "slot", "sinr_db"])?;
    for b in bundles {
        for s in &b.samples {
            w.write_record([
                b.scenario.clone(),
                b.seed.to_string(),
                s.ue.0.to_string(),
                s.group.to_string(),
                s.direction.to_string(),
                s.slot.to_string(),
                s.sinr_db.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_cdf_csv<W: Write>(out: W, points: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sinr_db", "cdf"])?;
    for (x, p) in points {
        w.write_record([x.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
