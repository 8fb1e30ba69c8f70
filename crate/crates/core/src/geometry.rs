//! Madrid-grid world, node placement for the five deployments, UE drops,
//! pedestrian mobility and geometric line-of-sight.
//!
//! Coordinates are right-handed with `x` along the top street, `y` toward the
//! top of the map and `z` up. Blocks sit on a 140 m pitch (120 m block, two
//! 3 m sidewalks, one 14 m street); the bottom-left block starts at the
//! origin. The crowded "top street" runs along `y` in `[400, 420]`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Sub};

use crate::antenna::{wrap_deg, UraPanel};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, tag};

pub const BLOCK_SIZE_M: f64 = 120.0;
pub const SIDEWALK_WIDTH_M: f64 = 3.0;
pub const STREET_WIDTH_M: f64 = 14.0;
pub const BLOCK_PITCH_M: f64 = BLOCK_SIZE_M + 2.0 * SIDEWALK_WIDTH_M + STREET_WIDTH_M;
pub const BUILDING_HEIGHT_M: f64 = 30.0;

pub const GNB_HEIGHT_M: f64 = 25.0;
pub const NCR_HEIGHT_M: f64 = 10.0;
pub const UE_HEIGHT_M: f64 = 1.5;
pub const GNB_TX_POWER_DBM: f64 = 35.0;
pub const NCR_TX_POWER_DBM: f64 = 33.0;
pub const UE_TX_POWER_DBM: f64 = 24.0;
pub const ACCESS_DOWNTILT_DEG: f64 = 12.0;
pub const GNB_DOWNTILT_DEG: f64 = 12.0;
pub const UE_SPEED_MPS: f64 = 3.0 / 3.6;
/// Minimum angular separation between an NCR backhaul panel and any of its
/// access panels.
pub const PANEL_SEPARATION_DEG: f64 = 120.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn normalized(self) -> Self {
        self * (1.0 / self.norm())
    }

    pub fn distance(self, o: Self) -> f64 {
        (o - self).norm()
    }

    pub fn distance_2d(self, o: Self) -> f64 {
        (o.x - self.x).hypot(o.y - self.y)
    }

    /// Azimuth of `o` as seen from `self`, degrees counter-clockwise from +x.
    pub fn azimuth_to(self, o: Self) -> f64 {
        (o.y - self.y).atan2(o.x - self.x).to_degrees()
    }

    /// Elevation of `o` as seen from `self`, degrees above the horizon.
    pub fn elevation_to(self, o: Self) -> f64 {
        (o.z - self.z).atan2(self.distance_2d(o)).to_degrees()
    }
}

impl Add for Point3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x * k, self.y * k, self.z * k)
    }
}

/// Axis-aligned rectangle in the ground plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub const fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }

    /// True if the interiors overlap.
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.y0 < o.y1 && o.y0 < self.y1
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockGroup {
    Central,
    Side,
    None,
}

impl fmt::Display for BlockGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockGroup::Central => "central",
            BlockGroup::Side => "side",
            BlockGroup::None => "none",
        })
    }
}

/// One sidewalk segment of the top street, fronting a single top-row block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopSidewalk {
    pub rect: Rect,
    pub block_col: usize,
    pub group: BlockGroup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MadridGrid {
    /// Row-major from the bottom-left block: index = `row * 3 + col`.
    pub blocks: Vec<Rect>,
    pub sidewalks: Vec<Rect>,
    pub streets: Vec<Rect>,
    pub top_sidewalks: Vec<TopSidewalk>,
    pub block_size: f64,
    pub sidewalk_width: f64,
    pub street_width: f64,
    pub building_height: f64,
}

impl MadridGrid {
    pub fn block(&self, row: usize, col: usize) -> Rect {
        self.blocks[row * 3 + col]
    }

    /// Width of the 3x3 block footprint (inner streets and sidewalks only).
    pub fn footprint_width(&self) -> f64 {
        self.blocks.iter().map(|b| b.x1).fold(f64::MIN, f64::max)
            - self.blocks.iter().map(|b| b.x0).fold(f64::MAX, f64::min)
    }

    /// y coordinate of the centre line of the top street.
    pub fn top_street_center_y(&self) -> f64 {
        self.block(2, 1).y1 + self.sidewalk_width + 0.5 * self.street_width
    }

    /// Index of the top sidewalk segment containing `(x, y)`.
    pub fn top_sidewalk_at(&self, x: f64, y: f64) -> Option<usize> {
        self.top_sidewalks.iter().position(|s| s.rect.contains(x, y))
    }

    pub fn with_building_height(mut self, h: f64) -> Self {
        self.building_height = h;
        self
    }
}

/// Builds the nine-block grid. Deterministic.
pub fn build_grid() -> MadridGrid {
    let (b, s, w) = (BLOCK_SIZE_M, SIDEWALK_WIDTH_M, STREET_WIDTH_M);
    let mut blocks = Vec::with_capacity(9);
    let mut sidewalks = Vec::new();
    for row in 0..3 {
        for col in 0..3 {
            let (x0, y0) = (col as f64 * BLOCK_PITCH_M, row as f64 * BLOCK_PITCH_M);
            let blk = Rect::new(x0, y0, x0 + b, y0 + b);
            blocks.push(blk);
            sidewalks.push(Rect::new(x0 - s, y0 - s, x0 + b + s, y0));
            sidewalks.push(Rect::new(x0 - s, y0 + b, x0 + b + s, y0 + b + s));
            sidewalks.push(Rect::new(x0 - s, y0, x0, y0 + b));
            sidewalks.push(Rect::new(x0 + b, y0, x0 + b + s, y0 + b));
        }
    }
    let far = 3.0 * BLOCK_PITCH_M - w - s;
    let mut streets = Vec::new();
    for k in 0..2 {
        let lo = k as f64 * BLOCK_PITCH_M + b + s;
        streets.push(Rect::new(lo, -s, lo + w, far + s));
        streets.push(Rect::new(-s, lo, far + s, lo + w));
    }
    let top = 2.0 * BLOCK_PITCH_M + b;
    streets.push(Rect::new(-s - w, top + s, far + s + w, top + s + w));

    let mut top_sidewalks = Vec::with_capacity(6);
    for (y0, y1) in [(top, top + s), (top + s + w, top + 2.0 * s + w)] {
        for col in 0..3 {
            let x0 = col as f64 * BLOCK_PITCH_M;
            let rect = Rect::new(x0 - s, y0, x0 + b + s, y1);
            if y0 > top {
                sidewalks.push(rect);
            }
            top_sidewalks.push(TopSidewalk {
                rect,
                block_col: col,
                group: if col == 1 { BlockGroup::Central } else { BlockGroup::Side },
            });
        }
    }

    MadridGrid {
        blocks,
        sidewalks,
        streets,
        top_sidewalks,
        block_size: b,
        sidewalk_width: s,
        street_width: w,
        building_height: BUILDING_HEIGHT_M,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const GNB: NodeId = NodeId(0);
    pub fn ncr(i: usize) -> NodeId {
        NodeId(100 + i as u32)
    }
    pub fn ue(i: usize) -> NodeId {
        NodeId(1000 + i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Gnb,
    Ncr,
    Ue,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkNode {
    pub id: NodeId,
    pub kind: NodeKind,
    /// `z` is the antenna height.
    pub position: Point3,
    pub height: f64,
    pub tx_power_dbm: f64,
    /// gNB: one panel. NCR: backhaul panel first, then access panels. UE: one omni element.
    pub panels: Vec<UraPanel>,
    pub block_group: BlockGroup,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioId {
    S1Baseline,
    S2OneNcrOnePanel,
    S3OneNcrTwoPanels,
    S4TwoNcrCorners,
    S5TwoNcrSideBlocks,
    Custom,
}

impl ScenarioId {
    pub const PRESETS: [ScenarioId; 5] = [
        ScenarioId::S1Baseline,
        ScenarioId::S2OneNcrOnePanel,
        ScenarioId::S3OneNcrTwoPanels,
        ScenarioId::S4TwoNcrCorners,
        ScenarioId::S5TwoNcrSideBlocks,
    ];

    pub fn short_name(&self) -> &'static str {
        match self {
            ScenarioId::S1Baseline => "s1",
            ScenarioId::S2OneNcrOnePanel => "s2",
            ScenarioId::S3OneNcrTwoPanels => "s3",
            ScenarioId::S4TwoNcrCorners => "s4",
            ScenarioId::S5TwoNcrSideBlocks => "s5",
            ScenarioId::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<ScenarioId> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" | "baseline" => Ok(ScenarioId::S1Baseline),
            "s2" => Ok(ScenarioId::S2OneNcrOnePanel),
            "s3" => Ok(ScenarioId::S3OneNcrTwoPanels),
            "s4" => Ok(ScenarioId::S4TwoNcrCorners),
            "s5" => Ok(ScenarioId::S5TwoNcrSideBlocks),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }
}

/// How an access panel boresight is specified.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessAim {
    /// Explicit azimuth (degrees); must respect the panel separation rule.
    Azimuth(f64),
    /// Aim at a ground point `[x, y]`; rotated toward the nearest azimuth that
    /// keeps the separation rule when the direct aim would violate it.
    Toward([f64; 2]),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NcrPlacement {
    pub position: Point3,
    pub access: Vec<AccessAim>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeploymentScenario {
    pub id: ScenarioId,
    pub name: String,
    pub ncr_placements: Vec<NcrPlacement>,
}

/// gNB site: centre of the top edge of the middle-bottom block.
pub fn gnb_position(grid: &MadridGrid) -> Point3 {
    let b = grid.block(0, 1);
    Point3::new(0.5 * (b.x0 + b.x1), b.y1, GNB_HEIGHT_M)
}

impl DeploymentScenario {
    pub fn preset(id: ScenarioId, grid: &MadridGrid) -> Result<Self> {
        let top = grid.block(2, 1);
        let face_y = top.y1;
        let street_y = grid.top_street_center_y();
        let (left, right) = (grid.block(2, 0), grid.block(2, 2));
        let left_aim = AccessAim::Toward([left.center().0, street_y]);
        let right_aim = AccessAim::Toward([right.center().0, street_y]);
        let mid_x = top.center().0;
        let at = |x: f64| Point3::new(x, face_y, NCR_HEIGHT_M);

        let ncr_placements = match id {
            ScenarioId::S1Baseline => vec![],
            ScenarioId::S2OneNcrOnePanel => vec![NcrPlacement {
                position: at(mid_x),
                access: vec![AccessAim::Toward([mid_x, street_y])],
            }],
            ScenarioId::S3OneNcrTwoPanels => vec![NcrPlacement {
                position: at(mid_x),
                access: vec![left_aim, right_aim],
            }],
            ScenarioId::S4TwoNcrCorners => vec![
                NcrPlacement { position: at(top.x0), access: vec![left_aim] },
                NcrPlacement { position: at(top.x1), access: vec![right_aim] },
            ],
            ScenarioId::S5TwoNcrSideBlocks => vec![
                NcrPlacement { position: at(left.center().0), access: vec![left_aim] },
                NcrPlacement { position: at(right.center().0), access: vec![right_aim] },
            ],
            ScenarioId::Custom => {
                return Err(Error::InvalidInput("custom scenarios are built from a file".into()))
            }
        };
        Ok(Self { id, name: id.short_name().to_string(), ncr_placements })
    }

    pub fn custom(name: impl Into<String>, ncr_placements: Vec<NcrPlacement>) -> Self {
        Self { id: ScenarioId::Custom, name: name.into(), ncr_placements }
    }

    pub fn ncr_count(&self) -> usize {
        self.ncr_placements.len()
    }
}

/// Absolute azimuth difference in degrees, in `[0, 180]`.
pub fn azimuth_separation(a_deg: f64, b_deg: f64) -> f64 {
    wrap_deg(a_deg - b_deg).abs()
}

/// Rotates `desired` toward the nearest azimuth at least
/// [`PANEL_SEPARATION_DEG`] away from `backhaul`.
pub fn enforce_separation(desired_deg: f64, backhaul_deg: f64) -> f64 {
    let diff = wrap_deg(desired_deg - backhaul_deg);
    if diff.abs() >= PANEL_SEPARATION_DEG {
        return wrap_deg(desired_deg);
    }
    let sign = if diff >= 0.0 { 1.0 } else { -1.0 };
    wrap_deg(backhaul_deg + sign * PANEL_SEPARATION_DEG)
}

/// Places the gNB and NCRs for `scenario`. NCR panel list is
/// `[backhaul, access...]`; the backhaul boresight points at the gNB.
pub fn place_nodes(scenario: &DeploymentScenario, grid: &MadridGrid) -> Result<Vec<NetworkNode>> {
    let gnb_pos = gnb_position(grid);
    let mut nodes = vec![NetworkNode {
        id: NodeId::GNB,
        kind: NodeKind::Gnb,
        position: gnb_pos,
        height: GNB_HEIGHT_M,
        tx_power_dbm: GNB_TX_POWER_DBM,
        panels: vec![UraPanel::standard(90.0, GNB_DOWNTILT_DEG)],
        block_group: BlockGroup::None,
    }];

    for (i, p) in scenario.ncr_placements.iter().enumerate() {
        if p.access.is_empty() || p.access.len() > 2 {
            return Err(Error::Config(format!(
                "NCR {i} must have one or two access panels, got {}",
                p.access.len()
            )));
        }
        let pos = Point3::new(p.position.x, p.position.y, NCR_HEIGHT_M);
        let bh_az = pos.azimuth_to(gnb_pos);
        let bh_el = pos.elevation_to(gnb_pos);
        let mut panels = vec![UraPanel::standard(bh_az, -bh_el)];
        for aim in &p.access {
            let az = match *aim {
                AccessAim::Azimuth(az) => {
                    if azimuth_separation(az, bh_az) < PANEL_SEPARATION_DEG {
                        return Err(Error::Config(format!(
                            "NCR {i}: access azimuth {az:.1} is closer than {PANEL_SEPARATION_DEG} deg to the backhaul boresight {bh_az:.1}"
                        )));
                    }
                    az
                }
                AccessAim::Toward([x, y]) => {
                    enforce_separation(pos.azimuth_to(Point3::new(x, y, pos.z)), bh_az)
                }
            };
            panels.push(UraPanel::standard(az, ACCESS_DOWNTILT_DEG));
        }
        nodes.push(NetworkNode {
            id: NodeId::ncr(i),
            kind: NodeKind::Ncr,
            position: pos,
            height: NCR_HEIGHT_M,
            tx_power_dbm: NCR_TX_POWER_DBM,
            panels,
            block_group: BlockGroup::None,
        });
    }
    Ok(nodes)
}

/// Drops `count` UEs uniformly over the top-street sidewalks.
pub fn drop_ues(count: usize, grid: &MadridGrid, rng_seed: u64) -> Result<Vec<NetworkNode>> {
    if count == 0 {
        return Err(Error::InvalidInput("UE count must be positive".into()));
    }
    let mut rng = stream_rng(rng_seed, &[tag::UE_DROP]);
    let total: f64 = grid.top_sidewalks.iter().map(|s| s.rect.area()).sum();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let mut u: f64 = rng.random::<f64>() * total;
        let mut seg = &grid.top_sidewalks[grid.top_sidewalks.len() - 1];
        for s in &grid.top_sidewalks {
            if u < s.rect.area() {
                seg = s;
                break;
            }
            u -= s.rect.area();
        }
        let r = seg.rect;
        let x = r.x0 + rng.random::<f64>() * r.width();
        let y = r.y0 + rng.random::<f64>() * r.height();
        out.push(NetworkNode {
            id: NodeId::ue(i),
            kind: NodeKind::Ue,
            position: Point3::new(x, y, UE_HEIGHT_M),
            height: UE_HEIGHT_M,
            tx_power_dbm: UE_TX_POWER_DBM,
            panels: vec![UraPanel::omni()],
            block_group: seg.group,
        });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UeMotion {
    pub id: NodeId,
    pub position: Point3,
    pub velocity: Point3,
    pub waypoint: (f64, f64),
    /// Index into [`MadridGrid::top_sidewalks`] confining this UE.
    pub region: usize,
    pub waypoints_drawn: u64,
}

/// Random-waypoint pedestrian mobility, each UE confined to the sidewalk
/// segment it was dropped on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MobilityState {
    pub ues: Vec<UeMotion>,
    pub speed_mps: f64,
}

fn draw_waypoint(rect: &Rect, seed: u64, id: NodeId, k: u64) -> (f64, f64) {
    let mut rng = stream_rng(seed, &[tag::MOBILITY, id.0 as u64, k]);
    (
        rect.x0 + rng.random::<f64>() * rect.width(),
        rect.y0 + rng.random::<f64>() * rect.height(),
    )
}

fn heading(from: Point3, to: (f64, f64), speed: f64) -> Point3 {
    let d = Point3::new(to.0 - from.x, to.1 - from.y, 0.0);
    let n = d.norm();
    if n == 0.0 {
        Point3::default()
    } else {
        d * (speed / n)
    }
}

impl MobilityState {
    pub fn new(ues: &[NetworkNode], grid: &MadridGrid, speed_mps: f64, rng_seed: u64) -> Result<Self> {
        let mut out = Vec::with_capacity(ues.len());
        for ue in ues {
            let region = grid.top_sidewalk_at(ue.position.x, ue.position.y).ok_or_else(|| {
                Error::InvalidInput(format!("UE {} is not on a top-street sidewalk", ue.id))
            })?;
            let waypoint = draw_waypoint(&grid.top_sidewalks[region].rect, rng_seed, ue.id, 0);
            out.push(UeMotion {
                id: ue.id,
                position: ue.position,
                velocity: heading(ue.position, waypoint, speed_mps),
                waypoint,
                region,
                waypoints_drawn: 1,
            });
        }
        Ok(Self { ues: out, speed_mps })
    }
}

/// Advances every UE by `speed * dt` along its waypoint path.
pub fn step_mobility(state: &mut MobilityState, grid: &MadridGrid, dt_s: f64, rng_seed: u64) -> Result<()> {
    if dt_s.is_nan() || dt_s <= 0.0 {
        return Err(Error::InvalidInput(format!("mobility step must be positive, got {dt_s}")));
    }
    let speed = state.speed_mps;
    for ue in &mut state.ues {
        let rect = grid.top_sidewalks[ue.region].rect;
        let mut remaining = speed * dt_s;
        // bounded: at most a handful of waypoint arrivals per step
        for _ in 0..8 {
            let to_wp = Point3::new(ue.waypoint.0 - ue.position.x, ue.waypoint.1 - ue.position.y, 0.0);
            let dist = to_wp.norm();
            if dist > remaining {
                ue.position = ue.position + to_wp * (remaining / dist);
                break;
            }
            ue.position.x = ue.waypoint.0;
            ue.position.y = ue.waypoint.1;
            remaining -= dist;
            ue.waypoint = draw_waypoint(&rect, rng_seed, ue.id, ue.waypoints_drawn);
            ue.waypoints_drawn += 1;
        }
        ue.position.x = ue.position.x.clamp(rect.x0, rect.x1);
        ue.position.y = ue.position.y.clamp(rect.y0, rect.y1);
        ue.velocity = heading(ue.position, ue.waypoint, speed);
    }
    Ok(())
}

/// True iff the open segment `a`-`b` passes through the interior of a
/// building (block footprint extruded from the ground to the building height).
pub fn los_blocked(a: Point3, b: Point3, grid: &MadridGrid) -> bool {
    let d = b - a;
    grid.blocks.iter().any(|blk| {
        let lo = [blk.x0, blk.y0, 0.0];
        let hi = [blk.x1, blk.y1, grid.building_height];
        let p = [a.x, a.y, a.z];
        let v = [d.x, d.y, d.z];
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..3 {
            if v[k] == 0.0 {
                if p[k] <= lo[k] || p[k] >= hi[k] {
                    return false;
                }
            } else {
                let ta = (lo[k] - p[k]) / v[k];
                let tb = (hi[k] - p[k]) / v[k];
                t0 = t0.max(ta.min(tb));
                t1 = t1.min(ta.max(tb));
            }
        }
        t0 < t1
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn grid_dimensions() {
        let g = build_grid();
        assert_eq!(g.blocks.len(), 9);
        for b in &g.blocks {
            assert_eq!(b.width(), 120.0);
            assert_eq!(b.height(), 120.0);
        }
        assert_eq!(g.footprint_width(), 400.0);
        for (i, a) in g.blocks.iter().enumerate() {
            for b in &g.blocks[i + 1..] {
                assert!(!a.overlaps(b));
            }
        }
        for s in &g.sidewalks {
            assert!(s.width() == 3.0 || s.height() == 3.0);
            for b in &g.blocks {
                assert!(!s.overlaps(b));
            }
        }
        assert_eq!(g.top_sidewalks.len(), 6);
        assert!(g.top_sidewalks.iter().all(|s| s.rect.height() == 3.0 && s.rect.width() == 126.0));
        assert_eq!(build_grid(), g);
    }

    #[test]
    fn scenario_node_counts_and_panels() {
        let g = build_grid();
        let expect = [(0, vec![]), (1, vec![1]), (1, vec![2]), (2, vec![1, 1]), (2, vec![1, 1])];
        for (id, (n, access)) in ScenarioId::PRESETS.iter().zip(expect) {
            let sc = DeploymentScenario::preset(*id, &g).unwrap();
            let nodes = place_nodes(&sc, &g).unwrap();
            assert_eq!(nodes.iter().filter(|n| n.kind == NodeKind::Gnb).count(), 1);
            let ncrs: Vec<_> = nodes.iter().filter(|n| n.kind == NodeKind::Ncr).collect();
            assert_eq!(ncrs.len(), n, "{id:?}");
            for (ncr, k) in ncrs.iter().zip(&access) {
                assert_eq!(ncr.panels.len(), 1 + k);
                assert_eq!(ncr.height, 10.0);
                assert_eq!(ncr.tx_power_dbm, 33.0);
                let bh = ncr.panels[0].boresight_az_deg;
                for p in &ncr.panels[1..] {
                    assert!(azimuth_separation(p.boresight_az_deg, bh) >= PANEL_SEPARATION_DEG - 1e-9);
                    assert_eq!(p.downtilt_deg, 12.0);
                }
            }
            let gnb = &nodes[0];
            assert_eq!(gnb.position, Point3::new(200.0, 120.0, 25.0));
            assert_eq!(gnb.tx_power_dbm, 35.0);
        }
    }

    #[test]
    fn s4_ncrs_sit_on_middle_top_corners() {
        let g = build_grid();
        let sc = DeploymentScenario::preset(ScenarioId::S4TwoNcrCorners, &g).unwrap();
        let nodes = place_nodes(&sc, &g).unwrap();
        let top = g.block(2, 1);
        assert_eq!(nodes[1].position, Point3::new(top.x0, top.y1, 10.0));
        assert_eq!(nodes[2].position, Point3::new(top.x1, top.y1, 10.0));
    }

    #[test]
    fn explicit_azimuth_violating_separation_is_rejected() {
        let g = build_grid();
        let sc = DeploymentScenario::custom(
            "bad",
            vec![NcrPlacement { position: Point3::new(200.0, 400.0, 10.0), access: vec![AccessAim::Azimuth(-80.0)] }],
        );
        assert!(place_nodes(&sc, &g).is_err());
    }

    #[test]
    fn separation_clamp() {
        assert_eq!(enforce_separation(90.0, -90.0), 90.0);
        assert!((enforce_separation(175.9, -90.0) - 150.0).abs() < 1e-9);
        assert!((enforce_separation(4.1, -90.0) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn ue_drop_properties() {
        let g = build_grid();
        assert!(drop_ues(0, &g, 1).is_err());
        let ues = drop_ues(72, &g, 42).unwrap();
        assert_eq!(ues.len(), 72);
        for u in &ues {
            let seg = g.top_sidewalk_at(u.position.x, u.position.y).expect("on sidewalk");
            assert_eq!(g.top_sidewalks[seg].group, u.block_group);
            assert_eq!(u.height, 1.5);
            assert_eq!(u.tx_power_dbm, 24.0);
        }
        assert_eq!(ues, drop_ues(72, &g, 42).unwrap());
        assert_ne!(ues, drop_ues(72, &g, 43).unwrap());
    }

    #[test]
    fn side_fraction_is_two_thirds() {
        let g = build_grid();
        let mut side = 0usize;
        let mut total = 0usize;
        for seed in 0..10 {
            let ues = drop_ues(1000, &g, seed).unwrap();
            side += ues.iter().filter(|u| u.block_group == BlockGroup::Side).count();
            total += ues.len();
        }
        let frac = side as f64 / total as f64;
        assert!((frac - 2.0 / 3.0).abs() < 0.02, "{frac}");
    }

    #[test]
    fn mobility_displacement_per_slot() {
        let g = build_grid();
        let ues = drop_ues(20, &g, 5).unwrap();
        let mut st = MobilityState::new(&ues, &g, UE_SPEED_MPS, 5).unwrap();
        // pin a far waypoint so no arrival happens in the step
        for u in &mut st.ues {
            let r = g.top_sidewalks[u.region].rect;
            u.waypoint = if u.position.x - r.x0 > r.x1 - u.position.x { (r.x0, u.position.y) } else { (r.x1, u.position.y) };
        }
        let before: Vec<_> = st.ues.iter().map(|u| u.position).collect();
        step_mobility(&mut st, &g, 0.25e-3, 5).unwrap();
        for (u, p) in st.ues.iter().zip(before) {
            let d = u.position.distance(p);
            assert!((d - 3.0 / 3.6 * 0.25e-3).abs() < 1e-12, "{d}");
        }
        assert!(step_mobility(&mut st, &g, 0.0, 5).is_err());
    }

    #[test]
    fn mobility_containment_long_run() {
        let g = build_grid();
        let ues = drop_ues(8, &g, 9).unwrap();
        let mut st = MobilityState::new(&ues, &g, UE_SPEED_MPS, 9).unwrap();
        for _ in 0..1_000_000 {
            step_mobility(&mut st, &g, 0.25e-3, 9).unwrap();
        }
        for u in &st.ues {
            assert!(g.top_sidewalks[u.region].rect.contains(u.position.x, u.position.y));
        }
    }

    #[test]
    fn mobility_at_boundary_stays_inside() {
        let g = build_grid();
        let ues = drop_ues(1, &g, 2).unwrap();
        let mut st = MobilityState::new(&ues, &g, UE_SPEED_MPS, 2).unwrap();
        let r = g.top_sidewalks[st.ues[0].region].rect;
        st.ues[0].position.x = r.x1;
        st.ues[0].waypoint = (r.x1, st.ues[0].position.y);
        step_mobility(&mut st, &g, 10.0, 2).unwrap();
        assert!(r.contains(st.ues[0].position.x, st.ues[0].position.y));
    }

    #[test]
    fn los_examples() {
        let g = build_grid();
        let a = Point3::new(10.0, 410.0, 1.5);
        let b = Point3::new(390.0, 412.0, 1.5);
        assert!(!los_blocked(a, b, &g));
        let gnb = gnb_position(&g);
        let behind = Point3::new(200.0, 401.5, 1.5);
        assert!(los_blocked(gnb, behind, &g));
        // NCR on the facade sees the sidewalk in front of it
        assert!(!los_blocked(Point3::new(200.0, 400.0, 10.0), Point3::new(20.0, 401.0, 1.5), &g));
    }

    fn sampled_oracle(a: Point3, b: Point3, g: &MadridGrid, n: usize) -> bool {
        (1..n).any(|i| {
            let p = a + (b - a) * (i as f64 / n as f64);
            g.blocks.iter().any(|r| {
                p.x > r.x0 && p.x < r.x1 && p.y > r.y0 && p.y < r.y1 && p.z > 0.0 && p.z < g.building_height
            })
        })
    }

    #[test]
    fn los_symmetric_and_matches_sampling_oracle() {
        let g = build_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let pt = |rng: &mut ChaCha8Rng| {
            Point3::new(rng.random_range(-20.0..420.0), rng.random_range(-20.0..430.0), rng.random_range(0.5..40.0))
        };
        let mut mismatches = 0;
        for _ in 0..1000 {
            let a = pt(&mut rng);
            let b = pt(&mut rng);
            let f = los_blocked(a, b, &g);
            assert_eq!(f, los_blocked(b, a, &g));
            if f != sampled_oracle(a, b, &g, 1000) {
                // a 1000-point sampler can miss a corner clip shorter than its step
                assert!(f && sampled_oracle(a, b, &g, 1_000_000), "{a:?} {b:?}");
                mismatches += 1;
            }
        }
        assert!(mismatches <= 5, "{mismatches}");
    }
}
