//! Per-link channel state: UMi street-canyon path loss, correlated lognormal
//! shadowing and a sum-of-sinusoids Rician/Rayleigh fading surrogate with
//! Jakes Doppler and exponential power-delay profile.
//!
//! The channel between panels is rank one:
//! `H = A * sqrt(G_rx G_tx) * h(t, f) * a_rx a_txᵀ`, where `A` is the
//! large-scale amplitude, `G` the element gains, `h` the fading coefficient
//! and `a` the unit-modulus array responses. `H(b->a) = H(a->b)ᵀ`.

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::antenna::UraPanel;
use crate::error::{Error, Result};
use crate::geometry::{NodeId, Point3};
use crate::rng::{stream_rng, tag};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
pub const SIGMA_SF_LOS_DB: f64 = 4.0;
pub const SIGMA_SF_NLOS_DB: f64 = 7.82;
pub const SLOT_DURATION_S: f64 = 0.25e-3;
pub const RB_BANDWIDTH_HZ: f64 = 12.0 * 60e3;

/// How the LOS state of links toward UEs is decided.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LosModel {
    /// LOS iff the segment clears every building.
    #[default]
    Geometric,
    /// Geometric blockage, and otherwise LOS with the UMi street-canyon
    /// distance-dependent probability.
    Stochastic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    pub carrier_ghz: f64,
    pub shadowing_corr_m: f64,
    /// Rician K-factor of LOS links. `inf` gives a pure LOS channel.
    pub rician_k_db: f64,
    pub delay_spread_ns: f64,
    /// Number of scattered sinusoids per link.
    pub scatter_paths: usize,
    pub ue_speed_mps: f64,
    pub los_model: LosModel,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            carrier_ghz: 28.0,
            shadowing_corr_m: 13.0,
            rician_k_db: 10.0,
            delay_spread_ns: 100.0,
            scatter_paths: 16,
            ue_speed_mps: crate::geometry::UE_SPEED_MPS,
            los_model: LosModel::Geometric,
        }
    }
}

impl ChannelConfig {
    pub fn max_doppler_hz(&self) -> f64 {
        self.ue_speed_mps * self.carrier_ghz * 1e9 / SPEED_OF_LIGHT
    }
}

/// TR 38.901 UMi street-canyon path loss in dB.
///
/// `h_bs`/`h_ut` are the heights of the higher and lower end of the link.
pub fn path_loss_umi(distance_3d: f64, fc_ghz: f64, los: bool, h_bs: f64, h_ut: f64) -> Result<f64> {
    if distance_3d.is_nan() || distance_3d < 1.0 {
        return Err(Error::DistanceOutOfRange(distance_3d));
    }
    let dh = h_bs - h_ut;
    let d2 = (distance_3d * distance_3d - dh * dh).max(0.0).sqrt();
    let d_bp = 4.0 * (h_bs - 1.0) * (h_ut - 1.0) * fc_ghz * 1e9 / SPEED_OF_LIGHT;
    let pl_los = if d2 <= d_bp {
        32.4 + 21.0 * distance_3d.log10() + 20.0 * fc_ghz.log10()
    } else {
        32.4 + 40.0 * distance_3d.log10() + 20.0 * fc_ghz.log10()
            - 9.5 * (d_bp * d_bp + dh * dh).log10()
    };
    if los {
        return Ok(pl_los);
    }
    let pl_nlos = 35.3 * distance_3d.log10() + 22.4 + 21.3 * fc_ghz.log10() - 0.3 * (h_ut - 1.5);
    Ok(pl_los.max(pl_nlos))
}

/// Unordered node pair; both link directions share one key.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LinkKey {
    pub lo: NodeId,
    pub hi: NodeId,
}

impl LinkKey {
    pub fn new(a: NodeId, b: NodeId) -> Self {
        if a <= b {
            Self { lo: a, hi: b }
        } else {
            Self { lo: b, hi: a }
        }
    }

    fn tags(&self, kind: u64) -> [u64; 3] {
        [kind, self.lo.0 as u64, self.hi.0 as u64]
    }
}

/// UMi street-canyon LOS probability at 2D distance `d_2d`.
pub fn los_probability_umi(d_2d: f64) -> f64 {
    if d_2d <= 18.0 {
        1.0
    } else {
        18.0 / d_2d + (-d_2d / 36.0).exp() * (1.0 - 18.0 / d_2d)
    }
}

/// Fixed uniform draw of a link, compared against the LOS probability so
/// that the LOS state changes only when the probability crosses it.
pub fn los_draw(link: LinkKey, rng_seed: u64) -> f64 {
    stream_rng(rng_seed, &link.tags(tag::LOS)).random::<f64>()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeScaleState {
    pub path_loss_db: f64,
    pub shadowing_db: f64,
    pub los: bool,
    pub distance_3d: f64,
}

impl LargeScaleState {
    /// Linear power gain `10^(-(PL + SF)/10)`.
    pub fn gain(&self) -> f64 {
        10f64.powf(-(self.path_loss_db + self.shadowing_db) / 10.0)
    }
}

/// First shadowing draw of a link, in dB.
pub fn shadowing_sample(link: LinkKey, rng_seed: u64, sigma_db: f64) -> f64 {
    let mut rng = stream_rng(rng_seed, &link.tags(tag::SHADOWING));
    let z: f64 = StandardNormal.sample(&mut rng);
    sigma_db * z
}

/// Zero-mean Gaussian shadowing (dB) with exponential autocorrelation in the
/// distance travelled.
#[derive(Clone, Debug)]
pub struct ShadowingProcess {
    pub sigma_db: f64,
    pub corr_dist_m: f64,
    value_db: f64,
    rng: ChaCha8Rng,
}

impl ShadowingProcess {
    pub fn new(link: LinkKey, rng_seed: u64, sigma_db: f64, corr_dist_m: f64) -> Self {
        let mut rng = stream_rng(rng_seed, &link.tags(tag::SHADOWING));
        let z: f64 = StandardNormal.sample(&mut rng);
        Self { sigma_db, corr_dist_m, value_db: sigma_db * z, rng }
    }

    pub fn value_db(&self) -> f64 {
        self.value_db
    }

    /// Advances the process after the link end moved by `moved_m` metres.
    pub fn advance(&mut self, moved_m: f64) -> f64 {
        if moved_m > 0.0 {
            let rho = (-moved_m / self.corr_dist_m).exp();
            let z: f64 = StandardNormal.sample(&mut self.rng);
            self.value_db = rho * self.value_db + (1.0 - rho * rho).sqrt() * self.sigma_db * z;
        }
        self.value_db
    }

    /// Re-targets the standard deviation (LOS state change), keeping the
    /// normalised state.
    pub fn set_sigma(&mut self, sigma_db: f64) {
        if self.sigma_db > 0.0 {
            self.value_db *= sigma_db / self.sigma_db;
        }
        self.sigma_db = sigma_db;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Sinusoid {
    amplitude: f64,
    doppler_hz: f64,
    delay_s: f64,
    phase: f64,
}

impl Sinusoid {
    fn eval(&self, t_s: f64, f_hz: f64) -> Complex64 {
        let arg = 2.0 * PI * (self.doppler_hz * t_s - f_hz * self.delay_s) + self.phase;
        Complex64::from_polar(self.amplitude, arg)
    }
}

/// Small-scale fading of one link with unit mean power.
#[derive(Clone, Debug, PartialEq)]
pub struct FadingProcess {
    los: Option<Sinusoid>,
    scatter: Vec<Sinusoid>,
}

impl FadingProcess {
    /// `k_linear = None` gives Rayleigh fading; `Some(inf)` a pure LOS ray.
    pub fn new(
        link: LinkKey,
        rng_seed: u64,
        k_linear: Option<f64>,
        max_doppler_hz: f64,
        delay_spread_s: f64,
        paths: usize,
    ) -> Self {
        let mut rng = stream_rng(rng_seed, &link.tags(tag::FADING));
        let paths = paths.max(1);
        let (los_power, scatter_power) = match k_linear {
            None => (0.0, 1.0),
            Some(k) if k.is_infinite() => (1.0, 0.0),
            Some(k) => (k / (k + 1.0), 1.0 / (k + 1.0)),
        };
        let los = k_linear.map(|_| Sinusoid {
            amplitude: los_power.sqrt(),
            doppler_hz: max_doppler_hz * (2.0 * PI * rng.random::<f64>()).cos(),
            delay_s: 0.0,
            phase: 2.0 * PI * rng.random::<f64>(),
        });
        let delay = Exp::new(1.0).expect("unit rate");
        let amp = (scatter_power / paths as f64).sqrt();
        let scatter = (0..paths)
            .map(|_| Sinusoid {
                amplitude: amp,
                doppler_hz: max_doppler_hz * (2.0 * PI * rng.random::<f64>()).cos(),
                delay_s: delay_spread_s * delay.sample(&mut rng),
                phase: 2.0 * PI * rng.random::<f64>(),
            })
            .filter(|s| s.amplitude > 0.0)
            .collect();
        Self { los, scatter }
    }

    /// Complex coefficient at time `t_s` and frequency offset `f_hz`.
    pub fn coefficient(&self, t_s: f64, f_hz: f64) -> Complex64 {
        let mut h = self.los.map_or(Complex64::new(0.0, 0.0), |s| s.eval(t_s, f_hz));
        for s in &self.scatter {
            h += s.eval(t_s, f_hz);
        }
        h
    }

    pub fn at(&self, slot: u64, rb: usize) -> Complex64 {
        self.coefficient(slot as f64 * SLOT_DURATION_S, rb as f64 * RB_BANDWIDTH_HZ)
    }
}

/// State of the channel between two nodes.
#[derive(Clone, Debug)]
pub struct ChannelLink {
    pub key: LinkKey,
    pub pos_lo: Point3,
    pub pos_hi: Point3,
    pub large: LargeScaleState,
    pub shadowing: ShadowingProcess,
    pub fading: FadingProcess,
}

/// Options controlling how a link's large-scale state is evaluated.
#[derive(Clone, Copy, Debug)]
pub struct LinkGeometry {
    pub pos_a: Point3,
    pub pos_b: Point3,
    pub los: bool,
    /// Links between two fixed nodes have no Doppler.
    pub static_link: bool,
}

impl ChannelLink {
    pub fn new(a: NodeId, b: NodeId, geom: LinkGeometry, cfg: &ChannelConfig, rng_seed: u64) -> Result<Self> {
        let key = LinkKey::new(a, b);
        let (pos_lo, pos_hi) = if key.lo == a { (geom.pos_a, geom.pos_b) } else { (geom.pos_b, geom.pos_a) };
        let sigma = if geom.los { SIGMA_SF_LOS_DB } else { SIGMA_SF_NLOS_DB };
        let shadowing = ShadowingProcess::new(key, rng_seed, sigma, cfg.shadowing_corr_m);
        let k = geom.los.then(|| 10f64.powf(cfg.rician_k_db / 10.0));
        let doppler = if geom.static_link { 0.0 } else { cfg.max_doppler_hz() };
        let fading = FadingProcess::new(key, rng_seed, k, doppler, cfg.delay_spread_ns * 1e-9, cfg.scatter_paths);
        let mut link = Self {
            key,
            pos_lo,
            pos_hi,
            large: LargeScaleState { path_loss_db: 0.0, shadowing_db: 0.0, los: geom.los, distance_3d: 0.0 },
            shadowing,
            fading,
        };
        link.refresh_large_scale(cfg)?;
        Ok(link)
    }

    fn refresh_large_scale(&mut self, cfg: &ChannelConfig) -> Result<()> {
        let d = self.pos_lo.distance(self.pos_hi).max(1.0);
        let (h_bs, h_ut) = if self.pos_lo.z >= self.pos_hi.z {
            (self.pos_lo.z, self.pos_hi.z)
        } else {
            (self.pos_hi.z, self.pos_lo.z)
        };
        self.large.distance_3d = d;
        self.large.path_loss_db = path_loss_umi(d, cfg.carrier_ghz, self.large.los, h_bs, h_ut)?;
        self.large.shadowing_db = self.shadowing.value_db();
        Ok(())
    }

    /// Moves the link ends and advances shadowing by the distance travelled.
    pub fn update_positions(&mut self, pos_lo: Point3, pos_hi: Point3, los: bool, cfg: &ChannelConfig) -> Result<()> {
        let moved = self.pos_lo.distance(pos_lo) + self.pos_hi.distance(pos_hi);
        self.pos_lo = pos_lo;
        self.pos_hi = pos_hi;
        if los != self.large.los {
            self.large.los = los;
            self.shadowing.set_sigma(if los { SIGMA_SF_LOS_DB } else { SIGMA_SF_NLOS_DB });
        }
        self.shadowing.advance(moved);
        self.refresh_large_scale(cfg)
    }

    pub fn position_of(&self, id: NodeId) -> Point3 {
        if id == self.key.lo {
            self.pos_lo
        } else {
            self.pos_hi
        }
    }

    /// Unit vector from `from` toward the other end.
    pub fn direction_from(&self, from: NodeId) -> Point3 {
        let (a, b) = if from == self.key.lo { (self.pos_lo, self.pos_hi) } else { (self.pos_hi, self.pos_lo) };
        (b - a).normalized()
    }

    /// Large-scale amplitude times fading coefficient (no antenna terms).
    pub fn scalar(&self, slot: u64, rb: usize) -> Complex64 {
        self.fading.at(slot, rb) * self.large.gain().sqrt()
    }

    /// `h · a_rx a_txᵀ` for a transmission from `tx` to the other end.
    pub fn fading_sample(&self, tx: NodeId, tx_panel: &UraPanel, rx_panel: &UraPanel, slot: u64, rb: usize) -> Array2<Complex64> {
        let h = self.fading.at(slot, rb);
        let rx = if tx == self.key.lo { self.key.hi } else { self.key.lo };
        let a_t = tx_panel.array_response(self.direction_from(tx));
        let a_r = rx_panel.array_response(self.direction_from(rx));
        Array2::from_shape_fn((a_r.len(), a_t.len()), |(i, j)| h * a_r[i] * a_t[j])
    }

    /// Full `N_r x N_t` channel matrix for a transmission from `tx`.
    pub fn channel_matrix(&self, tx: NodeId, tx_panel: &UraPanel, rx_panel: &UraPanel, slot: u64, rb: usize) -> Array2<Complex64> {
        let rx = if tx == self.key.lo { self.key.hi } else { self.key.lo };
        let elem = (tx_panel.element_gain_linear(self.direction_from(tx))
            * rx_panel.element_gain_linear(self.direction_from(rx)))
        .sqrt();
        let amp = self.large.gain().sqrt() * elem;
        self.fading_sample(tx, tx_panel, rx_panel, slot, rb).mapv(|x| x * amp)
    }
}
