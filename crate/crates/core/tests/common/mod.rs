//! Measurement helpers shared by the feature tests and the acceptance gate.
#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ncr_sim::channel::{shadowing_sample, ChannelConfig, FadingProcess, LinkKey, SIGMA_SF_NLOS_DB, SLOT_DURATION_S};
use ncr_sim::geometry::NodeId;
use ncr_sim::mac::{rr_schedule, Bearer};
use ncr_sim::phy::bler::select;
use ncr_sim::phy::{
    interference_power, noise_power, outer_loop_update, sinr, useful_power, BlerTable, Direction,
    LinkAdaptationState, RbGains,
};

/// One scalar-channel instance: complex combined coefficients per path.
#[derive(Clone, Debug)]
pub struct ScalarInstance {
    /// `[x][y]`: transmitter of signal `y` (with its beam) to receiver `x`.
    pub direct: Vec<Vec<Complex64>>,
    /// `[r][y]`: transmitter of signal `y` to NCR `r`.
    pub hop1: Vec<Vec<Complex64>>,
    /// `[r][x]`: NCR `r` to receiver `x`.
    pub hop2: Vec<Vec<Complex64>>,
    pub gain: Vec<f64>,
    pub power: Vec<f64>,
    pub noise: f64,
}

fn cn(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * scale
}

pub fn random_instance(rng: &mut ChaCha8Rng) -> ScalarInstance {
    let n = rng.random_range(1..=3);
    let r = rng.random_range(0..=2);
    let scale = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(-6.0..-3.0));
    let direct = (0..n).map(|_| (0..n).map(|_| { let s = scale(rng); cn(rng, s) }).collect()).collect();
    let hop1 = (0..r).map(|_| (0..n).map(|_| { let s = scale(rng); cn(rng, s) }).collect()).collect();
    let hop2 = (0..r).map(|_| (0..n).map(|_| { let s = scale(rng); cn(rng, s) }).collect()).collect();
    let gain = (0..r).map(|_| if rng.random_bool(0.2) { 0.0 } else { 10f64.powf(rng.random_range(3.0..9.0)) }).collect();
    let power = (0..n).map(|_| 10f64.powf(rng.random_range(-1.0..2.0))).collect();
    let noise = 10f64.powf(rng.random_range(-13.0..-10.0));
    ScalarInstance { direct, hop1, hop2, gain, power, noise }
}

pub fn to_gains(inst: &ScalarInstance) -> RbGains {
    let sq = |m: &Vec<Vec<Complex64>>| m.iter().map(|row| row.iter().map(|c| c.norm_sqr()).collect()).collect();
    RbGains {
        direct: sq(&inst.direct),
        hop1: sq(&inst.hop1),
        hop2: sq(&inst.hop2),
        ncr_gain: inst.gain.clone(),
        tx_power: inst.power.clone(),
        noise: inst.noise,
    }
}

/// Brute-force useful, interference and noise powers: every (signal, path)
/// contribution is listed and then split by whether it carries signal `x`.
pub fn oracle(inst: &ScalarInstance, x: usize) -> (f64, f64, f64) {
    let n = inst.power.len();
    let mut terms: Vec<(usize, f64)> = Vec::new();
    for y in 0..n {
        let c = inst.direct[x][y];
        terms.push((y, (c.re * c.re + c.im * c.im) * inst.power[y]));
        for r in 0..inst.gain.len() {
            let a = inst.hop1[r][y];
            let b = inst.hop2[r][x];
            let amp = b * a * inst.gain[r].sqrt() * inst.power[y].sqrt();
            terms.push((y, amp.re * amp.re + amp.im * amp.im));
        }
    }
    let s: f64 = terms.iter().filter(|t| t.0 == x).map(|t| t.1).sum();
    let i: f64 = terms.iter().filter(|t| t.0 != x).map(|t| t.1).sum();
    let mut amplified = 0.0;
    for r in 0..inst.gain.len() {
        let b = inst.hop2[r][x];
        amplified += inst.noise * inst.gain[r] * (b.re * b.re + b.im * b.im);
    }
    (s, i, inst.noise + amplified)
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Largest relative error between the library and the oracle over
/// `count` random instances and every receiver in each.
pub fn sinr_oracle_max_error(count: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for k in 0..count {
        let inst = random_instance(&mut rng);
        let g = to_gains(&inst);
        g.validate().expect("valid instance");
        let dir = if k % 2 == 0 { Direction::Dl } else { Direction::Ul };
        for x in 0..inst.power.len() {
            let (s, i, n) = oracle(&inst, x);
            let out = sinr(&g, x, 0, dir).unwrap();
            worst = worst
                .max(rel(useful_power(&g, x).unwrap(), s))
                .max(rel(interference_power(&g, x).unwrap(), i))
                .max(rel(noise_power(&g, x).unwrap(), n))
                .max(rel(out.sinr, s / (i + n)));
        }
    }
    worst
}

/// Mean of |h|² over `links` independent Rayleigh links sampled at one
/// random slot and RB each.
pub fn fading_mean_power(links: usize, seed: u64) -> f64 {
    let cfg = ChannelConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for i in 0..links {
        let key = LinkKey::new(NodeId(1), NodeId(2 + i as u32));
        let f = FadingProcess::new(key, seed, None, cfg.max_doppler_hz(), cfg.delay_spread_ns * 1e-9, cfg.scatter_paths);
        acc += f.at(rng.random_range(0..100_000), rng.random_range(0..66)).norm_sqr();
    }
    acc / links as f64
}

/// Sample standard deviation of NLOS shadowing over independent links.
pub fn nlos_shadowing_std(links: usize, seed: u64) -> f64 {
    let v: Vec<f64> = (0..links)
        .map(|i| shadowing_sample(LinkKey::new(NodeId(0), NodeId(1 + i as u32)), seed, SIGMA_SF_NLOS_DB))
        .collect();
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Normalised lag-one (one slot) autocorrelation of Rayleigh fading,
/// averaged over links and start slots.
pub fn doppler_lag1_correlation(links: usize, seed: u64) -> f64 {
    let cfg = ChannelConfig::default();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = 0.0;
    for i in 0..links {
        let key = LinkKey::new(NodeId(3), NodeId(4 + i as u32));
        let f = FadingProcess::new(key, seed, None, cfg.max_doppler_hz(), cfg.delay_spread_ns * 1e-9, cfg.scatter_paths);
        for t in (0..2000).step_by(97) {
            let a = f.at(t, 0);
            let b = f.at(t + 1, 0);
            num += b * a.conj();
            den += a.norm_sqr();
        }
    }
    num.re / den
}

/// Bessel J0 by its power series, accurate for small arguments.
pub fn bessel_j0(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..40 {
        term *= -(x * x / 4.0) / (k * k) as f64;
        sum += term;
    }
    sum
}

/// Jakes lag-one correlation for one slot at the default UE speed.
pub fn jakes_lag1() -> f64 {
    let fd = ChannelConfig::default().max_doppler_hz();
    bessel_j0(2.0 * PI * fd * SLOT_DURATION_S)
}

/// Runs the outer loop for `slots` on a constant SINR; returns the BLER.
pub fn outer_loop_bler(sinr_db: f64, slots: u64, seed: u64) -> f64 {
    let table = BlerTable::packaged().unwrap();
    let mut st = LinkAdaptationState::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = 0u64;
    for _ in 0..slots {
        let sel = select(&table, &mut st, sinr_db);
        let ok = rng.random::<f64>() >= table.bler(sel.mcs, sinr_db);
        errors += u64::from(!ok);
        st = outer_loop_update(st, ok);
    }
    errors as f64 / slots as f64
}

/// Full-buffer symmetric bearers. When `refill_rbs` is set each bearer is
/// topped up to that many RBs' worth of data per slot, which forces RB
/// sharing inside a slot. Returns each bearer's share of all granted RBs.
/// Panics (inside the scheduler) if any slot idles an RB while data waits.
pub fn full_buffer_shares(n: usize, slots: u64, bits_per_rb: u64, refill_rbs: Option<u64>) -> Vec<f64> {
    let mut bearers: Vec<Bearer> = (0..n).map(|i| Bearer::new(NodeId::ue(i), Direction::Dl)).collect();
    let caps = vec![bits_per_rb; n];
    let mut counts = vec![0u64; n];
    for slot in 0..slots {
        for b in bearers.iter_mut() {
            let target = refill_rbs.map_or(u64::MAX / 4, |r| r * bits_per_rb);
            let have = b.backlog_bits();
            if have < target {
                b.enqueue(target - have, slot);
            }
        }
        let sched = rr_schedule(&bearers, slot, Direction::Dl, &caps, 66).unwrap();
        assert_eq!(sched.used_rbs(), 66, "slot {slot} idles RBs");
        for (rank, (b, rbs)) in sched.allocations().into_iter().enumerate() {
            counts[b] += rbs.len() as u64;
            bearers[b].drain_bits(rbs.len() as u64 * bits_per_rb, slot);
            bearers[b].mark_served(slot, rank);
        }
    }
    let total: u64 = counts.iter().sum();
    counts.iter().map(|c| *c as f64 / total as f64).collect()
}
