//! Uniform rectangular array panels, the 3GPP 3D element pattern, DFT beam
//! codebooks and the combined beamforming gain `d · H · f`.
//!
//! Panel-local frame: `x'` is the (tilted) boresight, `y'` is horizontal and
//! to the left of the boresight, `z'` completes the right-handed frame. Array
//! elements sit in the `y'z'` plane, column index along `y'`, row index along
//! `z'`, flattened row-major (`row * cols + col`).

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::Point3;

pub const MAX_ELEMENT_GAIN_DBI: f64 = 8.0;
pub const ELEMENT_BEAMWIDTH_DEG: f64 = 65.0;
pub const FRONT_TO_BACK_DB: f64 = 30.0;
pub const SIDE_LOBE_LIMIT_DB: f64 = 30.0;

/// Angles in a panel-local frame, degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalAngles {
    pub az_deg: f64,
    pub el_deg: f64,
}

/// Antenna element model of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementPattern {
    /// 3GPP TR 38.901 3D sector pattern.
    Sector3gpp,
    /// Isotropic 0 dBi.
    Omni,
}

/// 3GPP 3D element gain in dBi for local elevation/azimuth offsets from
/// boresight (degrees). `(0, 0)` is boresight.
pub fn element_gain_dbi(el_deg: f64, az_deg: f64) -> f64 {
    let az = wrap_deg(az_deg);
    let vertical = -(12.0 * (el_deg / ELEMENT_BEAMWIDTH_DEG).powi(2)).min(SIDE_LOBE_LIMIT_DB);
    let horizontal = -(12.0 * (az / ELEMENT_BEAMWIDTH_DEG).powi(2)).min(FRONT_TO_BACK_DB);
    MAX_ELEMENT_GAIN_DBI - (-(vertical + horizontal)).min(FRONT_TO_BACK_DB)
}

pub fn pattern_gain_dbi(pattern: ElementPattern, angles: LocalAngles) -> f64 {
    match pattern {
        ElementPattern::Sector3gpp => element_gain_dbi(angles.el_deg, angles.az_deg),
        ElementPattern::Omni => 0.0,
    }
}

/// Wraps an angle into `(-180, 180]`.
pub fn wrap_deg(a: f64) -> f64 {
    let mut x = a % 360.0;
    if x <= -180.0 {
        x += 360.0;
    } else if x > 180.0 {
        x -= 360.0;
    }
    x
}

/// Angular sector spanned by a codebook, as half-widths around boresight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sector {
    pub az_half_deg: f64,
    pub el_half_deg: f64,
}

impl Default for Sector {
    fn default() -> Self {
        Self { az_half_deg: 60.0, el_half_deg: 25.0 }
    }
}

/// An `rows x cols` uniform rectangular array mounted with a given boresight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UraPanel {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub spacing_wl: f64,
    /// Boresight azimuth in the global frame (degrees, counter-clockwise from +x).
    pub boresight_az_deg: f64,
    /// Positive values tilt the boresight below the horizon.
    pub downtilt_deg: f64,
    pub pattern: ElementPattern,
    pub sector: Sector,
}

impl UraPanel {
    /// The 8x8, half-wavelength, 3GPP-pattern panel used by gNBs and NCRs.
    pub fn standard(boresight_az_deg: f64, downtilt_deg: f64) -> Self {
        Self {
            rows: 8,
            cols: 8,
            spacing_wl: 0.5,
            boresight_az_deg,
            downtilt_deg,
            pattern: ElementPattern::Sector3gpp,
            sector: Sector::default(),
        }
    }

    /// Single omnidirectional element (UE).
    pub fn omni() -> Self {
        Self {
            rows: 1,
            cols: 1,
            spacing_wl: 0.5,
            boresight_az_deg: 0.0,
            downtilt_deg: 0.0,
            pattern: ElementPattern::Omni,
            sector: Sector::default(),
        }
    }

    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    /// Global unit vector of the boresight.
    pub fn boresight(&self) -> Point3 {
        let az = self.boresight_az_deg.to_radians();
        let el = -self.downtilt_deg.to_radians();
        Point3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin())
    }

    /// Converts a global direction (need not be normalised) into local angles.
    pub fn local_angles(&self, dir: Point3) -> LocalAngles {
        let (x, y, z) = self.local_components(dir);
        LocalAngles {
            az_deg: y.atan2(x).to_degrees(),
            el_deg: z.clamp(-1.0, 1.0).asin().to_degrees(),
        }
    }

    fn local_components(&self, dir: Point3) -> (f64, f64, f64) {
        let d = dir.normalized();
        let (sa, ca) = self.boresight_az_deg.to_radians().sin_cos();
        let (st, ct) = self.downtilt_deg.to_radians().sin_cos();
        let x1 = ca * d.x + sa * d.y;
        let y1 = -sa * d.x + ca * d.y;
        let z1 = d.z;
        (x1 * ct - z1 * st, y1, x1 * st + z1 * ct)
    }

    /// Element power gain (linear) toward a global direction.
    pub fn element_gain_linear(&self, dir: Point3) -> f64 {
        db_to_linear(pattern_gain_dbi(self.pattern, self.local_angles(dir)))
    }

    /// Unit-modulus array response `a` toward a global direction.
    pub fn array_response(&self, dir: Point3) -> Vec<Complex64> {
        let (_, y, z) = self.local_components(dir);
        self.response_from_spatial(y, z)
    }

    fn response_from_spatial(&self, psi_y: f64, psi_z: f64) -> Vec<Complex64> {
        let k = 2.0 * PI * self.spacing_wl;
        let mut out = Vec::with_capacity(self.num_elements());
        for row in 0..self.rows {
            for col in 0..self.cols {
                let phase = k * (col as f64 * psi_y + row as f64 * psi_z);
                out.push(Complex64::from_polar(1.0, phase));
            }
        }
        out
    }

    /// Power gain (linear) of `beam` toward a global direction, element
    /// pattern included. Peaks at `num_elements * element gain`.
    pub fn beam_gain(&self, beam: &Beam, dir: Point3) -> f64 {
        let a = self.array_response(dir);
        let af: Complex64 = beam.weights.iter().zip(&a).map(|(w, x)| w * x).sum();
        af.norm_sqr() * self.element_gain_linear(dir)
    }
}

/// Unit-norm URA array response toward local angles `(az, el)`.
pub fn steering_vector(panel: &UraPanel, az_deg: f64, el_deg: f64) -> Vec<Complex64> {
    let (az, el) = (az_deg.to_radians(), el_deg.to_radians());
    let norm = (panel.num_elements() as f64).sqrt();
    panel
        .response_from_spatial(el.cos() * az.sin(), el.sin())
        .into_iter()
        .map(|x| x / norm)
        .collect()
}

/// One codebook entry. `weights` is the conjugate of the steering vector so
/// that `weights · a` is real and maximal at the pointing direction.
#[derive(Clone, Debug, PartialEq)]
pub struct Beam {
    pub index: usize,
    pub weights: Vec<Complex64>,
    pub pointing: LocalAngles,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    pub beams: Vec<Beam>,
    pub n_az: usize,
    pub n_el: usize,
}

impl Codebook {
    pub fn len(&self) -> usize {
        self.beams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beams.is_empty()
    }
}

/// Oversampled DFT grid over the panel sector: beams are uniformly spaced in
/// the spatial frequencies `(cos el sin az, sin el)`. Beam index is
/// `el_index * n_az + az_index`.
pub fn build_codebook(panel: &UraPanel, n_az: usize, n_el: usize) -> Result<Codebook> {
    if n_az == 0 || n_el == 0 {
        return Err(Error::InvalidInput(format!(
            "codebook needs at least one beam per dimension, got {n_az}x{n_el}"
        )));
    }
    let span_y = panel.sector.az_half_deg.to_radians().sin();
    let span_z = panel.sector.el_half_deg.to_radians().sin();
    let grid = |n: usize, span: f64, i: usize| -span + (i as f64 + 0.5) * 2.0 * span / n as f64;
    let norm = (panel.num_elements() as f64).sqrt();

    let mut beams = Vec::with_capacity(n_az * n_el);
    for j in 0..n_el {
        let psi_z = if n_el == 1 { 0.0 } else { grid(n_el, span_z, j) };
        for i in 0..n_az {
            let psi_y = if n_az == 1 { 0.0 } else { grid(n_az, span_y, i) };
            let el = psi_z.asin();
            let az = (psi_y / el.cos()).clamp(-1.0, 1.0).asin();
            let weights = panel
                .response_from_spatial(psi_y, psi_z)
                .into_iter()
                .map(|x| x.conj() / norm)
                .collect();
            beams.push(Beam {
                index: beams.len(),
                weights,
                pointing: LocalAngles { az_deg: az.to_degrees(), el_deg: el.to_degrees() },
            });
        }
    }
    Ok(Codebook { beams, n_az, n_el })
}

/// The scalar `gamma = d · H · f` for a receive filter `d` (length `N_r`),
/// channel `H` (`N_r x N_t`) and transmit filter `f` (length `N_t`).
pub fn combined_gain(
    tx_filter: &[Complex64],
    channel: &Array2<Complex64>,
    rx_filter: &[Complex64],
) -> Result<Complex64> {
    let (n_r, n_t) = channel.dim();
    if rx_filter.len() != n_r || tx_filter.len() != n_t {
        return Err(Error::DimensionMismatch(format!(
            "d is 1x{}, H is {}x{}, f is {}x1",
            rx_filter.len(),
            n_r,
            n_t,
            tx_filter.len()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (r, d) in rx_filter.iter().enumerate() {
        let row: Complex64 = channel.row(r).iter().zip(tx_filter).map(|(h, f)| h * f).sum();
        acc += d * row;
    }
    Ok(acc)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn norm(v: &[Complex64]) -> f64 {
        v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
        a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
    }

    #[test]
    fn element_pattern_reference_points() {
        assert!((element_gain_dbi(0.0, 0.0) - 8.0).abs() < 1e-12);
        assert!((element_gain_dbi(0.0, 32.5) - 5.0).abs() < 1e-12);
        assert!((element_gain_dbi(32.5, 0.0) - 5.0).abs() < 1e-12);
        // front-to-back floor
        assert!((element_gain_dbi(0.0, 180.0) - (8.0 - 30.0)).abs() < 1e-12);
        assert_eq!(pattern_gain_dbi(ElementPattern::Omni, LocalAngles { az_deg: 77.0, el_deg: -40.0 }), 0.0);
    }

    #[test]
    fn element_pattern_even_and_peaked_at_boresight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let az: f64 = rng.random_range(0.01..180.0);
            let el: f64 = rng.random_range(-90.0..90.0);
            assert_eq!(element_gain_dbi(el, az), element_gain_dbi(el, -az));
            assert!(element_gain_dbi(el, az) < 8.0);
        }
    }

    #[test]
    fn boresight_steering_is_flat() {
        let p = UraPanel::standard(0.0, 0.0);
        let s = steering_vector(&p, 0.0, 0.0);
        assert_eq!(s.len(), 64);
        for x in &s {
            assert!((x.re - 0.125).abs() < 1e-15 && x.im.abs() < 1e-15);
        }
    }

    #[test]
    fn steering_vectors_are_unit_norm_and_orthogonal_at_endfire() {
        let p = UraPanel::standard(0.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let s = steering_vector(&p, rng.random_range(-180.0..180.0), rng.random_range(-90.0..90.0));
            assert!((norm(&s) - 1.0).abs() < 1e-12);
        }
        let a = steering_vector(&p, 0.0, 0.0);
        let b = steering_vector(&p, 90.0, 0.0);
        assert!(inner(&a, &b).norm() < 0.05);
    }

    #[test]
    fn codebook_cardinality_and_norm() {
        let p = UraPanel::standard(0.0, 0.0);
        let cb = build_codebook(&p, 8, 4).unwrap();
        assert_eq!(cb.len(), 32);
        for b in &cb.beams {
            assert!((norm(&b.weights) - 1.0).abs() < 1e-12);
        }
        assert!(build_codebook(&p, 0, 4).is_err());
    }

    fn array_gain(p: &UraPanel, beam: &Beam, az: f64, el: f64) -> f64 {
        let s = steering_vector(p, az, el);
        let a: Vec<Complex64> = s.iter().map(|x| x * 8.0).collect();
        beam.weights.iter().zip(&a).map(|(w, x)| w * x).sum::<Complex64>().norm_sqr()
    }

    #[test]
    fn adjacent_beam_crossover_within_3db() {
        let p = UraPanel::standard(0.0, 0.0);
        for (n_az, n_el) in [(8, 4), (13, 5)] {
            let cb = build_codebook(&p, n_az, n_el).unwrap();
            for j in 0..n_el {
                for i in 0..n_az.saturating_sub(1) {
                    let b0 = &cb.beams[j * n_az + i];
                    let b1 = &cb.beams[j * n_az + i + 1];
                    let el = b0.pointing.el_deg;
                    // midpoint in spatial frequency
                    let el_r = el.to_radians();
                    let psi = 0.5 * (el_r.cos() * b0.pointing.az_deg.to_radians().sin()
                        + el_r.cos() * b1.pointing.az_deg.to_radians().sin());
                    let az = (psi / el_r.cos()).asin().to_degrees();
                    let g = array_gain(&p, b0, az, el);
                    assert!(10.0 * (64.0 / g).log10() <= 3.0, "{n_az}x{n_el}: loss {}", 10.0 * (64.0 / g).log10());
                }
            }
        }
    }

    #[test]
    fn default_codebook_peak_loss_within_3db_over_sector() {
        let p = UraPanel::standard(0.0, 0.0);
        let cb = build_codebook(&p, 13, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let az = rng.random_range(-60.0..60.0);
            let el = rng.random_range(-25.0..25.0);
            let best = cb.beams.iter().map(|b| array_gain(&p, b, az, el)).fold(0.0, f64::max);
            assert!(10.0 * (64.0 / best).log10() <= 3.0, "az {az} el {el}");
        }
    }

    #[test]
    fn local_angles_follow_boresight_and_tilt() {
        let p = UraPanel::standard(90.0, 12.0);
        let b = p.boresight();
        let la = p.local_angles(b);
        assert!(la.az_deg.abs() < 1e-9 && la.el_deg.abs() < 1e-9);
        let la = p.local_angles(Point3::new(0.0, 1.0, 0.0));
        assert!((la.el_deg - 12.0).abs() < 1e-9);
        let la = p.local_angles(Point3::new(-1.0, 0.0, 0.0));
        assert!((la.az_deg - 90.0).abs() < 1e-9);
    }

    #[test]
    fn combined_gain_identity_and_linearity() {
        let n = 4;
        let mut h = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            h[[i, i]] = Complex64::new(1.0, 0.0);
        }
        let v: Vec<Complex64> = (0..n).map(|_| Complex64::new(0.5, 0.0)).collect();
        let g = combined_gain(&v, &h, &v).unwrap();
        assert!((g - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let alpha = Complex64::new(0.3, -1.2);
        let g2 = combined_gain(&v, &h.mapv(|x| x * alpha), &v).unwrap();
        assert!((g2 - alpha).norm() < 1e-15);
        assert!(combined_gain(&v[..3], &h, &v).is_err());
    }

    #[test]
    fn combined_gain_matches_triple_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        for _ in 0..100 {
            let h = Array2::from_shape_fn((2, 2), |_| c());
            let f = [c(), c()];
            let d = [c(), c()];
            let mut oracle = Complex64::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    oracle += d[i] * h[[i, j]] * f[j];
                }
            }
            let g = combined_gain(&f, &h, &d).unwrap();
            assert!((g - oracle).norm() <= 1e-12 * oracle.norm().max(1e-300));
        }
    }

    #[test]
    fn matched_filters_maximise_gain_for_rank_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 4;
        let mut c = || Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let a_r: Vec<Complex64> = (0..n).map(|_| c()).collect();
        let a_t: Vec<Complex64> = (0..n).map(|_| c()).collect();
        let h = Array2::from_shape_fn((n, n), |(i, j)| a_r[i] * a_t[j]);
        let unit = |v: Vec<Complex64>| {
            let s = norm(&v);
            v.into_iter().map(|x| x / s).collect::<Vec<_>>()
        };
        let d = unit(a_r.iter().map(|x| x.conj()).collect());
        let f = unit(a_t.iter().map(|x| x.conj()).collect());
        let matched = combined_gain(&f, &h, &d).unwrap().norm();
        for _ in 0..1000 {
            let dr = unit((0..n).map(|_| c()).collect());
            let fr = unit((0..n).map(|_| c()).collect());
            assert!(matched + 1e-12 >= combined_gain(&fr, &h, &dr).unwrap().norm());
        }
    }
}
