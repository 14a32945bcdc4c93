//! Classical reference: two coherent, co-oscillating dipole sources and the
//! far-field intensity they produce on a distant screen.

use log::warn;
use nalgebra::Vector3;
use num_complex::Complex64;
use serde::Serialize;

use crate::emission::{angular_factor, ExperimentConfig};
use crate::error::{Error, Result};
use crate::geometry::{Direction, Vec3, K0};

/// Ratio `|R - r_i| / |r_1 - r_2|` below which the far-field form is
/// considered unreliable.
pub const FAR_FIELD_RATIO: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassicalConfig {
    pub r1: Vec3,
    pub r2: Vec3,
    pub dipole: Direction,
    pub e01: Complex64,
    pub e02: Complex64,
    /// Stands in for `eps0 c / 2`; only normalized maps are ever compared.
    pub prefactor: f64,
    /// Angular frequency of the light; `2 pi` for unit wavelength and `c = 1`.
    pub omega0: f64,
}

impl ClassicalConfig {
    pub fn new(r1: Vec3, r2: Vec3, dipole: Direction, e01: Complex64, e02: Complex64) -> Self {
        Self { r1, r2, dipole, e01, e02, prefactor: 1.0, omega0: K0 }
    }

    /// Same geometry as `cfg` with source strengths proportional to the
    /// Rabi frequencies.
    pub fn matching(cfg: &ExperimentConfig) -> Self {
        Self::new(cfg.r1(), cfg.r2(), cfg.dipole(), cfg.rabi1(), cfg.rabi2())
    }

    pub fn with_prefactor(mut self, prefactor: f64) -> Result<Self> {
        if !(prefactor > 0.0) || !prefactor.is_finite() {
            return Err(Error::InvalidConfig(format!("prefactor must be positive, got {prefactor}")));
        }
        self.prefactor = prefactor;
        Ok(self)
    }

    pub fn snapshot(&self) -> ClassicalSnapshot {
        ClassicalSnapshot {
            r1: [self.r1.x, self.r1.y, self.r1.z],
            r2: [self.r2.x, self.r2.y, self.r2.z],
            dipole: [self.dipole.vector().x, self.dipole.vector().y, self.dipole.vector().z],
            e01: self.e01,
            e02: self.e02,
            prefactor: self.prefactor,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalSnapshot {
    pub r1: [f64; 3],
    pub r2: [f64; 3],
    pub dipole: [f64; 3],
    pub e01: Complex64,
    pub e02: Complex64,
    pub prefactor: f64,
}

/// Complex field at the screen point `point` and time `t`. Both sources
/// share the propagation direction `point / |point|`; the `1/distance`
/// falloff uses each source's exact distance.
pub fn field_at(point: &Vec3, t: f64, cfg: &ClassicalConfig) -> Result<Vector3<Complex64>> {
    let sep = (cfg.r1 - cfg.r2).norm();
    let k_hat = Direction::new(*point).map_err(|_| Error::PointAtSource)?;
    let pol = cfg.dipole.vector() - k_hat.vector() * cfg.dipole.dot(&k_hat);
    let time = Complex64::from_polar(1.0, -cfg.omega0 * t);
    let mut field = Vector3::zeros();
    for (r, e0) in [(cfg.r1, cfg.e01), (cfg.r2, cfg.e02)] {
        let rel = point - r;
        let dist = rel.norm();
        if dist == 0.0 {
            return Err(Error::PointAtSource);
        }
        if sep > 0.0 && dist < FAR_FIELD_RATIO * sep {
            warn!("screen point at distance {dist} is within {FAR_FIELD_RATIO}x the source separation");
        }
        let phase = Complex64::from_polar(1.0, -K0 * k_hat.vector().dot(&rel));
        let amp = e0 / dist * phase * time;
        field += pol.map(|c| amp * c);
    }
    Ok(field)
}

/// Far-field intensity per unit `1/R^2` in direction `k_hat`.
pub fn classical_intensity(k_hat: &Direction, cfg: &ClassicalConfig) -> f64 {
    let delta = K0 * k_hat.vector().dot(&(cfg.r1 - cfg.r2));
    let cross = cfg.e01.conj() * cfg.e02 * Complex64::from_polar(1.0, -delta);
    let bracket = cfg.e01.norm_sqr() + cfg.e02.norm_sqr() + 2.0 * cross.re;
    cfg.prefactor * angular_factor(&cfg.dipole, k_hat) * bracket.max(0.0)
}

pub fn classical_visibility(e01: Complex64, e02: Complex64) -> Result<f64> {
    let total = e01.norm_sqr() + e02.norm_sqr();
    if total == 0.0 {
        return Err(Error::InvalidConfig("both source strengths are zero".into()));
    }
    Ok(2.0 * e01.norm() * e02.norm() / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::steady::{steady_emission_density, steady_visibility};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pair(e01: Complex64, e02: Complex64) -> ClassicalConfig {
        ClassicalConfig::new(Vec3::new(0.0, 0.0, 10.0), Vec3::new(0.0, 0.0, -10.0), Direction::x(), e01, e02)
    }

    #[test]
    fn field_is_transverse() {
        let cfg = pair(c(1.0, 0.2), c(0.3, -0.7));
        for &(t, p) in &[(0.3, 0.2), (1.4, 2.0), (2.8, 5.0)] {
            let point = Direction::from_angles(t, p).vector() * 5e4;
            let f = field_at(&point, 0.37, &cfg).unwrap();
            let k = point / point.norm();
            let along = f.x * k.x + f.y * k.y + f.z * k.z;
            assert!(along.norm() <= 1e-10 * f.norm());
        }
    }

    #[test]
    fn field_examples() {
        let single = pair(c(2.0, 0.0), c(0.0, 0.0));
        let point = Vec3::new(0.0, 3e4, 10.0);
        let f = field_at(&point, 0.0, &single).unwrap();
        assert_abs_diff_eq!(f.norm(), 2.0 / 3e4, epsilon = 1e-15);

        // dipole along the propagation direction radiates nothing
        let f = field_at(&Vec3::new(4e4, 0.0, 0.0), 0.0, &pair(c(1.0, 0.0), c(1.0, 0.0))).unwrap();
        assert!(f.norm() < 1e-20);

        // bisector plane: equal paths, amplitudes add
        let both = pair(c(1.0, 0.0), c(1.0, 0.0));
        let point = Vec3::new(0.0, 5e4, 0.0);
        let f2 = field_at(&point, 0.0, &both).unwrap();
        let f1 = field_at(&point, 0.0, &pair(c(1.0, 0.0), c(0.0, 0.0))).unwrap();
        assert_abs_diff_eq!(f2.norm(), 2.0 * f1.norm(), epsilon = 1e-18);

        assert_eq!(field_at(&Vec3::new(0.0, 0.0, 10.0), 0.0, &both), Err(Error::PointAtSource));
        assert_eq!(field_at(&Vec3::zeros(), 0.0, &both), Err(Error::PointAtSource));
    }

    #[test]
    fn intensity_examples() {
        let e = c(0.6, 0.8);
        let cfg = pair(e, e);
        // cos(theta) = 0 makes k.(r1 - r2) = 0
        let k = Direction::from_angles(PI / 2.0, PI / 2.0);
        assert_abs_diff_eq!(classical_intensity(&k, &cfg), 4.0, epsilon = 1e-14);
        // k0 * 20 * cos(theta) = pi
        let k = Direction::from_angles((1.0f64 / 40.0).acos(), PI / 2.0);
        assert_abs_diff_eq!(classical_intensity(&k, &cfg), 0.0, epsilon = 1e-14);

        let uneven = pair(c(2.0, 0.0), c(1.0, 0.0));
        let hi = classical_intensity(&Direction::from_angles(PI / 2.0, PI / 2.0), &uneven);
        let lo = classical_intensity(&Direction::from_angles((1.0f64 / 40.0).acos(), PI / 2.0), &uneven);
        assert_abs_diff_eq!((hi - lo) / (hi + lo), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn visibility_examples() {
        assert_abs_diff_eq!(classical_visibility(c(1.0, 0.0), c(0.0, 1.0)).unwrap(), 1.0);
        assert_eq!(classical_visibility(c(1.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        assert_abs_diff_eq!(classical_visibility(c(3.0, 0.0), c(1.0, 0.0)).unwrap(), 0.6, epsilon = 1e-15);
        assert!(classical_visibility(c(0.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn far_field_limit() {
        let cfg = pair(c(1.0, 0.3), c(0.5, -0.2));
        let sep = 20.0;
        for &(t, p) in &[(0.7, 1.1), (1.5, 0.4), (2.2, 3.5)] {
            let k = Direction::from_angles(t, p);
            let point = k.vector() * (1e4 * sep);
            let f = field_at(&point, 1.3, &cfg).unwrap();
            let d1 = (point - cfg.r1).norm();
            let near = cfg.prefactor * f.norm_squared() * d1 * d1;
            let far = classical_intensity(&k, &cfg);
            assert!((near - far).abs() < 0.01 * far, "{near} vs {far}");
        }
    }

    #[test]
    fn weak_drive_matches_quantum_shape() {
        let om = c(0.05, 0.0);
        let q = ExperimentConfig::reference_setup().with_rabi(om, om * Complex64::from_polar(1.0, 0.4));
        let cl = ClassicalConfig::matching(&q);
        let n = 60;
        let mut qs = Vec::new();
        let mut cs = Vec::new();
        for i in 0..n {
            let k = Direction::from_angles(PI * (i as f64 + 0.5) / n as f64, 1.3);
            qs.push(steady_emission_density(&q, &k).unwrap());
            cs.push(classical_intensity(&k, &cl));
        }
        let qmax = qs.iter().cloned().fold(0.0, f64::max);
        let cmax = cs.iter().cloned().fold(0.0, f64::max);
        for (a, b) in qs.iter().zip(&cs) {
            assert!((a / qmax - b / cmax).abs() < 0.02);
        }
    }

    #[test]
    fn quantum_visibility_lower() {
        for &om in &[0.1, 0.3, 1.0] {
            let cfg = ExperimentConfig::reference_setup().with_rabi(c(om, 0.0), c(om, 0.0));
            let vc = classical_visibility(cfg.rabi1(), cfg.rabi2()).unwrap();
            assert!(steady_visibility(&cfg) < vc);
        }
    }
}
