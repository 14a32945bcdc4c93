//! Angular emission law for a photon "click" from two identical two-level
//! atoms: the direction-resolved probability density for pure and mixed
//! atomic states, the post-click reset state, and the which-way overlap.
//!
//! With `phi_i = k0 k.r_i`, a click in direction `k` maps the atomic state to
//! `sum_i exp(-i phi_i) S_i^- |psi>` and has density
//! `(3A / 8 pi) (1 - |d.k|^2) || sum_i exp(-i phi_i) S_i^- psi ||^2`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Direction, Vec3, K0};
use crate::quadrature::{SphereQuadrature, SphereRule};
use crate::quantum::{apply_lowering, inner, Atom, DensityMatrix4, PureState4, I12, I21, I22};

/// Slack allowed below zero before a density is reported as an error.
pub const NEGATIVE_DENSITY_TOL: f64 = 1e-12;

/// Physical parameters of the two-atom setup, in natural units
/// (lengths in wavelengths, rates and Rabi frequencies in units of `A` when
/// `decay_rate = 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentConfig {
    r1: Vec3,
    r2: Vec3,
    dipole: Direction,
    decay_rate: f64,
    rabi1: Complex64,
    rabi2: Complex64,
}

impl ExperimentConfig {
    pub fn new(
        r1: Vec3,
        r2: Vec3,
        dipole: Direction,
        decay_rate: f64,
        rabi1: Complex64,
        rabi2: Complex64,
    ) -> Result<Self> {
        if !(decay_rate > 0.0) || !decay_rate.is_finite() {
            return Err(Error::InvalidConfig(format!("decay rate must be positive and finite, got {decay_rate}")));
        }
        if r1.iter().chain(r2.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("atom positions must be finite".into()));
        }
        for (name, om) in [("rabi1", rabi1), ("rabi2", rabi2)] {
            if !om.re.is_finite() || !om.im.is_finite() {
                return Err(Error::InvalidConfig(format!("{name} must be finite")));
            }
        }
        Ok(Self { r1, r2, dipole, decay_rate, rabi1, rabi2 })
    }

    /// Atoms at `+-(separation / 2) z`, dipole along `x`, `A = 1`.
    pub fn on_z_axis(separation: f64, rabi1: Complex64, rabi2: Complex64) -> Result<Self> {
        let half = Vec3::new(0.0, 0.0, 0.5 * separation);
        Self::new(half, -half, Direction::x(), 1.0, rabi1, rabi2)
    }

    /// Separation 20 wavelengths, equal in-phase drives `Omega = 0.3 A`.
    pub fn reference_setup() -> Self {
        Self::on_z_axis(20.0, Complex64::new(0.3, 0.0), Complex64::new(0.3, 0.0))
            .expect("static configuration is valid")
    }

    pub fn r1(&self) -> Vec3 {
        self.r1
    }

    pub fn r2(&self) -> Vec3 {
        self.r2
    }

    pub fn dipole(&self) -> Direction {
        self.dipole
    }

    pub fn decay_rate(&self) -> f64 {
        self.decay_rate
    }

    pub fn rabi1(&self) -> Complex64 {
        self.rabi1
    }

    pub fn rabi2(&self) -> Complex64 {
        self.rabi2
    }

    pub fn rabi(&self, atom: Atom) -> Complex64 {
        match atom {
            Atom::First => self.rabi1,
            Atom::Second => self.rabi2,
        }
    }

    pub fn position(&self, atom: Atom) -> Vec3 {
        match atom {
            Atom::First => self.r1,
            Atom::Second => self.r2,
        }
    }

    pub fn separation(&self) -> f64 {
        (self.r1 - self.r2).norm()
    }

    pub fn k0(&self) -> f64 {
        K0
    }

    pub fn with_rabi(mut self, rabi1: Complex64, rabi2: Complex64) -> Self {
        self.rabi1 = rabi1;
        self.rabi2 = rabi2;
        self
    }

    pub fn with_positions(mut self, r1: Vec3, r2: Vec3) -> Self {
        self.r1 = r1;
        self.r2 = r2;
        self
    }

    pub fn with_dipole(mut self, dipole: Direction) -> Self {
        self.dipole = dipole;
        self
    }

    /// `3 A / 8 pi`.
    pub fn density_prefactor(&self) -> f64 {
        3.0 * self.decay_rate / (8.0 * PI)
    }

    /// Relative phase `k0 k.(r1 - r2)` of the two emission amplitudes.
    pub fn interference_phase(&self, k_hat: &Direction) -> f64 {
        K0 * k_hat.vector().dot(&(self.r1 - self.r2))
    }

    pub fn snapshot(&self) -> ConfigSnapshot {
        ConfigSnapshot {
            r1: self.r1.into(),
            r2: self.r2.into(),
            dipole: (*self.dipole.vector()).into(),
            decay_rate: self.decay_rate,
            rabi1: self.rabi1,
            rabi2: self.rabi2,
        }
    }
}

/// Plain serializable view of an [`ExperimentConfig`] for metadata files.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigSnapshot {
    pub r1: [f64; 3],
    pub r2: [f64; 3],
    pub dipole: [f64; 3],
    pub decay_rate: f64,
    pub rabi1: Complex64,
    pub rabi2: Complex64,
}

/// Dipole factor `1 - |d.k|^2`.
pub fn angular_factor(d_hat: &Direction, k_hat: &Direction) -> f64 {
    let c = d_hat.dot(k_hat);
    (1.0 - c * c).max(0.0)
}

/// Unnormalized post-click atomic state `sum_i exp(-i k0 k.r_i) S_i^- |psi>`.
pub fn click_amplitude(psi: &PureState4, k_hat: &Direction, cfg: &ExperimentConfig) -> PureState4 {
    let phase = |r: Vec3| Complex64::from_polar(1.0, -K0 * k_hat.vector().dot(&r));
    let a = apply_lowering(psi, Atom::First).scale(phase(cfg.r1));
    let b = apply_lowering(psi, Atom::Second).scale(phase(cfg.r2));
    a.add(&b)
}

fn density_pure_unchecked(psi: &PureState4, k_hat: &Direction, cfg: &ExperimentConfig) -> f64 {
    cfg.density_prefactor() * angular_factor(&cfg.dipole, k_hat) * click_amplitude(psi, k_hat, cfg).norm_sqr()
}

/// Probability density per unit time and solid angle for a click in
/// direction `k_hat` when the atoms are in the pure state `psi`.
pub fn emission_density_pure(psi: &PureState4, k_hat: &Direction, cfg: &ExperimentConfig) -> Result<f64> {
    psi.require_normalized()?;
    Ok(density_pure_unchecked(psi, k_hat, cfg))
}

/// Result of projecting onto a click in a given direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResetOutcome {
    /// Normalized post-click state and the click density it came with.
    Emission { state: PureState4, weight: f64 },
    /// The click amplitude vanishes (e.g. both atoms in the ground state,
    /// or complete destructive interference in this direction).
    NoEmissionPossible,
}

pub fn reset_state(psi: &PureState4, k_hat: &Direction, cfg: &ExperimentConfig) -> Result<ResetOutcome> {
    psi.require_normalized()?;
    let amp = click_amplitude(psi, k_hat, cfg);
    let weight = cfg.density_prefactor() * angular_factor(&cfg.dipole, k_hat) * amp.norm_sqr();
    // Amplitudes below ~1e-15 are rounding residue of exact cancellation.
    if weight <= 0.0 || amp.norm_sqr() < 1e-30 {
        return Ok(ResetOutcome::NoEmissionPossible);
    }
    Ok(ResetOutcome::Emission { state: amp.normalized()?, weight })
}

/// `A (||S_1^- psi||^2 + ||S_2^- psi||^2)`.
pub fn total_emission_rate(psi: &PureState4, cfg: &ExperimentConfig) -> Result<f64> {
    psi.require_normalized()?;
    Ok(cfg.decay_rate * (psi.excited_population(Atom::First) + psi.excited_population(Atom::Second)))
}

/// `gamma = (3A / 8 pi) int (1 - |d.k|^2) exp(-i k0 k.(r1 - r2)) dOmega` on
/// the default 256 x 512 product rule.
///
/// The sphere integral of the pure-state density is
/// `A sum_i ||S_i^- psi||^2 + 2 Re(<S_1^- psi|S_2^- psi> gamma)`, so `gamma`
/// measures how far the total click rate departs from `A` times the excited
/// population. `gamma = A` when the atoms coincide and decays like
/// `1 / (k0 r)` with separation.
pub fn cross_term_gamma(cfg: &ExperimentConfig) -> Complex64 {
    cross_term_gamma_with(cfg, &SphereQuadrature::new(SphereRule::default()))
}

pub fn cross_term_gamma_with(cfg: &ExperimentConfig, quad: &SphereQuadrature) -> Complex64 {
    let sep = cfg.r1 - cfg.r2;
    let pref = cfg.density_prefactor();
    quad.integrate_complex(|k| {
        let f = angular_factor(&cfg.dipole, k);
        Complex64::from_polar(pref * f, -K0 * k.vector().dot(&sep))
    })
}

/// Click density for a mixed atomic state `rho`.
///
/// The interference term carries the coherence `<21|rho|12>`, which is the
/// element that reproduces the pure-state law for `rho = |psi><psi|`.
pub fn emission_density_mixed(rho: &DensityMatrix4, k_hat: &Direction, cfg: &ExperimentConfig) -> Result<f64> {
    let populations = 2.0 * rho.element(I22, I22).re + rho.element(I12, I12).re + rho.element(I21, I21).re;
    let phase = Complex64::from_polar(1.0, -cfg.interference_phase(k_hat));
    let coherence = rho.element(I21, I12);
    let bracket = populations + 2.0 * (coherence * phase).re;
    let value = cfg.density_prefactor() * angular_factor(&cfg.dipole, k_hat) * bracket;
    clamp_density(value, k_hat)
}

pub(crate) fn clamp_density(value: f64, k_hat: &Direction) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -NEGATIVE_DENSITY_TOL {
        Ok(0.0)
    } else {
        Err(Error::NegativeDensity { value, theta: k_hat.theta(), phi: k_hat.phi() })
    }
}

/// `|<S_1^- psi|S_2^- psi>| / (||S_1^- psi|| ||S_2^- psi||)`; 0 means full
/// which-way information, 1 means the two one-atom reset states coincide.
pub fn overlap_which_way(psi: &PureState4) -> Result<f64> {
    let a = apply_lowering(psi, Atom::First);
    let b = apply_lowering(psi, Atom::Second);
    let (na, nb) = (a.norm_sqr(), b.norm_sqr());
    match (na > 0.0, nb > 0.0) {
        (false, false) => Err(Error::NoEmission),
        (true, true) => Ok((inner(&a, &b).norm() / (na * nb).sqrt()).min(1.0)),
        _ => Ok(0.0),
    }
}
