//! Steady state of the two resonantly driven, independently decaying atoms.
//!
//! Laser coupling (rotating frame, zero detuning, hbar = 1):
//! `H = (1/2) sum_i (conj(Omega_i) S_i^+ + Omega_i S_i^-)`.
//! With this phase convention the single-atom steady state has
//! `<1|rho|2> = i Omega A / (A^2 + 2|Omega|^2)`, and the two-atom coherence
//! `<21|rho|12> = conj(Omega_1) Omega_2 A^2 / ((A^2 + 2|Omega_1|^2)(A^2 + 2|Omega_2|^2))`
//! enters the click density with exactly the phase `exp(-i k0 k.(r1 - r2))`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::emission::{angular_factor, clamp_density, ExperimentConfig};
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::quantum::{tensor, Atom, DensityMatrix4, SingleAtomDensity, I11};

/// Residual above which a steady-state candidate is not accepted.
pub const ACCEPT_RESIDUAL: f64 = 1e-8;
/// Step budget for [`time_integrate_to_steady`].
pub const MAX_INTEGRATION_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyMethod {
    ClosedFormProduct,
    TimeIntegration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateSolution {
    pub rho: DensityMatrix4,
    /// `max |d rho / dt|` at `rho`.
    pub residual: f64,
    pub method: SteadyMethod,
}

fn i() -> Complex64 {
    Complex64::new(0.0, 1.0)
}

/// Resonant single-atom steady state: excited population
/// `|Omega|^2 / (A^2 + 2|Omega|^2)`, coherence `<1|rho|2> = i Omega A / (A^2 + 2|Omega|^2)`.
pub fn single_atom_steady(rabi: Complex64, decay_rate: f64) -> Result<SingleAtomDensity> {
    if !(decay_rate > 0.0) || !decay_rate.is_finite() {
        return Err(Error::InvalidConfig(format!("decay rate must be positive, got {decay_rate}")));
    }
    let a2 = decay_rate * decay_rate;
    let denom = a2 + 2.0 * rabi.norm_sqr();
    let p = rabi.norm_sqr() / denom;
    let coh = i() * rabi * (decay_rate / denom);
    let m = Matrix2::new(Complex64::new(1.0 - p, 0.0), coh, coh.conj(), Complex64::new(p, 0.0));
    SingleAtomDensity::new(m)
}

/// Product of the single-atom steady states.
pub fn two_atom_steady(cfg: &ExperimentConfig) -> Result<SteadyStateSolution> {
    let a = single_atom_steady(cfg.rabi1(), cfg.decay_rate())?;
    let b = single_atom_steady(cfg.rabi2(), cfg.decay_rate())?;
    let rho = tensor(&a, &b);
    let residual = max_abs(&master_rhs(rho.matrix(), cfg));
    Ok(SteadyStateSolution { rho, residual, method: SteadyMethod::ClosedFormProduct })
}

pub fn laser_hamiltonian(cfg: &ExperimentConfig) -> Matrix4<Complex64> {
    let half = Complex64::new(0.5, 0.0);
    Atom::BOTH.iter().fold(Matrix4::zeros(), |h, &atom| {
        let s = atom.lowering_matrix();
        let om = cfg.rabi(atom);
        h + (s.adjoint() * om.conj() + s * om) * half
    })
}

/// `d rho / dt = -i [H, rho] + A sum_i (S_i rho S_i^+ - {S_i^+ S_i, rho} / 2)`.
pub fn master_rhs(rho: &Matrix4<Complex64>, cfg: &ExperimentConfig) -> Matrix4<Complex64> {
    let h = laser_hamiltonian(cfg);
    let mut out = (h * rho - rho * h) * (-i());
    let a = Complex64::new(cfg.decay_rate(), 0.0);
    let half = Complex64::new(0.5, 0.0);
    for atom in Atom::BOTH {
        let s = atom.lowering_matrix();
        let sd = s.adjoint();
        let n = sd * s;
        out += (s * rho * sd - (n * rho + rho * n) * half) * a;
    }
    out
}

fn max_abs(m: &Matrix4<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

// Dormand-Prince 5(4) tableau; the system is autonomous so stage times are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates the master equation from `|11><11|` with an adaptive
/// Dormand-Prince 5(4) scheme until `max |d rho / dt| < tol`.
pub fn time_integrate_to_steady(cfg: &ExperimentConfig, tol: f64) -> Result<SteadyStateSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let f = |r: &Matrix4<Complex64>| master_rhs(r, cfg);
    let mut rho = Matrix4::zeros();
    rho[(I11, I11)] = Complex64::new(1.0, 0.0);

    let rate_scale = cfg.decay_rate() + cfg.rabi1().norm() + cfg.rabi2().norm();
    let h_max = 1.0 / rate_scale;
    let mut h = 0.01 * h_max;
    // Local error tolerance well below the requested residual.
    let step_tol = (tol * 1e-2).max(1e-15);

    let mut k1 = f(&rho);
    let mut residual = max_abs(&k1);
    let mut steps = 0;
    while residual >= tol {
        if steps >= MAX_INTEGRATION_STEPS {
            return Err(Error::NonConvergence { steps, residual });
        }
        steps += 1;
        let k2 = f(&(rho + k1 * c(h * A21)));
        let k3 = f(&(rho + k1 * c(h * A31) + k2 * c(h * A32)));
        let k4 = f(&(rho + k1 * c(h * A41) + k2 * c(h * A42) + k3 * c(h * A43)));
        let k5 = f(&(rho + k1 * c(h * A51) + k2 * c(h * A52) + k3 * c(h * A53) + k4 * c(h * A54)));
        let k6 = f(&(rho + k1 * c(h * A61) + k2 * c(h * A62) + k3 * c(h * A63) + k4 * c(h * A64) + k5 * c(h * A65)));
        let next = rho + k1 * c(h * B1) + k3 * c(h * B3) + k4 * c(h * B4) + k5 * c(h * B5) + k6 * c(h * B6);
        let k7 = f(&next);
        let err = max_abs(
            &(k1 * c(h * E1) + k3 * c(h * E3) + k4 * c(h * E4) + k5 * c(h * E5) + k6 * c(h * E6) + k7 * c(h * E7)),
        );
        let ratio = if err > 0.0 { step_tol / err } else { f64::INFINITY };
        if ratio >= 1.0 {
            rho = next;
            k1 = k7;
            residual = max_abs(&k1);
        }
        let factor = (0.9 * ratio.powf(0.2)).clamp(0.2, 5.0);
        h = (h * factor).min(h_max);
    }

    let hermitian = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let hermitian = hermitian / hermitian.trace();
    let rho = DensityMatrix4::new(hermitian)?;
    let residual = max_abs(&master_rhs(rho.matrix(), cfg));
    Ok(SteadyStateSolution { rho, residual, method: SteadyMethod::TimeIntegration })
}

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Closed-form steady-state click density:
/// `(3A/8pi)(1 - |d.k|^2) [4|O1|^2|O2|^2 + A^2|O1|^2 + A^2|O2|^2 + 2A^2 Re(conj(O1) O2 e^{-i k0 k.(r1-r2)})]
///  / ((A^2 + 2|O1|^2)(A^2 + 2|O2|^2))`.
pub fn steady_emission_density(cfg: &ExperimentConfig, k_hat: &Direction) -> Result<f64> {
    let a2 = cfg.decay_rate().powi(2);
    let (o1, o2) = (cfg.rabi1(), cfg.rabi2());
    let (n1, n2) = (o1.norm_sqr(), o2.norm_sqr());
    let phase = Complex64::from_polar(1.0, -cfg.interference_phase(k_hat));
    let bracket = 4.0 * n1 * n2 + a2 * n1 + a2 * n2 + 2.0 * a2 * (o1.conj() * o2 * phase).re;
    let value =
        cfg.density_prefactor() * angular_factor(&cfg.dipole(), k_hat) * bracket / ((a2 + 2.0 * n1) * (a2 + 2.0 * n2));
    clamp_density(value, k_hat)
}

/// Fringe visibility `A^2 / (A^2 + 2|Omega|^2)` of the steady pattern for
/// equal drive strengths; in general `2 A^2 |O1||O2| / (4|O1|^2|O2|^2 + A^2(|O1|^2 + |O2|^2))`.
pub fn steady_visibility(cfg: &ExperimentConfig) -> f64 {
    let a2 = cfg.decay_rate().powi(2);
    let (n1, n2) = (cfg.rabi1().norm_sqr(), cfg.rabi2().norm_sqr());
    let populations = 4.0 * n1 * n2 + a2 * (n1 + n2);
    if populations == 0.0 {
        return 0.0;
    }
    2.0 * a2 * (n1 * n2).sqrt() / populations
}

/// Steady-state total click rate `A (p_1 + p_2)` from the single-atom populations.
pub fn steady_click_rate(cfg: &ExperimentConfig) -> f64 {
    let a = cfg.decay_rate();
    let p = |om: Complex64| om.norm_sqr() / (a * a + 2.0 * om.norm_sqr());
    a * (p(cfg.rabi1()) + p(cfg.rabi2()))
}
