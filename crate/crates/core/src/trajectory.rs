//! Quantum-jump click generator.
//!
//! The screen is modelled as a sequence of measurements spaced `dt` apart.
//! In each interval a click happens with probability `A n dt`, where `n` is
//! the excited population; its direction is drawn from the click density at
//! the pre-click state and the atoms are reset to the post-click state.
//! Without a click the state evolves under
//! `H_cond = H_laser - (i A / 2) sum_i S_i^+ S_i^-` and is renormalized.

use std::f64::consts::PI;
use std::io::{self, Write};

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::emission::{click_amplitude, total_emission_rate, ConfigSnapshot, ExperimentConfig};
use crate::error::{Error, Result};
use crate::geometry::Direction;
use crate::quantum::{Atom, PureState4};

/// Largest admissible `A dt`.
pub const MAX_STEP: f64 = 0.05;
/// Default `A dt`; two-click probability per step is then `O(1e-4)`.
pub const DEFAULT_STEP: f64 = 0.01;

/// Deterministic generator used for every stochastic operation.
pub type SimRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickRecord {
    /// Emission time in units of `1/A`.
    pub t: f64,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryState {
    pub psi: PureState4,
    pub t: f64,
}

impl TrajectoryState {
    pub fn ground() -> Self {
        Self { psi: PureState4::ground(), t: 0.0 }
    }
}

fn check_step(dt: f64, cfg: &ExperimentConfig) -> Result<()> {
    let a_dt = cfg.decay_rate() * dt;
    if !(a_dt > 0.0) || a_dt > MAX_STEP {
        return Err(Error::StepOutOfWindow(a_dt));
    }
    Ok(())
}

/// `exp(m)` for a complex 2x2 matrix.
fn expm2(m: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    let tau = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let shifted = m - Matrix2::identity() * tau;
    let s2 = shifted[(0, 0)] * shifted[(0, 0)] + shifted[(0, 1)] * shifted[(1, 0)];
    let s = s2.sqrt();
    let (cosh, sinhc) = if s.norm() < 1e-6 {
        (Complex64::new(1.0, 0.0) + s2 * 0.5, Complex64::new(1.0, 0.0) + s2 / 6.0)
    } else {
        (s.cosh(), s.sinh() / s)
    };
    (Matrix2::identity() * cosh + shifted * sinhc) * tau.exp()
}

/// Conditional (no-click) propagator `exp(-i H_cond dt)` for fixed
/// parameters. It factorizes into single-atom pieces since `H_cond` has no
/// atom-atom coupling.
#[derive(Debug, Clone, Copy)]
pub struct NoClickPropagator {
    matrix: Matrix4<Complex64>,
}

impl NoClickPropagator {
    pub fn new(cfg: &ExperimentConfig, dt: f64) -> Result<Self> {
        check_step(dt, cfg)?;
        let single = |rabi: Complex64| {
            // basis |1>, |2>: H = (1/2)(conj(O)|2><1| + O|1><2|) - (i A / 2)|2><2|
            let h = Matrix2::new(
                Complex64::new(0.0, 0.0),
                rabi * 0.5,
                rabi.conj() * 0.5,
                Complex64::new(0.0, -0.5 * cfg.decay_rate()),
            );
            expm2(&(h * Complex64::new(0.0, -dt)))
        };
        let (a, b) = (single(cfg.rabi(Atom::First)), single(cfg.rabi(Atom::Second)));
        Ok(Self { matrix: a.kronecker(&b) })
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.matrix
    }

    fn apply(&self, psi: &Vector4<Complex64>) -> Vector4<Complex64> {
        let v = self.matrix * psi;
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        v * Complex64::new(1.0 / n.sqrt(), 0.0)
    }
}

/// One no-click interval followed by renormalization.
pub fn no_click_step(state: &TrajectoryState, dt: f64, cfg: &ExperimentConfig) -> Result<TrajectoryState> {
    let prop = NoClickPropagator::new(cfg, dt)?;
    state.psi.require_normalized()?;
    Ok(TrajectoryState { psi: PureState4::from_vector(prop.apply(state.psi.amplitudes())), t: state.t + dt })
}

/// Probability `A n dt` of a click in the next interval.
pub fn jump_probability(state: &TrajectoryState, dt: f64, cfg: &ExperimentConfig) -> Result<f64> {
    check_step(dt, cfg)?;
    let rate = total_emission_rate(&state.psi, cfg)?;
    Ok((rate * dt).min(1.0 - f64::EPSILON))
}

/// Upper bound of the click density over all directions:
/// `(3A / 8 pi) (||S_1^- psi|| + ||S_2^- psi||)^2`.
pub fn density_envelope(psi: &PureState4, cfg: &ExperimentConfig) -> f64 {
    let n1 = psi.excited_population(Atom::First).sqrt();
    let n2 = psi.excited_population(Atom::Second).sqrt();
    cfg.density_prefactor() * (n1 + n2).powi(2)
}

fn uniform_direction<R: Rng + ?Sized>(rng: &mut R) -> Direction {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let theta = z.clamp(-1.0, 1.0).acos();
    Direction::from_angles(theta, phi)
}

/// Draws a click direction from the pure-state density by rejection from
/// the uniform distribution on the sphere. Expected acceptance is at least
/// 1/3 (attained for `|22>`).
pub fn sample_direction<R: Rng + ?Sized>(psi: &PureState4, cfg: &ExperimentConfig, rng: &mut R) -> Result<Direction> {
    psi.require_normalized()?;
    if total_emission_rate(psi, cfg)? <= 0.0 {
        return Err(Error::NoEmission);
    }
    Ok(sample_unchecked(psi, cfg, rng).0)
}

/// Returns the direction and the post-click amplitude.
fn sample_unchecked<R: Rng + ?Sized>(psi: &PureState4, cfg: &ExperimentConfig, rng: &mut R) -> (Direction, PureState4) {
    let bound = density_envelope(psi, cfg);
    let pref = cfg.density_prefactor();
    let dipole = cfg.dipole();
    loop {
        let k = uniform_direction(rng);
        let amp = click_amplitude(psi, &k, cfg);
        let c = dipole.dot(&k);
        let density = pref * (1.0 - c * c) * amp.norm_sqr();
        if rng.random::<f64>() * bound < density {
            return (k, amp);
        }
    }
}

/// Step-by-step click generator. All randomness comes from the seeded RNG.
#[derive(Debug, Clone)]
pub struct Trajectory {
    cfg: ExperimentConfig,
    dt: f64,
    propagator: NoClickPropagator,
    psi: Vector4<Complex64>,
    step: u64,
    rng: SimRng,
}

impl Trajectory {
    /// Starts in `|11>` at `t = 0`.
    pub fn new(cfg: &ExperimentConfig, dt: f64, seed: u64) -> Result<Self> {
        Self::from_state(cfg, dt, seed, PureState4::ground())
    }

    pub fn from_state(cfg: &ExperimentConfig, dt: f64, seed: u64, psi: PureState4) -> Result<Self> {
        let propagator = NoClickPropagator::new(cfg, dt)?;
        psi.require_normalized()?;
        Ok(Self { cfg: *cfg, dt, propagator, psi: *psi.amplitudes(), step: 0, rng: seeded_rng(seed) })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn state(&self) -> TrajectoryState {
        TrajectoryState { psi: PureState4::from_vector(self.psi), t: self.time() }
    }

    /// Advances one interval; returns the click if one occurred.
    pub fn step(&mut self) -> Option<ClickRecord> {
        let p = &self.psi;
        let excited = p[1].norm_sqr() + p[2].norm_sqr() + 2.0 * p[3].norm_sqr();
        let jump = self.cfg.decay_rate() * excited * self.dt;
        let u: f64 = self.rng.random();
        self.step += 1;
        if u < jump {
            let psi = PureState4::from_vector(self.psi);
            let (direction, amp) = sample_unchecked(&psi, &self.cfg, &mut self.rng);
            let n = amp.norm_sqr();
            self.psi = amp.amplitudes() * Complex64::new(1.0 / n.sqrt(), 0.0);
            Some(ClickRecord { t: self.time(), direction })
        } else {
            self.psi = self.propagator.apply(&self.psi);
            None
        }
    }

    /// Runs until the next click or until the time would exceed `t_max`.
    pub fn next_click_before(&mut self, t_max: f64) -> Option<ClickRecord> {
        while ((self.step + 1) as f64) * self.dt <= t_max {
            if let Some(c) = self.step() {
                return Some(c);
            }
        }
        None
    }
}

/// A complete, reproducible record of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickStream {
    pub seed: u64,
    pub cfg: ExperimentConfig,
    pub dt: f64,
    pub duration: f64,
    pub records: Vec<ClickRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StreamMetadata {
    pub seed: u64,
    pub dt: f64,
    pub duration: f64,
    pub clicks: usize,
    pub units: &'static str,
    pub config: ConfigSnapshot,
}

impl ClickStream {
    pub fn metadata(&self) -> StreamMetadata {
        StreamMetadata {
            seed: self.seed,
            dt: self.dt,
            duration: self.duration,
            clicks: self.records.len(),
            units: "lengths in lambda0, rates in A, times in 1/A",
            config: self.cfg.snapshot(),
        }
    }

    /// `t,theta,phi` rows after a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,theta,phi")?;
        for r in &self.records {
            writeln!(w, "{},{},{}", r.t, r.direction.theta(), r.direction.phi())?;
        }
        Ok(())
    }
}

/// Simulates `duration` (units `1/A`) starting from `|11>`.
pub fn run(cfg: &ExperimentConfig, duration: f64, dt: f64, seed: u64) -> Result<ClickStream> {
    if !(duration > 0.0) || !duration.is_finite() {
        return Err(Error::InvalidConfig(format!("duration must be positive, got {duration}")));
    }
    let mut traj = Trajectory::new(cfg, dt, seed)?;
    let mut records = Vec::new();
    while let Some(c) = traj.next_click_before(duration) {
        records.push(c);
    }
    Ok(ClickStream { seed, cfg: *cfg, dt, duration, records })
}
