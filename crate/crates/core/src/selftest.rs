//! Reduced-size invariant suites, runnable from the command line.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::classical::{classical_intensity, classical_visibility, field_at, ClassicalConfig};
use crate::emission::{emission_density_mixed, emission_density_pure, ExperimentConfig};
use crate::geometry::Direction;
use crate::quadrature::{SphereQuadrature, SphereRule};
use crate::quantum::{apply_lowering, dm_from_pure, inner, tensor, Atom, PureState4};
use crate::screen::{AngularGrid, FringeOptions, FringeOutcome, Profile};
use crate::steady::{master_rhs, single_atom_steady, steady_emission_density, two_atom_steady};
use crate::trajectory::{density_envelope, run, seeded_rng, SimRng};

/// Deliberate faults used to check that the suites can fail.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Faults {
    /// Perturbs the single-atom steady populations before the product is formed.
    pub steady_state: bool,
    /// Halves the rejection-sampling envelope.
    pub envelope: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_state(rng: &mut SimRng) -> PureState4 {
    let amps: [Complex64; 4] =
        std::array::from_fn(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    PureState4::new(amps).normalized().expect("random amplitudes are nonzero")
}

fn random_direction(rng: &mut SimRng) -> Direction {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    Direction::from_angles(z.acos(), 2.0 * PI * rng.random::<f64>())
}

fn check(name: &'static str, result: Result<String, String>) -> SuiteResult {
    match result {
        Ok(detail) => SuiteResult { name, passed: true, detail },
        Err(detail) => SuiteResult { name, passed: false, detail },
    }
}

fn operator_algebra(rng: &mut SimRng) -> Result<String, String> {
    for _ in 0..50 {
        let (a, b) = (random_state(rng), random_state(rng));
        let s12 = apply_lowering(&apply_lowering(&a, Atom::Second), Atom::First);
        let s21 = apply_lowering(&apply_lowering(&a, Atom::First), Atom::Second);
        if (s12.amplitudes() - s21.amplitudes()).norm() > 1e-15 {
            return Err("lowering operators of different atoms do not commute".into());
        }
        if (inner(&a, &b) - inner(&b, &a).conj()).norm() > 1e-15 {
            return Err("inner product is not conjugate symmetric".into());
        }
    }
    Ok("50 random states".into())
}

fn emission_equivalence(rng: &mut SimRng) -> Result<String, String> {
    let cfg = ExperimentConfig::reference_setup();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let psi = random_state(rng);
        let k = random_direction(rng);
        let pure = emission_density_pure(&psi, &k, &cfg).map_err(|e| e.to_string())?;
        let rho = dm_from_pure(&psi).map_err(|e| e.to_string())?;
        let mixed = emission_density_mixed(&rho, &k, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max((pure - mixed).abs() / pure.max(1e-300));
    }
    if worst <= 1e-12 {
        Ok(format!("max relative difference {worst:.1e}"))
    } else {
        Err(format!("pure and mixed densities differ by {worst:.1e}"))
    }
}

fn steady_fixed_point(faults: Faults) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for &(o1, o2) in &[(0.1, 0.1), (0.3, 0.3), (1.0, 1.0), (0.2, 0.7)] {
        let phase = Complex64::from_polar(1.0, 0.9);
        let cfg = ExperimentConfig::reference_setup().with_rabi(Complex64::new(o1, 0.0), phase * o2);
        let rho = if faults.steady_state {
            let corrupt = |om: Complex64| {
                let m = single_atom_steady(om, 1.0).expect("valid drive").matrix().clone_owned();
                let shift = nalgebra::Matrix2::new(
                    Complex64::new(-0.01, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.0, 0.0),
                    Complex64::new(0.01, 0.0),
                );
                crate::quantum::SingleAtomDensity::new(m + shift).expect("still a density")
            };
            *tensor(&corrupt(cfg.rabi1()), &corrupt(cfg.rabi2())).matrix()
        } else {
            *two_atom_steady(&cfg).map_err(|e| e.to_string())?.rho.matrix()
        };
        let residual = master_rhs(&rho, &cfg).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(residual);
    }
    if worst <= 1e-12 {
        Ok(format!("max master-equation residual {worst:.1e}"))
    } else {
        Err(format!("closed-form steady state is not stationary (residual {worst:.1e})"))
    }
}

fn sampler_bound(rng: &mut SimRng, faults: Faults) -> Result<String, String> {
    let cfg = ExperimentConfig::reference_setup();
    let scale = if faults.envelope { 0.5 } else { 1.0 };
    for _ in 0..100_000 {
        let psi = random_state(rng);
        let k = random_direction(rng);
        let d = emission_density_pure(&psi, &k, &cfg).map_err(|e| e.to_string())?;
        let bound = scale * density_envelope(&psi, &cfg);
        if d > bound * (1.0 + 1e-12) {
            return Err(format!("density {d:.3e} exceeds envelope {bound:.3e}"));
        }
    }
    Ok("100000 probes".into())
}

fn sphere_normalization() -> Result<String, String> {
    let quad = SphereQuadrature::new(SphereRule { n_theta: 32, n_phi: 64 });
    let d = Direction::x();
    let total = quad.integrate(|k| 3.0 / (8.0 * PI) * (1.0 - d.dot(k).powi(2)));
    let cfg = ExperimentConfig::reference_setup();
    let quad = SphereQuadrature::new(SphereRule::default());
    let rate = quad.integrate(|k| steady_emission_density(&cfg, k).unwrap_or(f64::NAN));
    let expected = crate::steady::steady_click_rate(&cfg);
    if (total - 1.0).abs() > 1e-10 {
        Err(format!("dipole factor integrates to {total}"))
    } else if !((rate - expected).abs() < 1e-3 * expected) {
        Err(format!("steady density integrates to {rate}, expected {expected}"))
    } else {
        Ok(format!("dipole integral {total:.12}, steady rate {rate:.6}"))
    }
}

fn classical_model() -> Result<String, String> {
    let cfg = ClassicalConfig::matching(&ExperimentConfig::reference_setup());
    let k = Direction::from_angles(1.1, 0.4);
    let point = k.vector() * 2e5;
    let field = field_at(&point, 0.0, &cfg).map_err(|e| e.to_string())?;
    let transverse = field.iter().zip(k.vector().iter()).map(|(f, c)| f * *c).sum::<Complex64>().norm();
    if transverse > 1e-10 * field.norm() {
        return Err("far field is not transverse".into());
    }
    let near = field.norm_squared() * (point - cfg.r1).norm_squared();
    let far = classical_intensity(&k, &cfg);
    if (near - far).abs() > 0.01 * far {
        return Err(format!("far-field intensity {near} vs {far}"));
    }
    let v = classical_visibility(Complex64::new(3.0, 0.0), Complex64::new(0.0, 1.0)).map_err(|e| e.to_string())?;
    if (v - 0.6).abs() > 1e-15 {
        return Err(format!("visibility of 3:1 sources is {v}"));
    }
    Ok("transversality, far-field limit, visibility formula".into())
}

fn fringe_extraction() -> Result<String, String> {
    let grid = AngularGrid::statistics();
    let area: f64 = (0..grid.n_theta()).map(|i| grid.weight(i)).sum::<f64>() * grid.n_phi() as f64;
    if (area - 4.0 * PI).abs() > 1e-10 {
        return Err(format!("grid weights sum to {area}"));
    }
    let n = 300;
    let x: Vec<f64> = (0..n).map(|i| -1.0 + 2.0 * (i as f64 + 0.5) / n as f64).collect();
    let y = x.iter().map(|u| 1.0 + 0.35 * (2.0 * PI * u / 0.07 + 0.4).cos()).collect();
    let profile = Profile { x, y, periodic: false, span: 2.0 };
    match profile.analyze(&FringeOptions::default()) {
        Ok(FringeOutcome::Fringes(r)) if (r.visibility - 0.35).abs() <= 1e-9 => {
            Ok(format!("synthetic visibility {:.12}", r.visibility))
        }
        other => Err(format!("synthetic cosine gave {other:?}")),
    }
}

fn trajectory_basics() -> Result<String, String> {
    let dark = ExperimentConfig::reference_setup().with_rabi(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let empty = run(&dark, 100.0, 0.01, 1).map_err(|e| e.to_string())?;
    if !empty.records.is_empty() {
        return Err("undriven atoms emitted".into());
    }
    let cfg = ExperimentConfig::reference_setup();
    let a = run(&cfg, 500.0, 0.01, 42).map_err(|e| e.to_string())?;
    let b = run(&cfg, 500.0, 0.01, 42).map_err(|e| e.to_string())?;
    if a != b {
        return Err("same seed gave different streams".into());
    }
    Ok(format!("{} clicks, reproducible", a.records.len()))
}

/// Runs every suite; the report lists each by name.
pub fn run_all(faults: Faults) -> Vec<SuiteResult> {
    let mut rng = seeded_rng(0x5eed);
    vec![
        check("operator algebra", operator_algebra(&mut rng)),
        check("emission equivalence", emission_equivalence(&mut rng)),
        check("steady-state fixed point", steady_fixed_point(faults)),
        check("sampler bound", sampler_bound(&mut rng, faults)),
        check("sphere normalization", sphere_normalization()),
        check("classical model", classical_model()),
        check("fringe extraction", fringe_extraction()),
        check("trajectory basics", trajectory_basics()),
    ]
}
