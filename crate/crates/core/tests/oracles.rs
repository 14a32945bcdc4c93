//! Values computed independently (closed forms evaluated in Python/scipy)
//! and frozen here.

use approx::assert_abs_diff_eq;
use num_complex::Complex64;
use photon_fringes::emission::{cross_term_gamma, ExperimentConfig};
use photon_fringes::geometry::{Direction, Vec3};
use photon_fringes::screen::{steady_map, visibility_along_cut, AngularGrid, CutSpec};
use photon_fringes::steady::{single_atom_steady, steady_emission_density, steady_visibility};

fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[test]
fn single_atom_population() {
    let rho = single_atom_steady(real(0.3), 1.0).unwrap();
    assert_abs_diff_eq!(rho.excited_population(), 0.076271186440677971, epsilon = 1e-15);
    assert_abs_diff_eq!(rho.excited_population().powi(2), 0.0058172938810686593, epsilon = 1e-16);
}

#[test]
fn visibilities() {
    for (om, v) in [(0.1, 0.98039215686274506), (0.3, 0.84745762711864414), (1.0, 1.0 / 3.0)] {
        let cfg = ExperimentConfig::reference_setup().with_rabi(real(om), real(om));
        assert_abs_diff_eq!(steady_visibility(&cfg), v, epsilon = 1e-15);
        let map = steady_map(&cfg, AngularGrid::image()).unwrap();
        let extracted = visibility_along_cut(&map, &CutSpec::equatorial()).unwrap().visibility().unwrap();
        assert_abs_diff_eq!(extracted, v, epsilon = 1e-3);
    }
}

#[test]
fn constructive_peak_density() {
    let cfg = ExperimentConfig::reference_setup();
    let d = steady_emission_density(&cfg, &Direction::y()).unwrap();
    assert_abs_diff_eq!(d, 0.033639255782781381, epsilon = 1e-15);
}

#[test]
fn cross_term_for_perpendicular_dipole() {
    for (r, gamma) in [
        (5.0, 0.0015198177546350083),
        (10.0, 0.00037995443865870821),
        (20.0, 9.498860966463321e-05),
        (40.0, 2.3747152416114446e-05),
    ] {
        let cfg = ExperimentConfig::on_z_axis(r, real(0.3), real(0.3)).unwrap();
        let g = cross_term_gamma(&cfg);
        assert_abs_diff_eq!(g.re, gamma, epsilon = 1e-12);
        assert_abs_diff_eq!(g.im, 0.0, epsilon = 1e-12);
        assert!(g.norm() < 0.02);
    }
}

#[test]
fn cross_term_for_parallel_dipole() {
    let cfg = ExperimentConfig::reference_setup().with_dipole(Direction::z());
    assert_abs_diff_eq!(cross_term_gamma(&cfg).re, -0.00018997721932938335, epsilon = 1e-12);
    // orientation of the pair in space does not matter, only relative to the dipole
    let tilted = cfg.with_positions(Vec3::new(10.0, 0.0, 0.0), Vec3::new(-10.0, 0.0, 0.0)).with_dipole(Direction::x());
    assert_abs_diff_eq!(cross_term_gamma(&tilted).re, -0.00018997721932938335, epsilon = 1e-12);
}
