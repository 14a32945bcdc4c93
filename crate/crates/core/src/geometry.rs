//! Unit directions on the sphere and the spatial conventions used throughout.
//!
//! Natural units: lengths in units of the transition wavelength, so the
//! wave number is `k0 = 2 pi`.

use std::f64::consts::PI;

use nalgebra::{Unit, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Wave number of the emitted light for a unit wavelength.
pub const K0: f64 = 2.0 * PI;

const UNIT_TOL: f64 = 1e-12;

/// Unit 3-vector. Polar angle `theta` is measured from +z, azimuth `phi`
/// from +x toward +y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction(Unit<Vec3>);

impl Direction {
    /// Normalizes `v`; fails on a zero or non-finite vector.
    pub fn new(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidConfig(format!("cannot normalize direction {v:?}")));
        }
        Ok(Self(Unit::new_unchecked(v / n)))
    }

    /// Accepts `v` only if it is already of unit length (within 1e-12).
    pub fn from_unit(v: Vec3) -> Result<Self> {
        if (v.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::InvalidConfig(format!("direction {v:?} is not a unit vector (norm {})", v.norm())));
        }
        Ok(Self(Unit::new_unchecked(v)))
    }

    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self(Unit::new_unchecked(Vec3::new(st * cp, st * sp, ct)))
    }

    pub fn x() -> Self {
        Self(Vec3::x_axis())
    }

    pub fn y() -> Self {
        Self(Vec3::y_axis())
    }

    pub fn z() -> Self {
        Self(Vec3::z_axis())
    }

    pub fn vector(&self) -> &Vec3 {
        self.0.as_ref()
    }

    pub fn dot(&self, other: &Direction) -> f64 {
        self.0.dot(&other.0)
    }

    pub fn theta(&self) -> f64 {
        self.0.z.clamp(-1.0, 1.0).acos()
    }

    /// Azimuth in `[0, 2 pi)`.
    pub fn phi(&self) -> f64 {
        let p = self.0.y.atan2(self.0.x);
        if p < 0.0 {
            let q = p + 2.0 * PI;
            if q >= 2.0 * PI {
                0.0
            } else {
                q
            }
        } else {
            p
        }
    }

    pub fn flipped(&self) -> Self {
        Self(Unit::new_unchecked(-self.0.into_inner()))
    }

    /// Mirror image through the plane with unit normal `normal`.
    pub fn reflected(&self, normal: &Direction) -> Self {
        let v = self.0.into_inner();
        let n = normal.0.into_inner();
        Self(Unit::new_unchecked(v - n * (2.0 * v.dot(&n))))
    }
}
