//! Two-atom Hilbert space primitives.
//!
//! Basis ordering is `|11>, |12>, |21>, |22>` with atom 1 as the left
//! (slowest-varying) label, so index = 2 * (atom 1 excited) + (atom 2 excited).
//! Single-atom states are `|1>` (ground) and `|2>` (excited).

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
/// Tolerance used by operations that require a normalized input state.
pub const NORM_TOL: f64 = 1e-9;

pub const I11: usize = 0;
pub const I12: usize = 1;
pub const I21: usize = 2;
pub const I22: usize = 3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which of the two atoms an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Atom {
    First,
    Second,
}

impl Atom {
    pub const BOTH: [Atom; 2] = [Atom::First, Atom::Second];

    /// Lowering operator `S_i^- = |1>_i <2|` on the four-dimensional space.
    pub fn lowering_matrix(self) -> Matrix4<Complex64> {
        let mut m = Matrix4::zeros();
        match self {
            Atom::First => {
                m[(I11, I21)] = ONE;
                m[(I12, I22)] = ONE;
            }
            Atom::Second => {
                m[(I11, I12)] = ONE;
                m[(I21, I22)] = ONE;
            }
        }
        m
    }
}

/// Two-atom pure state. Not necessarily normalized: unnormalized values
/// appear as intermediates (e.g. `S_i^- |psi>`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState4(Vector4<Complex64>);

impl PureState4 {
    pub fn new(amplitudes: [Complex64; 4]) -> Self {
        Self(Vector4::from(amplitudes))
    }

    pub fn from_vector(v: Vector4<Complex64>) -> Self {
        Self(v)
    }

    pub fn zero() -> Self {
        Self(Vector4::zeros())
    }

    /// Basis state by index in the `|11>, |12>, |21>, |22>` ordering.
    pub fn basis(index: usize) -> Self {
        assert!(index < 4, "basis index out of range");
        let mut v = Vector4::zeros();
        v[index] = ONE;
        Self(v)
    }

    pub fn ground() -> Self {
        Self::basis(I11)
    }

    /// Normalized superposition built from real or complex coefficients.
    pub fn superposition(coeffs: [Complex64; 4]) -> Result<Self> {
        Self::new(coeffs).normalized()
    }

    pub fn amplitudes(&self) -> &Vector4<Complex64> {
        &self.0
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.0[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        let norm_sqr = self.norm_sqr();
        if (norm_sqr - 1.0).abs() <= NORM_TOL {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm_sqr })
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n });
        }
        Ok(self.scale(Complex64::new(1.0 / n.sqrt(), 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self(self.0 * c)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0 + other.0)
    }

    /// Population of the excited state of `atom`, `||S_i^- psi||^2`.
    pub fn excited_population(&self, atom: Atom) -> f64 {
        match atom {
            Atom::First => self.0[I21].norm_sqr() + self.0[I22].norm_sqr(),
            Atom::Second => self.0[I12].norm_sqr() + self.0[I22].norm_sqr(),
        }
    }

    /// Expected number of excitations, `<S_1^+ S_1^-> + <S_2^+ S_2^->`.
    pub fn excitation_number(&self) -> f64 {
        (self.excited_population(Atom::First) + self.excited_population(Atom::Second)) / self.norm_sqr()
    }
}

/// `S_i^- |psi>`, possibly unnormalized.
pub fn apply_lowering(state: &PureState4, atom: Atom) -> PureState4 {
    let a = state.amplitudes();
    let mut out = Vector4::zeros();
    match atom {
        Atom::First => {
            out[I11] = a[I21];
            out[I12] = a[I22];
        }
        Atom::Second => {
            out[I11] = a[I12];
            out[I21] = a[I22];
        }
    }
    PureState4(out)
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &PureState4, b: &PureState4) -> Complex64 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| x.conj() * y).sum()
}

fn check_density(m: DMatrix<Complex64>) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidDensity("non-finite entry".into()));
    }
    let adj = m.adjoint();
    let herm = (&m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if herm > HERMITIAN_TOL {
        return Err(Error::InvalidDensity(format!("not Hermitian (max |rho - rho^dag| = {herm:e})")));
    }
    let trace = m.trace();
    if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
        return Err(Error::InvalidDensity(format!("trace = {trace}")));
    }
    let hermitian = (&m + &adj) * Complex64::new(0.5, 0.0);
    let min = hermitian.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL {
        return Err(Error::InvalidDensity(format!("not positive semidefinite (min eigenvalue {min:e})")));
    }
    Ok(())
}

/// Single-atom density operator in the basis `|1>, |2>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleAtomDensity(Matrix2<Complex64>);

impl SingleAtomDensity {
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        check_density(DMatrix::from_iterator(m.nrows(), m.ncols(), m.iter().cloned()))?;
        Ok(Self(m))
    }

    pub fn ground() -> Self {
        Self(Matrix2::new(ONE, ZERO, ZERO, ZERO))
    }

    pub fn excited() -> Self {
        Self(Matrix2::new(ZERO, ZERO, ZERO, ONE))
    }

    pub fn maximally_mixed() -> Self {
        Self(Matrix2::identity() * Complex64::new(0.5, 0.0))
    }

    pub fn matrix(&self) -> &Matrix2<Complex64> {
        &self.0
    }

    pub fn excited_population(&self) -> f64 {
        self.0[(1, 1)].re
    }

    /// `<1|rho|2>`.
    pub fn coherence(&self) -> Complex64 {
        self.0[(0, 1)]
    }
}

/// Two-atom density operator, validated on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(Matrix4<Complex64>);

impl DensityMatrix4 {
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        check_density(DMatrix::from_iterator(m.nrows(), m.ncols(), m.iter().cloned()))?;
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.0
    }

    /// `<row|rho|col>` in the two-atom basis.
    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let e = self.0.symmetric_eigenvalues();
        let mut out = [e[0], e[1], e[2], e[3]];
        out.sort_by(|a, b| a.total_cmp(b));
        out
    }
}

/// Kronecker product `a (x) b`, atom 1 as the left factor.
pub fn tensor(a: &SingleAtomDensity, b: &SingleAtomDensity) -> DensityMatrix4 {
    let mut m = Matrix4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(2 * i + k, 2 * j + l)] = a.0[(i, j)] * b.0[(k, l)];
                }
            }
        }
    }
    DensityMatrix4(m)
}

/// `|psi><psi|` for a normalized state.
pub fn dm_from_pure(psi: &PureState4) -> Result<DensityMatrix4> {
    psi.require_normalized()?;
    let m = psi.0 * psi.0.adjoint();
    // Renormalize so the trace is exact to rounding even at |norm^2 - 1| ~ 1e-9.
    let m = m / Complex64::new(psi.norm_sqr(), 0.0);
    DensityMatrix4::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lowering_basis_action() {
        let out = apply_lowering(&PureState4::basis(I21), Atom::First);
        assert_eq!(out, PureState4::basis(I11));
        let out = apply_lowering(&PureState4::basis(I11), Atom::First);
        assert_eq!(out, PureState4::zero());

        let (a, b, g) = (c(0.3, 0.1), c(-0.2, 0.5), c(0.7, -0.4));
        let psi = PureState4::new([c(0.0, 0.0), a, b, g]);
        let out = apply_lowering(&psi, Atom::Second);
        assert_eq!(out, PureState4::new([a, c(0.0, 0.0), g, c(0.0, 0.0)]));
    }

    #[test]
    fn lowering_matches_matrix_form() {
        let psi = PureState4::new([c(0.1, 0.2), c(0.3, -0.4), c(-0.5, 0.6), c(0.7, 0.8)]);
        for atom in Atom::BOTH {
            let direct = apply_lowering(&psi, atom);
            let via_matrix = atom.lowering_matrix() * psi.amplitudes();
            assert_eq!(direct.amplitudes(), &via_matrix);
        }
    }

    #[test]
    fn inner_products() {
        let s12 = PureState4::basis(I12);
        let s21 = PureState4::basis(I21);
        assert_eq!(inner(&s12, &s12), c(1.0, 0.0));
        assert_eq!(inner(&s12, &s21), c(0.0, 0.0));
        let h = 1.0 / 2f64.sqrt();
        let sup = PureState4::new([c(0.0, 0.0), c(h, 0.0), c(h, 0.0), c(0.0, 0.0)]);
        assert_abs_diff_eq!(inner(&sup, &s21).re, h, epsilon = 1e-15);
    }

    #[test]
    fn tensor_basis_ordering() {
        let g = SingleAtomDensity::ground();
        let e = SingleAtomDensity::excited();
        let cases = [(g, g, I11), (g, e, I12), (e, g, I21), (e, e, I22)];
        for (a, b, idx) in cases {
            let rho = tensor(&a, &b);
            for r in 0..4 {
                for col in 0..4 {
                    let want = if r == idx && col == idx { 1.0 } else { 0.0 };
                    assert_eq!(rho.element(r, col), c(want, 0.0));
                }
            }
        }
        let mm = SingleAtomDensity::maximally_mixed();
        let rho = tensor(&mm, &mm);
        assert_eq!(*rho.matrix(), Matrix4::identity() * c(0.25, 0.0));
    }

    #[test]
    fn pure_density() {
        let rho = dm_from_pure(&PureState4::basis(I22)).unwrap();
        assert_eq!(rho.element(I22, I22), c(1.0, 0.0));
        assert_eq!(rho.trace(), c(1.0, 0.0));

        let h = 1.0 / 2f64.sqrt();
        let sup = PureState4::new([c(0.0, 0.0), c(h, 0.0), c(h, 0.0), c(0.0, 0.0)]);
        let rho = dm_from_pure(&sup).unwrap();
        for (r, col) in [(I12, I12), (I12, I21), (I21, I12), (I21, I21)] {
            assert_abs_diff_eq!(rho.element(r, col).re, 0.5, epsilon = 1e-15);
        }
        let ev = rho.eigenvalues();
        assert_abs_diff_eq!(ev[3], 1.0, epsilon = 1e-12);
        for v in &ev[..3] {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_density() {
        let mut m = Matrix4::identity() * c(0.25, 0.0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix4::new(m), Err(Error::InvalidDensity(_))));

        let m = Matrix4::identity() * c(0.3, 0.0);
        assert!(DensityMatrix4::new(m).is_err());

        let mut m = Matrix4::zeros();
        m[(0, 0)] = c(1.5, 0.0);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!(DensityMatrix4::new(m).is_err());

        assert!(dm_from_pure(&PureState4::new([c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)])).is_err());
    }
}
