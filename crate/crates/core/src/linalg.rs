//! Small dense complex linear algebra used by the demixing updates.
//!
//! All matrices here are N×N with N the number of sources (typically 2–4), so
//! nalgebra's dynamic LU is used directly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// x ↦ x^e for a fixed real exponent, using repeated multiplication (and one
/// square root) when e is an integer or half-integer of moderate size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Int(i32),
    /// x^(k + 1/2)
    HalfInt(i32),
    Real(f64),
}

impl Exponent {
    pub fn new(e: f64) -> Self {
        let twice = 2.0 * e;
        if e.fract() == 0.0 && e.abs() <= 32.0 {
            Exponent::Int(e as i32)
        } else if twice.fract() == 0.0 && twice.abs() <= 64.0 {
            Exponent::HalfInt((e - 0.5) as i32)
        } else {
            Exponent::Real(e)
        }
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Exponent::Int(k) => x.powi(k),
            Exponent::HalfInt(k) => x.powi(k) * x.sqrt(),
            Exponent::Real(e) => x.powf(e),
        }
    }
}

/// |det A| divided by the product of the row norms of A.
///
/// Lies in [0, 1] by Hadamard's inequality and is invariant to row scaling,
/// so a fixed floor on it detects near-singularity independent of the data
/// scale. Returns 0 when any row is exactly zero.
pub fn hadamard_ratio(a: &CMatrix) -> f64 {
    let mut log_norms = 0.0;
    for row in a.row_iter() {
        let norm = row.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return 0.0;
        }
        log_norms += norm.ln();
    }
    match log_abs_det(a) {
        Some(ld) => (ld - log_norms).exp().min(1.0),
        None => 0.0,
    }
}

/// ln |det A| accumulated from the pivots of a partial-pivoting LU.
pub fn log_abs_det(a: &CMatrix) -> Option<f64> {
    let lu = a.clone().lu();
    let mut acc = 0.0;
    for k in 0..a.nrows() {
        let pivot = lu.u()[(k, k)].norm();
        if pivot == 0.0 || !pivot.is_finite() {
            return None;
        }
        acc += pivot.ln();
    }
    Some(acc)
}

pub fn solve(a: &CMatrix, b: &CVector) -> Option<CVector> {
    a.clone().lu().solve(b)
}

/// Column n of A⁻¹, i.e. the solution of A z = eₙ.
pub fn inverse_column(a: &CMatrix, n: usize) -> Option<CVector> {
    let mut e = CVector::zeros(a.nrows());
    e[n] = Complex64::new(1.0, 0.0);
    solve(a, &e)
}

/// The demixing filter w_n of a matrix whose row n stores w_nᴴ.
pub fn filter(w: &CMatrix, n: usize) -> CVector {
    CVector::from_iterator(w.ncols(), w.row(n).iter().map(|z| z.conj()))
}

/// Stores w as row n (as wᴴ).
pub fn set_filter(w: &mut CMatrix, n: usize, filter: &CVector) {
    for (m, z) in filter.iter().enumerate() {
        w[(n, m)] = z.conj();
    }
}

/// wᴴ A w, real part (A Hermitian).
pub fn quadratic_form(a: &CMatrix, w: &CVector) -> f64 {
    w.dotc(&(a * w)).re
}

/// Angle in radians between the complex lines spanned by a and b, from the
/// component of a orthogonal to b (accurate for small angles).
pub fn line_angle(a: &CVector, b: &CVector) -> f64 {
    let proj = b * (b.dotc(a) / b.norm_squared());
    let perp = (a - proj).norm();
    (perp / a.norm()).clamp(0.0, 1.0).asin()
}

/// max |A - Aᴴ| relative to max |A|.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let diff = (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    diff / scale
}

/// Smallest eigenvalue of the Hermitian part of A, relative to the largest magnitude eigenvalue.
pub fn min_relative_eigenvalue(a: &CMatrix) -> f64 {
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = sym.symmetric_eigenvalues();
    let max = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    eig.iter().cloned().fold(f64::INFINITY, f64::min) / max
}
