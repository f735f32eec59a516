//! Single-qubit polarization states and fidelity measures.
//!
//! The computational basis is horizontal/vertical. A state is a validated
//! 2x2 density matrix, a point in the Poincare ball, or the (A, B, delta)
//! parameterization
//!
//! ```text
//! rho = [[ A,            B e^{ i delta} ],
//!        [ B e^{-i delta},  1 - A       ]]
//! ```
//!
//! The Poincare coordinates used throughout the crate are
//!
//! ```text
//! r_H = 2A - 1,   r_D = 2B cos(delta),   r_R = 2B sin(delta),
//! ```
//!
//! so +1 on each axis is reached by horizontal, diagonal (+45 deg) and
//! right-circular light respectively, and rho's top-right element equals
//! (r_D + i r_R)/2.

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column vector for pure polarization states in the H/V basis.
pub type Ket = Vector2<Complex64>;

/// Slack for Hermiticity, unit trace and positivity of external matrices.
pub const STATE_TOL: f64 = 1e-12;

/// Slack on |r| <= 1 for external Poincare points.
pub const RADIUS_TOL: f64 = 1e-9;

/// Point (r_H, r_D, r_R) in or on the Poincare ball.
///
/// Plain coordinates; the |r| <= 1 constraint is enforced where a vector is
/// converted to a density matrix, so intermediate results (for instance raw
/// linear-inversion estimates) may lie slightly outside the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareVector {
    #[serde(rename = "rH")]
    pub r_h: f64,
    #[serde(rename = "rD")]
    pub r_d: f64,
    #[serde(rename = "rR")]
    pub r_r: f64,
}

impl PoincareVector {
    pub const fn new(r_h: f64, r_d: f64, r_r: f64) -> Self {
        Self { r_h, r_d, r_r }
    }

    pub fn norm_squared(&self) -> f64 {
        self.r_h * self.r_h + self.r_d * self.r_d + self.r_r * self.r_r
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.r_h * other.r_h + self.r_d * other.r_d + self.r_r * other.r_r
    }

    pub const fn to_array(self) -> [f64; 3] {
        [self.r_h, self.r_d, self.r_r]
    }

    pub const fn from_array([r_h, r_d, r_r]: [f64; 3]) -> Self {
        Self { r_h, r_d, r_r }
    }
}

/// Population/coherence/phase parameters (A, B, delta) of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateParamsABDelta {
    /// Horizontal population, in [0, 1].
    pub a: f64,
    /// Coherence magnitude, in [0, sqrt(A(1-A))].
    pub b: f64,
    /// Coherence phase in radians.
    pub delta: f64,
}

impl StateParamsABDelta {
    pub const fn new(a: f64, b: f64, delta: f64) -> Self {
        Self { a, b, delta }
    }
}

/// Validated 2x2 density matrix in the H/V basis.
///
/// Construction checks Hermiticity, unit trace and positivity to
/// [`STATE_TOL`], then snaps the stored matrix to exactly Hermitian with
/// real unit trace so repeated downstream arithmetic cannot drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    m: Matrix2<Complex64>,
}

impl DensityMatrix {
    /// Validates an arbitrary complex matrix as a density matrix.
    pub fn from_matrix(m: Matrix2<Complex64>) -> Result<Self> {
        let herm_dev = (m[(0, 1)] - m[(1, 0)].conj())
            .norm()
            .max(m[(0, 0)].im.abs())
            .max(m[(1, 1)].im.abs());
        // The negated comparison also rejects NaN entries.
        if !(herm_dev <= STATE_TOL) {
            return Err(Error::NotHermitian { deviation: herm_dev });
        }
        let trace = m[(0, 0)].re + m[(1, 1)].re;
        if !((trace - 1.0).abs() <= STATE_TOL) {
            return Err(Error::TraceNotOne { trace });
        }
        let rho = Self::from_hermitian_parts(
            m[(0, 0)].re,
            m[(1, 1)].re,
            (m[(0, 1)] + m[(1, 0)].conj()) * Complex64::new(0.5, 0.0),
        );
        let min_eigenvalue = rho.eigenvalues()[0];
        if !(min_eigenvalue >= -STATE_TOL) {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        Ok(rho)
    }

    /// Builds from Hermitian pieces: diagonal (a, d) and top-right c.
    ///
    /// Trusted internal path; callers guarantee a + d = 1 and positivity up
    /// to roundoff. The trace is renormalized exactly.
    pub(crate) fn from_hermitian_parts(a: f64, d: f64, c: Complex64) -> Self {
        let t = a + d;
        let m = Matrix2::new(
            Complex64::new(a / t, 0.0),
            c / t,
            (c / t).conj(),
            Complex64::new(d / t, 0.0),
        );
        Self { m }
    }

    /// Projector onto a pure state; the ket is normalized first.
    pub fn from_ket(ket: &Ket) -> Result<Self> {
        let norm = ket.norm();
        if !(norm > 1e-12) {
            return Err(Error::ZeroKet { norm });
        }
        let k = ket / Complex64::new(norm, 0.0);
        Ok(Self::from_hermitian_parts(
            k[0].norm_sqr(),
            k[1].norm_sqr(),
            k[0] * k[1].conj(),
        ))
    }

    /// The maximally mixed state I/2.
    pub fn identity_mixed() -> Self {
        Self::from_hermitian_parts(0.5, 0.5, Complex64::new(0.0, 0.0))
    }

    pub fn horizontal() -> Self {
        Self::from_hermitian_parts(1.0, 0.0, Complex64::new(0.0, 0.0))
    }

    pub fn vertical() -> Self {
        Self::from_hermitian_parts(0.0, 1.0, Complex64::new(0.0, 0.0))
    }

    /// Linear +45 degrees.
    pub fn diagonal() -> Self {
        Self::from_hermitian_parts(0.5, 0.5, Complex64::new(0.5, 0.0))
    }

    /// Linear -45 degrees.
    pub fn antidiagonal() -> Self {
        Self::from_hermitian_parts(0.5, 0.5, Complex64::new(-0.5, 0.0))
    }

    /// Right-circular: r = (0, 0, +1).
    pub fn right_circular() -> Self {
        Self::from_hermitian_parts(0.5, 0.5, Complex64::new(0.0, 0.5))
    }

    /// Left-circular: r = (0, 0, -1).
    pub fn left_circular() -> Self {
        Self::from_hermitian_parts(0.5, 0.5, Complex64::new(0.0, -0.5))
    }

    pub fn matrix(&self) -> Matrix2<Complex64> {
        self.m
    }

    /// Tr(rho^2), in [1/2, 1] up to roundoff.
    pub fn purity(&self) -> f64 {
        (self.m * self.m).trace().re.clamp(0.0, 1.0)
    }

    /// Eigenvalues in ascending order, from the closed 2x2 form.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.m[(0, 0)].re;
        let d = self.m[(1, 1)].re;
        let c2 = self.m[(0, 1)].norm_sqr();
        let gap = ((a - d) * (a - d) + 4.0 * c2).max(0.0).sqrt();
        let t = a + d;
        [(t - gap) / 2.0, (t + gap) / 2.0]
    }
}

/// Converts a Poincare point to a density matrix.
///
/// |r| may exceed 1 by at most [`RADIUS_TOL`]; such points are rescaled
/// onto the sphere so the result is exactly positive semidefinite.
pub fn rho_from_poincare(r: &PoincareVector) -> Result<DensityMatrix> {
    let norm = r.norm();
    if !(norm <= 1.0 + RADIUS_TOL) {
        return Err(Error::RadiusTooLarge { radius: norm });
    }
    let scale = if norm > 1.0 { 1.0 / norm } else { 1.0 };
    let (r_h, r_d, r_r) = (r.r_h * scale, r.r_d * scale, r.r_r * scale);
    Ok(DensityMatrix::from_hermitian_parts(
        (1.0 + r_h) / 2.0,
        (1.0 - r_h) / 2.0,
        Complex64::new(r_d / 2.0, r_r / 2.0),
    ))
}

/// Reads the Poincare coordinates off a density matrix. Exact inverse of
/// [`rho_from_poincare`] up to roundoff.
pub fn poincare_from_rho(rho: &DensityMatrix) -> PoincareVector {
    let m = rho.matrix();
    PoincareVector::new(
        m[(0, 0)].re - m[(1, 1)].re,
        2.0 * m[(0, 1)].re,
        2.0 * m[(0, 1)].im,
    )
}

/// Converts (A, B, delta) parameters to a density matrix.
///
/// A must lie in [0, 1] and B in [0, sqrt(A(1-A))], each with [`STATE_TOL`]
/// slack; values inside the slack are clamped to the boundary.
pub fn rho_from_abdelta(p: &StateParamsABDelta) -> Result<DensityMatrix> {
    if !(p.a >= -STATE_TOL && p.a <= 1.0 + STATE_TOL) {
        return Err(Error::PopulationRange { a: p.a });
    }
    let a = p.a.clamp(0.0, 1.0);
    let bound = (a * (1.0 - a)).sqrt();
    if !(p.b >= -STATE_TOL && p.b <= bound + STATE_TOL) {
        return Err(Error::CoherenceBound { b: p.b, bound });
    }
    let b = p.b.clamp(0.0, bound);
    Ok(DensityMatrix::from_hermitian_parts(
        a,
        1.0 - a,
        Complex64::from_polar(b, p.delta),
    ))
}

/// Principal square root of a Hermitian PSD matrix; eigenvalues that are
/// negative by roundoff are clamped to zero.
pub(crate) fn sqrt_psd(m: &Matrix2<Complex64>) -> Matrix2<Complex64> {
    let eig = SymmetricEigen::new(*m);
    let q = eig.eigenvectors;
    let mut d = Matrix2::zeros();
    d[(0, 0)] = Complex64::new(eig.eigenvalues[0].max(0.0).sqrt(), 0.0);
    d[(1, 1)] = Complex64::new(eig.eigenvalues[1].max(0.0).sqrt(), 0.0);
    q * d * q.adjoint()
}

/// Uhlmann fidelity F(rho1, rho2) = [Tr sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2.
///
/// Symmetric in its arguments; equals |<psi1|psi2>|^2 for pure states and 1
/// exactly when the states coincide. The result is clamped to [0, 1].
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> f64 {
    let s = sqrt_psd(&rho1.matrix());
    let inner = s * rho2.matrix() * s;
    // inner is Hermitian PSD up to roundoff; symmetrize before the eigensolve.
    let herm = (inner + inner.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    let t: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    (t * t).clamp(0.0, 1.0)
}

/// Tr(rho^2). See [`DensityMatrix::purity`].
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Trace distance (1/2)||rho1 - rho2||_1, computed from the closed-form
/// eigenvalues of the Hermitian difference. Equals half the Euclidean
/// distance between the Poincare vectors.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> f64 {
    let d = rho1.matrix() - rho2.matrix();
    let t = d.trace().re;
    let det = (d[(0, 0)] * d[(1, 1)] - d[(0, 1)] * d[(1, 0)]).re;
    let disc = (t * t - 4.0 * det).max(0.0).sqrt();
    (((t + disc) / 2.0).abs() + ((t - disc) / 2.0).abs()) / 2.0
}
