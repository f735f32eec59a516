//! Jones-calculus elements, source spectra and the decohering element.
//!
//! Waveplates are unit-determinant-free Jones matrices built from the
//! projector onto the optic axis: a plate with retardance eta and axis at
//! angle theta from horizontal is I - (1 - e^{-i eta}) P(theta). The
//! half-wave and quarter-wave plates are the eta = pi and eta = pi/2
//! specializations.
//!
//! Decoherence is modeled through the frequency trace of a birefringent
//! element: the off-diagonal of the density matrix (in the element's
//! eigenbasis) is multiplied by
//!
//! ```text
//! gamma(opd) = integral dw |A(w)|^2 e^{i (opd/c) w},
//! ```
//!
//! which for a Gaussian spectrum evaluates to
//! e^{i w0 opd/c} e^{-(opd dw / c)^2 / (16 ln 2)} with dw the angular FWHM.

use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::DensityMatrix;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Slack on |max singular value| <= 1 for validated Jones operators.
pub const GAIN_TOL: f64 = 1e-12;

/// Unitarity deviation allowed when applying an operator by conjugation.
pub const UNITARY_TOL: f64 = 1e-10;

/// Validated Jones matrix: a 2x2 complex operator with no gain
/// (max singular value <= 1 + [`GAIN_TOL`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JonesOperator {
    m: Matrix2<Complex64>,
}

impl JonesOperator {
    pub fn new(m: Matrix2<Complex64>) -> Result<Self> {
        let op = Self { m };
        let max_singular = op.max_singular_value();
        if !(max_singular <= 1.0 + GAIN_TOL) {
            return Err(Error::JonesGain { max_singular });
        }
        Ok(op)
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix2::identity(),
        }
    }

    pub fn matrix(&self) -> Matrix2<Complex64> {
        self.m
    }

    /// Largest singular value, from the eigenvalues of m^dag m.
    pub fn max_singular_value(&self) -> f64 {
        let g = self.m.adjoint() * self.m;
        let eig = SymmetricEigen::new(g);
        eig.eigenvalues.max().max(0.0).sqrt()
    }

    /// Frobenius distance of m^dag m from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        (self.m.adjoint() * self.m - Matrix2::identity()).norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_deviation() <= tol
    }
}

/// Waveplate with retardance `retardance` (radians) and optic axis at
/// `theta` radians from horizontal. Unitary by construction: the axis
/// component is retarded by e^{-i retardance}.
pub fn general_waveplate(retardance: f64, theta: f64) -> JonesOperator {
    let (s, c) = theta.sin_cos();
    let f = Complex64::new(1.0, 0.0) - Complex64::from_polar(1.0, -retardance);
    let m = Matrix2::new(
        Complex64::new(1.0, 0.0) - f * (c * c),
        -f * (s * c),
        -f * (s * c),
        Complex64::new(1.0, 0.0) - f * (s * s),
    );
    JonesOperator { m }
}

/// Half-wave plate with axis at `theta`.
pub fn hwp(theta: f64) -> JonesOperator {
    general_waveplate(std::f64::consts::PI, theta)
}

/// Quarter-wave plate with axis at `theta`.
pub fn qwp(theta: f64) -> JonesOperator {
    general_waveplate(std::f64::consts::FRAC_PI_2, theta)
}

/// Conjugates rho by a unitary operator: U rho U^dag.
///
/// Errors if the operator deviates from unitarity by more than
/// [`UNITARY_TOL`]; lossy elements must go through a Kraus map instead.
pub fn apply_unitary(op: &JonesOperator, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let deviation = op.unitarity_deviation();
    if !(deviation <= UNITARY_TOL) {
        return Err(Error::NotUnitary { deviation });
    }
    let m = op.m * rho.matrix() * op.m.adjoint();
    Ok(DensityMatrix::from_hermitian_parts(
        m[(0, 0)].re,
        m[(1, 1)].re,
        (m[(0, 1)] + m[(1, 0)].conj()) * Complex64::new(0.5, 0.0),
    ))
}

/// Spectral line shapes for the source.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralShape {
    Gaussian,
}

/// Source spectrum described in wavelength: center and full width at half
/// maximum, both in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spectrum {
    center_wavelength: f64,
    fwhm_wavelength: f64,
    shape: SpectralShape,
}

impl Spectrum {
    pub fn gaussian(center_wavelength: f64, fwhm_wavelength: f64) -> Result<Self> {
        if !(center_wavelength.is_finite() && center_wavelength > 0.0) {
            return Err(Error::SpectrumDomain {
                reason: "center wavelength must be finite and positive",
            });
        }
        if !(fwhm_wavelength.is_finite()
            && fwhm_wavelength > 0.0
            && fwhm_wavelength < center_wavelength)
        {
            return Err(Error::SpectrumDomain {
                reason: "FWHM must be positive and below the center wavelength",
            });
        }
        Ok(Self {
            center_wavelength,
            fwhm_wavelength,
            shape: SpectralShape::Gaussian,
        })
    }

    pub fn center_wavelength(&self) -> f64 {
        self.center_wavelength
    }

    pub fn fwhm_wavelength(&self) -> f64 {
        self.fwhm_wavelength
    }

    pub fn shape(&self) -> SpectralShape {
        self.shape
    }

    /// Center angular frequency w0 = 2 pi c / lambda0.
    pub fn center_angular_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / self.center_wavelength
    }

    /// Angular-frequency FWHM, first order in dlambda/lambda0.
    pub fn fwhm_angular_frequency(&self) -> f64 {
        2.0 * std::f64::consts::PI * SPEED_OF_LIGHT * self.fwhm_wavelength
            / (self.center_wavelength * self.center_wavelength)
    }
}

/// A thick birefringent element: optical path difference between its two
/// eigenmodes plus the unitary that rotates the computational basis into
/// the element's eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecohererSpec {
    opd: f64,
    basis_rotation: JonesOperator,
}

impl DecohererSpec {
    pub fn new(opd: f64, basis_rotation: JonesOperator) -> Result<Self> {
        if !(opd.is_finite() && opd >= 0.0) {
            return Err(Error::NegativeOpd { opd });
        }
        let deviation = basis_rotation.unitarity_deviation();
        if !(deviation <= UNITARY_TOL) {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(Self {
            opd,
            basis_rotation,
        })
    }

    /// Element aligned with the computational (H/V) basis.
    pub fn hv(opd: f64) -> Result<Self> {
        Self::new(opd, JonesOperator::identity())
    }

    pub fn opd(&self) -> f64 {
        self.opd
    }

    pub fn basis_rotation(&self) -> JonesOperator {
        self.basis_rotation
    }
}

/// Complex degree of coherence gamma(opd) for the given spectrum.
///
/// Carries the rapid mean-phase factor e^{i w0 opd/c} on top of the
/// Gaussian envelope; |gamma| <= 1 with equality at opd = 0.
pub fn decoherence_factor(spectrum: &Spectrum, opd: f64) -> Complex64 {
    let tau = opd / SPEED_OF_LIGHT;
    let w0 = spectrum.center_angular_frequency();
    let dw = spectrum.fwhm_angular_frequency();
    let x = tau * dw;
    let envelope = (-x * x / (16.0 * std::f64::consts::LN_2)).exp();
    Complex64::from_polar(envelope, w0 * tau)
}

/// Coherence length 2 pi c / dw = lambda0^2 / dlambda.
pub fn coherence_length(spectrum: &Spectrum) -> f64 {
    2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / spectrum.fwhm_angular_frequency()
}

/// Passes rho through a decohering element: in the element's eigenbasis the
/// off-diagonal is multiplied by gamma(opd). Populations in that basis are
/// untouched, so the output is always a valid state.
pub fn decohere(rho: &DensityMatrix, spectrum: &Spectrum, element: &DecohererSpec) -> DensityMatrix {
    let v = element.basis_rotation.m;
    let gamma = decoherence_factor(spectrum, element.opd);
    let mut e = v.adjoint() * rho.matrix() * v;
    e[(0, 1)] *= gamma;
    e[(1, 0)] *= gamma.conj();
    let m = v * e * v.adjoint();
    DensityMatrix::from_hermitian_parts(
        m[(0, 0)].re,
        m[(1, 1)].re,
        (m[(0, 1)] + m[(1, 0)].conj()) * Complex64::new(0.5, 0.0),
    )
}

/// Ideal partial polarizer: amplitude transmissions (t_h, t_v) on the
/// computational axes. Coherent (a pure state stays pure after
/// renormalization); not unitary unless t_h = t_v = 1.
pub fn coherent_partial_polarizer(t_h: f64, t_v: f64) -> Result<JonesOperator> {
    let ok = |t: f64| t.is_finite() && (0.0..=1.0).contains(&t);
    if !(ok(t_h) && ok(t_v)) {
        return Err(Error::TransmissionRange { t_h, t_v });
    }
    Ok(JonesOperator {
        m: Matrix2::new(
            Complex64::new(t_h, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(t_v, 0.0),
        ),
    })
}

/// s-polarization intensity transmission of a Brewster-angle polarizer:
/// per glass interface and for the two-plate (four-interface) stack.
/// p-polarization passes without loss at the Brewster angle.
pub fn brewster_stack_transmission(n: f64) -> Result<(f64, f64)> {
    if !(n.is_finite() && n > 1.0) {
        return Err(Error::RefractiveIndex { n });
    }
    let n2 = n * n;
    let reflectance = ((n2 - 1.0) / (n2 + 1.0)).powi(2);
    let per_interface = 1.0 - reflectance;
    Ok((per_interface, per_interface.powi(4)))
}

/// Real rotation of the polarization plane by `theta` radians.
pub fn rotator(theta: f64) -> JonesOperator {
    let (s, c) = theta.sin_cos();
    JonesOperator {
        m: Matrix2::new(
            Complex64::new(c, 0.0),
            Complex64::new(-s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(c, 0.0),
        ),
    }
}

/// File-facing description of one bench element. Files use degrees and
/// micrometers; the in-memory optics API uses radians and meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElementDescription {
    Hwp {
        theta_deg: f64,
    },
    Qwp {
        theta_deg: f64,
    },
    Decoherer {
        opd_um: f64,
        /// Rotation of the decoherence eigenbasis from H-V, in degrees.
        #[serde(default)]
        basis: f64,
    },
    PartialPolarizer {
        #[serde(rename = "tH")]
        t_h: f64,
        #[serde(rename = "tV")]
        t_v: f64,
    },
}

/// Passes a state through one described element. Returns the output state
/// and the survival weight (1 except for lossy elements); a partial
/// polarizer that blocks everything reports [`Error::StateAnnihilated`].
pub fn apply_element(
    rho: &DensityMatrix,
    element: &ElementDescription,
    spectrum: &Spectrum,
) -> Result<(DensityMatrix, f64)> {
    match element {
        ElementDescription::Hwp { theta_deg } => {
            Ok((apply_unitary(&hwp(theta_deg.to_radians()), rho)?, 1.0))
        }
        ElementDescription::Qwp { theta_deg } => {
            Ok((apply_unitary(&qwp(theta_deg.to_radians()), rho)?, 1.0))
        }
        ElementDescription::Decoherer { opd_um, basis } => {
            let spec = DecohererSpec::new(opd_um * 1e-6, rotator(basis.to_radians()))?;
            Ok((decohere(rho, spectrum, &spec), 1.0))
        }
        ElementDescription::PartialPolarizer { t_h, t_v } => {
            let op = coherent_partial_polarizer(*t_h, *t_v)?;
            let raw = op.m * rho.matrix() * op.m.adjoint();
            let weight = raw.trace().re.max(0.0);
            if weight < 1e-12 {
                return Err(Error::StateAnnihilated { weight });
            }
            let w = Complex64::new(1.0 / weight, 0.0);
            let out = DensityMatrix::from_hermitian_parts(
                (raw[(0, 0)] * w).re,
                (raw[(1, 1)] * w).re,
                raw[(0, 1)] * w,
            );
            Ok((out, weight.min(1.0)))
        }
    }
}

/// Applies a train of described elements in order, multiplying survival
/// weights.
pub fn apply_elements(
    rho: &DensityMatrix,
    elements: &[ElementDescription],
    spectrum: &Spectrum,
) -> Result<(DensityMatrix, f64)> {
    let mut state = *rho;
    let mut weight = 1.0;
    for element in elements {
        let (next, w) = apply_element(&state, element, spectrum)?;
        state = next;
        weight *= w;
    }
    Ok((state, weight))
}
