//! Arbitrary-state synthesis from horizontally polarized input.
//!
//! The bench is HWP(theta1) -> thick decoherer (H/V eigenbasis) ->
//! HWP(theta2) -> QWP(theta3). The first plate sets how much coherence the
//! decoherer destroys, which fixes the output radius |r| = cos(4 theta1);
//! the remaining plates rotate the resulting axial state to the target
//! direction. Every point of the Poincare ball is reachable.

use crate::error::{Error, Result};
use crate::nelder_mead::{self, Options};
use crate::optics::{apply_unitary, decohere, general_waveplate, DecohererSpec, Spectrum};
use crate::state::{fidelity, poincare_from_rho, DensityMatrix};
use std::f64::consts::{FRAC_PI_2, PI};

/// Targets with |r| below this use the degenerate rule theta2 = theta3 = 0.
const DEGENERATE_RADIUS: f64 = 1e-12;

/// Infidelity the imperfect-retardance search must reach to succeed.
const IMPERFECT_TOL: f64 = 1e-8;

/// Waveplate angles (radians) for the synthesis bench, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisAngles {
    /// First half-wave plate; the analytic solution keeps this in [0, pi/8].
    pub theta1: f64,
    /// Second half-wave plate.
    pub theta2: f64,
    /// Final quarter-wave plate.
    pub theta3: f64,
}

impl SynthesisAngles {
    pub const fn new(theta1: f64, theta2: f64, theta3: f64) -> Self {
        Self {
            theta1,
            theta2,
            theta3,
        }
    }
}

/// Retardance offsets (radians) of real plates from exactly pi and pi/2.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RetardanceErrors {
    pub hwp_error: f64,
    pub qwp_error: f64,
}

impl RetardanceErrors {
    pub const fn new(hwp_error: f64, qwp_error: f64) -> Self {
        Self {
            hwp_error,
            qwp_error,
        }
    }

    /// Full Poincare-ball coverage is guaranteed only while the quarter-wave
    /// error stays strictly smaller in magnitude than the half-wave error;
    /// outside that regime the numeric search is best-effort.
    pub fn guarantees_reachability(&self) -> bool {
        self.qwp_error.abs() < self.hwp_error.abs()
    }
}

/// Analytic waveplate angles reaching `target` (assumes ideal retardances
/// and a decoherer much thicker than the coherence length).
///
/// theta1 = arccos(|r|)/4; theta3 points the linear part via
/// atan2(r_D, r_H)/2; theta2 folds in the circular component. For the
/// fully mixed target the direction is meaningless and theta2 = theta3 = 0.
pub fn synth_angles(target: &DensityMatrix) -> SynthesisAngles {
    let r = poincare_from_rho(target);
    let norm = r.norm().min(1.0);
    let theta1 = norm.acos() / 4.0;
    if norm < DEGENERATE_RADIUS {
        return SynthesisAngles::new(theta1, 0.0, 0.0);
    }
    let planar = (r.r_h * r.r_h + r.r_d * r.r_d).sqrt();
    let theta3 = 0.5 * r.r_d.atan2(r.r_h);
    // Elevation of the target out of the linear-polarization plane; the
    // sign matches a quarter-wave plate that retards its axis component.
    let elevation = (-r.r_r).atan2(planar);
    let theta2 = (elevation + 2.0 * theta3) / 4.0;
    SynthesisAngles::new(theta1, theta2, theta3)
}

/// Simulates the bench with ideal retardances.
///
/// `opd` is the decoherer's optical path difference in meters (finite and
/// nonnegative); the synthesis solution assumes opd well past the
/// coherence length, but any value is accepted for partial-decoherence
/// studies.
pub fn forward_pipeline(angles: &SynthesisAngles, spectrum: &Spectrum, opd: f64) -> DensityMatrix {
    forward_pipeline_with_errors(angles, &RetardanceErrors::default(), spectrum, opd)
}

/// Simulates the bench with the given retardance offsets on every plate.
pub fn forward_pipeline_with_errors(
    angles: &SynthesisAngles,
    errors: &RetardanceErrors,
    spectrum: &Spectrum,
    opd: f64,
) -> DensityMatrix {
    let element = DecohererSpec::hv(opd).expect("opd must be finite and >= 0");
    let plate1 = general_waveplate(PI + errors.hwp_error, angles.theta1);
    let plate2 = general_waveplate(PI + errors.hwp_error, angles.theta2);
    let plate3 = general_waveplate(FRAC_PI_2 + errors.qwp_error, angles.theta3);
    // Waveplates are unitary by construction, so conjugation cannot fail.
    let s0 = DensityMatrix::horizontal();
    let s1 = apply_unitary(&plate1, &s0).expect("waveplates are unitary");
    let s2 = decohere(&s1, spectrum, &element);
    let s3 = apply_unitary(&plate2, &s2).expect("waveplates are unitary");
    apply_unitary(&plate3, &s3).expect("waveplates are unitary")
}

/// Weights of the pure-horizontal and fully mixed components of the state
/// right after the decoherer: (cos 4 theta1, 2 sin^2 2 theta1). They sum
/// to 1 by the double-angle identity.
pub fn intermediate_decomposition(theta1: f64) -> (f64, f64) {
    let s = (2.0 * theta1).sin();
    ((4.0 * theta1).cos(), 2.0 * s * s)
}

/// Numeric angle search for plates with imperfect retardances.
///
/// Minimizes the forward infidelity with a simplex search started from the
/// ideal-retardance solution and from a coarse 2x2x2 angle grid (2,000
/// evaluations per start). Succeeds once the infidelity is below 1e-8;
/// otherwise reports the target unreachable with these errors.
pub fn synth_angles_imperfect(
    target: &DensityMatrix,
    errors: &RetardanceErrors,
    spectrum: &Spectrum,
    opd: f64,
) -> Result<SynthesisAngles> {
    let objective = |x: &[f64]| -> f64 {
        let angles = SynthesisAngles::new(x[0], x[1], x[2]);
        1.0 - fidelity(
            &forward_pipeline_with_errors(&angles, errors, spectrum, opd),
            target,
        )
    };

    let analytic = synth_angles(target);
    let mut starts = vec![[analytic.theta1, analytic.theta2, analytic.theta3]];
    for &t1 in &[PI / 32.0, 3.0 * PI / 32.0] {
        for &t2 in &[-PI / 8.0, PI / 8.0] {
            for &t3 in &[-PI / 4.0, PI / 4.0] {
                starts.push([t1, t2, t3]);
            }
        }
    }

    let opts = Options {
        tolerance: 1e-12,
        max_evaluations: 2_000,
        initial_step: 0.05,
    };
    let mut best: Option<nelder_mead::MinimizeResult> = None;
    for start in starts {
        let res = nelder_mead::minimize(objective, &start, &opts);
        let better = best.as_ref().is_none_or(|b| res.fx < b.fx);
        if better {
            best = Some(res);
        }
        if best.as_ref().unwrap().fx < 1e-10 {
            break;
        }
    }
    let best = best.expect("at least one start");
    if best.fx < IMPERFECT_TOL {
        Ok(SynthesisAngles::new(best.x[0], best.x[1], best.x[2]))
    } else {
        Err(Error::SynthesisStalled {
            best_infidelity: best.fx,
        })
    }
}
