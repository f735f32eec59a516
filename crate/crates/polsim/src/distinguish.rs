//! Reconstruction-uncertainty ellipsoids and the distinguishable-state
//! count for the Poincare ball.
//!
//! Repeatedly simulating and reconstructing the same state scatters the
//! recovered Poincare vectors around their mean. An ellipsoid with
//! semi-axes 1.69 times the per-direction standard deviations (radial
//! plus two transverse) captures over 95% of near-Gaussian scatter, and
//! dividing the ball into cells of that size — times a packing fraction —
//! estimates how many states a bench at a given count budget can tell
//! apart.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{normalization_for_total, simulate_counts_with, CountingConfig};
use crate::error::{Error, Result};
use crate::state::{poincare_from_rho, rho_from_poincare, DensityMatrix, PoincareVector};
use crate::tomography::mle_reconstruct;

/// Scatter-to-semi-axis factor: 1.69 standard deviations per direction
/// covers over 95% of a Gaussian cloud.
pub const ELLIPSOID_SIGMA_FACTOR: f64 = 1.69;
/// Mean radii below this have no meaningful radial direction; the radial
/// axis then defaults to the r_H axis.
pub const DEGENERATE_MEAN_RADIUS: f64 = 1e-6;
/// Densest-sphere-packing fraction, the default cell packing.
pub const DEFAULT_PACKING_FRACTION: f64 = 0.74;

const SEED_STRIDE_TRIAL: u64 = 0x9E37_79B9_7F4A_7C15;
const SEED_STRIDE_RADIUS: u64 = 0xD1B5_4A32_D192_ED03;

/// Scatter ellipsoid of repeated state reconstructions.
///
/// `axes_directions` rows are orthonormal; the first is the radial
/// direction (unit mean vector), the other two are transverse. Semi-axes
/// are 1.69 times the sample standard deviation along each row and are
/// zero only for noiseless (zero-scatter) runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UncertaintyEllipsoid {
    pub mean_r: PoincareVector,
    pub radial_semiaxis: f64,
    pub transverse_semiaxes: [f64; 2],
    pub axes_directions: [[f64; 3]; 3],
}

impl UncertaintyEllipsoid {
    /// Ellipsoid volume (4 pi / 3) abc.
    pub fn volume(&self) -> f64 {
        4.0 * std::f64::consts::PI / 3.0
            * self.radial_semiaxis
            * self.transverse_semiaxes[0]
            * self.transverse_semiaxes[1]
    }

    /// Whether a point falls inside (or on) the ellipsoid centered on the
    /// mean. Zero semi-axes only admit points with no deviation along
    /// that axis.
    pub fn contains(&self, r: &PoincareVector) -> bool {
        let d = Vector3::from(r.to_array()) - Vector3::from(self.mean_r.to_array());
        let semis = [
            self.radial_semiaxis,
            self.transverse_semiaxes[0],
            self.transverse_semiaxes[1],
        ];
        let mut q = 0.0;
        for (axis, semi) in self.axes_directions.iter().zip(semis) {
            let along = d.dot(&Vector3::from(*axis));
            if semi <= 0.0 {
                if along.abs() > 1e-12 {
                    return false;
                }
            } else {
                q += (along / semi).powi(2);
            }
        }
        q <= 1.0
    }
}

/// How a [`PackingEstimate`] was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PackingMethod {
    RadialShellIntegration,
}

/// Estimated number of reliably distinguishable states in the ball.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PackingEstimate {
    pub total_states: f64,
    pub method: PackingMethod,
    pub packing_fraction: f64,
}

/// Direction used for the radial uncertainty profile: 20 degrees of
/// polar tilt off the r_H axis, azimuth halfway between r_D and r_R.
/// Tilting off the axes keeps all three scatter directions generic.
pub fn profile_direction() -> Vector3<f64> {
    let polar = 20.0_f64.to_radians();
    Vector3::new(
        polar.cos(),
        polar.sin() * std::f64::consts::FRAC_1_SQRT_2,
        polar.sin() * std::f64::consts::FRAC_1_SQRT_2,
    )
}

/// Scatter ellipsoid of `trials` simulate-and-reconstruct cycles of one
/// state with explicit counting behavior. `counts_total` is the expected
/// grand total across the four analysis settings; trials run in parallel
/// on seeds derived from `seed` and merge deterministically.
///
/// Trials whose reconstruction fails to converge are excluded; fewer
/// than 3 survivors is an error.
pub fn ellipsoid_at_with(
    rho: &DensityMatrix,
    trials: usize,
    counts_total: f64,
    counting: &CountingConfig,
    seed: u64,
) -> Result<UncertaintyEllipsoid> {
    if trials < 3 {
        return Err(Error::TrialsRange { trials });
    }
    if !(counts_total.is_finite() && counts_total > 0.0) {
        return Err(Error::MeanCounts { mean: counts_total });
    }
    let mean_per_basis = normalization_for_total(rho, counts_total);
    let outcomes: Vec<Option<PoincareVector>> = (0..trials)
        .into_par_iter()
        .map(|k| -> Result<Option<PoincareVector>> {
            let trial_seed = seed.wrapping_add((k as u64 + 1).wrapping_mul(SEED_STRIDE_TRIAL));
            let record = simulate_counts_with(rho, mean_per_basis, counting, trial_seed)?;
            match mle_reconstruct(&record) {
                Ok(fit) if fit.converged => Ok(Some(poincare_from_rho(&fit.rho))),
                Ok(_) | Err(Error::EmptyNormalization) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<Vector3<f64>> = outcomes
        .into_iter()
        .flatten()
        .map(|r| Vector3::from(r.to_array()))
        .collect();
    if points.len() < 3 {
        return Err(Error::TooFewTrials {
            converged: points.len(),
            trials,
        });
    }

    let mean: Vector3<f64> = points.iter().sum::<Vector3<f64>>() / points.len() as f64;
    let radial = if mean.norm() < DEGENERATE_MEAN_RADIUS {
        Vector3::new(1.0, 0.0, 0.0)
    } else {
        mean.normalize()
    };
    // Transverse frame: Gram-Schmidt against the radial direction,
    // starting from the circular axis (r_H axis when they coincide).
    let mut t1 = Vector3::new(0.0, 0.0, 1.0) - radial * radial.z;
    if t1.norm() < 1e-6 {
        t1 = Vector3::new(1.0, 0.0, 0.0) - radial * radial.x;
    }
    let t1 = t1.normalize();
    let t2 = radial.cross(&t1);

    let sigma = |dir: &Vector3<f64>| -> f64 {
        let ss: f64 = points.iter().map(|p| ((p - mean).dot(dir)).powi(2)).sum();
        (ss / (points.len() - 1) as f64).sqrt()
    };
    Ok(UncertaintyEllipsoid {
        mean_r: PoincareVector::new(mean.x, mean.y, mean.z),
        radial_semiaxis: ELLIPSOID_SIGMA_FACTOR * sigma(&radial),
        transverse_semiaxes: [
            ELLIPSOID_SIGMA_FACTOR * sigma(&t1),
            ELLIPSOID_SIGMA_FACTOR * sigma(&t2),
        ],
        axes_directions: [radial.into(), t1.into(), t2.into()],
    })
}

/// Counting model for the default profile runs: pure Poisson statistics,
/// no source drift. A drift floor would break the 1/sqrt(N) scaling of
/// the semi-axes that the census relies on (drift-induced scatter does
/// not shrink with counts); drifting runs go through
/// [`ellipsoid_at_with`].
fn poisson_limited_counting() -> CountingConfig {
    CountingConfig {
        drift: crate::counting::DriftModel::none(),
        ..CountingConfig::default()
    }
}

/// [`ellipsoid_at_with`] in the Poisson-limited regime (no source
/// drift), the regime the reference thickness values were measured in.
pub fn ellipsoid_at(
    rho: &DensityMatrix,
    trials: usize,
    counts_total: f64,
    seed: u64,
) -> Result<UncertaintyEllipsoid> {
    ellipsoid_at_with(rho, trials, counts_total, &poisson_limited_counting(), seed)
}

/// Radial uncertainty profile: one ellipsoid per requested |r|, for
/// states of varying radius along [`profile_direction`]. Radii must lie
/// in [0, 1]; each radius runs on its own derived seed.
pub fn ellipsoid_profile_with(
    radii: &[f64],
    trials: usize,
    counts_total: f64,
    counting: &CountingConfig,
    seed: u64,
) -> Result<Vec<UncertaintyEllipsoid>> {
    for &radius in radii {
        if !(0.0..=1.0).contains(&radius) {
            return Err(Error::ProfileRadiusRange { radius });
        }
    }
    let direction = profile_direction();
    radii
        .par_iter()
        .enumerate()
        .map(|(i, &radius)| {
            let r = direction * radius;
            let rho = rho_from_poincare(&PoincareVector::new(r.x, r.y, r.z))?;
            let radius_seed = seed.wrapping_add((i as u64 + 1).wrapping_mul(SEED_STRIDE_RADIUS));
            ellipsoid_at_with(&rho, trials, counts_total, counting, radius_seed)
        })
        .collect()
}

/// [`ellipsoid_profile_with`] in the Poisson-limited regime (no source
/// drift).
pub fn ellipsoid_profile(
    radii: &[f64],
    trials: usize,
    counts_total: f64,
    seed: u64,
) -> Result<Vec<UncertaintyEllipsoid>> {
    ellipsoid_profile_with(radii, trials, counts_total, &poisson_limited_counting(), seed)
}

/// Distinguishable-state estimate: interpolate the ellipsoid volume
/// V(|r|) piecewise-linearly over the profile (constant beyond the
/// sampled radii) and integrate shell-by-shell,
///
/// ```text
/// total = packing_fraction * integral_0^1 4 pi s^2 / V(s) ds,
/// ```
///
/// with a 101-point trapezoid rule.
pub fn count_distinguishable(
    profile: &[UncertaintyEllipsoid],
    packing_fraction: f64,
) -> Result<PackingEstimate> {
    if !(packing_fraction > 0.0 && packing_fraction <= 1.0) {
        return Err(Error::PackingFraction {
            value: packing_fraction,
        });
    }
    if profile.len() < 2 {
        return Err(Error::InsufficientProfile {
            len: profile.len(),
        });
    }
    let mut knots: Vec<(f64, f64)> = profile
        .iter()
        .map(|e| (e.mean_r.norm(), e.volume()))
        .collect();
    knots.sort_by(|a, b| a.0.total_cmp(&b.0));
    for &(radius, volume) in &knots {
        if !(volume > 0.0 && volume.is_finite()) {
            return Err(Error::DegenerateVolume { radius });
        }
    }
    let volume_at = |s: f64| -> f64 {
        if s <= knots[0].0 {
            return knots[0].1;
        }
        if s >= knots[knots.len() - 1].0 {
            return knots[knots.len() - 1].1;
        }
        let hi = knots.partition_point(|k| k.0 < s);
        let (r0, v0) = knots[hi - 1];
        let (r1, v1) = knots[hi];
        v0 + (v1 - v0) * (s - r0) / (r1 - r0)
    };
    let n = 101;
    let h = 1.0 / (n - 1) as f64;
    let mut integral = 0.0;
    for i in 0..n {
        let s = i as f64 * h;
        let f = 4.0 * std::f64::consts::PI * s * s / volume_at(s);
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        integral += w * f * h;
    }
    Ok(PackingEstimate {
        total_states: packing_fraction * integral,
        method: PackingMethod::RadialShellIntegration,
        packing_fraction,
    })
}
