//! Photon-count simulation for the four-projector analysis sequence.
//!
//! The analyzer steps through the fixed settings (V, H, D, R) in order.
//! Each setting collects a Poisson count with mean N p_nu, where
//! N = `mean_total_per_basis` is the expected H+V sum (H and V form a
//! complete basis, so N normalizes the record) and p_nu is the projection
//! probability of the state onto that analysis ket. Slow source or
//! detector drift multiplies the mean by a per-setting factor.
//!
//! All sampling runs on a ChaCha8 stream seeded with `seed_from_u64`, so a
//! record is a pure function of (state, settings, seed) on every platform.

use nalgebra::Vector2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::state::{DensityMatrix, Ket};

/// The ordered analysis states (V, H, D, R).
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisBasis {
    kets: [Ket; 4],
}

impl AnalysisBasis {
    /// V, H, D and right-circular, the sequence the bench steps through.
    pub fn standard() -> Self {
        let z = Complex64::new(0.0, 0.0);
        let one = Complex64::new(1.0, 0.0);
        let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let minus_i = Complex64::new(0.0, -1.0);
        Self {
            kets: [
                Vector2::new(z, one),
                Vector2::new(one, z),
                Vector2::new(inv_sqrt2, inv_sqrt2),
                Vector2::new(inv_sqrt2, inv_sqrt2 * minus_i),
            ],
        }
    }

    pub fn states(&self) -> &[Ket; 4] {
        &self.kets
    }

    pub fn ket(&self, nu: usize) -> &Ket {
        &self.kets[nu]
    }
}

/// One pass through the four analysis settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountRecord {
    /// Counts at (V, H, D, R).
    pub n: [u64; 4],
    /// Integration time per setting, seconds.
    pub duration_s: f64,
    /// The mean H+V total the record was generated with.
    pub expected_total: f64,
}

impl CountRecord {
    /// Measured normalization N0 + N1.
    pub fn normalization(&self) -> u64 {
        self.n[0] + self.n[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriftKind {
    None,
    LinearRamp,
    Sinusoidal,
}

/// Slow multiplicative drift of source power or detector efficiency over
/// the four sequential settings.
///
/// The sinusoidal kind evaluates 1 + a sin(pi nu / 2 + phase) at setting
/// nu, with the phase drawn from the simulation seed so repeated runs
/// drift differently but reproducibly. The linear ramp spans 1 - a to
/// 1 + a across the sequence and ignores the phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftModel {
    relative_amplitude: f64,
    kind: DriftKind,
}

/// Largest relative drift the bench model accepts (0.5%).
pub const MAX_DRIFT_AMPLITUDE: f64 = 0.005;

impl DriftModel {
    pub fn new(kind: DriftKind, relative_amplitude: f64) -> Result<Self> {
        if !(0.0..=MAX_DRIFT_AMPLITUDE).contains(&relative_amplitude) {
            return Err(Error::DriftAmplitude {
                amplitude: relative_amplitude,
            });
        }
        Ok(Self {
            relative_amplitude,
            kind,
        })
    }

    pub fn none() -> Self {
        Self {
            relative_amplitude: 0.0,
            kind: DriftKind::None,
        }
    }

    pub fn sinusoidal(relative_amplitude: f64) -> Result<Self> {
        Self::new(DriftKind::Sinusoidal, relative_amplitude)
    }

    pub fn linear_ramp(relative_amplitude: f64) -> Result<Self> {
        Self::new(DriftKind::LinearRamp, relative_amplitude)
    }

    pub fn relative_amplitude(&self) -> f64 {
        self.relative_amplitude
    }

    pub fn kind(&self) -> DriftKind {
        self.kind
    }

    fn factor(&self, nu: usize, phase: f64) -> f64 {
        let a = self.relative_amplitude;
        match self.kind {
            DriftKind::None => 1.0,
            DriftKind::LinearRamp => 1.0 + a * (2.0 * nu as f64 / 3.0 - 1.0),
            DriftKind::Sinusoidal => {
                1.0 + a * (std::f64::consts::FRAC_PI_2 * nu as f64 + phase).sin()
            }
        }
    }
}

impl Default for DriftModel {
    /// The bench default: sinusoidal at the full 0.5% amplitude.
    fn default() -> Self {
        Self {
            relative_amplitude: MAX_DRIFT_AMPLITUDE,
            kind: DriftKind::Sinusoidal,
        }
    }
}

/// Knobs beyond the drift model; [`CountingConfig::default`] reproduces
/// the plain bench (no background, 100 s per setting, sampled counts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountingConfig {
    pub drift: DriftModel,
    /// Uniform accidental-coincidence rate added to every setting (counts
    /// per second over `duration_s`).
    pub background_rate_hz: f64,
    pub duration_s: f64,
    /// Replace sampling with N_nu = round(mean): the noiseless switch.
    pub exact_expectation: bool,
}

impl Default for CountingConfig {
    fn default() -> Self {
        Self {
            drift: DriftModel::default(),
            background_rate_hz: 0.0,
            duration_s: 100.0,
            exact_expectation: false,
        }
    }
}

/// <psi|rho|psi>, clamped to [0, 1]. The ket is normalized defensively.
pub fn projection_probability(rho: &DensityMatrix, psi: &Ket) -> f64 {
    let weight = psi.norm_squared();
    debug_assert!(weight > 0.0, "analysis ket must be nonzero");
    let p = (psi.adjoint() * rho.matrix() * psi)[(0, 0)].re / weight;
    p.clamp(0.0, 1.0)
}

/// Noiseless expectations at the four settings for an H+V total of `total`.
pub fn expected_counts(rho: &DensityMatrix, total: f64) -> [f64; 4] {
    let basis = AnalysisBasis::standard();
    std::array::from_fn(|nu| total * projection_probability(rho, basis.ket(nu)))
}

/// Per-basis normalization whose expected sum over all four settings is
/// `counts_total` (the convention used for quoted experiment totals).
pub fn normalization_for_total(rho: &DensityMatrix, counts_total: f64) -> f64 {
    let basis = AnalysisBasis::standard();
    let sum: f64 = (0..4)
        .map(|nu| projection_probability(rho, basis.ket(nu)))
        .sum();
    counts_total / sum
}

/// Simulates one analysis pass with the given drift and otherwise default
/// settings. Deterministic per seed.
pub fn simulate_counts(
    rho: &DensityMatrix,
    mean_total_per_basis: f64,
    drift: &DriftModel,
    seed: u64,
) -> Result<CountRecord> {
    let config = CountingConfig {
        drift: *drift,
        ..CountingConfig::default()
    };
    simulate_counts_with(rho, mean_total_per_basis, &config, seed)
}

/// Simulates one analysis pass with full control of the generator.
pub fn simulate_counts_with(
    rho: &DensityMatrix,
    mean_total_per_basis: f64,
    config: &CountingConfig,
    seed: u64,
) -> Result<CountRecord> {
    if !(mean_total_per_basis.is_finite() && mean_total_per_basis > 0.0) {
        return Err(Error::MeanCounts {
            mean: mean_total_per_basis,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Drawn unconditionally so the Poisson stream is identical across
    // drift kinds with the same seed.
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let background = config.background_rate_hz.max(0.0) * config.duration_s;
    let basis = AnalysisBasis::standard();
    let mut n = [0u64; 4];
    for (nu, slot) in n.iter_mut().enumerate() {
        let p = projection_probability(rho, basis.ket(nu));
        let mean = mean_total_per_basis * p * config.drift.factor(nu, phase) + background;
        *slot = if config.exact_expectation {
            mean.round() as u64
        } else {
            sample_poisson(&mut rng, mean)
        };
    }
    Ok(CountRecord {
        n,
        duration_s: config.duration_s,
        expected_total: mean_total_per_basis,
    })
}

/// Poisson sampler: CDF inversion below mean 30, normal approximation with
/// continuity correction above. The switch point keeps the approximation
/// error far below counting noise at bench scales.
pub(crate) fn sample_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    if mean < 30.0 {
        let u: f64 = rng.random();
        let mut k = 0u64;
        let mut pmf = (-mean).exp();
        let mut cdf = pmf;
        // Walk the CDF; the cap only guards against u in the extreme tail.
        while u > cdf && k < 1_000 {
            k += 1;
            pmf *= mean / k as f64;
            cdf += pmf;
        }
        k
    } else {
        let z: f64 = rng.sample(StandardNormal);
        (mean + z * mean.sqrt() + 0.5).floor().max(0.0) as u64
    }
}
