//! Shared fixtures for the criterion benchmarks: a representative mixed
//! target state, the bench spectrum, and a deterministic noisy count
//! record. Everything here is seeded, so benchmark inputs never vary
//! between runs.

use polsim::{
    normalization_for_total, rho_from_poincare, simulate_counts_with, CountRecord, CountingConfig,
    DensityMatrix, PoincareVector, Spectrum,
};

/// Seed for the frozen benchmark count record.
pub const RECORD_SEED: u64 = 17;

/// Photon budget of the frozen record, summed over the four settings.
pub const RECORD_COUNTS: f64 = 150_000.0;

/// Light source assumed throughout: 702 nm center, 10 nm FWHM.
pub fn spectrum() -> Spectrum {
    Spectrum::gaussian(702e-9, 10e-9).expect("benchmark spectrum is valid")
}

/// Decoherer path difference deep in the fully decohered regime.
pub fn synthesis_opd(spectrum: &Spectrum) -> f64 {
    20.0 * polsim::optics::coherence_length(spectrum)
}

/// A mixed state away from every symmetry axis, so no kernel gets a
/// degenerate shortcut.
pub fn reference_target() -> DensityMatrix {
    rho_from_poincare(&PoincareVector::new(0.3, 0.45, -0.2)).expect("reference target is physical")
}

/// One simulated acquisition of [`reference_target`] under the default
/// counting model (Poisson statistics plus 0.5% source drift).
pub fn noisy_record() -> CountRecord {
    let rho = reference_target();
    let mean = normalization_for_total(&rho, RECORD_COUNTS);
    simulate_counts_with(&rho, mean, &CountingConfig::default(), RECORD_SEED)
        .expect("fixture parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noisy_record_is_usable_for_reconstruction() {
        let record = noisy_record();
        assert!(record.normalization() > 0);
        let fit = polsim::mle_reconstruct(&record).expect("fixture record reconstructs");
        assert!(fit.converged);
    }
}
