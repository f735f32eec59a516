//! Desk-scale polarization-qubit toolkit.
//!
//! Models the optical workflow of a single-qubit test bench: arbitrary
//! state synthesis with two half-wave plates, a decohering birefringent
//! element and a quarter-wave plate; photon-count simulation with Poisson
//! noise and slow source drift; maximum-likelihood state tomography;
//! Kraus / process-matrix representations with standard process
//! tomography; and Poincare-sphere distinguishability estimates built
//! from reconstruction-uncertainty ellipsoids.
//!
//! Conventions used everywhere:
//! - 2x2 complex matrices in the horizontal/vertical basis;
//! - Poincare coordinates (r_H, r_D, r_R) with +1 at H, +45 deg linear and
//!   right-circular; the density matrix top-right element is (r_D + i r_R)/2;
//! - angles in radians and lengths in meters in memory (file formats use
//!   degrees and micrometers where noted);
//! - all randomness flows through explicitly seeded ChaCha8 streams, so
//!   every simulation is bit-reproducible from its seed.

// Validation guards are written `!(x <= bound)` on purpose: unlike
// `x > bound`, the negated form also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counting;
pub mod distinguish;
pub mod error;
pub mod nelder_mead;
pub mod optics;
pub mod process;
pub mod serial;
pub mod state;
pub mod synthesis;
pub mod tomography;

#[cfg(test)]
pub(crate) mod testutil;

pub use counting::{
    expected_counts, normalization_for_total, simulate_counts, simulate_counts_with,
    AnalysisBasis, CountRecord, CountingConfig, DriftModel,
};
pub use distinguish::{
    count_distinguishable, ellipsoid_at, ellipsoid_at_with, ellipsoid_profile,
    ellipsoid_profile_with, profile_direction, PackingEstimate, PackingMethod,
    UncertaintyEllipsoid,
};
pub use error::{Error, Result};
pub use optics::{apply_element, apply_elements, ElementDescription, Spectrum};
pub use serial::{
    chi_from_json, chi_to_json, count_records_from_csv, count_records_to_csv, elements_from_json,
    elements_to_json, patches_to_csv, profile_to_csv, sphere_map_to_csv, state_from_json,
    state_to_json, to_pretty_json, tomography_result_to_json, SynthesisReport,
};
pub use state::{
    fidelity, poincare_from_rho, purity, rho_from_abdelta, rho_from_poincare, trace_distance,
    DensityMatrix, Ket, PoincareVector, StateParamsABDelta,
};
pub use process::{
    apply_chi, apply_kraus, canonical_process, canonical_processes, chi_from_kraus,
    kraus_from_chi, operator_basis, sphere_map, sqpt_end_to_end, sqpt_end_to_end_with,
    sqpt_inputs, sqpt_reconstruct, ChiMatrix, KrausSet, NamedProcess, SphereMap, SphereSample,
    SqptOutcome, WeightedOutput,
};
pub use synthesis::{
    forward_pipeline, forward_pipeline_with_errors, synth_angles, synth_angles_imperfect,
    RetardanceErrors, SynthesisAngles,
};
pub use tomography::{
    linear_inversion, likelihood, likelihood_of_state, mle_reconstruct, rho_from_t,
    t_start_from_counts, TParams, TomographyResult,
};
