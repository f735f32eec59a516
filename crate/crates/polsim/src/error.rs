//! Crate-wide error type.
//!
//! Every fallible constructor and operation reports a typed variant with
//! the offending value attached, so callers (and the CLI) can turn it into
//! an actionable message without string matching.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace:.15} but must be 1 within tolerance")]
    TraceNotOne { trace: f64 },
    #[error("matrix has negative eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },
    #[error("Poincare radius {radius:.12} exceeds 1 beyond tolerance")]
    RadiusTooLarge { radius: f64 },
    #[error("population A = {a} lies outside [0, 1]")]
    PopulationRange { a: f64 },
    #[error("coherence B = {b} exceeds sqrt(A(1-A)) = {bound}")]
    CoherenceBound { b: f64, bound: f64 },
    #[error("cannot normalize a near-zero ket (norm {norm:.3e})")]
    ZeroKet { norm: f64 },
    #[error("operator deviates from unitarity by {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("Jones operator has gain: max singular value {max_singular:.12}")]
    JonesGain { max_singular: f64 },
    #[error("invalid spectrum: {reason}")]
    SpectrumDomain { reason: &'static str },
    #[error("amplitude transmissions ({t_h}, {t_v}) lie outside [0, 1]")]
    TransmissionRange { t_h: f64, t_v: f64 },
    #[error("refractive index {n} must be greater than 1")]
    RefractiveIndex { n: f64 },
    #[error("optical path difference {opd} must be finite and >= 0")]
    NegativeOpd { opd: f64 },
    #[error("synthesis search stalled at infidelity {best_infidelity:.3e}")]
    SynthesisStalled { best_infidelity: f64 },
    #[error("t-parameters are all zero; the normalized state is undefined")]
    DegenerateTParams,
    #[error("record has N0 + N1 = 0; the normalization is undefined")]
    EmptyNormalization,
    #[error("drift amplitude {amplitude} lies outside [0, 0.005]")]
    DriftAmplitude { amplitude: f64 },
    #[error("mean count {mean} must be finite and >= 0")]
    MeanCounts { mean: f64 },
    #[error("Kraus set is empty")]
    EmptyKrausSet,
    #[error("Kraus set amplifies: max eigenvalue of sum E^dag E is {max_eigenvalue:.12}")]
    KrausGain { max_eigenvalue: f64 },
    #[error("process annihilates the state (survival weight {weight:.3e})")]
    StateAnnihilated { weight: f64 },
    #[error("chi matrix basis must be \"pauli-eq5\", found {found:?}")]
    ChiBasis { found: String },
    #[error("sphere mesh {lat}x{lon} is too coarse; need at least 2x4")]
    MeshResolution { lat: usize, lon: usize },
    #[error("ellipsoid profile needs at least 2 radii, got {len}")]
    InsufficientProfile { len: usize },
    #[error("need at least 3 trials, got {trials}")]
    TrialsRange { trials: usize },
    #[error("profile radius {radius} lies outside [0, 1]")]
    ProfileRadiusRange { radius: f64 },
    #[error("only {converged} of {trials} tomography trials converged")]
    TooFewTrials { converged: usize, trials: usize },
    #[error("packing fraction {value} lies outside (0, 1]")]
    PackingFraction { value: f64 },
    #[error("ellipsoid volume vanishes near radius {radius}")]
    DegenerateVolume { radius: f64 },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}
