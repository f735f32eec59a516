//! Single-qubit processes: operator-sum (Kraus) sets, process matrices,
//! conversions, standard process tomography and sphere maps.
//!
//! A process acts as rho -> sum_j E_j rho E_j^dag. Trace-decreasing sets
//! (polarizers) are first-class: operations return the survival weight
//! alongside the renormalized state and never fold it back in.
//!
//! The process matrix chi expresses the same action over the fixed
//! operator basis (I, X, Y, Z) — tagged "pauli-eq5" in files — via
//! rho -> sum_ij chi_ij sigma_i rho sigma_j. Valid chi are Hermitian,
//! positive semidefinite and trace non-increasing.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::counting::{simulate_counts_with, CountingConfig, DriftModel};
use crate::error::{Error, Result};
use crate::state::{poincare_from_rho, rho_from_poincare, DensityMatrix, PoincareVector};
use crate::tomography::mle_reconstruct;

/// Tolerance on the trace-non-increasing bound of a Kraus set.
pub const KRAUS_GAIN_TOL: f64 = 1e-10;
/// Hermiticity tolerance for process matrices.
pub const CHI_HERMITIAN_TOL: f64 = 1e-10;
/// Eigenvalue floor for process matrices (and the cutoff below which
/// [`kraus_from_chi`] drops an operator).
pub const CHI_PSD_TOL: f64 = 1e-9;
/// Survival weight below which a state counts as annihilated.
pub const ANNIHILATION_TOL: f64 = 1e-12;
/// Latitude x longitude mesh used when no resolution is given.
pub const DEFAULT_MESH_RESOLUTION: (usize, usize) = (25, 50);

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The fixed operator basis (identity plus the three Pauli matrices), in
/// the order process-matrix indices and files refer to.
pub fn operator_basis() -> [Matrix2<Complex64>; 4] {
    [
        Matrix2::identity(),
        Matrix2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)),
        Matrix2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)),
        Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)),
    ]
}

/// Largest eigenvalue of a Hermitian 2x2 matrix.
fn max_eigenvalue_2(m: &Matrix2<Complex64>) -> f64 {
    let herm = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = SymmetricEigen::new(herm);
    eig.eigenvalues.max()
}

/// Operator-sum representation of a process.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    ops: Vec<Matrix2<Complex64>>,
}

impl KrausSet {
    /// Validates that the set is nonempty, finite, and trace non-increasing
    /// (largest eigenvalue of sum E^dag E at most 1 + 1e-10).
    pub fn new(ops: Vec<Matrix2<Complex64>>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::EmptyKrausSet);
        }
        let mut sum = Matrix2::zeros();
        for op in &ops {
            if op.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::SpectrumDomain {
                    reason: "Kraus operator has non-finite entries",
                });
            }
            sum += op.adjoint() * op;
        }
        let max_eigenvalue = max_eigenvalue_2(&sum);
        if max_eigenvalue > 1.0 + KRAUS_GAIN_TOL {
            return Err(Error::KrausGain { max_eigenvalue });
        }
        Ok(Self { ops })
    }

    pub fn single(op: Matrix2<Complex64>) -> Result<Self> {
        Self::new(vec![op])
    }

    /// Validity inherited from an already-checked process matrix, whose
    /// eigenvalue tolerances are slightly looser than the input check here.
    pub(crate) fn from_ops_unchecked(ops: Vec<Matrix2<Complex64>>) -> Self {
        debug_assert!(!ops.is_empty());
        Self { ops }
    }

    pub fn ops(&self) -> &[Matrix2<Complex64>] {
        &self.ops
    }
}

/// Process matrix over [`operator_basis`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChiMatrix {
    m: Matrix4<Complex64>,
}

impl ChiMatrix {
    /// Validates Hermiticity (1e-10), positivity (eigenvalues >= -1e-9) and
    /// the trace-non-increasing bound, then snaps to the exact Hermitian
    /// part.
    pub fn new(m: Matrix4<Complex64>) -> Result<Self> {
        let deviation = (m - m.adjoint()).norm();
        if !(deviation <= CHI_HERMITIAN_TOL) {
            return Err(Error::NotHermitian { deviation });
        }
        let herm = (m + m.adjoint()) * c(0.5, 0.0);
        let eig = SymmetricEigen::new(herm);
        let min_eigenvalue = eig.eigenvalues.min();
        if !(min_eigenvalue >= -CHI_PSD_TOL) {
            return Err(Error::NotPositive { min_eigenvalue });
        }
        let max_eigenvalue = max_eigenvalue_2(&kraus_bound(&herm));
        if !(max_eigenvalue <= 1.0 + CHI_PSD_TOL) {
            return Err(Error::KrausGain { max_eigenvalue });
        }
        Ok(Self { m: herm })
    }

    pub fn matrix(&self) -> Matrix4<Complex64> {
        self.m
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = SymmetricEigen::new(self.m);
        let mut v: [f64; 4] = eig.eigenvalues.into();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Deviation of sum_ij chi_ij sigma_j^dag sigma_i from the identity;
    /// zero (to tolerance) exactly for trace-preserving processes.
    pub fn trace_preservation_deviation(&self) -> f64 {
        (kraus_bound(&self.m) - Matrix2::identity()).norm()
    }
}

/// sum_ij chi_ij sigma_j^dag sigma_i; equals sum_j E_j^dag E_j of any
/// operator-sum decomposition, so it is bounded by I for physical maps.
fn kraus_bound(chi: &Matrix4<Complex64>) -> Matrix2<Complex64> {
    let sigma = operator_basis();
    let mut sum = Matrix2::zeros();
    for i in 0..4 {
        for j in 0..4 {
            sum += sigma[j].adjoint() * sigma[i] * chi[(i, j)];
        }
    }
    sum
}

/// Unnormalized action sum_j E_j rho E_j^dag and its trace.
pub(crate) fn apply_kraus_raw(k: &KrausSet, rho: &DensityMatrix) -> (Matrix2<Complex64>, f64) {
    let m = rho.matrix();
    let mut raw = Matrix2::zeros();
    for op in k.ops() {
        raw += op * m * op.adjoint();
    }
    (raw, raw.trace().re.max(0.0))
}

/// Unnormalized action sum_ij chi_ij sigma_i rho sigma_j and its trace.
pub(crate) fn apply_chi_raw(chi: &Matrix4<Complex64>, rho: &DensityMatrix) -> (Matrix2<Complex64>, f64) {
    let sigma = operator_basis();
    let m = rho.matrix();
    let mut raw = Matrix2::zeros();
    for i in 0..4 {
        for j in 0..4 {
            raw += sigma[i] * m * sigma[j] * chi[(i, j)];
        }
    }
    (raw, raw.trace().re.max(0.0))
}

fn normalize_raw(raw: &Matrix2<Complex64>, weight: f64) -> Result<(DensityMatrix, f64)> {
    if weight < ANNIHILATION_TOL {
        return Err(Error::StateAnnihilated { weight });
    }
    let w = c(1.0 / weight, 0.0);
    let rho = DensityMatrix::from_hermitian_parts(
        (raw[(0, 0)] * w).re,
        (raw[(1, 1)] * w).re,
        raw[(0, 1)] * w,
    );
    Ok((rho, weight.min(1.0)))
}

/// Applies the operator sum to a state. Returns the renormalized output
/// and the survival weight; a weight below 1e-12 is reported as
/// [`Error::StateAnnihilated`] since the output direction is undefined.
pub fn apply_kraus(k: &KrausSet, rho: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    let (raw, weight) = apply_kraus_raw(k, rho);
    normalize_raw(&raw, weight)
}

/// Applies a process matrix to a state; same semantics as [`apply_kraus`].
pub fn apply_chi(chi: &ChiMatrix, rho: &DensityMatrix) -> Result<(DensityMatrix, f64)> {
    let (raw, weight) = apply_chi_raw(&chi.matrix(), rho);
    normalize_raw(&raw, weight)
}

/// Basis coefficients of an operator: E = sum_i coeff_i sigma_i with
/// coeff_i = Tr(sigma_i E) / 2.
fn basis_coefficients(op: &Matrix2<Complex64>) -> Vector4<Complex64> {
    let sigma = operator_basis();
    Vector4::from_fn(|i, _| (sigma[i] * op).trace() * c(0.5, 0.0))
}

/// Process matrix of a Kraus set: chi_il = sum_j c_i^(j) conj(c_l^(j))
/// where c^(j) are the basis coefficients of E_j. Hermitian and positive
/// semidefinite by construction.
pub fn chi_from_kraus(k: &KrausSet) -> ChiMatrix {
    let mut m = Matrix4::zeros();
    for op in k.ops() {
        let coeff = basis_coefficients(op);
        for i in 0..4 {
            for l in 0..4 {
                m[(i, l)] += coeff[i] * coeff[l].conj();
            }
        }
    }
    ChiMatrix::new(m).expect("chi built from a valid Kraus set is valid")
}

/// Minimal operator-sum decomposition of a process matrix: eigenvectors
/// with eigenvalue at least 1e-9 become operators sqrt(lambda) sum v_i
/// sigma_i. The result has one to four mutually orthogonal operators
/// (Tr(E_a^dag E_b) = 0 for a != b); ties in the eigenvalues are broken
/// deterministically so the decomposition is reproducible.
pub fn kraus_from_chi(chi: &ChiMatrix) -> Result<KrausSet> {
    let eig = SymmetricEigen::new(chi.matrix());
    let mut pairs: Vec<(f64, Vector4<Complex64>)> = (0..4)
        .map(|k| {
            let mut v: Vector4<Complex64> = eig.eigenvectors.column(k).into_owned();
            // Fix the arbitrary eigenvector phase: first significant
            // component made real positive.
            if let Some(lead) = v.iter().find(|z| z.norm() > 1e-12).copied() {
                v *= lead.conj() / lead.norm();
            }
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            for i in 0..4 {
                let ord = a.1[i]
                    .re
                    .total_cmp(&b.1[i].re)
                    .then(a.1[i].im.total_cmp(&b.1[i].im));
                if ord != std::cmp::Ordering::Equal {
                    return ord;
                }
            }
            std::cmp::Ordering::Equal
        })
    });
    let sigma = operator_basis();
    let ops: Vec<Matrix2<Complex64>> = pairs
        .iter()
        .filter(|(lambda, _)| *lambda >= CHI_PSD_TOL)
        .map(|(lambda, v)| {
            let mut op = Matrix2::zeros();
            for i in 0..4 {
                op += sigma[i] * v[i];
            }
            op * c(lambda.sqrt(), 0.0)
        })
        .collect();
    if ops.is_empty() {
        return Err(Error::EmptyKrausSet);
    }
    Ok(KrausSet::from_ops_unchecked(ops))
}

/// A catalog entry: a short machine-usable name and its operator set.
#[derive(Debug, Clone)]
pub struct NamedProcess {
    pub name: &'static str,
    pub kraus: KrausSet,
}

/// The five stock processes used throughout the toolkit, with probability
/// weights folded directly into the operators:
///
/// - `hadamard` — the unitary (X + Z)/sqrt(2);
/// - `polarizer_H` — total projector onto H;
/// - `coherent_partial_polarizer` — transmits all of H and half of the
///   V intensity in a single coherent operator diag(1, 1/sqrt(2));
/// - `incoherent_partial_polarizer` — projects onto H half the time and
///   does nothing the other half: {sqrt(1/2) diag(1,0), sqrt(1/2) I};
/// - `decoherer_HV` — removes H-V coherence: {sqrt(1/2) I, sqrt(1/2) Z}.
pub fn canonical_processes() -> Vec<NamedProcess> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let entries: [(&'static str, Vec<Matrix2<Complex64>>); 5] = [
        (
            "hadamard",
            vec![Matrix2::new(c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0))],
        ),
        (
            "polarizer_H",
            vec![Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))],
        ),
        (
            "coherent_partial_polarizer",
            vec![Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0))],
        ),
        (
            "incoherent_partial_polarizer",
            vec![
                Matrix2::new(c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)),
                Matrix2::new(c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)),
            ],
        ),
        (
            "decoherer_HV",
            vec![
                Matrix2::new(c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)),
                Matrix2::new(c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0)),
            ],
        ),
    ];
    entries
        .into_iter()
        .map(|(name, ops)| NamedProcess {
            name,
            kraus: KrausSet::new(ops).expect("catalog operators are valid"),
        })
        .collect()
}

/// Looks up a catalog process by name.
pub fn canonical_process(name: &str) -> Option<KrausSet> {
    canonical_processes()
        .into_iter()
        .find(|p| p.name == name)
        .map(|p| p.kraus)
}

/// The four probe states used by standard process tomography, in order:
/// H, V, D, R.
pub fn sqpt_inputs() -> [DensityMatrix; 4] {
    [
        DensityMatrix::horizontal(),
        DensityMatrix::vertical(),
        DensityMatrix::diagonal(),
        DensityMatrix::right_circular(),
    ]
}

/// One reconstructed output of a probe state: the renormalized state and
/// its measured survival weight. `weight * rho` is what enters the linear
/// system, so an annihilated probe is entered as weight 0 regardless of
/// the placeholder state.
#[derive(Debug, Clone)]
pub struct WeightedOutput {
    pub rho: DensityMatrix,
    pub weight: f64,
}

/// Standard process tomography: solves the 16x16 linear system relating
/// the process matrix to the four weighted probe outputs, then repairs
/// noise artifacts (Hermitize, clamp negative eigenvalues, rescale to the
/// measured total survival weight, and cap the overall gain at 1).
///
/// Exact on noiseless data, where all repair steps are no-ops.
pub fn sqpt_reconstruct(outputs: &[WeightedOutput; 4]) -> ChiMatrix {
    let sigma = operator_basis();
    let inputs = sqpt_inputs();
    let design = DMatrix::<Complex64>::from_fn(16, 16, |row, col| {
        let (k, a, b) = (row / 4, (row % 4) / 2, row % 2);
        let (i, j) = (col / 4, col % 4);
        (sigma[i] * inputs[k].matrix() * sigma[j])[(a, b)]
    });
    let rhs = DVector::<Complex64>::from_fn(16, |row, _| {
        let (k, a, b) = (row / 4, (row % 4) / 2, row % 2);
        outputs[k].rho.matrix()[(a, b)] * c(outputs[k].weight, 0.0)
    });
    let solution = design
        .lu()
        .solve(&rhs)
        .expect("the fixed probe basis yields a nonsingular design");
    let mut m = Matrix4::from_fn(|i, j| solution[4 * i + j]);
    m = (m + m.adjoint()) * c(0.5, 0.0);

    // Clamp negative eigenvalues to zero.
    let eig = SymmetricEigen::new(m);
    let mut clamped = Matrix4::zeros();
    for k in 0..4 {
        let lambda = eig.eigenvalues[k].max(0.0);
        if lambda > 0.0 {
            let v = eig.eigenvectors.column(k);
            clamped += (v * v.adjoint()) * c(lambda, 0.0);
        }
    }

    // Clamping shifts the predicted survival weights; restore the measured
    // total over the probe inputs, then cap the gain: shot noise can push
    // measured weights above 1, which no physical map reproduces.
    let measured: f64 = outputs.iter().map(|o| o.weight).sum();
    let predicted: f64 = inputs.iter().map(|r| apply_chi_raw(&clamped, r).1).sum();
    if predicted > ANNIHILATION_TOL && measured > 0.0 {
        clamped *= c(measured / predicted, 0.0);
    }
    let gain = max_eigenvalue_2(&kraus_bound(&clamped));
    if gain > 1.0 {
        clamped /= c(gain, 0.0);
    }
    ChiMatrix::new(clamped).expect("projection yields a valid process matrix")
}

/// Result of [`sqpt_end_to_end`]: the reconstructed process matrix plus
/// per-probe diagnostics in probe order (H, V, D, R).
#[derive(Debug, Clone)]
pub struct SqptOutcome {
    pub chi: ChiMatrix,
    /// Measured survival weight of each probe (detected / sent).
    pub input_weights: [f64; 4],
    /// True where a probe was annihilated (or detected nothing), so its
    /// channel row carries no information.
    pub low_confidence: [bool; 4],
}

/// Full simulated process-tomography experiment with explicit counting
/// behavior. For each probe state: apply the process, simulate photon
/// counts at `counts_per_setting` incident photons per analysis setting,
/// reconstruct the output state by maximum likelihood, and estimate the
/// survival weight from the detected fraction; then solve for the process
/// matrix. The four probe branches run in parallel on seeds derived from
/// `seed`, so the result is deterministic.
pub fn sqpt_end_to_end_with(
    k: &KrausSet,
    counts_per_setting: f64,
    counting: &CountingConfig,
    seed: u64,
) -> Result<SqptOutcome> {
    if !(counts_per_setting.is_finite() && counts_per_setting > 0.0) {
        return Err(Error::MeanCounts {
            mean: counts_per_setting,
        });
    }
    let inputs = sqpt_inputs();
    let branches: Vec<(WeightedOutput, bool)> = (0..4usize)
        .into_par_iter()
        .map(|idx| -> Result<(WeightedOutput, bool)> {
            let branch_seed = seed.wrapping_add((idx as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let (raw, weight) = apply_kraus_raw(k, &inputs[idx]);
            if weight < ANNIHILATION_TOL {
                return Ok((annihilated_output(), true));
            }
            let (rho_out, _) = normalize_raw(&raw, weight)?;
            let record =
                simulate_counts_with(&rho_out, counts_per_setting * weight, counting, branch_seed)?;
            match mle_reconstruct(&record) {
                Ok(fit) => {
                    let weight_est = record.normalization() as f64 / counts_per_setting;
                    Ok((
                        WeightedOutput {
                            rho: fit.rho,
                            weight: weight_est,
                        },
                        false,
                    ))
                }
                // Nothing detected in the normalization settings: the
                // probe row is uninformative, same as annihilation.
                Err(Error::EmptyNormalization) => Ok((annihilated_output(), true)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let outputs: [WeightedOutput; 4] = std::array::from_fn(|i| branches[i].0.clone());
    let low_confidence = std::array::from_fn(|i| branches[i].1);
    let input_weights = std::array::from_fn(|i| outputs[i].weight);
    Ok(SqptOutcome {
        chi: sqpt_reconstruct(&outputs),
        input_weights,
        low_confidence,
    })
}

fn annihilated_output() -> WeightedOutput {
    WeightedOutput {
        rho: DensityMatrix::identity_mixed(),
        weight: 0.0,
    }
}

/// [`sqpt_end_to_end_with`] under drift-free Poisson counting.
pub fn sqpt_end_to_end(k: &KrausSet, counts_per_setting: f64, seed: u64) -> Result<SqptOutcome> {
    let counting = CountingConfig {
        drift: DriftModel::none(),
        ..CountingConfig::default()
    };
    sqpt_end_to_end_with(k, counts_per_setting, &counting, seed)
}

/// One mapped mesh point: pure input, renormalized output, and survival
/// weight. Annihilated inputs keep weight ~0 and park the output at the
/// sphere center, where the direction is undefined anyway.
#[derive(Debug, Clone, Copy)]
pub struct SphereSample {
    pub input: PoincareVector,
    pub output: PoincareVector,
    pub weight: f64,
}

/// Image of the pure-state sphere under a process.
#[derive(Debug, Clone)]
pub struct SphereMap {
    pub samples: Vec<SphereSample>,
    pub mesh_resolution: (usize, usize),
}

/// Maps a latitude-longitude grid of pure states (poles on the circular
/// axis) plus the six cardinal points through the process. Resolution is
/// (latitude, longitude) and must be at least 2 x 4.
pub fn sphere_map(k: &KrausSet, res: (usize, usize)) -> Result<SphereMap> {
    let (lat, lon) = res;
    if lat < 2 || lon < 4 {
        return Err(Error::MeshResolution { lat, lon });
    }
    let mut points: Vec<PoincareVector> = Vec::with_capacity(lat * lon + 6);
    for i in 0..lat {
        let polar = std::f64::consts::PI * (i as f64 + 0.5) / lat as f64;
        for j in 0..lon {
            let azimuth = 2.0 * std::f64::consts::PI * j as f64 / lon as f64;
            points.push(PoincareVector::new(
                polar.sin() * azimuth.cos(),
                polar.sin() * azimuth.sin(),
                polar.cos(),
            ));
        }
    }
    for cardinal in [
        PoincareVector::new(1.0, 0.0, 0.0),
        PoincareVector::new(-1.0, 0.0, 0.0),
        PoincareVector::new(0.0, 1.0, 0.0),
        PoincareVector::new(0.0, -1.0, 0.0),
        PoincareVector::new(0.0, 0.0, 1.0),
        PoincareVector::new(0.0, 0.0, -1.0),
    ] {
        points.push(cardinal);
    }
    let samples = points
        .into_iter()
        .map(|input| {
            let rho = rho_from_poincare(&input)?;
            let (raw, weight) = apply_kraus_raw(k, &rho);
            let output = if weight >= ANNIHILATION_TOL {
                let (rho_out, _) = normalize_raw(&raw, weight)?;
                poincare_from_rho(&rho_out)
            } else {
                PoincareVector::new(0.0, 0.0, 0.0)
            };
            Ok(SphereSample {
                input,
                output,
                weight: weight.min(1.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SphereMap {
        samples,
        mesh_resolution: (lat, lon),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{fidelity, trace_distance};
    use crate::testutil::{random_pure, random_rho, rng};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    fn random_kraus(rng: &mut ChaCha8Rng) -> KrausSet {
        let n = rng.random_range(1..=4);
        let mut ops: Vec<Matrix2<Complex64>> = (0..n)
            .map(|_| {
                Matrix2::from_fn(|_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            })
            .collect();
        let mut sum = Matrix2::zeros();
        for op in &ops {
            sum += op.adjoint() * op;
        }
        let scale = rng.random_range(0.3..=1.0) / max_eigenvalue_2(&sum).sqrt();
        for op in &mut ops {
            *op *= c(scale, 0.0);
        }
        KrausSet::new(ops).unwrap()
    }

    fn exact_outputs(k: &KrausSet) -> [WeightedOutput; 4] {
        std::array::from_fn(|i| {
            let (raw, weight) = apply_kraus_raw(k, &sqpt_inputs()[i]);
            if weight < ANNIHILATION_TOL {
                annihilated_output()
            } else {
                let (rho, _) = normalize_raw(&raw, weight).unwrap();
                WeightedOutput { rho, weight }
            }
        })
    }

    #[test]
    fn operator_basis_is_orthonormal_under_half_trace() {
        let sigma = operator_basis();
        for i in 0..4 {
            for j in 0..4 {
                let inner = (sigma[i].adjoint() * sigma[j]).trace();
                let want = if i == j { 2.0 } else { 0.0 };
                assert_relative_eq!(inner.re, want, epsilon = 1e-15);
                assert_relative_eq!(inner.im, 0.0, epsilon = 1e-15);
            }
        }
        // The three non-identity elements, frozen entry by entry.
        assert_eq!(sigma[1][(0, 1)], c(1.0, 0.0));
        assert_eq!(sigma[2][(0, 1)], c(0.0, -1.0));
        assert_eq!(sigma[2][(1, 0)], c(0.0, 1.0));
        assert_eq!(sigma[3][(1, 1)], c(-1.0, 0.0));
    }

    #[test]
    fn kraus_set_validation() {
        assert!(matches!(
            KrausSet::new(vec![]).unwrap_err(),
            Error::EmptyKrausSet
        ));
        let too_big = Matrix2::identity() * c(1.1, 0.0);
        assert!(matches!(
            KrausSet::single(too_big).unwrap_err(),
            Error::KrausGain { .. }
        ));
        // Trace-decreasing sets are fine.
        KrausSet::single(Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))).unwrap();
    }

    #[test]
    fn apply_kraus_identity_and_annihilation() {
        let identity = KrausSet::single(Matrix2::identity()).unwrap();
        let mut rng = rng(401);
        for _ in 0..20 {
            let (rho, _) = random_rho(&mut rng);
            let (out, weight) = apply_kraus(&identity, &rho).unwrap();
            assert!(trace_distance(&out, &rho) < 1e-12);
            assert_relative_eq!(weight, 1.0, epsilon = 1e-12);
        }
        let polarizer = canonical_process("polarizer_H").unwrap();
        assert!(matches!(
            apply_kraus(&polarizer, &DensityMatrix::vertical()).unwrap_err(),
            Error::StateAnnihilated { .. }
        ));
    }

    #[test]
    fn decoherer_flattens_diagonal_to_mixed() {
        let decoherer = canonical_process("decoherer_HV").unwrap();
        let (out, weight) = apply_kraus(&decoherer, &DensityMatrix::diagonal()).unwrap();
        assert!(trace_distance(&out, &DensityMatrix::identity_mixed()) < 1e-12);
        assert_relative_eq!(weight, 1.0, epsilon = 1e-12);
        // Circular input collapses the same way.
        let (out, _) = apply_kraus(&decoherer, &DensityMatrix::right_circular()).unwrap();
        assert!(trace_distance(&out, &DensityMatrix::identity_mixed()) < 1e-12);
    }

    #[test]
    fn hadamard_swaps_h_and_d() {
        let hadamard = canonical_process("hadamard").unwrap();
        let (out, weight) = apply_kraus(&hadamard, &DensityMatrix::horizontal()).unwrap();
        assert!(fidelity(&out, &DensityMatrix::diagonal()) >= 1.0 - 1e-12);
        assert_relative_eq!(weight, 1.0, epsilon = 1e-12);
        let (out, _) = apply_kraus(&hadamard, &DensityMatrix::diagonal()).unwrap();
        assert!(fidelity(&out, &DensityMatrix::horizontal()) >= 1.0 - 1e-12);
    }

    #[test]
    fn chi_from_kraus_catalog_values() {
        let identity = KrausSet::single(Matrix2::identity()).unwrap();
        let chi = chi_from_kraus(&identity).matrix();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == 0 && j == 0 { 1.0 } else { 0.0 };
                assert_relative_eq!(chi[(i, j)].re, want, epsilon = 1e-15);
                assert_relative_eq!(chi[(i, j)].im, 0.0, epsilon = 1e-15);
            }
        }

        let chi = chi_from_kraus(&canonical_process("hadamard").unwrap()).matrix();
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i == 1 || i == 3) && (j == 1 || j == 3) {
                    0.5
                } else {
                    0.0
                };
                assert_relative_eq!(chi[(i, j)].re, want, epsilon = 1e-15);
                assert_relative_eq!(chi[(i, j)].im, 0.0, epsilon = 1e-15);
            }
        }

        let chi = chi_from_kraus(&canonical_process("polarizer_H").unwrap()).matrix();
        for i in 0..4 {
            for j in 0..4 {
                let want = if (i == 0 || i == 3) && (j == 0 || j == 3) {
                    0.25
                } else {
                    0.0
                };
                assert_relative_eq!(chi[(i, j)].re, want, epsilon = 1e-15);
                assert_relative_eq!(chi[(i, j)].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn chi_matrix_validation() {
        let mut skew = Matrix4::<Complex64>::zeros();
        skew[(0, 0)] = c(1.0, 0.0);
        skew[(0, 1)] = c(0.5, 0.0);
        assert!(matches!(
            ChiMatrix::new(skew).unwrap_err(),
            Error::NotHermitian { .. }
        ));

        let mut indefinite = Matrix4::<Complex64>::zeros();
        indefinite[(0, 0)] = c(1.0, 0.0);
        indefinite[(1, 1)] = c(-1e-3, 0.0);
        assert!(matches!(
            ChiMatrix::new(indefinite).unwrap_err(),
            Error::NotPositive { .. }
        ));

        let mut amplifying = Matrix4::<Complex64>::zeros();
        amplifying[(0, 0)] = c(1.2, 0.0);
        assert!(matches!(
            ChiMatrix::new(amplifying).unwrap_err(),
            Error::KrausGain { .. }
        ));
    }

    #[test]
    fn kraus_from_chi_identity_and_hadamard() {
        let mut diag = Matrix4::<Complex64>::zeros();
        diag[(0, 0)] = c(1.0, 0.0);
        let set = kraus_from_chi(&ChiMatrix::new(diag).unwrap()).unwrap();
        assert_eq!(set.ops().len(), 1);
        assert!((set.ops()[0] - Matrix2::identity()).norm() < 1e-9);

        let hadamard = canonical_process("hadamard").unwrap();
        let set = kraus_from_chi(&chi_from_kraus(&hadamard)).unwrap();
        assert_eq!(set.ops().len(), 1);
        // Equal action on all cardinals (operator defined up to phase).
        for rho in sqpt_inputs() {
            let (a, wa) = apply_kraus_raw(&hadamard, &rho);
            let (b, wb) = apply_kraus_raw(&set, &rho);
            assert!((a - b).norm() < 1e-10);
            assert_relative_eq!(wa, wb, epsilon = 1e-10);
        }
    }

    #[test]
    fn kraus_from_chi_incoherent_polarizer_acts_identically() {
        let original = canonical_process("incoherent_partial_polarizer").unwrap();
        let set = kraus_from_chi(&chi_from_kraus(&original)).unwrap();
        assert_eq!(set.ops().len(), 2);
        let cardinals = [
            DensityMatrix::horizontal(),
            DensityMatrix::vertical(),
            DensityMatrix::diagonal(),
            DensityMatrix::antidiagonal(),
            DensityMatrix::right_circular(),
            DensityMatrix::left_circular(),
        ];
        for rho in cardinals {
            let (a, _) = apply_kraus_raw(&original, &rho);
            let (b, _) = apply_kraus_raw(&set, &rho);
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn chi_kraus_round_trip_on_random_processes() {
        let mut rng = rng(409);
        for _ in 0..1000 {
            let k = random_kraus(&mut rng);
            let chi = chi_from_kraus(&k);
            let back = chi_from_kraus(&kraus_from_chi(&chi).unwrap());
            let err = (chi.matrix() - back.matrix()).norm();
            assert!(err < 1e-9, "round-trip Frobenius error {err}");
        }
    }

    #[test]
    fn kraus_and_chi_actions_agree() {
        let mut rng = rng(419);
        for _ in 0..100 {
            let k = random_kraus(&mut rng);
            let chi = chi_from_kraus(&k);
            let (rho, _) = random_rho(&mut rng);
            let (a, wa) = apply_kraus_raw(&k, &rho);
            let (b, wb) = apply_chi_raw(&chi.matrix(), &rho);
            assert!((a - b).norm() < 1e-10);
            assert_relative_eq!(wa, wb, epsilon = 1e-10);
        }
    }

    #[test]
    fn kraus_from_chi_operators_are_orthogonal() {
        let mut rng = rng(421);
        for _ in 0..100 {
            let chi = chi_from_kraus(&random_kraus(&mut rng));
            let set = kraus_from_chi(&chi).unwrap();
            for a in 0..set.ops().len() {
                for b in 0..set.ops().len() {
                    if a != b {
                        let inner = (set.ops()[a].adjoint() * set.ops()[b]).trace().norm();
                        assert!(inner < 1e-9, "overlap {inner}");
                    }
                }
            }
        }
    }

    #[test]
    fn catalog_contents() {
        let names: Vec<&str> = canonical_processes().iter().map(|p| p.name).collect();
        assert_eq!(
            names,
            [
                "hadamard",
                "polarizer_H",
                "coherent_partial_polarizer",
                "incoherent_partial_polarizer",
                "decoherer_HV"
            ]
        );
        // Hadamard is unitary with unit-magnitude determinant.
        let h = canonical_process("hadamard").unwrap();
        assert_eq!(h.ops().len(), 1);
        let op = h.ops()[0];
        assert_relative_eq!(op.determinant().norm(), 1.0, epsilon = 1e-12);
        assert!((op.adjoint() * op - Matrix2::identity()).norm() < 1e-12);
        // Incoherent partial polarizer has the stated two operators.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let ops = canonical_process("incoherent_partial_polarizer").unwrap();
        assert!((ops.ops()[0] - Matrix2::new(c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)))
            .norm()
            .abs()
            < 1e-15);
        assert!((ops.ops()[1] - Matrix2::identity() * c(s, 0.0)).norm() < 1e-15);
        // Coherent partial polarizer passes half the V intensity.
        let coherent = canonical_process("coherent_partial_polarizer").unwrap();
        let (out, weight) = apply_kraus(&coherent, &DensityMatrix::vertical()).unwrap();
        assert_relative_eq!(weight, 0.5, epsilon = 1e-12);
        assert!(fidelity(&out, &DensityMatrix::vertical()) >= 1.0 - 1e-12);
        assert!(canonical_process("unknown").is_none());
    }

    #[test]
    fn sqpt_exact_identity_hadamard_and_partial_polarizer() {
        let identity = KrausSet::single(Matrix2::identity()).unwrap();
        let chi = sqpt_reconstruct(&exact_outputs(&identity));
        assert!((chi.matrix() - chi_from_kraus(&identity).matrix()).norm() < 1e-9);

        let hadamard = canonical_process("hadamard").unwrap();
        let chi = sqpt_reconstruct(&exact_outputs(&hadamard));
        assert!((chi.matrix() - chi_from_kraus(&hadamard).matrix()).norm() < 1e-9);

        let coherent = canonical_process("coherent_partial_polarizer").unwrap();
        let chi = sqpt_reconstruct(&exact_outputs(&coherent));
        assert!((chi.matrix() - chi_from_kraus(&coherent).matrix()).norm() < 1e-9);
    }

    #[test]
    fn sqpt_exact_on_random_processes() {
        let mut rng = rng(431);
        for _ in 0..50 {
            let k = random_kraus(&mut rng);
            let chi = sqpt_reconstruct(&exact_outputs(&k));
            assert!((chi.matrix() - chi_from_kraus(&k).matrix()).norm() < 1e-8);
        }
    }

    /// Real-linear design analysis: the probe outputs pin down all 16
    /// Hermitian parameters; restricted to trace-preserving processes the
    /// recoverable count is 12, and the per-probe survival weights add 3
    /// more once the global scale is fixed — 15 in total.
    #[test]
    fn sqpt_design_recovers_twelve_plus_three_parameters() {
        let sigma = operator_basis();
        let inputs = sqpt_inputs();
        // Basis of Hermitian 4x4 matrices, 16 real parameters.
        let mut basis: Vec<Matrix4<Complex64>> = Vec::with_capacity(16);
        for i in 0..4 {
            let mut m = Matrix4::<Complex64>::zeros();
            m[(i, i)] = c(1.0, 0.0);
            basis.push(m);
        }
        for i in 0..4 {
            for j in (i + 1)..4 {
                let mut re = Matrix4::<Complex64>::zeros();
                re[(i, j)] = c(1.0, 0.0);
                re[(j, i)] = c(1.0, 0.0);
                basis.push(re);
                let mut im = Matrix4::<Complex64>::zeros();
                im[(i, j)] = c(0.0, 1.0);
                im[(j, i)] = c(0.0, -1.0);
                basis.push(im);
            }
        }

        // Design: chi parameters -> real parts of the four raw outputs.
        let design = DMatrix::<f64>::from_fn(16, 16, |row, col| {
            let (k, slot) = (row / 4, row % 4);
            let mut raw = Matrix2::<Complex64>::zeros();
            for i in 0..4 {
                for j in 0..4 {
                    raw += sigma[i] * inputs[k].matrix() * sigma[j] * basis[col][(i, j)];
                }
            }
            match slot {
                0 => raw[(0, 0)].re,
                1 => raw[(1, 1)].re,
                2 => raw[(0, 1)].re,
                _ => raw[(0, 1)].im,
            }
        });
        let rank = |m: &DMatrix<f64>| {
            let svd = m.clone().svd(false, false);
            let max = svd.singular_values.max();
            svd.singular_values.iter().filter(|s| **s > 1e-9 * max).count()
        };
        assert_eq!(rank(&design), 16);

        // Trace-preservation constraint map (4 real components).
        let constraint = DMatrix::<f64>::from_fn(4, 16, |row, col| {
            let mut bound = Matrix2::<Complex64>::zeros();
            for i in 0..4 {
                for j in 0..4 {
                    bound += sigma[j].adjoint() * sigma[i] * basis[col][(i, j)];
                }
            }
            match row {
                0 => bound[(0, 0)].re,
                1 => bound[(1, 1)].re,
                2 => bound[(0, 1)].re,
                _ => bound[(0, 1)].im,
            }
        });
        // Null space of the constraint via its Gram matrix: eigenvectors
        // with (near-)zero eigenvalue span the trace-preserving tangent.
        let gram = constraint.transpose() * &constraint;
        let eig = nalgebra::SymmetricEigen::new(gram);
        let max_ev = eig.eigenvalues.max();
        let null_cols: Vec<usize> = (0..16)
            .filter(|i| eig.eigenvalues[*i] <= 1e-9 * max_ev)
            .collect();
        let tp_dim = null_cols.len();
        assert_eq!(tp_dim, 12);
        let null = DMatrix::<f64>::from_fn(16, tp_dim, |r, c_| eig.eigenvectors[(r, null_cols[c_])]);
        let restricted = &design * &null;
        assert_eq!(rank(&restricted), 12);

        // Survival weights of the 4 probes minus one global scale.
        let weight_parameters = 3;
        assert_eq!(tp_dim + weight_parameters, 15);
    }

    #[test]
    fn sqpt_end_to_end_identity_noiseless() {
        let identity = KrausSet::single(Matrix2::identity()).unwrap();
        let counting = CountingConfig {
            drift: DriftModel::none(),
            exact_expectation: true,
            ..CountingConfig::default()
        };
        let outcome = sqpt_end_to_end_with(&identity, 1e6, &counting, 1).unwrap();
        let mut want = Matrix4::<Complex64>::zeros();
        want[(0, 0)] = c(1.0, 0.0);
        let err = (outcome.chi.matrix() - want).norm();
        assert!(err <= 1e-8, "Frobenius error {err}");
        assert_eq!(outcome.low_confidence, [false; 4]);
    }

    #[test]
    fn sqpt_end_to_end_hadamard_with_noise() {
        let hadamard = canonical_process("hadamard").unwrap();
        let analytic = chi_from_kraus(&hadamard).matrix();
        for seed in [7, 19] {
            let outcome = sqpt_end_to_end(&hadamard, 1e5, seed).unwrap();
            let err = (outcome.chi.matrix() - analytic).norm();
            assert!(err <= 0.02, "seed {seed}: Frobenius error {err}");
        }
    }

    #[test]
    fn sqpt_end_to_end_decoherer_maps_diagonal_to_mixed() {
        let decoherer = canonical_process("decoherer_HV").unwrap();
        let outcome = sqpt_end_to_end(&decoherer, 1e5, 23).unwrap();
        let (out, _) = apply_chi(&outcome.chi, &DensityMatrix::diagonal()).unwrap();
        let dist = trace_distance(&out, &DensityMatrix::identity_mixed());
        assert!(dist <= 0.02, "trace distance {dist}");
    }

    #[test]
    fn sqpt_end_to_end_flags_annihilated_probe() {
        let polarizer = canonical_process("polarizer_H").unwrap();
        let outcome = sqpt_end_to_end(&polarizer, 1e5, 29).unwrap();
        assert_eq!(outcome.low_confidence, [false, true, false, false]);
        assert_eq!(outcome.input_weights[1], 0.0);
        // The V row carries no signal, which is itself the right answer
        // for a total polarizer; the reconstruction stays close.
        let analytic = chi_from_kraus(&polarizer).matrix();
        let err = (outcome.chi.matrix() - analytic).norm();
        assert!(err <= 0.02, "Frobenius error {err}");
    }

    #[test]
    fn sphere_map_identity_polarizer_and_decoherer() {
        let identity = KrausSet::single(Matrix2::identity()).unwrap();
        let map = sphere_map(&identity, (4, 8)).unwrap();
        assert_eq!(map.samples.len(), 4 * 8 + 6);
        for s in &map.samples {
            assert!((s.output.to_array()[0] - s.input.to_array()[0]).abs() < 1e-12);
            assert!((s.output.to_array()[1] - s.input.to_array()[1]).abs() < 1e-12);
            assert!((s.output.to_array()[2] - s.input.to_array()[2]).abs() < 1e-12);
            assert_relative_eq!(s.weight, 1.0, epsilon = 1e-12);
        }

        let polarizer = canonical_process("polarizer_H").unwrap();
        let map = sphere_map(&polarizer, DEFAULT_MESH_RESOLUTION).unwrap();
        for s in &map.samples {
            assert!(s.output.norm() <= 1.0 + 1e-9);
            if s.weight > ANNIHILATION_TOL {
                assert!((s.output.r_h - 1.0).abs() < 1e-9);
                assert!(s.output.r_d.abs() < 1e-9);
                assert!(s.output.r_r.abs() < 1e-9);
            }
        }

        let decoherer = canonical_process("decoherer_HV").unwrap();
        let map = sphere_map(&decoherer, DEFAULT_MESH_RESOLUTION).unwrap();
        for s in &map.samples {
            assert!((s.output.r_h - s.input.r_h).abs() < 1e-12);
            assert!(s.output.r_d.abs() < 1e-12);
            assert!(s.output.r_r.abs() < 1e-12);
        }

        assert!(matches!(
            sphere_map(&identity, (1, 3)).unwrap_err(),
            Error::MeshResolution { lat: 1, lon: 3 }
        ));
    }

    #[test]
    fn unitary_mesh_preserves_purity_and_decoherers_shrink_coherence() {
        let hadamard = canonical_process("hadamard").unwrap();
        let map = sphere_map(&hadamard, DEFAULT_MESH_RESOLUTION).unwrap();
        for s in &map.samples {
            assert!((s.output.norm() - 1.0).abs() < 1e-9);
            assert_relative_eq!(s.weight, 1.0, epsilon = 1e-9);
        }

        // Partial decoherer: coherence with the H-V eigenbasis shrinks.
        for p in [0.6_f64, 0.8, 0.95] {
            let set = KrausSet::new(vec![
                Matrix2::identity() * c(p.sqrt(), 0.0),
                Matrix2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
                    * c((1.0 - p).sqrt(), 0.0),
            ])
            .unwrap();
            let map = sphere_map(&set, (10, 20)).unwrap();
            for s in &map.samples {
                let before = s.input.r_d.abs() + s.input.r_r.abs();
                let after = s.output.r_d.abs() + s.output.r_r.abs();
                assert!(after <= before + 1e-12);
            }
        }
    }

    #[test]
    fn chi_actions_on_random_pure_states_stay_physical() {
        let mut rng = rng(433);
        for _ in 0..50 {
            let k = random_kraus(&mut rng);
            let chi = chi_from_kraus(&k);
            let (rho, _) = random_pure(&mut rng);
            match apply_chi(&chi, &rho) {
                Ok((out, weight)) => {
                    assert!((0.0..=1.0).contains(&weight));
                    assert!(poincare_from_rho(&out).norm() <= 1.0 + 1e-9);
                }
                Err(Error::StateAnnihilated { .. }) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }
}
