//! State reconstruction from count records.
//!
//! Linear inversion reads the Poincare coordinates straight off the
//! normalized counts and may land outside the physical ball. The
//! maximum-likelihood route parametrizes candidate states as
//!
//! ```text
//! T(t) = [[t1, 0], [t3 + i t4, t2]],    rho(t) = T^dag T / Tr(T^dag T),
//! ```
//!
//! which is a valid state for every finite nonzero t, and minimizes
//!
//! ```text
//! L(t) = sum_nu [N p_nu(t) - N_nu]^2 / (2 N p_nu(t)),    N = N0 + N1,
//! ```
//!
//! over t in R^4 with a simplex search started from the inverted counts.

use crate::counting::CountRecord;
use crate::error::{Error, Result};
use crate::nelder_mead::{self, Options};
use crate::state::{poincare_from_rho, DensityMatrix, PoincareVector};

/// Floor (in counts) for the per-setting denominator of the likelihood,
/// so a vanishing expectation with nonzero observed counts stays finite.
pub const LIKELIHOOD_FLOOR: f64 = 0.5;

/// Cholesky-like parameters of the physical-state parametrization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TParams {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub t4: f64,
}

impl TParams {
    pub const fn new(t1: f64, t2: f64, t3: f64, t4: f64) -> Self {
        Self { t1, t2, t3, t4 }
    }

    pub const fn to_array(self) -> [f64; 4] {
        [self.t1, self.t2, self.t3, self.t4]
    }

    pub const fn from_array([t1, t2, t3, t4]: [f64; 4]) -> Self {
        Self { t1, t2, t3, t4 }
    }
}

/// Outcome of [`mle_reconstruct`].
#[derive(Debug, Clone)]
pub struct TomographyResult {
    pub rho: DensityMatrix,
    pub t: TParams,
    /// Likelihood at the returned state; never above the starting value.
    pub residual_likelihood: f64,
    /// Objective evaluations spent across the search (restart included).
    pub iterations: usize,
    pub converged: bool,
}

/// Direct inversion r_H = 2 N1/N - 1, r_D = 2 N2/N - 1, r_R = 2 N3/N - 1
/// with N = N0 + N1. Deliberately unclamped: noisy records may invert to
/// |r| > 1, which is what the likelihood fit then repairs.
pub fn linear_inversion(c: &CountRecord) -> Result<PoincareVector> {
    let n = c.normalization();
    if n == 0 {
        return Err(Error::EmptyNormalization);
    }
    let n = n as f64;
    Ok(PoincareVector::new(
        2.0 * c.n[1] as f64 / n - 1.0,
        2.0 * c.n[2] as f64 / n - 1.0,
        2.0 * c.n[3] as f64 / n - 1.0,
    ))
}

/// rho(t) = T^dag T / Tr(T^dag T). Hermitian, positive semidefinite and
/// unit-trace for every finite t; all-zero t has no direction and errors.
pub fn rho_from_t(t: &TParams) -> Result<DensityMatrix> {
    let trace = t.t1 * t.t1 + t.t2 * t.t2 + t.t3 * t.t3 + t.t4 * t.t4;
    if !(trace > 0.0 && trace.is_finite()) {
        return Err(Error::DegenerateTParams);
    }
    let m00 = t.t1 * t.t1 + t.t3 * t.t3 + t.t4 * t.t4;
    let m11 = t.t2 * t.t2;
    let c = num_complex::Complex64::new(t.t2 * t.t3, -t.t2 * t.t4);
    Ok(DensityMatrix::from_hermitian_parts(
        m00 / trace,
        m11 / trace,
        c / trace,
    ))
}

/// Inverts the linear-inversion state into starting t values.
///
/// With s = sqrt(2 (1 - r_H)):
/// t2 = s/2, t3 = r_D/s, t4 = -r_R/s, and t1 is the square root of the
/// Schur complement (1 + r_H)/2 - (r_D^2 + r_R^2)/(2 (1 - r_H)).
/// Near r_H = 1 the formulas are singular, so r_H is capped at 1 - 1e-6;
/// an unphysical inversion can drive the Schur complement negative, in
/// which case it is clamped to zero. Both adjustments only move the
/// starting point, never the fitted result.
pub fn t_start_from_counts(c: &CountRecord) -> Result<TParams> {
    let r = linear_inversion(c)?;
    let r_h = r.r_h.min(1.0 - 1e-6);
    let s = (2.0 * (1.0 - r_h)).sqrt();
    let schur = (1.0 + r_h) / 2.0 - (r.r_d * r.r_d + r.r_r * r.r_r) / (2.0 * (1.0 - r_h));
    Ok(TParams::new(
        schur.max(0.0).sqrt(),
        s / 2.0,
        r.r_d / s,
        -r.r_r / s,
    ))
}

/// Analysis-setting probabilities (V, H, D, R) of a state.
fn probabilities(rho: &DensityMatrix) -> [f64; 4] {
    let r = poincare_from_rho(rho);
    [
        (1.0 - r.r_h) / 2.0,
        (1.0 + r.r_h) / 2.0,
        (1.0 + r.r_d) / 2.0,
        (1.0 + r.r_r) / 2.0,
    ]
}

fn likelihood_of_probs(c: &CountRecord, p: &[f64; 4]) -> f64 {
    let n = c.normalization() as f64;
    let mut sum = 0.0;
    for (p_nu, n_nu) in p.iter().zip(c.n) {
        let expectation = n * p_nu;
        let miss = expectation - n_nu as f64;
        sum += miss * miss / (2.0 * expectation.max(LIKELIHOOD_FLOOR));
    }
    sum
}

/// Likelihood of the record under the state rho(t). Returns +infinity for
/// degenerate (all-zero) t so optimizers simply step away from it.
pub fn likelihood(c: &CountRecord, t: &TParams) -> f64 {
    match rho_from_t(t) {
        Ok(rho) => likelihood_of_probs(c, &probabilities(&rho)),
        Err(_) => f64::INFINITY,
    }
}

/// Likelihood of the record under an explicit state.
pub fn likelihood_of_state(c: &CountRecord, rho: &DensityMatrix) -> f64 {
    likelihood_of_probs(c, &probabilities(rho))
}

/// Maximum-likelihood reconstruction: simplex descent over t from the
/// inverted starting point (tolerance 1e-10 on the likelihood spread,
/// 20,000-evaluation cap, one jittered restart if the cap binds).
pub fn mle_reconstruct(c: &CountRecord) -> Result<TomographyResult> {
    let start = t_start_from_counts(c)?;
    let objective = |x: &[f64]| likelihood(c, &TParams::new(x[0], x[1], x[2], x[3]));
    let opts = Options {
        tolerance: 1e-10,
        max_evaluations: 20_000,
        initial_step: 0.1,
    };
    let mut best = nelder_mead::minimize(objective, &start.to_array(), &opts);
    let mut iterations = best.evaluations;
    if !best.converged {
        let jittered: Vec<f64> = best.x.iter().map(|v| v + 1e-3).collect();
        let retry = nelder_mead::minimize(objective, &jittered, &opts);
        iterations += retry.evaluations;
        if retry.fx < best.fx {
            let converged = retry.converged;
            best = retry;
            best.converged = converged;
        }
    }
    let t = TParams::new(best.x[0], best.x[1], best.x[2], best.x[3]);
    // A finite likelihood implies nondegenerate t.
    let rho = rho_from_t(&t)?;
    Ok(TomographyResult {
        rho,
        t,
        residual_likelihood: best.fx,
        iterations,
        converged: best.converged,
    })
}
