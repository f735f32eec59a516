//! Derivative-free simplex minimizer (Nelder-Mead).
//!
//! Small, deterministic implementation with the standard reflect/expand/
//! contract/shrink coefficients (1, 2, 1/2, 1/2). Convergence is declared
//! when the spread of objective values across the simplex drops to the
//! requested tolerance; the evaluation budget bounds runtime on hard
//! objectives. Objectives may return +infinity to veto a region (NaN is
//! ordered above +infinity and is therefore also rejected).

/// Stopping rules for [`minimize`].
#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Stop once max(f) - min(f) over the simplex is at or below this.
    pub tolerance: f64,
    /// Hard cap on objective evaluations (initial simplex included).
    pub max_evaluations: usize,
    /// Offset added to each coordinate to form the initial simplex.
    pub initial_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_evaluations: 20_000,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub x: Vec<f64>,
    pub fx: f64,
    pub evaluations: usize,
    pub converged: bool,
}

pub fn minimize<F>(mut f: F, x0: &[f64], opts: &Options) -> MinimizeResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n > 0, "cannot minimize over zero dimensions");
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        f(x)
    };

    // Initial simplex: x0 plus one step along each coordinate.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let fx0 = eval(x0, &mut evaluations);
    simplex.push((x0.to_vec(), fx0));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += opts.initial_step;
        let fx = eval(&x, &mut evaluations);
        simplex.push((x, fx));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread <= opts.tolerance && spread.is_finite() {
            converged = true;
            break;
        }
        if evaluations >= opts.max_evaluations {
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for (x, _) in simplex.iter().take(n) {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].clone();
        let blend = |a: f64| -> Vec<f64> {
            // Point c + a (c - x_worst).
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + a * (c - w))
                .collect()
        };

        let reflected = blend(1.0);
        let fr = eval(&reflected, &mut evaluations);
        if fr < simplex[0].1 {
            let expanded = blend(2.0);
            let fe = eval(&expanded, &mut evaluations);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let contracted = if fr < worst.1 { blend(0.5) } else { blend(-0.5) };
        let fc = eval(&contracted, &mut evaluations);
        if fc < fr.min(worst.1) {
            simplex[n] = (contracted, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        for (x, fx) in simplex.iter_mut().skip(1) {
            for (xi, bi) in x.iter_mut().zip(&best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *fx = eval(x, &mut evaluations);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    MinimizeResult {
        x,
        fx,
        evaluations,
        converged,
    }
}
