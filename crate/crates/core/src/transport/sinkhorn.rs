//! Entropic optimal transport in the log domain.
//!
//! Dual potentials `f`, `g` are updated with log-sum-exp so small
//! regularization does not underflow. The regularization is annealed
//! geometrically from the cost diameter down to the target value, warm
//! starting the potentials at each step, and the final plan is projected onto
//! the feasible polytope so both marginals hold to rounding error.

use super::{check_shape, CostMatrix, Coupling, Marginal, TransportError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinkhornParams {
    pub epsilon: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl SinkhornParams {
    pub const DEFAULT_MAX_ITER: usize = 2000;
    pub const DEFAULT_TOL: f64 = 1e-6;
    /// Default regularization as a fraction of the mean cost.
    pub const DEFAULT_RELATIVE_EPSILON: f64 = 0.01;

    pub fn new(epsilon: f64) -> Self {
        SinkhornParams {
            epsilon,
            max_iter: Self::DEFAULT_MAX_ITER,
            tol: Self::DEFAULT_TOL,
        }
    }

    /// Default parameters with `epsilon = 0.01 × mean(cost)`.
    pub fn relative_to(cost: &CostMatrix) -> Self {
        Self::new(relative_epsilon(cost, Self::DEFAULT_RELATIVE_EPSILON))
    }
}

/// `fraction × mean(cost)`, or `fraction` itself when all costs are zero.
pub(crate) fn relative_epsilon(cost: &CostMatrix, fraction: f64) -> f64 {
    let mean = cost.mean();
    if mean > 0.0 {
        fraction * mean
    } else {
        fraction
    }
}

const ANNEAL_FACTOR: f64 = 0.5;

pub fn sinkhorn(
    cost: &CostMatrix,
    mu: &Marginal,
    nu: &Marginal,
    params: &SinkhornParams,
) -> Result<Coupling, TransportError> {
    check_shape(cost, mu, nu)?;
    let eps = params.epsilon;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(TransportError::InvalidEpsilon(eps));
    }
    if !(params.tol > 0.0 && params.tol.is_finite()) {
        return Err(TransportError::InvalidTolerance(params.tol));
    }

    let (n, m) = (cost.rows(), cost.cols());
    let log_mu: Vec<f64> = mu.weights().iter().map(|w| w.ln()).collect();
    let log_nu: Vec<f64> = nu.weights().iter().map(|w| w.ln()).collect();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    let mut scratch = vec![0.0; n.max(m)];

    let mut current = cost.max().max(eps);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.max_iter {
        let at_target = current <= eps;
        let prev_f = f.clone();

        // f_i = ε log μ_i − ε LSE_j((g_j − C_ij)/ε)
        for i in 0..n {
            let row = cost.row(i);
            for j in 0..m {
                scratch[j] = (g[j] - row[j]) / current;
            }
            f[i] = current * (log_mu[i] - log_sum_exp(&scratch[..m]));
        }

        // The f update rescales row sums of the previous plan by
        // exp((f_old − f_new)/ε); a scaling of one means rows already match.
        if at_target && iterations > 0 {
            let violation = (0..n)
                .filter(|&i| mu.weights()[i] > 0.0)
                .map(|i| (mu.weights()[i] * (((prev_f[i] - f[i]) / current).exp() - 1.0)).abs())
                .fold(0.0, f64::max);
            if !violation.is_finite() {
                return Err(TransportError::NumericalFailure(iterations));
            }
            if violation <= params.tol {
                f = prev_f;
                converged = true;
                break;
            }
        }

        // g_j = ε log ν_j − ε LSE_i((f_i − C_ij)/ε)
        for j in 0..m {
            for i in 0..n {
                scratch[i] = (f[i] - cost.get(i, j)) / current;
            }
            g[j] = current * (log_nu[j] - log_sum_exp(&scratch[..n]));
        }
        iterations += 1;

        if f.iter().chain(&g).any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(TransportError::NumericalFailure(iterations));
        }
        if !at_target {
            current = (current * ANNEAL_FACTOR).max(eps);
        }
    }

    let mut plan = Vec::with_capacity(n * m);
    for (i, fi) in f.iter().enumerate() {
        plan.extend(g.iter().zip(cost.row(i)).map(|(gj, c)| ((fi + gj - c) / eps).exp()));
    }
    round_to_feasible(&mut plan, n, m, mu.weights(), nu.weights());
    if plan.iter().any(|v| !v.is_finite()) {
        return Err(TransportError::NumericalFailure(iterations));
    }
    Ok(Coupling::from_plan(cost, plan, iterations, converged))
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Scales rows and columns down to their targets, then redistributes the
/// missing mass as a rank-one correction. The result has row sums `mu` and
/// column sums `nu` up to floating-point rounding.
fn round_to_feasible(plan: &mut [f64], n: usize, m: usize, mu: &[f64], nu: &[f64]) {
    for i in 0..n {
        let row = &mut plan[i * m..(i + 1) * m];
        let sum: f64 = row.iter().sum();
        if sum > mu[i] {
            let scale = mu[i] / sum;
            row.iter_mut().for_each(|v| *v *= scale);
        }
    }
    let mut col_sums = vec![0.0; m];
    for i in 0..n {
        for (s, v) in col_sums.iter_mut().zip(&plan[i * m..(i + 1) * m]) {
            *s += v;
        }
    }
    let col_scale: Vec<f64> = col_sums
        .iter()
        .zip(nu)
        .map(|(&s, &t)| if s > t { t / s } else { 1.0 })
        .collect();
    for i in 0..n {
        for (v, s) in plan[i * m..(i + 1) * m].iter_mut().zip(&col_scale) {
            *v *= s;
        }
    }

    let row_err: Vec<f64> = (0..n)
        .map(|i| (mu[i] - plan[i * m..(i + 1) * m].iter().sum::<f64>()).max(0.0))
        .collect();
    let mut col_err = nu.to_vec();
    for i in 0..n {
        for (e, v) in col_err.iter_mut().zip(&plan[i * m..(i + 1) * m]) {
            *e -= v;
        }
    }
    col_err.iter_mut().for_each(|e| *e = e.max(0.0));
    let total: f64 = row_err.iter().sum();
    if total > 0.0 {
        for i in 0..n {
            for j in 0..m {
                plan[i * m + j] += row_err[i] * col_err[j] / total;
            }
        }
    }
}
