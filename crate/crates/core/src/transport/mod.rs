//! Discrete optimal transport between two weighted point sets.
//!
//! The entropic solver ([`sinkhorn`]) is what the matching pipeline runs on
//! large problems. [`exact_ot`] solves the unregularized linear program on
//! small problems and serves both as a test oracle and as the solver for the
//! 3×3 and context-sized sub-problems in refinement.

mod cost;
mod exact;
mod marginal;
mod sinkhorn;

pub(crate) use cost::distance as euclid;
pub use cost::{euclidean_cost, percentile};
pub use exact::{exact_ot, EXACT_SIZE_GUARD};
pub use marginal::{inverse_min_distance_marginal, uniform_marginal, Side, MIN_DISTANCE_FLOOR};
pub use sinkhorn::{sinkhorn, SinkhornParams};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("empty point set")]
    Empty,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cost matrix is {rows}x{cols} but marginals have lengths {mu} and {nu}")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        mu: usize,
        nu: usize,
    },
    #[error("cost entry ({row}, {col}) = {value} is negative or not finite")]
    InvalidCost { row: usize, col: usize, value: f64 },
    #[error("marginal weights must be non-negative and sum to 1 (sum = {sum})")]
    InvalidMarginal { sum: f64 },
    #[error("marginal size must be positive")]
    ZeroSize,
    #[error("regularization must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("numerical failure at iteration {0}")]
    NumericalFailure(usize),
    #[error("exact solver limited to {limit} cells, problem has {cells}")]
    TooLarge { cells: usize, limit: usize },
    #[error("exact solver failed to terminate")]
    NoProgress,
}

/// Dense row-major ground-cost matrix with non-negative finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, TransportError> {
        if rows == 0 || cols == 0 {
            return Err(TransportError::Empty);
        }
        if values.len() != rows * cols {
            return Err(TransportError::DimensionMismatch {
                expected: rows * cols,
                found: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(TransportError::InvalidCost {
                row: k / cols,
                col: k % cols,
                value: values[k],
            });
        }
        Ok(CostMatrix { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TransportError> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * m);
        for r in rows {
            if r.len() != m {
                return Err(TransportError::DimensionMismatch {
                    expected: m,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, m, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn transpose(&self) -> CostMatrix {
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                values.push(self.get(i, j));
            }
        }
        CostMatrix {
            rows: self.cols,
            cols: self.rows,
            values,
        }
    }

    /// Multiplies every entry by `factor` (must be non-negative).
    pub fn scaled(&self, factor: f64) -> Result<CostMatrix, TransportError> {
        CostMatrix::new(self.rows, self.cols, self.values.iter().map(|v| v * factor).collect())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn row_min(&self, i: usize) -> f64 {
        self.row(i).iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn col_min(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self.get(i, j)).fold(f64::INFINITY, f64::min)
    }
}

/// Probability weights over one side of a transport problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    weights: Vec<f64>,
}

impl Marginal {
    pub const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(weights: Vec<f64>) -> Result<Self, TransportError> {
        if weights.is_empty() {
            return Err(TransportError::ZeroSize);
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) || (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(TransportError::InvalidMarginal { sum });
        }
        Ok(Marginal { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    fn is_uniform(&self) -> bool {
        let w0 = self.weights[0];
        self.weights.iter().all(|w| (w - w0).abs() <= 1e-15)
    }
}

/// A transport plan with its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    plan: Vec<f64>,
    pub wd: f64,
    pub iterations_used: usize,
    pub converged: bool,
}

impl Coupling {
    /// Wraps an externally computed row-major plan; `wd` is its cost under
    /// `cost`.
    pub fn new(cost: &CostMatrix, plan: Vec<f64>) -> Result<Self, TransportError> {
        if plan.len() != cost.rows() * cost.cols() {
            return Err(TransportError::DimensionMismatch {
                expected: cost.rows() * cost.cols(),
                found: plan.len(),
            });
        }
        if let Some(k) = plan.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(TransportError::InvalidCost {
                row: k / cost.cols(),
                col: k % cost.cols(),
                value: plan[k],
            });
        }
        Ok(Self::from_plan(cost, plan, 0, true))
    }

    pub(crate) fn from_plan(cost: &CostMatrix, plan: Vec<f64>, iterations_used: usize, converged: bool) -> Self {
        let mut coupling = Coupling {
            rows: cost.rows(),
            cols: cost.cols(),
            plan,
            wd: 0.0,
            iterations_used,
            converged,
        };
        coupling.wd = frobenius(cost.values(), &coupling.plan);
        coupling
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.plan[i * self.cols..(i + 1) * self.cols]
    }

    pub fn plan(&self) -> &[f64] {
        &self.plan
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    /// Largest absolute deviation of row sums from `mu` or column sums from `nu`.
    pub fn marginal_violation(&self, mu: &Marginal, nu: &Marginal) -> f64 {
        let rows = self
            .row_sums()
            .iter()
            .zip(mu.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let cols = self
            .col_sums()
            .iter()
            .zip(nu.weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rows.max(cols)
    }
}

fn frobenius(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// ⟨C, T⟩.
pub fn wasserstein_distance(cost: &CostMatrix, plan: &Coupling) -> Result<f64, TransportError> {
    if cost.rows() != plan.rows() || cost.cols() != plan.cols() {
        return Err(TransportError::DimensionMismatch {
            expected: cost.rows() * cost.cols(),
            found: plan.rows() * plan.cols(),
        });
    }
    Ok(frobenius(cost.values(), plan.plan()))
}

/// Entropic solver settings; an unset `epsilon` means
/// [`SinkhornParams::DEFAULT_RELATIVE_EPSILON`] × mean cost of each problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: None,
            max_iter: SinkhornParams::DEFAULT_MAX_ITER,
            tol: SinkhornParams::DEFAULT_TOL,
        }
    }
}

impl SolverConfig {
    pub fn params_for(&self, cost: &CostMatrix) -> SinkhornParams {
        SinkhornParams {
            epsilon: self
                .epsilon
                .unwrap_or_else(|| sinkhorn::relative_epsilon(cost, SinkhornParams::DEFAULT_RELATIVE_EPSILON)),
            max_iter: self.max_iter,
            tol: self.tol,
        }
    }

    pub fn sinkhorn(&self, cost: &CostMatrix, mu: &Marginal, nu: &Marginal) -> Result<Coupling, TransportError> {
        sinkhorn(cost, mu, nu, &self.params_for(cost))
    }

    /// Exact when `rows × cols ≤ exact_cells`, entropic otherwise.
    pub fn solve_auto(
        &self,
        cost: &CostMatrix,
        mu: &Marginal,
        nu: &Marginal,
        exact_cells: usize,
    ) -> Result<Coupling, TransportError> {
        Solver::Auto {
            exact_cells,
            params: self.params_for(cost),
        }
        .solve(cost, mu, nu)
    }
}

/// Solver choice for a single transport problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solver {
    Exact,
    Entropic(SinkhornParams),
    /// Exact when the problem has at most `exact_cells` cells, entropic otherwise.
    Auto {
        exact_cells: usize,
        params: SinkhornParams,
    },
}

impl Solver {
    pub fn solve(&self, cost: &CostMatrix, mu: &Marginal, nu: &Marginal) -> Result<Coupling, TransportError> {
        match *self {
            Solver::Exact => exact_ot(cost, mu, nu),
            Solver::Entropic(params) => sinkhorn(cost, mu, nu, &params),
            Solver::Auto { exact_cells, params } => {
                if cost.rows() * cost.cols() <= exact_cells.min(EXACT_SIZE_GUARD) {
                    exact_ot(cost, mu, nu)
                } else {
                    sinkhorn(cost, mu, nu, &params)
                }
            }
        }
    }
}

fn check_shape(cost: &CostMatrix, mu: &Marginal, nu: &Marginal) -> Result<(), TransportError> {
    if cost.rows() != mu.len() || cost.cols() != nu.len() {
        return Err(TransportError::ShapeMismatch {
            rows: cost.rows(),
            cols: cost.cols(),
            mu: mu.len(),
            nu: nu.len(),
        });
    }
    Ok(())
}
