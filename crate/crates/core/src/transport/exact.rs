//! Unregularized optimal transport for small problems.
//!
//! Square problems with uniform marginals reduce to linear assignment
//! (Hungarian method). Everything else is solved as a transportation problem
//! by successive shortest augmenting paths with Dijkstra on reduced costs.

use super::{check_shape, CostMatrix, Coupling, Marginal, TransportError};

/// Largest `rows × cols` accepted by [`exact_ot`].
pub const EXACT_SIZE_GUARD: usize = 10_000;

const MASS_EPS: f64 = 1e-15;

pub fn exact_ot(cost: &CostMatrix, mu: &Marginal, nu: &Marginal) -> Result<Coupling, TransportError> {
    check_shape(cost, mu, nu)?;
    let (n, m) = (cost.rows(), cost.cols());
    if n * m > EXACT_SIZE_GUARD {
        return Err(TransportError::TooLarge {
            cells: n * m,
            limit: EXACT_SIZE_GUARD,
        });
    }

    let plan = if n == m && mu.is_uniform() && nu.is_uniform() {
        let assignment = hungarian(cost);
        let mut plan = vec![0.0; n * n];
        for (i, j) in assignment.into_iter().enumerate() {
            plan[i * n + j] = 1.0 / n as f64;
        }
        plan
    } else {
        transportation(cost, mu.weights(), nu.weights())?
    };
    Ok(Coupling::from_plan(cost, plan, 0, true))
}

/// Minimum-cost perfect matching on a square matrix; `result[i]` is the
/// column assigned to row `i`.
pub(crate) fn hungarian(cost: &CostMatrix) -> Vec<usize> {
    let n = cost.rows();
    debug_assert_eq!(n, cost.cols());
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    assignment
}

/// Successive shortest paths on the bipartite residual network. Nodes
/// `0..n` are sources, `n..n+m` are sinks. Forward arcs `i → j` are
/// uncapacitated with cost `C_ij`; backward arcs `j → i` exist while
/// `flow_ij > 0` and cost `−C_ij`.
fn transportation(cost: &CostMatrix, mu: &[f64], nu: &[f64]) -> Result<Vec<f64>, TransportError> {
    let (n, m) = (mu.len(), nu.len());
    let nodes = n + m;
    let mut supply = mu.to_vec();
    let mut demand = nu.to_vec();
    let mut flow = vec![0.0; n * m];
    let mut potential = vec![0.0; nodes];

    let mut dist = vec![f64::INFINITY; nodes];
    let mut pred = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];

    let max_rounds = 4 * nodes * nodes + 16;
    for _ in 0..max_rounds {
        if supply.iter().all(|&s| s <= MASS_EPS) || demand.iter().all(|&d| d <= MASS_EPS) {
            return Ok(flow);
        }

        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        pred.iter_mut().for_each(|p| *p = usize::MAX);
        done.iter_mut().for_each(|d| *d = false);
        for i in 0..n {
            if supply[i] > MASS_EPS {
                dist[i] = 0.0;
            }
        }

        // Dense Dijkstra; the graph is complete bipartite so a heap buys
        // nothing.
        let mut target = None;
        loop {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist[v] < best_d {
                    best_d = dist[v];
                    best = v;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            if best >= n && demand[best - n] > MASS_EPS {
                target = Some(best);
                break;
            }
            if best < n {
                let i = best;
                for j in 0..m {
                    let v = n + j;
                    if done[v] {
                        continue;
                    }
                    let reduced = (cost.get(i, j) + potential[i] - potential[v]).max(0.0);
                    if best_d + reduced < dist[v] {
                        dist[v] = best_d + reduced;
                        pred[v] = i;
                    }
                }
            } else {
                let j = best - n;
                for i in 0..n {
                    if done[i] || flow[i * m + j] <= MASS_EPS {
                        continue;
                    }
                    let reduced = (-cost.get(i, j) + potential[best] - potential[i]).max(0.0);
                    if best_d + reduced < dist[i] {
                        dist[i] = best_d + reduced;
                        pred[i] = best;
                    }
                }
            }
        }

        let Some(t) = target else {
            // Remaining supply and demand differ only by marginal rounding.
            return Ok(flow);
        };
        let cap = dist[t];
        for v in 0..nodes {
            potential[v] += dist[v].min(cap);
        }

        let mut delta = demand[t - n];
        let mut v = t;
        while pred[v] != usize::MAX {
            let u = pred[v];
            if u >= n {
                // v is a source reached backwards from sink u.
                delta = delta.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        delta = delta.min(supply[v]);
        if delta <= 0.0 {
            return Err(TransportError::NoProgress);
        }

        supply[v] -= delta;
        demand[t - n] -= delta;
        let mut v = t;
        while pred[v] != usize::MAX {
            let u = pred[v];
            if u < n {
                flow[u * m + (v - n)] += delta;
            } else {
                let cell = v * m + (u - n);
                flow[cell] = (flow[cell] - delta).max(0.0);
            }
            v = u;
        }
    }
    Err(TransportError::NoProgress)
}
