//! Exact discrete optimal transport by successive shortest augmenting paths
//! with Johnson potentials on the dense bipartite network.
//!
//! Nodes are a super source, the positive-mass atoms of `p`, the
//! positive-mass atoms of `q`, and a super sink. Each augmentation pushes as
//! much mass as the bottleneck allows along a cheapest residual path, which
//! keeps the flow optimal for the mass shipped so far. Every augmentation
//! exhausts a supply, a demand, or a reverse residual arc, so the loop
//! terminates after O(m + n) augmentations in practice.

use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;

use super::DiscreteDistribution;

/// Mass below this is treated as exhausted.
const MASS_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub cost: f64,
    /// Optimal coupling, `plan[i][j]` = mass moved from atom `i` of `p` to atom `j` of `q`.
    pub plan: Matrix,
}

/// `W1(p, q; cost) = min over couplings γ of Σ γ_ij cost_ij`, solved exactly.
pub fn w1_discrete(p: &DiscreteDistribution, q: &DiscreteDistribution, cost: &Matrix) -> Result<f64> {
    Ok(w1_discrete_with_plan(p, q, cost)?.cost)
}

pub fn w1_discrete_with_plan(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    cost: &Matrix,
) -> Result<TransportSolution> {
    ensure_len("cost rows", p.len(), cost.rows())?;
    ensure_len("cost columns", q.len(), cost.cols())?;
    if let Some(c) = cost.as_slice().iter().find(|c| !c.is_finite() || **c < 0.0) {
        return Err(Error::invalid(format!("cost entry {c} is negative or non-finite")));
    }
    solve_transport(p.weights(), q.weights(), cost)
}

/// Unchecked solver used on hot paths where the inputs are already valid.
pub(crate) fn solve_transport(p: &[f64], q: &[f64], cost: &Matrix) -> Result<TransportSolution> {
    let rows: Vec<usize> = (0..p.len()).filter(|&i| p[i] > MASS_TOL).collect();
    let cols: Vec<usize> = (0..q.len()).filter(|&j| q[j] > MASS_TOL).collect();
    let m = rows.len();
    let n = cols.len();
    let mut plan = Matrix::zeros(p.len(), q.len());
    if m == 0 || n == 0 {
        return Ok(TransportSolution { cost: 0.0, plan });
    }

    // Fast paths: a point mass on either side has a unique coupling.
    if m == 1 || n == 1 {
        let mut total = 0.0;
        for &i in &rows {
            for &j in &cols {
                let mass = if m == 1 { q[j] } else { p[i] };
                plan.set(i, j, mass);
                total += mass * cost.get(i, j);
            }
        }
        return Ok(TransportSolution { cost: total, plan });
    }

    let c = |k: usize, l: usize| cost.get(rows[k], cols[l]);
    let mut supply: Vec<f64> = rows.iter().map(|&i| p[i]).collect();
    let mut demand: Vec<f64> = cols.iter().map(|&j| q[j]).collect();
    let mut flow = vec![0.0; m * n];

    // node ids: 0 = source, 1..=m atoms of p, m+1..=m+n atoms of q, m+n+1 = sink
    let v = m + n + 2;
    let sink = v - 1;
    let mut potential = vec![0.0; v];
    let mut dist = vec![f64::INFINITY; v];
    let mut done = vec![false; v];
    let mut prev = vec![usize::MAX; v];

    let max_rounds = 4 * v * v + 16;
    for _ in 0..max_rounds {
        if supply.iter().all(|&s| s <= MASS_TOL) || demand.iter().all(|&d| d <= MASS_TOL) {
            let total = flow
                .iter()
                .enumerate()
                .map(|(idx, f)| f * c(idx / n, idx % n))
                .sum();
            for k in 0..m {
                for l in 0..n {
                    plan.set(rows[k], cols[l], flow[k * n + l]);
                }
            }
            return Ok(TransportSolution { cost: total, plan });
        }

        dist.fill(f64::INFINITY);
        done.fill(false);
        prev.fill(usize::MAX);
        dist[0] = 0.0;
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for x in 0..v {
                if !done[x] && dist[x] < best {
                    best = dist[x];
                    u = x;
                }
            }
            if u == usize::MAX || u == sink {
                break;
            }
            done[u] = true;
            let relax = |w: usize, arc_cost: f64, dist: &mut [f64], prev: &mut [usize]| {
                let reduced = (arc_cost + potential[u] - potential[w]).max(0.0);
                let cand = best + reduced;
                if cand < dist[w] {
                    dist[w] = cand;
                    prev[w] = u;
                }
            };
            if u == 0 {
                for k in 0..m {
                    if supply[k] > MASS_TOL {
                        relax(1 + k, 0.0, &mut dist, &mut prev);
                    }
                }
            } else if u <= m {
                let k = u - 1;
                for l in 0..n {
                    relax(1 + m + l, c(k, l), &mut dist, &mut prev);
                }
            } else {
                let l = u - 1 - m;
                for k in 0..m {
                    if flow[k * n + l] > MASS_TOL {
                        relax(1 + k, -c(k, l), &mut dist, &mut prev);
                    }
                }
                if demand[l] > MASS_TOL {
                    relax(sink, 0.0, &mut dist, &mut prev);
                }
            }
        }
        if !dist[sink].is_finite() {
            return Err(Error::Numerical("transport network has no augmenting path".into()));
        }
        let reach = dist[sink];
        for x in 0..v {
            potential[x] += dist[x].min(reach);
        }

        // bottleneck along the path sink <- ... <- source
        let mut amount = f64::INFINITY;
        let mut node = sink;
        while node != 0 {
            let from = prev[node];
            let cap = if node == sink {
                demand[from - 1 - m]
            } else if from == 0 {
                supply[node - 1]
            } else if from > m {
                // reverse arc q-atom -> p-atom cancels flow
                flow[(node - 1) * n + (from - 1 - m)]
            } else {
                f64::INFINITY
            };
            amount = amount.min(cap);
            node = from;
        }
        if !(amount > 0.0) {
            return Err(Error::Numerical("degenerate augmenting path".into()));
        }
        let mut node = sink;
        while node != 0 {
            let from = prev[node];
            if node == sink {
                let l = from - 1 - m;
                demand[l] -= amount;
            } else if from == 0 {
                supply[node - 1] -= amount;
            } else if from > m {
                let idx = (node - 1) * n + (from - 1 - m);
                flow[idx] = (flow[idx] - amount).max(0.0);
            } else {
                flow[(from - 1) * n + (node - 1 - m)] += amount;
            }
            node = from;
        }
    }
    Err(Error::Numerical("transport solver exceeded its round limit".into()))
}
