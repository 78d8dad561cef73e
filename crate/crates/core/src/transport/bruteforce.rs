//! Vertex enumeration over the transportation polytope.
//!
//! Every vertex of `{γ ≥ 0 : γ 1 = p, γᵀ 1 = q}` is a basic solution whose
//! support lies on a spanning tree of the complete bipartite graph between
//! the atoms of `p` and `q`. Enumerating all `(m + n − 1)`-subsets of cells,
//! keeping the acyclic ones, and solving the tree flows by leaf peeling
//! visits every vertex; the cheapest feasible one is the optimum.

use crate::error::{ensure_len, Error, Result};
use crate::matrix::Matrix;

use super::DiscreteDistribution;

/// Largest `|p|·|q|` the enumeration accepts.
pub const BRUTEFORCE_MAX_CELLS: usize = 16;

const FEASIBILITY_TOL: f64 = 1e-12;

pub fn w1_discrete_bruteforce(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    cost: &Matrix,
) -> Result<f64> {
    let (m, n) = (p.len(), q.len());
    ensure_len("cost rows", m, cost.rows())?;
    ensure_len("cost columns", n, cost.cols())?;
    if m * n > BRUTEFORCE_MAX_CELLS {
        return Err(Error::invalid(format!(
            "vertex enumeration capped at {BRUTEFORCE_MAX_CELLS} cells, got {}",
            m * n
        )));
    }
    if !cost.is_finite() {
        return Err(Error::invalid("cost must be finite"));
    }

    let cells = m * n;
    let basis = m + n - 1;
    let mut best = f64::INFINITY;
    let mut chosen = Vec::with_capacity(basis);
    enumerate(0, cells, basis, &mut chosen, &mut |subset| {
        if let Some(value) = tree_cost(subset, p.weights(), q.weights(), cost) {
            best = best.min(value);
        }
    });
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::Numerical("no feasible vertex found".into()))
    }
}

fn enumerate(
    start: usize,
    cells: usize,
    remaining: usize,
    chosen: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if remaining == 0 {
        visit(chosen);
        return;
    }
    for cell in start..=cells - remaining {
        chosen.push(cell);
        enumerate(cell + 1, cells, remaining - 1, chosen, visit);
        chosen.pop();
    }
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    parent[x] = r;
    r
}

/// Cost of the basic solution on `subset`, or `None` when the cells contain
/// a cycle or the tree flow is infeasible.
fn tree_cost(subset: &[usize], p: &[f64], q: &[f64], cost: &Matrix) -> Option<f64> {
    let (m, n) = (p.len(), q.len());
    let mut parent: Vec<usize> = (0..m + n).collect();
    for &cell in subset {
        let (a, b) = (cell / n, m + cell % n);
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return None;
        }
        parent[ra] = rb;
    }

    // leaf peeling: a node touching a single unresolved edge fixes its flow
    let mut residual: Vec<f64> = p.iter().chain(q).copied().collect();
    let mut open = vec![true; subset.len()];
    let mut degree = vec![0usize; m + n];
    for &cell in subset {
        degree[cell / n] += 1;
        degree[m + cell % n] += 1;
    }
    let mut total = 0.0;
    for _ in 0..subset.len() {
        let (e, leaf) = subset
            .iter()
            .enumerate()
            .filter(|(e, _)| open[*e])
            .find_map(|(e, &cell)| {
                let (a, b) = (cell / n, m + cell % n);
                if degree[a] == 1 {
                    Some((e, a))
                } else if degree[b] == 1 {
                    Some((e, b))
                } else {
                    None
                }
            })?;
        let cell = subset[e];
        let (a, b) = (cell / n, m + cell % n);
        let other = if leaf == a { b } else { a };
        let mass = residual[leaf];
        if mass < -FEASIBILITY_TOL {
            return None;
        }
        residual[leaf] = 0.0;
        residual[other] -= mass;
        degree[a] -= 1;
        degree[b] -= 1;
        open[e] = false;
        total += mass * cost.get(cell / n, cell % n);
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(w: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(w.to_vec()).unwrap()
    }

    #[test]
    fn identical_distributions() {
        let p = dist(&[0.3, 0.7]);
        let cost = Matrix::from_rows(&[vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        assert!(w1_discrete_bruteforce(&p, &p, &cost).unwrap().abs() < 1e-15);
    }

    #[test]
    fn point_masses_pay_the_atom_cost() {
        let p = DiscreteDistribution::point_mass(3, 0).unwrap();
        let q = DiscreteDistribution::point_mass(3, 2).unwrap();
        let cost = Matrix::from_fn(3, 3, |i, j| (i as f64 - j as f64).abs() * 1.5);
        assert!((w1_discrete_bruteforce(&p, &q, &cost).unwrap() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn size_cap() {
        let p = dist(&[0.2; 5]);
        let cost = Matrix::zeros(5, 5);
        assert!(w1_discrete_bruteforce(&p, &p, &cost).is_err());
    }
}
