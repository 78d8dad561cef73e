use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Symmetric nonnegative matrix over state pairs.
///
/// Fixed points of the π-, ε- and ε̄-operators additionally have a zero
/// diagonal and satisfy the triangle inequality; [`StateMetric::axioms`]
/// measures how far a given matrix is from that. The DBC- and PSM-style
/// operators produce matrices with a positive diagonal, which is why the
/// diagonal is not forced to zero here.
#[derive(Debug, Clone, PartialEq)]
pub struct StateMetric {
    values: Matrix,
}

/// Worst-case violations of the metric axioms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxiomReport {
    pub min_value: f64,
    pub max_asymmetry: f64,
    pub max_diagonal: f64,
    /// `max over (i, j, k) of d(i, k) − d(i, j) − d(j, k)`, clipped at 0.
    pub max_triangle_violation: f64,
}

impl AxiomReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_value >= -tol
            && self.max_asymmetry <= tol
            && self.max_diagonal <= tol
            && self.max_triangle_violation <= tol
    }
}

impl StateMetric {
    pub fn zeros(n: usize) -> Self {
        StateMetric {
            values: Matrix::zeros(n, n),
        }
    }

    pub fn from_matrix(values: Matrix) -> Result<Self> {
        if values.rows() != values.cols() {
            return Err(Error::invalid("state metric must be square"));
        }
        let n = values.rows();
        for i in 0..n {
            for j in 0..n {
                let v = values.get(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid(format!("entry ({i}, {j}) = {v} is negative or non-finite")));
                }
                if v != values.get(j, i) {
                    return Err(Error::invalid(format!("entry ({i}, {j}) breaks symmetry")));
                }
            }
        }
        Ok(StateMetric { values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_matrix(Matrix::from_rows(rows)?)
    }

    /// Builds a symmetric matrix from a function evaluated on `i <= j`.
    pub fn from_pairs(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut values = Matrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                values.set(i, j, v);
                values.set(j, i, v);
            }
        }
        Self::from_matrix(values)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.values
    }

    pub fn sup_distance(&self, other: &StateMetric) -> f64 {
        self.values
            .as_slice()
            .iter()
            .zip(other.values.as_slice())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest entry of `other − self`'s negation, i.e. `min (other − self)`.
    pub fn min_gap_to(&self, other: &StateMetric) -> f64 {
        self.values
            .as_slice()
            .iter()
            .zip(other.values.as_slice())
            .fold(f64::INFINITY, |m, (a, b)| m.min(b - a))
    }

    pub fn max_value(&self) -> f64 {
        self.values.as_slice().iter().fold(0.0, |m, v| m.max(*v))
    }

    /// Exhaustive O(n³) check of the metric axioms.
    pub fn axioms(&self) -> AxiomReport {
        let n = self.n();
        let d = |i, j| self.get(i, j);
        let mut report = AxiomReport {
            min_value: f64::INFINITY,
            max_asymmetry: 0.0,
            max_diagonal: 0.0,
            max_triangle_violation: 0.0,
        };
        for i in 0..n {
            report.max_diagonal = report.max_diagonal.max(d(i, i).abs());
            for j in 0..n {
                report.min_value = report.min_value.min(d(i, j));
                report.max_asymmetry = report.max_asymmetry.max((d(i, j) - d(j, i)).abs());
                for k in 0..n {
                    report.max_triangle_violation =
                        report.max_triangle_violation.max(d(i, k) - d(i, j) - d(j, k));
                }
            }
        }
        if n == 0 {
            report.min_value = 0.0;
        }
        report
    }
}
