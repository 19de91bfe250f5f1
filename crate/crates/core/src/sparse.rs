//! Fixed sparsity patterns and COO-style value vectors laid out along them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Per-row lists of admissible column indices (0-based, strictly increasing).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparsityPattern {
    rows: Vec<Vec<usize>>,
    offsets: Vec<usize>,
}

impl SparsityPattern {
    pub fn new(rows: Vec<Vec<usize>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidPattern("pattern has no rows".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.is_empty() {
                return Err(Error::InvalidPattern(format!("row {i} is empty")));
            }
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidPattern(format!(
                    "row {i} indices are not strictly increasing"
                )));
            }
            if let Some(&j) = row.last() {
                if j >= n {
                    return Err(Error::InvalidPattern(format!(
                        "row {i} references column {j} of an {n}x{n} matrix"
                    )));
                }
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for row in &rows {
            offsets.push(offsets[offsets.len() - 1] + row.len());
        }
        Ok(Self { rows, offsets })
    }

    pub fn diagonal(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| vec![i]).collect())
    }

    /// Band `{i-1, i, i+1}` clipped to the matrix.
    pub fn tridiagonal(n: usize) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|i| (i.saturating_sub(1)..=(i + 1).min(n - 1)).collect())
                .collect(),
        )
    }

    /// Five-point stencil on an `nodes x nodes` grid, lexicographic order.
    pub fn five_point(nodes: usize) -> Result<Self> {
        let mut rows = Vec::with_capacity(nodes * nodes);
        for y in 0..nodes {
            for x in 0..nodes {
                let k = y * nodes + x;
                let mut row = Vec::with_capacity(5);
                if y > 0 {
                    row.push(k - nodes);
                }
                if x > 0 {
                    row.push(k - 1);
                }
                row.push(k);
                if x + 1 < nodes {
                    row.push(k + 1);
                }
                if y + 1 < nodes {
                    row.push(k + nodes);
                }
                rows.push(row);
            }
        }
        Self::new(rows)
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Total number of admissible entries.
    pub fn eta(&self) -> usize {
        self.offsets[self.rows.len()]
    }

    pub fn chi_max(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    /// Index of row `i`'s first entry in the value vector.
    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    /// Position of `(i, j)` in the value vector, if admissible.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        self.rows[i].binary_search(&j).ok().map(|k| self.offsets[i] + k)
    }

    pub fn diagonal_positions(&self) -> Option<Vec<usize>> {
        (0..self.n()).map(|i| self.position(i, i)).collect()
    }

    pub fn has_diagonal(&self) -> bool {
        self.diagonal_positions().is_some()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n()).all(|i| self.rows[i].iter().all(|&j| self.position(j, i).is_some()))
    }

    /// `(row, col)` of every entry in value-vector order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&j| (i, j)))
    }
}

/// Matrix values `A^v` stored in the order of a [`SparsityPattern`].
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pattern: SparsityPattern,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(pattern: SparsityPattern, values: Vec<f64>) -> Result<Self> {
        if values.len() != pattern.eta() {
            return Err(Error::DimensionMismatch {
                expected: pattern.eta(),
                found: values.len(),
            });
        }
        Ok(Self { pattern, values })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(SparsityPattern::diagonal(n)?, vec![1.0; n])
    }

    pub fn pattern(&self) -> &SparsityPattern {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn n(&self) -> usize {
        self.pattern.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.position(i, j).map_or(0.0, |p| self.values[p])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let off = self.pattern.offset(i);
                self.pattern
                    .row(i)
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| self.values[off + k] * x[j])
                    .sum()
            })
            .collect()
    }

    /// Exact symmetry of stored values.
    pub fn is_symmetric(&self) -> bool {
        self.pattern
            .entries()
            .zip(&self.values)
            .all(|((i, j), &v)| self.get(j, i) == v)
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut dense = vec![0.0; n * n];
        for ((i, j), &v) in self.pattern.entries().zip(&self.values) {
            dense[i * n + j] = v;
        }
        dense
    }

    /// Same pattern, values mapped entrywise with the entry position.
    pub fn map_values<F>(&self, mut f: F) -> Self
    where
        F: FnMut(usize, usize, f64) -> f64,
    {
        let values = self
            .pattern
            .entries()
            .zip(&self.values)
            .map(|((i, j), &v)| f(i, j, v))
            .collect();
        Self {
            pattern: self.pattern.clone(),
            values,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_shape() {
        let p = SparsityPattern::tridiagonal(4).unwrap();
        let sizes: Vec<usize> = p.rows().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![2, 3, 3, 2]);
        assert_eq!(p.eta(), 10);
        assert_eq!(p.chi_max(), 3);
        assert!(p.has_diagonal());
        assert!(p.is_symmetric());
        assert_eq!(p.position(1, 0), Some(2));
        assert_eq!(p.position(0, 3), None);
    }

    #[test]
    fn five_point_shape() {
        let p = SparsityPattern::five_point(3).unwrap();
        assert_eq!(p.n(), 9);
        assert_eq!(p.row(4), &[1, 3, 4, 5, 7]);
        assert_eq!(p.eta(), 9 + 2 * 12);
        assert!(p.is_symmetric());
    }

    #[test]
    fn invalid_patterns() {
        assert!(SparsityPattern::new(vec![vec![0], vec![]]).is_err());
        assert!(SparsityPattern::new(vec![vec![1, 0], vec![1]]).is_err());
        assert!(SparsityPattern::new(vec![vec![0, 2], vec![1]]).is_err());
        assert!(SparsityPattern::new(vec![]).is_err());
    }

    #[test]
    fn asymmetric_pattern_detected() {
        let p = SparsityPattern::new(vec![vec![0, 1], vec![1]]).unwrap();
        assert!(!p.is_symmetric());
    }

    #[test]
    fn matvec_matches_dense() {
        let p = SparsityPattern::tridiagonal(3).unwrap();
        let a = SparseMatrix::new(p, vec![2.0, -1.0, -1.0, 2.0, -1.0, -1.0, 2.0]).unwrap();
        assert_eq!(a.matvec(&[1.0, 2.0, 3.0]), vec![0.0, 0.0, 4.0]);
        assert!(a.is_symmetric());
        assert_eq!(a.to_dense()[1], -1.0);
    }
}
