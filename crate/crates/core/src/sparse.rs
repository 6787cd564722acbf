use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square real matrix in compressed sparse row format with sorted column
/// indices in every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseRealMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseRealMatrix {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets, summing
    /// duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)], symmetric: bool) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(r, c, _) in triplets {
            assert!(r < n && c < n, "triplet ({r}, {c}) out of range for n = {n}");
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut row: Vec<(usize, f64)> = Vec::new();
        for i in 0..n {
            row.clear();
            row.extend((counts[i]..counts[i + 1]).map(|p| (cols[p], vals[p])));
            row.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &row {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseRealMatrix {
            n,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    pub fn from_dense(rows: &[Vec<f64>], symmetric: bool) -> Self {
        let n = rows.len();
        let triplets: Vec<_> = rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| {
                r.iter()
                    .enumerate()
                    .filter(|(_, &v)| v != 0.0)
                    .map(move |(j, &v)| (i, j, v))
            })
            .collect();
        Self::from_triplets(n, &triplets, symmetric)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entries of row `i` as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(p) => self.values[r.start + p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        Self::from_triplets(self.n, &triplets, self.symmetric)
    }

    /// Largest entrywise deviation from symmetry.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// `y = A x` for a real vector.
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok((0..self.n)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    /// `y = A x` for a complex vector, written into `y`.
    pub fn matvec_complex_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.col_idx[p]] * self.values[p];
            }
            *yi = acc;
        }
    }

    pub fn matvec_complex(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        self.check_len(x.len())?;
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        self.matvec_complex_into(x, &mut y);
        Ok(y)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        for (&j, &v) in self.col_idx.iter().zip(&self.values) {
            col[j] += v.abs();
        }
        col.into_iter().fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                actual: len,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let a = SparseRealMatrix::from_triplets(
            3,
            &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0), (2, 1, -1.0)],
            false,
        );
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 2), 4.0);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(1, 1), 0.0);
        assert_eq!(a.row(0).map(|(j, _)| j).collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]).unwrap(), vec![6.0, 0.0, -1.0]);
        assert!(a.matvec(&[1.0]).is_err());
        assert_eq!(a.transpose().get(2, 0), 4.0);
        assert_eq!(a.norm_one(), 4.0);
    }

    #[test]
    fn dense_round_trip() {
        let rows = vec![vec![1.0, 0.0], vec![-2.0, 3.0]];
        let a = SparseRealMatrix::from_dense(&rows, false);
        assert_eq!(a.to_dense(), rows);
        assert_eq!(a.asymmetry(), 2.0);
    }
}
