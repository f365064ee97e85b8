use std::io::Write;
use std::path::Path;

use super::StructuredGrid;
use crate::{DdmError, Result};

/// Square sparse matrix in compressed sparse row form with sorted columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix carrying the 9-point coupling pattern of Q1 elements on `grid`.
    pub fn grid_pattern(grid: &StructuredGrid) -> Self {
        let (nx, ny) = (grid.nx(), grid.ny());
        let n = grid.node_count();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(9 * n);
        row_ptr.push(0);
        for j in 0..=ny {
            for i in 0..=nx {
                for jj in j.saturating_sub(1)..=(j + 1).min(ny) {
                    for ii in i.saturating_sub(1)..=(i + 1).min(nx) {
                        col_idx.push(grid.node_index(ii, jj));
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        let values = vec![0.0; col_idx.len()];
        CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(r, c, v) in triplets {
            if r >= n || c >= n {
                return Err(DdmError::config(format!(
                    "triplet ({r}, {c}) outside {n} x {n} matrix"
                )));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            n,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
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

    /// Storage position of entry `(row, col)`, if it is in the pattern.
    #[inline]
    pub fn position(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.row_ptr[row];
        let hi = self.row_ptr[row + 1];
        self.col_idx[lo..hi].binary_search(&col).ok().map(|k| lo + k)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |k| self.values[k])
    }

    #[inline]
    pub(crate) fn add_at(&mut self, pos: usize, v: f64) {
        self.values[pos] += v;
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (r, out) in y.iter_mut().enumerate() {
            let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
            let mut s = 0.0;
            for k in lo..hi {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *out = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// `a·self + b·other`; both matrices must share the same pattern.
    pub fn linear_combination(&self, a: f64, other: &CsrMatrix, b: f64) -> Result<CsrMatrix> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(DdmError::config("matrices have different sparsity patterns"));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(CsrMatrix {
            values,
            ..self.clone()
        })
    }

    pub fn scaled(&self, a: f64) -> CsrMatrix {
        CsrMatrix {
            values: self.values.iter().map(|v| a * v).collect(),
            ..self.clone()
        }
    }

    pub fn sum_entries(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Largest `|a_ij - a_ji|` relative to the largest entry magnitude.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        worst / scale
    }

    /// Max-norm of the stored values.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] = self.values[k];
            }
        }
        m
    }

    /// Coordinate text export: one `row col value` line per stored entry.
    pub fn write_coordinate(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| DdmError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                writeln!(w, "{} {} {:.17e}", r, self.col_idx[k], self.values[k])
                    .map_err(|e| DdmError::io(path, e))?;
            }
        }
        w.flush().map_err(|e| DdmError::io(path, e))
    }
}
