//! Sparse integer matrices stored by column.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    /// Per column: (row, value) sorted by row, no zeros.
    data: Vec<Vec<(usize, i64)>>,
}

/// A nonzero entry `(row, col, value)`.
pub type Triplet = (usize, usize, i64);

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Vec::new(); cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i].push((i, 1));
        }
        m
    }

    pub fn from_triplets<I: IntoIterator<Item = Triplet>>(rows: usize, cols: usize, it: I) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (r, c, v) in it {
            m.add_entry(r, c, v);
        }
        m
    }

    pub fn from_dense(rows: &[Vec<i64>]) -> Self {
        let nr = rows.len();
        let nc = rows.first().map_or(0, Vec::len);
        Self::from_triplets(
            nr,
            nc,
            rows.iter()
                .enumerate()
                .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &v)| (i, j, v))),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(Vec::len).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Vec::is_empty)
    }

    pub fn column(&self, c: usize) -> &[(usize, i64)] {
        &self.data[c]
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        match self.data[c].binary_search_by_key(&r, |&(row, _)| row) {
            Ok(i) => self.data[c][i].1,
            Err(_) => 0,
        }
    }

    pub fn add_entry(&mut self, r: usize, c: usize, v: i64) {
        assert!(r < self.rows && c < self.cols, "entry ({r}, {c}) out of bounds");
        if v == 0 {
            return;
        }
        let col = &mut self.data[c];
        match col.binary_search_by_key(&r, |&(row, _)| row) {
            Ok(i) => {
                col[i].1 += v;
                if col[i].1 == 0 {
                    col.remove(i);
                }
            }
            Err(i) => col.insert(i, (r, v)),
        }
    }

    /// Entries in column-major order.
    pub fn triplets(&self) -> Vec<Triplet> {
        self.data
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |&(r, v)| (r, c, v)))
            .collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut out = vec![vec![0; self.cols]; self.rows];
        for (r, c, v) in self.triplets() {
            out[r][c] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.cols,
            self.rows,
            self.triplets().into_iter().map(|(r, c, v)| (c, r, v)),
        )
    }

    pub fn scale(&self, s: i64) -> Self {
        if s == 0 {
            return Self::zeros(self.rows, self.cols);
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|col| col.iter().map(|&(r, v)| (r, v * s)).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (r, c, v) in other.triplets() {
            out.add_entry(r, c, v);
        }
        out
    }

    /// `self · other`.
    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        let mut acc = vec![0i64; self.rows];
        let mut touched = Vec::new();
        for (c, col) in other.data.iter().enumerate() {
            for &(k, v) in col {
                for &(r, w) in &self.data[k] {
                    if acc[r] == 0 {
                        touched.push(r);
                    }
                    acc[r] += v * w;
                }
            }
            touched.sort_unstable();
            touched.dedup();
            for &r in &touched {
                if acc[r] != 0 {
                    out.data[c].push((r, acc[r]));
                }
                acc[r] = 0;
            }
            touched.clear();
        }
        out
    }

    /// Image of the basis vector `c` as a sparse vector.
    pub fn apply_basis(&self, c: usize) -> &[(usize, i64)] {
        &self.data[c]
    }

    /// Copy of the submatrix on the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut row_pos = vec![usize::MAX; self.rows];
        for (i, &r) in rows.iter().enumerate() {
            row_pos[r] = i;
        }
        let mut out = Self::zeros(rows.len(), cols.len());
        for (j, &c) in cols.iter().enumerate() {
            for &(r, v) in &self.data[c] {
                if row_pos[r] != usize::MAX {
                    out.data[j].push((row_pos[r], v));
                }
            }
            out.data[j].sort_unstable();
        }
        out
    }
}

impl fmt::Debug for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SparseMatrix({}x{}, {:?})", self.rows, self.cols, self.triplets())
    }
}
