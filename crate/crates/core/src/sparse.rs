//! Row-compressed sparse matrix, just enough for k-NN affinity graphs.

use ndarray::Array2;

/// Square sparse matrix in CSR layout. Rows keep their column indices
/// sorted ascending; construction enforces it.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Build from per-row (column, value) lists. Entries within a row must
    /// be unique; they are sorted by column here.
    pub fn from_rows(n: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(rows.len(), n, "row count mismatch");
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, v) in row.iter() {
                debug_assert!(j < n);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    /// Entries of row `i` as (column, value) pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        self.indices[lo..hi]
            .iter()
            .copied()
            .zip(self.values[lo..hi].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    /// Value at (i, j), zero if not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.indptr[i];
        let hi = self.indptr[i + 1];
        match self.indices[lo..hi].binary_search(&j) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        debug_assert_eq!(y.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, v) in self.row(i) {
                acc += v * x[j];
            }
            *yi = acc;
        }
    }

    /// Row sums, the degree vector when the matrix is a weight matrix.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(_, v)| v).sum())
            .collect()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::<f64>::zeros((self.n, self.n));
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    /// Map every stored value, keeping the sparsity pattern.
    pub fn map_values(&self, f: impl Fn(usize, usize, f64) -> f64) -> CsrMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            let lo = self.indptr[i];
            let hi = self.indptr[i + 1];
            for pos in lo..hi {
                out.values[pos] = f(i, self.indices[pos], self.values[pos]);
            }
        }
        out
    }
}
