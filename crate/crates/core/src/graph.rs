//! k-NN graph construction and the normalized affinity / Laplacian pair
//! used by every propagation routine.

use ndarray::Array2;
use rayon::prelude::*;

use crate::dataset::KernelMatrix;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Symmetric nonnegative k-NN affinity graph with strictly positive degrees.
///
/// Diagonal entries are zero except for isolated vertices, which carry a
/// unit self-loop so every degree is positive.
#[derive(Debug, Clone)]
pub struct KnnGraph {
    weights: CsrMatrix,
    degrees: Vec<f64>,
    k: usize,
}

impl KnnGraph {
    pub fn n(&self) -> usize {
        self.weights.n()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn weights(&self) -> &CsrMatrix {
        &self.weights
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }
}

/// Symmetrically degree-normalized affinity: values_ij = w_ij / sqrt(d_i d_j).
///
/// Symmetric with spectral radius at most 1, so I - alpha * this is
/// positive definite for |alpha| < 1.
#[derive(Debug, Clone)]
pub struct NormalizedAffinity {
    values: CsrMatrix,
}

impl NormalizedAffinity {
    pub fn n(&self) -> usize {
        self.values.n()
    }

    pub fn values(&self) -> &CsrMatrix {
        &self.values
    }

    /// y = values * x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        self.values.matvec(x, y);
    }

    pub fn to_dense(&self) -> Array2<f64> {
        self.values.to_dense()
    }
}

/// Connect each point to the k others with the largest kernel value,
/// weight each edge by the diagonal-normalized kernel value, then average
/// with the transpose so one-sided neighborhoods get half weight.
pub fn build_knn_graph(kernel: &KernelMatrix, k: usize) -> Result<KnnGraph> {
    let n = kernel.n();
    if k < 1 || k > n - 1 {
        return Err(Error::InvalidInput(format!(
            "neighbor count k must be in [1, {}], got {k}",
            n - 1
        )));
    }
    let a = kernel.values();
    if a.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput(
            "kernel has negative entries; graph weights must be nonnegative".into(),
        ));
    }

    // Per-row selection is independent; ties at the k-th value break toward
    // the smaller index so the result is order-independent.
    let selected: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let better = |&x: &usize, &y: &usize| {
                a[(i, y)]
                    .partial_cmp(&a[(i, x)])
                    .expect("kernel entries are finite")
                    .then_with(|| x.cmp(&y))
            };
            if k < cand.len() {
                cand.select_nth_unstable_by(k - 1, better);
                cand.truncate(k);
            }
            cand.into_iter()
                .map(|j| (j, a[(i, j)] / (a[(i, i)] * a[(j, j)]).sqrt()))
                .collect()
        })
        .collect();

    // W = (W0 + W0^T)/2, accumulated per unordered pair.
    let mut acc: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); n];
    for (i, nbrs) in selected.iter().enumerate() {
        for &(j, v) in nbrs {
            *acc[i].entry(j).or_insert(0.0) += 0.5 * v;
            *acc[j].entry(i).or_insert(0.0) += 0.5 * v;
        }
    }

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(n);
    let mut degrees = Vec::with_capacity(n);
    for (i, row) in acc.into_iter().enumerate() {
        let entries: Vec<(usize, f64)> = row.into_iter().filter(|&(_, v)| v > 0.0).collect();
        let degree: f64 = entries.iter().map(|&(_, v)| v).sum();
        if degree > 0.0 {
            degrees.push(degree);
            rows.push(entries);
        } else {
            // Isolated vertex: unit self-loop keeps the degree positive.
            degrees.push(1.0);
            rows.push(vec![(i, 1.0)]);
        }
    }

    Ok(KnnGraph {
        weights: CsrMatrix::from_rows(n, rows),
        degrees,
        k,
    })
}

/// L-bar = D^(-1/2) W D^(-1/2)
pub fn normalized_affinity(g: &KnnGraph) -> NormalizedAffinity {
    let inv_sqrt: Vec<f64> = g.degrees.iter().map(|&d| 1.0 / d.sqrt()).collect();
    let n = g.n();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| {
            g.weights
                .row(i)
                .map(|(j, w)| (j, w * inv_sqrt[i] * inv_sqrt[j]))
                .collect()
        })
        .collect();
    NormalizedAffinity {
        values: CsrMatrix::from_rows(n, rows),
    }
}

/// Dense normalized Laplacian L = I - D^(-1/2) W D^(-1/2), positive
/// semidefinite with eigenvalues in [0, 2].
pub fn laplacian(g: &KnnGraph) -> Array2<f64> {
    let nb = normalized_affinity(g);
    let n = g.n();
    let mut l = nb.to_dense();
    l.mapv_inplace(|v| -v);
    for i in 0..n {
        l[(i, i)] += 1.0;
    }
    l
}
