//! Constraint-driven similarity adjustment and the constrained spectral
//! clustering pipeline, with plain normalized-cut and hard-overwrite
//! baselines plus ablation weight rules.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::constraints::{to_matrix, PairwiseConstraint};
use crate::dataset::KernelMatrix;
use crate::error::{Error, Result};
use crate::graph::{build_knn_graph, normalized_affinity, KnnGraph};
use crate::linalg::{sym_eigen, top_eigenpairs_subspace};
use crate::propagation::{
    e2cp, propagate_directions, Direction, PropagatedConstraints, PropagationParams, Solver,
};

pub const DEFAULT_NEIGHBORS: usize = 20;
pub const DEFAULT_RESTARTS: usize = 10;
const MAX_LLOYD_ITERS: usize = 50;

/// Dense full eigendecomposition is used up to this size; beyond it only
/// the leading eigenpairs are computed by subspace iteration.
const DENSE_EIGEN_MAX_N: usize = 2000;

/// How a propagated score f and an existing weight w combine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdjustMode {
    /// Must-links blend w toward 1, cannot-links scale w toward 0:
    /// w~ = 1 - (1-f)(1-w) for f >= 0, else (1+f) w.
    Blend,
    /// Ignore w entirely: w~ = (1+f)/2.
    ShiftOnly,
    /// Pure rescaling: w~ = (1+f) w, clamped into [0,1].
    ScaleOnly,
}

/// Symmetric nonnegative adjusted affinity with entries in [0,1] and
/// strictly positive degrees (zero rows receive a unit self-loop).
#[derive(Debug, Clone)]
pub struct AdjustedAffinity {
    values: Array2<f64>,
    degrees: Vec<f64>,
}

impl AdjustedAffinity {
    /// Wrap the unmodified graph weights (the plain normalized-cut input).
    pub fn from_graph(g: &KnnGraph) -> Self {
        finalize_affinity(g.weights().to_dense())
    }

    /// Validate and wrap an explicit affinity matrix.
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        let n = values.nrows();
        if n == 0 || values.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "affinity must be square and nonempty, got {}x{}",
                n,
                values.ncols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let v = values[(i, j)];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "affinity entry ({i},{j}) = {v} outside [0,1]"
                    )));
                }
                if (v - values[(j, i)]).abs() >= 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "affinity is asymmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(finalize_affinity(values))
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degrees
    }
}

fn finalize_affinity(mut values: Array2<f64>) -> AdjustedAffinity {
    let n = values.nrows();
    let mut degrees = vec![0.0; n];
    for i in 0..n {
        let d: f64 = values.row(i).sum();
        if d > 0.0 {
            degrees[i] = d;
        } else {
            values[(i, i)] = 1.0;
            degrees[i] = 1.0;
        }
    }
    AdjustedAffinity { values, degrees }
}

/// Scalar adjustment rule applied entrywise by `adjust_weights`. Expects
/// w in [0,1] and f in [-1,1]; the matrix path validates both.
pub fn adjusted_weight(w: f64, f: f64, mode: AdjustMode) -> f64 {
    match mode {
        AdjustMode::Blend => {
            if f >= 0.0 {
                // 1 - (1-f)(1-w), written so f = 0 returns w exactly.
                w + f * (1.0 - w)
            } else {
                (1.0 + f) * w
            }
        }
        AdjustMode::ShiftOnly => (1.0 + f) / 2.0,
        AdjustMode::ScaleOnly => ((1.0 + f) * w).clamp(0.0, 1.0),
    }
}

/// Combine graph weights with propagated constraint scores entrywise.
/// The score matrix is symmetrized first so the output stays a valid
/// affinity even when the scores carry iteration noise or come from a
/// one-directional sweep.
pub fn adjust_weights(
    g: &KnnGraph,
    f: &PropagatedConstraints,
    mode: AdjustMode,
) -> Result<AdjustedAffinity> {
    let n = g.n();
    if f.rows() != n || f.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "scores are {}x{} but the graph has {n} vertices",
            f.rows(),
            f.cols()
        )));
    }
    let w = g.weights().to_dense();
    if w.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidInput(
            "graph weights outside [0,1]; adjustment is undefined".into(),
        ));
    }
    let fv = f.values();
    let mut out = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let fs = 0.5 * (fv[(i, j)] + fv[(j, i)]);
            let v = adjusted_weight(w[(i, j)], fs, mode);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(finalize_affinity(out))
}

/// Hard-overwrite baseline: set w to 1 on must-link pairs and 0 on
/// cannot-link pairs, leaving everything else untouched.
pub fn sl_baseline_adjust(g: &KnnGraph, cs: &[PairwiseConstraint]) -> Result<AdjustedAffinity> {
    let n = g.n();
    // Assembling the constraint matrix performs bounds, diagonal, and
    // conflict checking.
    let z = to_matrix(cs, n, n)?;
    let mut w = g.weights().to_dense();
    for i in 0..n {
        for j in 0..n {
            let s = z.values()[(i, j)];
            if s > 0.0 {
                w[(i, j)] = 1.0;
            } else if s < 0.0 {
                w[(i, j)] = 0.0;
            }
        }
    }
    Ok(finalize_affinity(w))
}

/// Row-normalized leading eigenvectors of the degree-normalized affinity.
/// `eigenvalues[c]` is the eigenvalue behind column c, non-increasing.
#[derive(Debug, Clone)]
pub struct SpectralEmbedding {
    rows: Array2<f64>,
    eigenvalues: Vec<f64>,
}

impl SpectralEmbedding {
    #[cfg(test)]
    pub(crate) fn from_rows(rows: Array2<f64>) -> Self {
        SpectralEmbedding {
            eigenvalues: vec![0.0; rows.ncols()],
            rows,
        }
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }
}

/// Embed each vertex as its coordinates in the K leading nontrivial
/// eigenvectors of D^(-1/2) W D^(-1/2), rows normalized to unit length.
///
/// The leading eigenvector is dropped only when it is the stationary
/// vector of a connected graph: eigenvalue at the top of the spectrum and
/// degree-rescaled form constant. `keep_trivial` disables dropping.
pub fn spectral_embed(
    w: &AdjustedAffinity,
    k: usize,
    keep_trivial: bool,
) -> Result<SpectralEmbedding> {
    let n = w.n();
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "embedding needs at least 2 clusters, got {k}"
        )));
    }
    if k >= n {
        return Err(Error::InvalidInput(format!(
            "cluster count {k} must be below the point count {n}"
        )));
    }
    let inv_sqrt: Vec<f64> = w.degrees().iter().map(|&d| 1.0 / d.sqrt()).collect();
    let needed = (k + 1).min(n);

    // (values descending, vectors as columns in the same order)
    let (vals, vecs) = if n <= DENSE_EIGEN_MAX_N {
        let s = Array2::from_shape_fn((n, n), |(i, j)| {
            w.values()[(i, j)] * inv_sqrt[i] * inv_sqrt[j]
        });
        let eig = sym_eigen(&s)?;
        let vals: Vec<f64> = (0..needed).map(|c| eig.values[n - 1 - c]).collect();
        let vecs = Array2::from_shape_fn((n, needed), |(i, c)| eig.vectors[(i, n - 1 - c)]);
        (vals, vecs)
    } else {
        let wv = w.values();
        let apply = |x: &[f64], y: &mut [f64]| {
            // y = D^(-1/2) W D^(-1/2) x without forming the product.
            let scaled: Vec<f64> = x.iter().zip(&inv_sqrt).map(|(v, s)| v * s).collect();
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += wv[(i, j)] * scaled[j];
                }
                y[i] = acc * inv_sqrt[i];
            }
        };
        top_eigenpairs_subspace(apply, n, needed, 1e-10, 1000, 0x5eed)?
    };

    // The stationary vector D^(1/2) 1 always tops the spectrum, so the
    // leading column is the only drop candidate; it is dropped when its
    // degree-rescaled form is constant (a connected graph). On a
    // disconnected graph the leading eigenspace holds component
    // indicators, none constant after rescaling, and everything is kept.
    let mut offset = 0;
    if !keep_trivial {
        let mut c: Vec<f64> = (0..n).map(|i| vecs[(i, 0)] * inv_sqrt[i]).collect();
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in c.iter_mut() {
                *v /= norm;
            }
        }
        let mean = c.iter().sum::<f64>() / n as f64;
        let dev = c.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        if dev <= 1e-6 {
            offset = 1;
        }
    }
    if offset + k > needed {
        return Err(Error::InvalidInput(format!(
            "cluster count {k} leaves no room after dropping the stationary eigenvector of a {n}-point graph"
        )));
    }

    let mut rows = Array2::from_shape_fn((n, k), |(i, c)| vecs[(i, offset + c)]);
    let mut zero_rows = 0usize;
    for mut row in rows.rows_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        } else {
            zero_rows += 1;
        }
    }
    if zero_rows > 0 {
        log::warn!("{zero_rows} embedding rows are zero and were left unnormalized");
    }
    Ok(SpectralEmbedding {
        rows,
        eigenvalues: vals[offset..offset + k].to_vec(),
    })
}

/// Cluster assignment: `assignment[i]` in 0..k. Clusters may be empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if assignment.is_empty() || k == 0 {
            return Err(Error::InvalidInput("partition must be nonempty".into()));
        }
        if let Some(bad) = assignment.iter().position(|&c| c >= k) {
            return Err(Error::InvalidInput(format!(
                "label {} at position {bad} exceeds cluster count {k}",
                assignment[bad]
            )));
        }
        Ok(Partition { assignment, k })
    }

    /// Treat raw labels as a partition with k = max label + 1.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let k = labels.iter().copied().max().map_or(0, |m| m + 1);
        Partition::new(labels.to_vec(), k)
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lloyd_run(points: &Array2<f64>, k: usize, seed: u64, stream: u64) -> (Vec<usize>, f64) {
    let n = points.nrows();
    let d = points.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);

    let row_vecs: Vec<Vec<f64>> = (0..n).map(|i| points.row(i).to_vec()).collect();

    // Seeding: first center uniform, the rest proportional to the squared
    // distance from the nearest chosen center.
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(row_vecs[rng.random_range(0..n)].clone());
    let mut near2 = vec![f64::INFINITY; n];
    while centers.len() < k {
        let last = centers.last().unwrap();
        for i in 0..n {
            near2[i] = near2[i].min(sq_dist(&row_vecs[i], last));
        }
        let total: f64 = near2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &v) in near2.iter().enumerate() {
                acc += v;
                if acc >= target {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(row_vecs[pick].clone());
    }

    let mut assign = vec![0usize; n];
    for iter in 0..MAX_LLOYD_ITERS {
        let mut changed = false;
        for i in 0..n {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, center) in centers.iter().enumerate() {
                let dist = sq_dist(&row_vecs[i], center);
                if dist < best_d {
                    best_d = dist;
                    best = c;
                }
            }
            if assign[i] != best {
                assign[i] = best;
                changed = true;
            }
        }
        if !changed && iter > 0 {
            break;
        }
        let mut sums = vec![vec![0.0; d]; k];
        let mut counts = vec![0usize; k];
        for i in 0..n {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(&row_vecs[i]) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for s in sums[c].iter_mut() {
                    *s /= counts[c] as f64;
                }
                centers[c] = sums[c].clone();
            } else {
                // Re-seed an empty cluster from the point farthest from its
                // current center.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        sq_dist(&row_vecs[a], &centers[assign[a]])
                            .partial_cmp(&sq_dist(&row_vecs[b], &centers[assign[b]]))
                            .unwrap()
                    })
                    .unwrap();
                centers[c] = row_vecs[far].clone();
            }
        }
    }

    let wcss: f64 = (0..n).map(|i| sq_dist(&row_vecs[i], &centers[assign[i]])).sum();
    (assign, wcss)
}

/// Lloyd iteration with distance-weighted seeding; the best of `restarts`
/// independent runs by within-cluster sum of squares, ties to the lowest
/// restart index. Deterministic per seed and independent of thread count.
pub fn kmeans(e: &SpectralEmbedding, k: usize, restarts: usize, seed: u64) -> Result<Partition> {
    let n = e.n();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "cluster count {k} must be in [1, {n}]"
        )));
    }
    if restarts == 0 {
        return Err(Error::InvalidInput("kmeans needs at least one restart".into()));
    }
    let runs: Vec<(Vec<usize>, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| lloyd_run(e.rows(), k, seed, r as u64))
        .collect();
    let mut best = 0;
    for r in 1..runs.len() {
        if runs[r].1 < runs[best].1 {
            best = r;
        }
    }
    Partition::new(runs[best].0.clone(), k)
}

/// Which pipeline turns a kernel and constraints into a partition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterMethod {
    /// Propagate constraints, adjust weights, then spectrally cluster.
    E2cp,
    /// Like E2cp but scores come from the exact matrix-equation solver.
    Lyap,
    /// Hard-overwrite constrained baseline.
    Sl,
    /// Unconstrained normalized-cut baseline.
    Ncuts,
}

/// Pipeline knobs shared by every method.
#[derive(Debug, Clone)]
pub struct ClusterParams {
    pub neighbors: usize,
    pub propagation: PropagationParams,
    pub adjust_mode: AdjustMode,
    /// Override the standard two-sweep propagation with an explicit stage
    /// sequence (ablation runs). Ignored by methods that do not propagate.
    pub directions: Option<Vec<Direction>>,
    pub restarts: usize,
    pub seed: u64,
    pub keep_trivial: bool,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            neighbors: DEFAULT_NEIGHBORS,
            propagation: PropagationParams::default(),
            adjust_mode: AdjustMode::Blend,
            directions: None,
            restarts: DEFAULT_RESTARTS,
            seed: 0,
            keep_trivial: false,
        }
    }
}

/// Full pipeline: k-NN graph, optional constraint propagation and weight
/// adjustment, spectral embedding, k-means.
pub fn cluster_pipeline(
    kernel: &KernelMatrix,
    cs: &[PairwiseConstraint],
    k_clusters: usize,
    method: ClusterMethod,
    params: &ClusterParams,
) -> Result<Partition> {
    let n = kernel.n();
    let g = build_knn_graph(kernel, params.neighbors)?;
    let adjusted = match method {
        ClusterMethod::Ncuts => AdjustedAffinity::from_graph(&g),
        ClusterMethod::Sl => sl_baseline_adjust(&g, cs)?,
        ClusterMethod::E2cp | ClusterMethod::Lyap => {
            let z = to_matrix(cs, n, n)?;
            let lbar = normalized_affinity(&g);
            let mut p = params.propagation;
            let f = if method == ClusterMethod::Lyap {
                p.solver = Solver::ExactMatrixEquation;
                e2cp(&lbar, &z, &p)?
            } else if let Some(dirs) = &params.directions {
                propagate_directions(&lbar, &z, &p, dirs)?
            } else {
                e2cp(&lbar, &z, &p)?
            };
            adjust_weights(&g, &f, params.adjust_mode)?
        }
    };
    let emb = spectral_embed(&adjusted, k_clusters, params.keep_trivial)?;
    kmeans(&emb, k_clusters, params.restarts, params.seed)
}
