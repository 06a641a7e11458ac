//! Data ingestion, feature normalization, kernel construction, and
//! synthetic dataset generators.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// A set of N points in d dimensions, with optional ground-truth labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// N x d, one row per point.
    pub points: Array2<f64>,
    /// Ground-truth cluster labels, values in 0..K.
    pub labels: Option<Vec<usize>>,
    /// Optional external identifiers, one per point.
    pub ids: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(points: Array2<f64>, labels: Option<Vec<usize>>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::InvalidInput(
                "dataset must have at least one row and one column".into(),
            ));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("dataset contains non-finite values".into()));
        }
        if let Some(ref l) = labels {
            if l.len() != points.nrows() {
                return Err(Error::InvalidInput(format!(
                    "label count {} does not match point count {}",
                    l.len(),
                    points.nrows()
                )));
            }
        }
        Ok(Dataset {
            points,
            labels,
            ids: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// Number of distinct label values, max label + 1.
    pub fn num_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m + 1))
    }
}

/// How to turn points into a kernel matrix.
#[derive(Debug, Clone)]
pub enum KernelSpec {
    /// a(x, y) = exp(-||x - y||^2 / (2 sigma^2))
    Gaussian { sigma: f64 },
    /// Cosine of the angle between rows, shifted from [-1, 1] to [0, 1].
    NormalizedCorrelation,
    /// Caller-supplied kernel matrix, validated on construction.
    Precomputed(Array2<f64>),
}

/// N x N kernel matrix: symmetric, finite, strictly positive diagonal.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    values: Array2<f64>,
}

impl KernelMatrix {
    /// Validate and wrap a kernel matrix.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let n = values.nrows();
        if n == 0 || values.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "kernel matrix must be square and nonempty, got {}x{}",
                n,
                values.ncols()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("kernel matrix contains non-finite values".into()));
        }
        for i in 0..n {
            if values[(i, i)] <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "kernel diagonal entry {i} is not strictly positive"
                )));
            }
            for j in 0..i {
                if (values[(i, j)] - values[(j, i)]).abs() >= 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "kernel matrix is asymmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(KernelMatrix { values })
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Load a dataset from CSV, one row per point.
///
/// A header line is skipped when the first row has any non-numeric cell.
/// With `has_labels`, the final column is read as an integer label.
pub fn load_dataset(path: &str, has_labels: bool) -> Result<Dataset> {
    let rows = read_numeric_csv(path)?;
    if rows.is_empty() {
        return Err(Error::Parse {
            path: path.into(),
            line: 0,
            msg: "file contains no data rows".into(),
        });
    }
    let width = rows[0].len();
    let d = if has_labels { width.saturating_sub(1) } else { width };
    if d == 0 {
        return Err(Error::Parse {
            path: path.into(),
            line: 1,
            msg: "no feature columns left after taking the label column".into(),
        });
    }

    let n = rows.len();
    let mut points = Array2::<f64>::zeros((n, d));
    let mut labels = if has_labels { Some(Vec::with_capacity(n)) } else { None };
    for (i, row) in rows.iter().enumerate() {
        for j in 0..d {
            points[(i, j)] = row[j];
        }
        if let Some(ref mut ls) = labels {
            let raw = row[width - 1];
            if raw < 0.0 || raw.fract() != 0.0 {
                return Err(Error::Parse {
                    path: path.into(),
                    line: i + 1,
                    msg: format!("label {raw} is not a nonnegative integer"),
                });
            }
            ls.push(raw as usize);
        }
    }
    Dataset::new(points, labels)
}

/// Read a rectangular numeric CSV, skipping '#' comments, blank lines, and
/// an auto-detected header row. Every surviving cell must be a finite number.
pub(crate) fn read_numeric_csv(path: &str) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    let mut saw_candidate_header = false;

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            cells.iter().map(|c| c.parse::<f64>()).collect();
        match parsed {
            Ok(vals) => {
                if let Some(bad) = vals.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Parse {
                        path: path.into(),
                        line: lineno + 1,
                        msg: format!("non-finite value in column {}", bad + 1),
                    });
                }
                if let Some(w) = width {
                    if vals.len() != w {
                        return Err(Error::Parse {
                            path: path.into(),
                            line: lineno + 1,
                            msg: format!("ragged row: expected {w} columns, found {}", vals.len()),
                        });
                    }
                } else {
                    width = Some(vals.len());
                }
                rows.push(vals);
            }
            Err(e) => {
                // A single non-numeric first row is treated as a header.
                if rows.is_empty() && !saw_candidate_header {
                    saw_candidate_header = true;
                    continue;
                }
                return Err(Error::Parse {
                    path: path.into(),
                    line: lineno + 1,
                    msg: format!("could not parse cell as number: {e}"),
                });
            }
        }
    }
    Ok(rows)
}

/// Affinely map each feature column so its min lands on `lo` and its max
/// on `hi`; constant columns map to the midpoint.
pub fn normalize_features(ds: &Dataset, lo: f64, hi: f64) -> Result<Dataset> {
    if hi <= lo {
        return Err(Error::InvalidInput(format!(
            "normalization range must satisfy hi > lo, got [{lo}, {hi}]"
        )));
    }
    let mut points = ds.points.clone();
    for mut col in points.columns_mut() {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in col.iter() {
            min = min.min(v);
            max = max.max(v);
        }
        if max > min {
            let scale = (hi - lo) / (max - min);
            col.mapv_inplace(|v| lo + (v - min) * scale);
        } else {
            col.fill(0.5 * (lo + hi));
        }
    }
    Ok(Dataset {
        points,
        labels: ds.labels.clone(),
        ids: ds.ids.clone(),
    })
}

/// Build the kernel matrix requested by `spec`.
pub fn compute_kernel(ds: &Dataset, spec: &KernelSpec) -> Result<KernelMatrix> {
    let n = ds.len();
    match spec {
        KernelSpec::Gaussian { sigma } => {
            // Negated comparison so NaN is rejected along with sigma <= 0.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(*sigma > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "gaussian kernel needs sigma > 0, got {sigma}"
                )));
            }
            let inv = 1.0 / (2.0 * sigma * sigma);
            let mut a = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                a[(i, i)] = 1.0;
                for j in 0..i {
                    let d2: f64 = ds
                        .points
                        .row(i)
                        .iter()
                        .zip(ds.points.row(j).iter())
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum();
                    let v = (-d2 * inv).exp();
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            KernelMatrix::new(a)
        }
        KernelSpec::NormalizedCorrelation => {
            let norms: Vec<f64> = (0..n)
                .map(|i| ds.points.row(i).iter().map(|x| x * x).sum::<f64>().sqrt())
                .collect();
            if let Some(zero) = norms.iter().position(|&v| v == 0.0) {
                return Err(Error::InvalidInput(format!(
                    "normalized correlation undefined: row {zero} has zero norm"
                )));
            }
            let mut a = Array2::<f64>::zeros((n, n));
            for i in 0..n {
                a[(i, i)] = 1.0;
                for j in 0..i {
                    let dot: f64 = ds
                        .points
                        .row(i)
                        .iter()
                        .zip(ds.points.row(j).iter())
                        .map(|(x, y)| x * y)
                        .sum();
                    // Shift [-1, 1] correlation into [0, 1] so downstream
                    // weights stay nonnegative.
                    let v = (dot / (norms[i] * norms[j]) + 1.0) / 2.0;
                    a[(i, j)] = v;
                    a[(j, i)] = v;
                }
            }
            KernelMatrix::new(a)
        }
        KernelSpec::Precomputed(values) => {
            if values.nrows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "precomputed kernel is {}x{} but dataset has {} points",
                    values.nrows(),
                    values.ncols(),
                    n
                )));
            }
            KernelMatrix::new(values.clone())
        }
    }
}

/// Median of all pairwise Euclidean distances; the default Gaussian
/// bandwidth. Falls back to the smallest positive distance, then 1.0,
/// when the median degenerates to zero.
pub fn median_heuristic_sigma(ds: &Dataset) -> f64 {
    let n = ds.len();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in 0..i {
            let d2: f64 = ds
                .points
                .row(i)
                .iter()
                .zip(ds.points.row(j).iter())
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    if dists.is_empty() {
        return 1.0;
    }
    dists.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = dists.len() / 2;
    let median = if dists.len() % 2 == 1 {
        dists[mid]
    } else {
        0.5 * (dists[mid - 1] + dists[mid])
    };
    if median > 0.0 {
        median
    } else {
        dists.iter().copied().find(|&d| d > 0.0).unwrap_or(1.0)
    }
}

/// Two interleaving half-circle arcs with n/2 points each and Gaussian
/// noise of the given standard deviation. Labels are 0 and 1 per arc.
pub fn synth_two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::InvalidInput(format!(
            "two-moons needs an even n >= 4, got {n}"
        )));
    }
    if noise < 0.0 {
        return Err(Error::InvalidInput(format!("noise must be nonnegative, got {noise}")));
    }
    let half = n / 2;
    let mut points = Array2::<f64>::zeros((n, 2));
    let mut labels = Vec::with_capacity(n);
    for i in 0..half {
        let t = std::f64::consts::PI * i as f64 / (half - 1) as f64;
        points[(i, 0)] = t.cos();
        points[(i, 1)] = t.sin();
        labels.push(0);
        points[(half + i, 0)] = 1.0 - t.cos();
        points[(half + i, 1)] = 0.5 - t.sin();
        labels.push(1);
    }
    labels.sort_unstable();
    if noise > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, noise).expect("noise already validated");
        for v in points.iter_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    Dataset::new(points, Some(labels))
}

/// K isotropic Gaussian clusters around the given centers, n_per points
/// each, labels assigned by cluster.
pub fn synth_blobs(
    n_per: usize,
    k: usize,
    centers: &Array2<f64>,
    std: f64,
    seed: u64,
) -> Result<Dataset> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("blobs need K >= 2 clusters, got {k}")));
    }
    if centers.nrows() != k {
        return Err(Error::DimensionMismatch(format!(
            "expected {k} centers, got {}",
            centers.nrows()
        )));
    }
    if n_per == 0 {
        return Err(Error::InvalidInput("n_per must be at least 1".into()));
    }
    if std < 0.0 {
        return Err(Error::InvalidInput(format!("std must be nonnegative, got {std}")));
    }
    let d = centers.ncols();
    let n = n_per * k;
    let mut points = Array2::<f64>::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    for c in 0..k {
        for p in 0..n_per {
            let row = c * n_per + p;
            for j in 0..d {
                let jitter = if std > 0.0 { std * normal.sample(&mut rng) } else { 0.0 };
                points[(row, j)] = centers[(c, j)] + jitter;
            }
            labels.push(c);
        }
    }
    Dataset::new(points, Some(labels))
}
