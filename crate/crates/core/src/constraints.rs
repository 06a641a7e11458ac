//! Must-link / cannot-link constraints for single- and two-source settings:
//! representation, sampling from labels, and (de)serialization.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One pairwise constraint between point `i` of source A and point `j` of
/// source B (B = A for single-source). Positive strength is a must-link,
/// negative a cannot-link; magnitude at most 1 (soft constraints).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairwiseConstraint {
    pub i: usize,
    pub j: usize,
    pub strength: f64,
}

impl PairwiseConstraint {
    pub fn new(i: usize, j: usize, strength: f64) -> Result<Self> {
        if !strength.is_finite() || strength == 0.0 || strength.abs() > 1.0 {
            return Err(Error::InvalidInput(format!(
                "constraint strength must be nonzero with |s| <= 1, got {strength}"
            )));
        }
        Ok(PairwiseConstraint { i, j, strength })
    }

    pub fn is_must_link(&self) -> bool {
        self.strength > 0.0
    }
}

/// Dense initial-constraint matrix Z: entries in [-1, 1], zero where the
/// pair is unconstrained. Single-source (square) Z is symmetric with a
/// zero diagonal.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    values: Array2<f64>,
    single_source: bool,
}

impl ConstraintMatrix {
    /// Validate and wrap a raw constraint matrix. Square matrices follow
    /// the single-source convention: symmetric with a zero diagonal.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, m) = (values.nrows(), values.ncols());
        if n == 0 || m == 0 {
            return Err(Error::InvalidInput("constraint matrix must be nonempty".into()));
        }
        if values.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::InvalidInput(
                "constraint matrix entries must be finite with |z| <= 1".into(),
            ));
        }
        let single_source = n == m;
        if single_source {
            for i in 0..n {
                if values[(i, i)] != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "single-source constraint matrix has nonzero diagonal at {i}"
                    )));
                }
                for j in 0..i {
                    if (values[(i, j)] - values[(j, i)]).abs() >= 1e-12 {
                        return Err(Error::InvalidInput(format!(
                            "single-source constraint matrix is asymmetric at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        Ok(ConstraintMatrix {
            values,
            single_source,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_single_source(&self) -> bool {
        self.single_source
    }
}

/// Sample `count` distinct constrained pairs uniformly without replacement,
/// labeling each +1 (same label) or -1 (different labels).
///
/// Passing the same labels for both sides selects the single-source
/// convention: unordered pairs with i < j, diagonal excluded. Distinct
/// label lists sample from the full cross product.
pub fn constraints_from_labels(
    labels_a: &[usize],
    labels_b: &[usize],
    count: usize,
    seed: u64,
) -> Result<Vec<PairwiseConstraint>> {
    let n_a = labels_a.len();
    let n_b = labels_b.len();
    if n_a == 0 || n_b == 0 {
        return Err(Error::InvalidInput("cannot sample constraints from empty labels".into()));
    }
    let single_source = labels_a == labels_b;
    let total = if single_source {
        n_a * (n_a - 1) / 2
    } else {
        n_a * n_b
    };
    if count > total {
        return Err(Error::InvalidInput(format!(
            "requested {count} constraints but only {total} distinct pairs exist"
        )));
    }
    if count == 0 {
        return Ok(Vec::new());
    }

    // Row start offsets of the strict upper triangle, for decoding a flat
    // pair index back to (i, j) with i < j.
    let row_start: Vec<usize> = if single_source {
        (0..n_a).map(|i| i * n_a - i * (i + 1) / 2).collect()
    } else {
        Vec::new()
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, total, count);
    let mut out = Vec::with_capacity(count);
    for t in picks.iter() {
        let (i, j) = if single_source {
            let i = match row_start.binary_search(&t) {
                Ok(r) => r,
                Err(r) => r - 1,
            };
            // row_start[i] maps to pair (i, i+1)
            let j = i + 1 + (t - row_start[i]);
            (i, j)
        } else {
            (t / n_b, t % n_b)
        };
        let strength = if labels_a[i] == labels_b[j] { 1.0 } else { -1.0 };
        out.push(PairwiseConstraint { i, j, strength });
    }
    Ok(out)
}

/// Assemble constraints into a dense N x M matrix. When M = N each entry
/// is mirrored to (j, i). Identical duplicates collapse; duplicates with
/// differing strengths are rejected.
pub fn to_matrix(cs: &[PairwiseConstraint], n: usize, m: usize) -> Result<ConstraintMatrix> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("constraint matrix must be nonempty".into()));
    }
    let single_source = n == m;
    let mut values = Array2::<f64>::zeros((n, m));
    let mut set = Array2::<bool>::from_elem((n, m), false);
    for c in cs {
        if !c.strength.is_finite() || c.strength == 0.0 || c.strength.abs() > 1.0 {
            return Err(Error::InvalidInput(format!(
                "constraint ({}, {}) has invalid strength {}",
                c.i, c.j, c.strength
            )));
        }
        if c.i >= n || c.j >= m {
            return Err(Error::InvalidInput(format!(
                "constraint ({}, {}) out of bounds for a {n}x{m} matrix",
                c.i, c.j
            )));
        }
        if single_source && c.i == c.j {
            return Err(Error::InvalidInput(format!(
                "single-source constraint on the diagonal at ({}, {})",
                c.i, c.i
            )));
        }
        let targets: &[(usize, usize)] = if single_source {
            &[(c.i, c.j), (c.j, c.i)]
        } else {
            &[(c.i, c.j)]
        };
        for &(r, col) in targets {
            if set[(r, col)] && values[(r, col)] != c.strength {
                return Err(Error::ConstraintConflict {
                    i: c.i,
                    j: c.j,
                    a: values[(r, col)],
                    b: c.strength,
                });
            }
            values[(r, col)] = c.strength;
            set[(r, col)] = true;
        }
    }
    Ok(ConstraintMatrix {
        values,
        single_source,
    })
}

/// Assemble constraints between two distinct sources into a dense N x M
/// matrix. Unlike `to_matrix`, a square result is still treated as
/// cross-source: nothing is mirrored and diagonal cells are allowed, so
/// equal-sized paired sources (item i in one, item i in the other) work.
pub fn to_matrix_cross(cs: &[PairwiseConstraint], n: usize, m: usize) -> Result<ConstraintMatrix> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidInput("constraint matrix must be nonempty".into()));
    }
    let mut values = Array2::<f64>::zeros((n, m));
    let mut set = Array2::<bool>::from_elem((n, m), false);
    for c in cs {
        if !c.strength.is_finite() || c.strength == 0.0 || c.strength.abs() > 1.0 {
            return Err(Error::InvalidInput(format!(
                "constraint ({}, {}) has invalid strength {}",
                c.i, c.j, c.strength
            )));
        }
        if c.i >= n || c.j >= m {
            return Err(Error::InvalidInput(format!(
                "constraint ({}, {}) out of bounds for a {n}x{m} matrix",
                c.i, c.j
            )));
        }
        if set[(c.i, c.j)] && values[(c.i, c.j)] != c.strength {
            return Err(Error::ConstraintConflict {
                i: c.i,
                j: c.j,
                a: values[(c.i, c.j)],
                b: c.strength,
            });
        }
        values[(c.i, c.j)] = c.strength;
        set[(c.i, c.j)] = true;
    }
    Ok(ConstraintMatrix {
        values,
        single_source: false,
    })
}

/// Parse a constraint file: CSV rows "i,j,strength", '#' comments and blank
/// lines skipped.
pub fn load_constraints(path: &str) -> Result<Vec<PairwiseConstraint>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.into(),
        source,
    })?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |msg: String| Error::Parse {
            path: path.into(),
            line: lineno + 1,
            msg,
        };
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != 3 {
            return Err(parse_err(format!("expected 3 fields i,j,strength, found {}", cells.len())));
        }
        let i: usize = cells[0]
            .parse()
            .map_err(|e| parse_err(format!("bad index '{}': {e}", cells[0])))?;
        let j: usize = cells[1]
            .parse()
            .map_err(|e| parse_err(format!("bad index '{}': {e}", cells[1])))?;
        let s: f64 = cells[2]
            .parse()
            .map_err(|e| parse_err(format!("bad strength '{}': {e}", cells[2])))?;
        out.push(
            PairwiseConstraint::new(i, j, s)
                .map_err(|e| parse_err(e.to_string()))?,
        );
    }
    Ok(out)
}

/// Write constraints as CSV rows "i,j,strength".
pub fn save_constraints(cs: &[PairwiseConstraint], path: &str) -> Result<()> {
    let mut text = String::from("# i,j,strength\n");
    for c in cs {
        text.push_str(&format!("{},{},{}\n", c.i, c.j, c.strength));
    }
    crate::io::atomic_write(path, text.as_bytes())
}
