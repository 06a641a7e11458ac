//! Pairwise-constraint propagation: vertical and horizontal label-passing
//! sweeps, their closed-form limits on one and two sources, and exact
//! Lyapunov/Sylvester reference solvers.
//!
//! The single-source closed form is
//!
//! ```text
//! F* = (1 - alpha)^2 (I - alpha*Lbar)^-1 Z (I - alpha*Lbar)^-1
//! ```
//!
//! reached by iterating `F(t+1) = alpha*Lbar*F(t) + (1-alpha)*Z` down the
//! columns and then the same sweep across the rows. The two-source variant
//! carries one affinity and one alpha per side. The exact-matrix-equation
//! solver instead solves `(I + mu*L)F + F(I + mu*L) = 2Z` (or its
//! two-sided analog) by symmetric eigendecomposition; its solution is a
//! distinct reference point, not the same matrix as the closed form.

use ndarray::Array2;
use rayon::prelude::*;

use crate::constraints::ConstraintMatrix;
use crate::error::{Error, Result};
use crate::graph::NormalizedAffinity;
use crate::linalg::{cholesky, cholesky_solve, conjugate_gradient, sym_eigen};

pub const DEFAULT_ALPHA: f64 = 0.6;
pub const DEFAULT_ALPHA_X: f64 = 0.1;
pub const DEFAULT_ALPHA_Y: f64 = 0.025;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Relative-change denominators are floored here so an all-zero iterate
/// still converges.
const NORM_FLOOR: f64 = 1e-30;

/// Largest size at which a failed conjugate-gradient solve falls back to a
/// dense Cholesky factorization.
const DENSE_FALLBACK_MAX_N: usize = 512;

/// Which algorithm realizes the propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Fixed-point sweeps until the relative change drops below `tol`.
    Iterative,
    /// Two positive-definite linear solves per side for the closed form.
    ClosedForm,
    /// Exact Lyapunov/Sylvester solution via eigendecomposition.
    ExactMatrixEquation,
}

/// Propagation strengths and stopping rules. `alpha_x` drives the vertical
/// (row-source) sweep and `alpha_y` the horizontal one; single-source runs
/// keep them equal. Each alpha lies in [0, 1) and maps to the regularizer
/// mu = alpha / (1 - alpha).
#[derive(Debug, Clone, Copy)]
pub struct PropagationParams {
    pub alpha_x: f64,
    pub alpha_y: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub solver: Solver,
}

impl PropagationParams {
    /// Single-source defaults: alpha 0.6 on both sweeps.
    pub fn single_source(alpha: f64) -> Self {
        PropagationParams {
            alpha_x: alpha,
            alpha_y: alpha,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            solver: Solver::ClosedForm,
        }
    }

    /// Two-source defaults: alpha_x 0.1, alpha_y 0.025.
    pub fn two_source(alpha_x: f64, alpha_y: f64) -> Self {
        PropagationParams {
            alpha_x,
            alpha_y,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            solver: Solver::ClosedForm,
        }
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn mu_x(&self) -> f64 {
        self.alpha_x / (1.0 - self.alpha_x)
    }

    pub fn mu_y(&self) -> f64 {
        self.alpha_y / (1.0 - self.alpha_y)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("alpha_x", self.alpha_x), ("alpha_y", self.alpha_y)] {
            if !(0.0..1.0).contains(&a) {
                return Err(Error::InvalidInput(format!(
                    "{name} must lie in [0, 1), got {a}"
                )));
            }
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be a positive real, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams::single_source(DEFAULT_ALPHA)
    }
}

/// One stage of the direction-ablation sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Vertical,
    Horizontal,
}

/// Finalized propagation output: entries clipped into [-1, 1], with a flag
/// recording whether clipping moved anything and the iteration count spent
/// (fixed-point sweeps or linear-solver steps; 0 for the exact solver).
#[derive(Debug, Clone)]
pub struct PropagatedConstraints {
    values: Array2<f64>,
    clipped: bool,
    iterations: usize,
}

impl PropagatedConstraints {
    pub(crate) fn finalize(mut values: Array2<f64>, iterations: usize) -> Self {
        let mut clipped = false;
        for v in values.iter_mut() {
            if *v > 1.0 {
                *v = 1.0;
                clipped = true;
            } else if *v < -1.0 {
                *v = -1.0;
                clipped = true;
            }
        }
        PropagatedConstraints {
            values,
            clipped,
            iterations,
        }
    }

    /// Wrap an externally produced score matrix; entries must already lie
    /// in [-1, 1].
    pub fn from_values(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || v.abs() > 1.0) {
            return Err(Error::InvalidInput(
                "propagated constraints must be finite with |f| <= 1".into(),
            ));
        }
        Ok(PropagatedConstraints {
            values,
            clipped: false,
            iterations: 0,
        })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn clipped(&self) -> bool {
        self.clipped
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }
}

fn to_cols(m: &Array2<f64>) -> Vec<Vec<f64>> {
    (0..m.ncols()).map(|j| m.column(j).to_vec()).collect()
}

fn to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).to_vec()).collect()
}

fn from_cols(n: usize, cols: &[Vec<f64>]) -> Array2<f64> {
    Array2::from_shape_fn((n, cols.len()), |(i, j)| cols[j][i])
}

fn from_rows(m: usize, rows: &[Vec<f64>]) -> Array2<f64> {
    Array2::from_shape_fn((rows.len(), m), |(i, j)| rows[i][j])
}

/// Run `f(t+1) = alpha*Lbar*f(t) + (1-alpha)*z` per column from f(0) = z
/// until the relative Frobenius change drops below tol. Columns are
/// independent subproblems; they run in parallel and the result is
/// identical to sequential execution.
fn iterate_cols(
    lbar: &NormalizedAffinity,
    z_cols: &[Vec<f64>],
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let n = lbar.n();
    let mut cur: Vec<Vec<f64>> = z_cols.to_vec();
    let mut last_rel = f64::INFINITY;
    for t in 1..=max_iter {
        let stepped: Vec<(Vec<f64>, f64, f64)> = cur
            .par_iter()
            .zip(z_cols.par_iter())
            .map(|(col, z_col)| {
                let mut next = vec![0.0; n];
                lbar.matvec(col, &mut next);
                let mut diff2 = 0.0;
                let mut old2 = 0.0;
                for i in 0..n {
                    let v = alpha * next[i] + (1.0 - alpha) * z_col[i];
                    diff2 += (v - col[i]) * (v - col[i]);
                    old2 += col[i] * col[i];
                    next[i] = v;
                }
                (next, diff2, old2)
            })
            .collect();
        let mut diff2 = 0.0;
        let mut old2 = 0.0;
        cur = stepped
            .into_iter()
            .map(|(col, d, o)| {
                diff2 += d;
                old2 += o;
                col
            })
            .collect();
        last_rel = diff2.sqrt() / old2.sqrt().max(NORM_FLOOR);
        if last_rel < tol {
            return Ok((cur, t));
        }
    }
    Err(Error::NoConvergence {
        max_iter,
        residual: last_rel,
    })
}

/// Solve (I - alpha*Lbar) x = b for every column of `rhs`, returning the
/// solutions and the total solver iterations. Conjugate gradients first
/// (the operator is positive definite with eigenvalues in
/// [1-alpha, 1+alpha]); small systems fall back to a dense Cholesky
/// factorization if CG stalls.
fn solve_cols(
    lbar: &NormalizedAffinity,
    rhs: &[Vec<f64>],
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<Vec<f64>>, usize)> {
    let n = lbar.n();
    let apply = |x: &[f64], y: &mut [f64]| {
        lbar.matvec(x, y);
        for i in 0..n {
            y[i] = x[i] - alpha * y[i];
        }
    };
    let solved: Vec<Result<(Vec<f64>, usize)>> = rhs
        .par_iter()
        .map(|b| conjugate_gradient(apply, b, tol, max_iter))
        .collect();

    let mut cols = Vec::with_capacity(rhs.len());
    let mut iterations = 0;
    let mut failed = None;
    for r in solved {
        match r {
            Ok((x, it)) => {
                iterations += it;
                cols.push(x);
            }
            Err(e) => {
                failed = Some(e);
                break;
            }
        }
    }
    let Some(err) = failed else {
        return Ok((cols, iterations));
    };
    if n > DENSE_FALLBACK_MAX_N {
        return Err(err);
    }
    // Deterministic dense path: refactor once, solve every column.
    let mut a = lbar.to_dense();
    a.mapv_inplace(|v| -alpha * v);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let l = cholesky(&a)?;
    let cols = rhs
        .iter()
        .map(|b| {
            let mut x = b.clone();
            cholesky_solve(&l, &mut x);
            x
        })
        .collect();
    Ok((cols, 0))
}

/// Column-wise sweep `F(t+1) = alpha*Lbar*F(t) + (1-alpha)*Z` from
/// F(0) = Z; the limit is (1-alpha) (I - alpha*Lbar)^-1 Z. Uses `alpha_x`.
pub fn propagate_vertical(
    lbar: &NormalizedAffinity,
    z: &ConstraintMatrix,
    p: &PropagationParams,
) -> Result<Array2<f64>> {
    p.validate()?;
    if z.rows() != lbar.n() {
        return Err(Error::DimensionMismatch(format!(
            "constraint matrix has {} rows but the affinity is {}x{}",
            z.rows(),
            lbar.n(),
            lbar.n()
        )));
    }
    let (cols, _) = iterate_cols(lbar, &to_cols(z.values()), p.alpha_x, p.tol, p.max_iter)?;
    Ok(from_cols(lbar.n(), &cols))
}

/// Row-wise sweep `F(t+1) = alpha*F(t)*Lbar + (1-alpha)*F_v` from
/// F(0) = F_v, realized as the vertical sweep on the transpose. Uses
/// `alpha_y`, which equals `alpha_x` for single-source parameters.
pub fn propagate_horizontal(
    f_v: &Array2<f64>,
    lbar: &NormalizedAffinity,
    p: &PropagationParams,
) -> Result<Array2<f64>> {
    p.validate()?;
    if f_v.ncols() != lbar.n() {
        return Err(Error::DimensionMismatch(format!(
            "input has {} columns but the column-side affinity is {}x{}",
            f_v.ncols(),
            lbar.n(),
            lbar.n()
        )));
    }
    let (rows, _) = iterate_cols(lbar, &to_rows(f_v), p.alpha_y, p.tol, p.max_iter)?;
    Ok(from_rows(lbar.n(), &rows))
}

/// Single-source exhaustive propagation. Dispatch by solver:
/// iterative sweeps, the closed form via linear solves, or the exact
/// Lyapunov reference. Output is clipped into [-1, 1].
pub fn e2cp(
    lbar: &NormalizedAffinity,
    z: &ConstraintMatrix,
    p: &PropagationParams,
) -> Result<PropagatedConstraints> {
    p.validate()?;
    let n = lbar.n();
    if z.rows() != n || z.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "single-source propagation needs {n}x{n} constraints, got {}x{}",
            z.rows(),
            z.cols()
        )));
    }
    let alpha = p.alpha_x;
    match p.solver {
        Solver::Iterative => {
            let (v_cols, it1) = iterate_cols(lbar, &to_cols(z.values()), alpha, p.tol, p.max_iter)?;
            let f_v = from_cols(n, &v_cols);
            let (h_rows, it2) = iterate_cols(lbar, &to_rows(&f_v), alpha, p.tol, p.max_iter)?;
            Ok(PropagatedConstraints::finalize(from_rows(n, &h_rows), it1 + it2))
        }
        Solver::ClosedForm => {
            let (x_cols, it1) = solve_cols(lbar, &to_cols(z.values()), alpha, p.tol, p.max_iter)?;
            let x = from_cols(n, &x_cols);
            let (f_rows, it2) = solve_cols(lbar, &to_rows(&x), alpha, p.tol, p.max_iter)?;
            let mut f = from_rows(n, &f_rows);
            let scale = (1.0 - alpha) * (1.0 - alpha);
            // The closed form is symmetric analytically; averaging with the
            // transpose removes the per-column solver noise.
            for i in 0..n {
                for j in 0..=i {
                    let v = scale * 0.5 * (f[(i, j)] + f[(j, i)]);
                    f[(i, j)] = v;
                    f[(j, i)] = v;
                }
            }
            Ok(PropagatedConstraints::finalize(f, it1 + it2))
        }
        Solver::ExactMatrixEquation => {
            let lap = dense_laplacian(lbar);
            let f = solve_lyapunov(&lap, z, p.mu_x())?;
            Ok(PropagatedConstraints::finalize(f, 0))
        }
    }
}

/// Two-source propagation: vertical sweep over the row source with
/// alpha_x, then horizontal over the column source with alpha_y. The
/// closed form is
/// (1-alpha_x)(1-alpha_y) (I - alpha_x*Lbar_x)^-1 Z (I - alpha_y*Lbar_y)^-1
/// and the sweep order does not change the limit. With equal sides it
/// reduces to single-source propagation.
pub fn mscp(
    lbar_x: &NormalizedAffinity,
    lbar_y: &NormalizedAffinity,
    z: &ConstraintMatrix,
    p: &PropagationParams,
) -> Result<PropagatedConstraints> {
    p.validate()?;
    let (n, m) = (lbar_x.n(), lbar_y.n());
    if z.rows() != n || z.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "constraints are {}x{} but the sources are {n} and {m} items",
            z.rows(),
            z.cols()
        )));
    }
    match p.solver {
        Solver::Iterative => {
            let (v_cols, it1) =
                iterate_cols(lbar_x, &to_cols(z.values()), p.alpha_x, p.tol, p.max_iter)?;
            let f_x = from_cols(n, &v_cols);
            let (h_rows, it2) =
                iterate_cols(lbar_y, &to_rows(&f_x), p.alpha_y, p.tol, p.max_iter)?;
            Ok(PropagatedConstraints::finalize(from_rows(m, &h_rows), it1 + it2))
        }
        Solver::ClosedForm => {
            let (x_cols, it1) =
                solve_cols(lbar_x, &to_cols(z.values()), p.alpha_x, p.tol, p.max_iter)?;
            let x = from_cols(n, &x_cols);
            let (f_rows, it2) = solve_cols(lbar_y, &to_rows(&x), p.alpha_y, p.tol, p.max_iter)?;
            let mut f = from_rows(m, &f_rows);
            let scale = (1.0 - p.alpha_x) * (1.0 - p.alpha_y);
            f.mapv_inplace(|v| v * scale);
            Ok(PropagatedConstraints::finalize(f, it1 + it2))
        }
        Solver::ExactMatrixEquation => {
            let lap_x = dense_laplacian(lbar_x);
            let lap_y = dense_laplacian(lbar_y);
            let f = solve_sylvester(&lap_x, &lap_y, z.values(), p.mu_x(), p.mu_y())?;
            Ok(PropagatedConstraints::finalize(f, 0))
        }
    }
}

/// Apply the sweep stages in order, each starting from the previous
/// result, then clip. `[Vertical, Horizontal]` reproduces the standard
/// two-sweep propagation; other sequences exist for ablation runs.
/// The exact-matrix-equation solver has no per-direction decomposition.
pub fn propagate_directions(
    lbar: &NormalizedAffinity,
    z: &ConstraintMatrix,
    p: &PropagationParams,
    dirs: &[Direction],
) -> Result<PropagatedConstraints> {
    p.validate()?;
    let n = lbar.n();
    if z.rows() != n || z.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "direction sweeps need {n}x{n} constraints, got {}x{}",
            z.rows(),
            z.cols()
        )));
    }
    if p.solver == Solver::ExactMatrixEquation {
        return Err(Error::InvalidInput(
            "direction sequences require the iterative or closed_form solver".into(),
        ));
    }
    let mut cur = z.values().clone();
    let mut iterations = 0;
    for d in dirs {
        let (alpha, stage_cols) = match d {
            Direction::Vertical => (p.alpha_x, to_cols(&cur)),
            Direction::Horizontal => (p.alpha_y, to_rows(&cur)),
        };
        let (out, it) = match p.solver {
            Solver::Iterative => iterate_cols(lbar, &stage_cols, alpha, p.tol, p.max_iter)?,
            Solver::ClosedForm => {
                let (mut cols, it) = solve_cols(lbar, &stage_cols, alpha, p.tol, p.max_iter)?;
                for col in cols.iter_mut() {
                    for v in col.iter_mut() {
                        *v *= 1.0 - alpha;
                    }
                }
                (cols, it)
            }
            Solver::ExactMatrixEquation => unreachable!(),
        };
        iterations += it;
        cur = match d {
            Direction::Vertical => from_cols(n, &out),
            Direction::Horizontal => from_rows(n, &out),
        };
    }
    Ok(PropagatedConstraints::finalize(cur, iterations))
}

fn dense_laplacian(lbar: &NormalizedAffinity) -> Array2<f64> {
    let n = lbar.n();
    let mut l = lbar.to_dense();
    l.mapv_inplace(|v| -v);
    for i in 0..n {
        l[(i, i)] += 1.0;
    }
    l
}

/// Exact solution of (I + mu*L) F + F (I + mu*L) = 2Z for symmetric
/// positive semidefinite L via one eigendecomposition: with
/// I + mu*L = Q diag(lambda) Q^T, the solution is F = Q G Q^T where
/// G_ij = 2 (Q^T Z Q)_ij / (lambda_i + lambda_j). Unique and symmetric
/// because every eigenvalue sum is positive.
pub fn solve_lyapunov(lap: &Array2<f64>, z: &ConstraintMatrix, mu: f64) -> Result<Array2<f64>> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "regularization mu must be a nonnegative real, got {mu}"
        )));
    }
    let n = lap.nrows();
    if lap.ncols() != n || z.rows() != n || z.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "operator is {}x{}, constraints {}x{}",
            n,
            lap.ncols(),
            z.rows(),
            z.cols()
        )));
    }
    let mut a = lap.clone();
    a.mapv_inplace(|v| v * mu);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let eig = sym_eigen(&a)?;
    let q = &eig.vectors;
    let gt = q.t().dot(z.values()).dot(q);
    let g = Array2::from_shape_fn((n, n), |(i, j)| {
        2.0 * gt[(i, j)] / (eig.values[i] + eig.values[j])
    });
    Ok(q.dot(&g).dot(&q.t()))
}

/// Exact solution of (I + mu_x*L_x) F + F (I + mu_y*L_y) = 2Z via one
/// eigendecomposition per side: G_ij = 2 (Q_x^T Z Q_y)_ij /
/// (lambda_x_i + lambda_y_j), F = Q_x G Q_y^T.
pub fn solve_sylvester(
    lap_x: &Array2<f64>,
    lap_y: &Array2<f64>,
    z: &Array2<f64>,
    mu_x: f64,
    mu_y: f64,
) -> Result<Array2<f64>> {
    for (name, mu) in [("mu_x", mu_x), ("mu_y", mu_y)] {
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "regularization {name} must be a nonnegative real, got {mu}"
            )));
        }
    }
    let (n, m) = (lap_x.nrows(), lap_y.nrows());
    if lap_x.ncols() != n || lap_y.ncols() != m || z.nrows() != n || z.ncols() != m {
        return Err(Error::DimensionMismatch(format!(
            "operators are {n}x{} and {m}x{}, constraints {}x{}",
            lap_x.ncols(),
            lap_y.ncols(),
            z.nrows(),
            z.ncols()
        )));
    }
    let mut a = lap_x.clone();
    a.mapv_inplace(|v| v * mu_x);
    for i in 0..n {
        a[(i, i)] += 1.0;
    }
    let mut b = lap_y.clone();
    b.mapv_inplace(|v| v * mu_y);
    for i in 0..m {
        b[(i, i)] += 1.0;
    }
    let ex = sym_eigen(&a)?;
    let ey = sym_eigen(&b)?;
    let gt = ex.vectors.t().dot(z).dot(&ey.vectors);
    let g = Array2::from_shape_fn((n, m), |(i, j)| {
        2.0 * gt[(i, j)] / (ex.values[i] + ey.values[j])
    });
    Ok(ex.vectors.dot(&g).dot(&ey.vectors.t()))
}

/// Objective the propagation minimizes:
/// ||F - Z||_F^2 + (mu_x/2) tr(F^T L_x F) + (mu_y/2) tr(F L_y F^T).
pub fn regularized_energy(
    f: &Array2<f64>,
    z: &ConstraintMatrix,
    lap_x: &Array2<f64>,
    lap_y: &Array2<f64>,
    mu_x: f64,
    mu_y: f64,
) -> Result<f64> {
    check_energy_shapes(f, z.values(), lap_x, lap_y)?;
    let fit: f64 = f
        .iter()
        .zip(z.values().iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let lf = lap_x.dot(f);
    let smooth_x: f64 = f.iter().zip(lf.iter()).map(|(a, b)| a * b).sum();
    let fl = f.dot(lap_y);
    let smooth_y: f64 = f.iter().zip(fl.iter()).map(|(a, b)| a * b).sum();
    Ok(fit + 0.5 * mu_x * smooth_x + 0.5 * mu_y * smooth_y)
}

/// Gradient of `regularized_energy` in F:
/// 2(F - Z) + mu_x L_x F + mu_y F L_y.
pub fn energy_gradient(
    f: &Array2<f64>,
    z: &ConstraintMatrix,
    lap_x: &Array2<f64>,
    lap_y: &Array2<f64>,
    mu_x: f64,
    mu_y: f64,
) -> Result<Array2<f64>> {
    check_energy_shapes(f, z.values(), lap_x, lap_y)?;
    let mut g = f - z.values();
    g.mapv_inplace(|v| 2.0 * v);
    g = g + mu_x * &lap_x.dot(f) + mu_y * &f.dot(lap_y);
    Ok(g)
}

fn check_energy_shapes(
    f: &Array2<f64>,
    z: &Array2<f64>,
    lap_x: &Array2<f64>,
    lap_y: &Array2<f64>,
) -> Result<()> {
    let (n, m) = (f.nrows(), f.ncols());
    if z.nrows() != n
        || z.ncols() != m
        || lap_x.nrows() != n
        || lap_x.ncols() != n
        || lap_y.nrows() != m
        || lap_y.ncols() != m
    {
        return Err(Error::DimensionMismatch(format!(
            "energy terms disagree: F {n}x{m}, Z {}x{}, L_x {}x{}, L_y {}x{}",
            z.nrows(),
            z.ncols(),
            lap_x.nrows(),
            lap_x.ncols(),
            lap_y.nrows(),
            lap_y.ncols()
        )));
    }
    Ok(())
}
