//! Dense symmetric linear algebra: eigendecomposition, SPD solves, and the
//! block power iteration used for large embeddings.
//!
//! The eigensolver is the classical two-stage reduction: Householder
//! tridiagonalization followed by the implicit-shift QL iteration, with
//! eigenvectors accumulated along the way. Eigenvalues come back ascending.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Eigendecomposition of a real symmetric matrix: `values[i]` ascending,
/// `vectors` holding the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Maximum QL iterations per eigenvalue before giving up.
const QL_MAX_ITER: usize = 64;

/// Full eigendecomposition of a symmetric matrix.
///
/// Symmetry is assumed, not checked; callers pass matrices that are
/// symmetric by construction. Errors only if the QL iteration stalls.
pub fn sym_eigen(a: &Array2<f64>) -> Result<SymEigen> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "sym_eigen needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidInput("sym_eigen on empty matrix".into()));
    }

    // Work in column-major storage so the QL rotations walk contiguous
    // memory: v[col * n + row].
    let mut v = vec![0.0f64; n * n];
    for j in 0..n {
        for i in 0..n {
            v[j * n + i] = a[(i, j)];
        }
    }
    let mut d = vec![0.0f64; n];
    let mut e = vec![0.0f64; n];

    tred2(&mut v, &mut d, &mut e, n);
    tql2(&mut v, &mut d, &mut e, n)?;

    let vectors = Array2::from_shape_fn((n, n), |(i, j)| v[j * n + i]);
    Ok(SymEigen { values: d, vectors })
}

/// Householder reduction of a symmetric matrix to tridiagonal form
/// (EISPACK tred2), accumulating the orthogonal transformation in `v`.
#[allow(clippy::needless_range_loop)]
fn tred2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    let idx = |i: usize, j: usize| j * n + i;

    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for k in 0..i {
                d[k] /= scale;
                h += d[k] * d[k];
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    g += v[idx(k, j)] * d[k];
                    e[k] += v[idx(k, j)] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix
/// (EISPACK tql2), with the final eigenvalues sorted ascending.
#[allow(clippy::needless_range_loop)]
fn tql2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<()> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0f64;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;

    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > QL_MAX_ITER {
                    return Err(Error::EigenFailure(format!(
                        "QL iteration stalled at eigenvalue {l} after {QL_MAX_ITER} sweeps"
                    )));
                }

                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for item in d.iter_mut().take(n).skip(l + 2) {
                    *item -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    // Rotate the eigenvector columns i and i+1.
                    let (lo, hi) = v.split_at_mut((i + 1) * n);
                    let col_i = &mut lo[i * n..(i + 1) * n];
                    let col_i1 = &mut hi[..n];
                    for k in 0..n {
                        let h = col_i1[k];
                        col_i1[k] = s * col_i[k] + c * h;
                        col_i[k] = c * col_i[k] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;

                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }

    // Selection sort, swapping vector columns along with the values.
    for i in 0..n.saturating_sub(1) {
        let mut k = i;
        let mut p = d[i];
        for j in (i + 1)..n {
            if d[j] < p {
                k = j;
                p = d[j];
            }
        }
        if k != i {
            d[k] = d[i];
            d[i] = p;
            for row in 0..n {
                v.swap(i * n + row, k * n + row);
            }
        }
    }
    Ok(())
}

/// Conjugate gradients for an SPD operator given as a matvec closure.
///
/// Solves `A x = b` to a relative residual of `tol`, starting from zero.
/// Returns the solution and the iteration count.
pub fn conjugate_gradient<F>(apply: F, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], 0));
    }

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = b.to_vec();
    let mut ap = vec![0.0; n];
    let mut rs_old = dot(&r, &r);
    let stop = (tol * b_norm) * (tol * b_norm);

    for iter in 0..max_iter {
        if rs_old <= stop {
            return Ok((x, iter));
        }
        apply(&p, &mut ap);
        let denom = dot(&p, &ap);
        if denom <= 0.0 {
            return Err(Error::EigenFailure(
                "conjugate gradient operator is not positive definite".into(),
            ));
        }
        let alpha = rs_old / denom;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }

    if rs_old <= stop {
        Ok((x, max_iter))
    } else {
        Err(Error::NoConvergence {
            max_iter,
            residual: rs_old.sqrt() / b_norm,
        })
    }
}

/// Cholesky factorization A = L Lᵀ of an SPD matrix; returns L.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[(i, j)];
            for k in 0..j {
                sum -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::EigenFailure(
                        "cholesky pivot not positive; matrix is not SPD".into(),
                    ));
                }
                l[(i, j)] = sum.sqrt();
            } else {
                l[(i, j)] = sum / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solve L Lᵀ x = b in place given the Cholesky factor L.
pub fn cholesky_solve(l: &Array2<f64>, b: &mut [f64]) {
    let n = l.nrows();
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[(i, k)] * b[k];
        }
        b[i] = sum / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut sum = b[i];
        for k in (i + 1)..n {
            sum -= l[(k, i)] * b[k];
        }
        b[i] = sum / l[(i, i)];
    }
}

/// Leading eigenpairs of a symmetric operator by subspace iteration.
///
/// Finds the `m` algebraically largest eigenpairs of an operator whose
/// spectrum lies in [-1, 1], iterating on the shifted operator A + I so
/// that algebraically largest and largest-magnitude coincide. Used for
/// embeddings too large for the dense path.
pub fn top_eigenpairs_subspace<F>(
    apply: F,
    n: usize,
    m: usize,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<(Vec<f64>, Array2<f64>)>
where
    F: Fn(&[f64], &mut [f64]),
{
    use rand::{Rng, SeedableRng};
    let m = m.min(n);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);

    // Column-major block of m basis vectors.
    let mut q: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    orthonormalize(&mut q);

    let mut ritz_prev = vec![f64::INFINITY; m];
    let mut y: Vec<Vec<f64>> = vec![vec![0.0; n]; m];

    for _ in 0..max_iter {
        // Y = (A + I) Q
        for (yc, qc) in y.iter_mut().zip(q.iter()) {
            apply(qc, yc);
            for i in 0..n {
                yc[i] += qc[i];
            }
        }
        std::mem::swap(&mut q, &mut y);
        orthonormalize(&mut q);

        // Rayleigh-Ritz on the original operator.
        let mut aq: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
        for (ac, qc) in aq.iter_mut().zip(q.iter()) {
            apply(qc, ac);
        }
        let mut h = Array2::<f64>::zeros((m, m));
        for i in 0..m {
            for j in 0..m {
                h[(i, j)] = dot(&q[i], &aq[j]);
            }
        }
        let h = &h.t().to_owned() + &h;
        let eig = sym_eigen(&h.mapv(|x| 0.5 * x))?;

        // Rotate the basis into Ritz vectors, descending eigenvalue order.
        let mut rotated: Vec<Vec<f64>> = vec![vec![0.0; n]; m];
        let mut ritz = vec![0.0; m];
        for (out_idx, src_idx) in (0..m).rev().enumerate() {
            ritz[out_idx] = eig.values[src_idx];
            for (j, qc) in q.iter().enumerate() {
                let w = eig.vectors[(j, src_idx)];
                if w != 0.0 {
                    for i in 0..n {
                        rotated[out_idx][i] += w * qc[i];
                    }
                }
            }
        }
        q = rotated;

        let drift = ritz
            .iter()
            .zip(ritz_prev.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        ritz_prev.copy_from_slice(&ritz);
        if drift < tol {
            let mut vectors = Array2::<f64>::zeros((n, m));
            for (j, qc) in q.iter().enumerate() {
                for i in 0..n {
                    vectors[(i, j)] = qc[i];
                }
            }
            return Ok((ritz, vectors));
        }
    }

    Err(Error::NoConvergence {
        max_iter,
        residual: f64::NAN,
    })
}

/// Modified Gram-Schmidt, run twice for numerical safety.
fn orthonormalize(cols: &mut [Vec<f64>]) {
    for _pass in 0..2 {
        for j in 0..cols.len() {
            for i in 0..j {
                let (head, tail) = cols.split_at_mut(j);
                let proj = dot(&head[i], &tail[0]);
                for (t, h) in tail[0].iter_mut().zip(head[i].iter()) {
                    *t -= proj * h;
                }
            }
            let nrm = norm2(&cols[j]);
            if nrm > 0.0 {
                for x in cols[j].iter_mut() {
                    *x /= nrm;
                }
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Frobenius norm of a dense matrix.
pub fn fro_norm(a: &Array2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Largest absolute entry of a dense matrix.
pub fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            for j in 0..=i {
                let x = rng.random::<f64>() * 2.0 - 1.0;
                a[(i, j)] = x;
                a[(j, i)] = x;
            }
        }
        a
    }

    #[test]
    fn eigen_reconstructs_random_matrix() {
        for seed in 0..4u64 {
            let n = 30;
            let a = random_symmetric(n, seed);
            let eig = sym_eigen(&a).unwrap();
            let scale = fro_norm(&a).max(1.0);

            // A v = lambda v for every pair.
            for j in 0..n {
                let v = eig.vectors.column(j);
                let av = a.dot(&v);
                for i in 0..n {
                    assert!(
                        (av[i] - eig.values[j] * v[i]).abs() < 1e-10 * scale,
                        "residual too large at ({i}, {j})"
                    );
                }
            }

            // Orthonormal columns.
            let gram = eig.vectors.t().dot(&eig.vectors);
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((gram[(i, j)] - expect).abs() < 1e-10);
                }
            }

            // Ascending values.
            for j in 1..n {
                assert!(eig.values[j] >= eig.values[j - 1]);
            }
        }
    }

    #[test]
    fn eigen_diagonal_matrix() {
        let a = arr2(&[[3.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 2.0]]);
        let eig = sym_eigen(&a).unwrap();
        assert!((eig.values[0] + 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 2.0).abs() < 1e-14);
        assert!((eig.values[2] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn eigen_handles_repeated_eigenvalues() {
        // Identity: every value 1, any orthonormal basis acceptable.
        let a = Array2::<f64>::eye(12);
        let eig = sym_eigen(&a).unwrap();
        for v in &eig.values {
            assert!((v - 1.0).abs() < 1e-13);
        }
        let gram = eig.vectors.t().dot(&eig.vectors);
        for i in 0..12 {
            for j in 0..12 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn eigen_two_by_two_known() {
        // [[2,1],[1,2]] has eigenvalues 1 and 3.
        let a = arr2(&[[2.0, 1.0], [1.0, 2.0]]);
        let eig = sym_eigen(&a).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-14);
        assert!((eig.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn cg_matches_cholesky_on_random_spd() {
        let n = 25;
        let b = random_symmetric(n, 7);
        // SPD: B Bᵀ + n I
        let mut a = b.dot(&b.t());
        for i in 0..n {
            a[(i, i)] += n as f64;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let rhs: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();

        let (x_cg, iters) = conjugate_gradient(
            |x, y| {
                for i in 0..n {
                    y[i] = (0..n).map(|j| a[(i, j)] * x[j]).sum();
                }
            },
            &rhs,
            1e-13,
            1000,
        )
        .unwrap();
        assert!(iters > 0);

        let l = cholesky(&a).unwrap();
        let mut x_chol = rhs.clone();
        cholesky_solve(&l, &mut x_chol);

        for i in 0..n {
            assert!((x_cg[i] - x_chol[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn cg_zero_rhs_returns_zero() {
        let (x, iters) = conjugate_gradient(|_x, y| y.fill(0.0), &[0.0, 0.0], 1e-12, 10).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(iters, 0);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = arr2(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(cholesky(&a).is_err());
    }

    #[test]
    fn subspace_iteration_matches_dense_top_eigenpairs() {
        let n = 40;
        let mut a = random_symmetric(n, 3);
        // Scale spectrum into [-1, 1] like a normalized affinity.
        let eig = sym_eigen(&a).unwrap();
        let radius = eig.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.mapv_inplace(|x| x / radius);
        let dense = sym_eigen(&a).unwrap();

        let m = 4;
        let (vals, vecs) = top_eigenpairs_subspace(
            |x, y| {
                for i in 0..n {
                    y[i] = (0..n).map(|j| a[(i, j)] * x[j]).sum();
                }
            },
            n,
            m,
            1e-12,
            3000,
            42,
        )
        .unwrap();

        for j in 0..m {
            let expect = dense.values[n - 1 - j];
            assert!(
                (vals[j] - expect).abs() < 1e-7,
                "ritz value {j}: {} vs {}",
                vals[j],
                expect
            );
            // Vector matches up to sign.
            let v_ref = dense.vectors.column(n - 1 - j);
            let overlap: f64 = (0..n).map(|i| v_ref[i] * vecs[(i, j)]).sum();
            assert!(overlap.abs() > 1.0 - 1e-6, "overlap {overlap} at {j}");
        }
    }
}
