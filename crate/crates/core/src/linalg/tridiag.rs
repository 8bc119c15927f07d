//! Symmetric tridiagonal eigensolver (QL with implicit Wilkinson-type shifts)
//! and Householder reduction of dense symmetric matrices to tridiagonal form.

use crate::error::{Error, Result};

const MAX_SWEEPS_PER_EIGENVALUE: usize = 60;

/// Eigen-decomposition of a real symmetric tridiagonal matrix.
///
/// `diag` has length `n`, `off` has length `n - 1` (`off[i]` couples rows `i`
/// and `i + 1`). When `vectors` is `Some`, it must hold an `n x n` column-major
/// matrix `Q`; on return it holds `Q * Z` where the columns of `Z` are the
/// eigenvectors of the tridiagonal matrix. Pass the identity to get the
/// eigenvectors themselves, or the Householder accumulator from
/// [`householder_tridiagonalize`] to get the eigenvectors of the original
/// dense matrix.
///
/// Eigenvalues are returned unsorted, in the same order as the columns.
pub fn tridiagonal_ql(diag: &[f64], off: &[f64], mut vectors: Option<&mut [f64]>) -> Result<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if off.len() + 1 != n {
        return Err(Error::InvalidParameter(format!(
            "tridiagonal: off-diagonal length {} does not match n - 1 = {}",
            off.len(),
            n - 1
        )));
    }
    if let Some(v) = vectors.as_deref() {
        if v.len() != n * n {
            return Err(Error::InvalidParameter("tridiagonal: vector storage must be n*n".into()));
        }
    }

    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(off);

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find a negligible off-diagonal element to split the matrix.
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_SWEEPS_PER_EIGENVALUE {
                return Err(Error::ConvergenceFailure {
                    iterations: iter,
                    detail: format!("tridiagonal QL: eigenvalue {l} did not deflate, |e| = {:e}", e[l].abs()),
                });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;

            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                if let Some(z) = vectors.as_deref_mut() {
                    let (left, right) = z.split_at_mut((i + 1) * n);
                    let col_i = &mut left[i * n..];
                    let col_next = &mut right[..n];
                    for k in 0..n {
                        let f = col_next[k];
                        col_next[k] = s * col_i[k] + c * f;
                        col_i[k] = c * col_i[k] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Householder reduction of a dense symmetric matrix (column-major, `n x n`)
/// to tridiagonal form `A = Q T Q^T`.
///
/// Returns `(diag, off, q)` with `q` column-major.
pub fn householder_tridiagonalize(a: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    assert_eq!(a.len(), n * n);
    let mut a = a.to_vec();
    let mut q = identity(n);
    let idx = |r: usize, c: usize| r + c * n;

    for k in 0..n.saturating_sub(2) {
        let alpha_sq: f64 = (k + 1..n).map(|r| a[idx(r, k)].powi(2)).sum();
        if alpha_sq == 0.0 {
            continue;
        }
        let x0 = a[idx(k + 1, k)];
        let alpha = -alpha_sq.sqrt().copysign(x0);
        // v = x - alpha e1, normalized.
        let mut v = vec![0.0; n];
        for r in k + 1..n {
            v[r] = a[idx(r, k)];
        }
        v[k + 1] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        let scale = 2.0 / vnorm_sq;

        // A <- H A H with H = I - scale v v^T, using the symmetric rank-2 update.
        let mut p = vec![0.0; n];
        for r in 0..n {
            let mut acc = 0.0;
            for c in k + 1..n {
                acc += a[idx(r, c)] * v[c];
            }
            p[r] = scale * acc;
        }
        let kappa = 0.5 * scale * v.iter().zip(&p).map(|(x, y)| x * y).sum::<f64>();
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kappa * vi).collect();
        for c in 0..n {
            for r in 0..n {
                a[idx(r, c)] -= v[r] * w[c] + w[r] * v[c];
            }
        }

        // Q <- Q H
        for r in 0..n {
            let mut acc = 0.0;
            for c in k + 1..n {
                acc += q[idx(r, c)] * v[c];
            }
            acc *= scale;
            for c in k + 1..n {
                q[idx(r, c)] -= acc * v[c];
            }
        }
    }

    let diag = (0..n).map(|i| a[idx(i, i)]).collect();
    let off = (0..n.saturating_sub(1)).map(|i| a[idx(i + 1, i)]).collect();
    (diag, off, q)
}

pub(crate) fn identity(n: usize) -> Vec<f64> {
    let mut q = vec![0.0; n * n];
    for i in 0..n {
        q[i + i * n] = 1.0;
    }
    q
}
