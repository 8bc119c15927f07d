//! Cyclic Jacobi eigensolver for small dense symmetric matrices.

use crate::error::{Error, Result};

use super::tridiag::identity;

const MAX_SWEEPS: usize = 100;

/// Diagonalize a symmetric `n x n` column-major matrix by cyclic Jacobi
/// rotations. Returns `(eigenvalues, eigenvectors)` with eigenvectors stored
/// column-major, eigenvalues unsorted.
pub fn jacobi_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.len() != n * n {
        return Err(Error::InvalidParameter("jacobi: matrix storage must be n*n".into()));
    }
    let mut a = a.to_vec();
    let mut v = identity(n);
    let idx = |r: usize, c: usize| r + c * n;

    let frob: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    if frob == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    let tol = f64::EPSILON * frob;

    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|c| (0..n).filter(move |&r| r != c).map(move |r| (r, c)))
            .map(|(r, c)| a[idx(r, c)].powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            let vals = (0..n).map(|i| a[idx(i, i)]).collect();
            return Ok((vals, v));
        }
        // Skip tiny rotations in early sweeps; everything counts in later ones.
        let threshold = if sweep < 3 { 0.2 * off / (n * n) as f64 } else { 0.0 };

        for p in 0..n {
            for q in p + 1..n {
                let apq = a[idx(p, q)];
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                let app = a[idx(p, p)];
                let aqq = a[idx(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
                a[idx(p, q)] = 0.0;
                a[idx(q, p)] = 0.0;

                for k in 0..n {
                    let vkp = v[idx(k, p)];
                    let vkq = v[idx(k, q)];
                    v[idx(k, p)] = c * vkp - s * vkq;
                    v[idx(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: MAX_SWEEPS,
        detail: "jacobi: off-diagonal mass did not vanish".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonalizes_periodic_laplacian() {
        let n = 8;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i + i * n] = -2.0;
            let j = (i + 1) % n;
            a[i + j * n] = 1.0;
            a[j + i * n] = 1.0;
        }
        let (mut vals, vecs) = jacobi_eigen(&a, n).unwrap();
        for j in 0..n {
            let col = &vecs[j * n..(j + 1) * n];
            for r in 0..n {
                let av: f64 = (0..n).map(|c| a[r + c * n] * col[c]).sum();
                assert!((av - vals[j] * col[r]).abs() < 1e-12);
            }
        }
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut exact: Vec<f64> = (0..n)
            .map(|k| -4.0 * (std::f64::consts::PI * k as f64 / n as f64).sin().powi(2))
            .collect();
        exact.sort_by(|x, y| x.partial_cmp(y).unwrap());
        for (v, e) in vals.iter().zip(&exact) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_matrix() {
        let (vals, _) = jacobi_eigen(&[0.0; 9], 3).unwrap();
        assert_eq!(vals, vec![0.0; 3]);
    }
}
