//! Small dense complex eigenproblems (projected Krylov matrices).

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Eigenvalues and unit eigenvectors (columns) of a general complex matrix,
/// via complex Schur form and back-substitution on the triangular factor.
pub fn complex_eigen(h: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let m = h.nrows();
    if m == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let schur = Schur::try_new(h.clone(), f64::EPSILON, 100 * m.max(10)).ok_or_else(|| {
        Error::ConvergenceFailure { iterations: 100 * m, detail: "complex Schur decomposition".into() }
    })?;
    let (q, t) = schur.unpack();
    let values: Vec<Complex64> = (0..m).map(|i| t[(i, i)]).collect();
    let tnorm = t.iter().map(|x| x.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let floor = f64::EPSILON * tnorm;

    let mut y = DMatrix::<Complex64>::zeros(m, m);
    for k in 0..m {
        let lambda = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < floor {
                denom = Complex64::new(floor, 0.0);
            }
            y[(i, k)] = -acc / denom;
        }
    }
    let mut vecs = q * y;
    for k in 0..m {
        let nrm = vecs.column(k).norm();
        if nrm > 0.0 {
            vecs.column_mut(k).unscale_mut(nrm);
        }
    }
    Ok((values, vecs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenpairs_of_nonsymmetric() {
        let c = |re: f64, im: f64| Complex64::new(re, im);
        let h = DMatrix::from_row_slice(
            3,
            3,
            &[c(1.0, 0.0), c(2.0, 1.0), c(0.0, 0.0), c(0.5, 0.0), c(-1.0, 0.5), c(3.0, 0.0), c(0.0, 0.0), c(0.25, 0.0), c(2.0, -1.0)],
        );
        let (vals, vecs) = complex_eigen(&h).unwrap();
        for k in 0..3 {
            let x = vecs.column(k).into_owned();
            let r = &h * &x - x.scale(1.0).map(|v| v * vals[k]);
            assert!(r.norm() < 1e-12, "residual {}", r.norm());
        }
    }
}
