//! Restarted Krylov eigensolvers with full reorthogonalization.
//!
//! Both solvers look for the eigenvalues of largest magnitude of an operator
//! `OP`; with `OP = (A - sigma I)^{-1}` these are the eigenvalues of `A`
//! nearest `sigma`. Restarts keep an orthonormal basis of the wanted Ritz
//! vectors plus the current residual direction (thick restart), so the
//! projected matrix becomes "small dense block + spike row" after the first
//! cycle.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dense::complex_eigen;
use super::jacobi::jacobi_eigen;
use super::scalar::{axpy, dot, norm, scale, Scalar};
use crate::error::{Error, Result};

/// Matrix-free linear operator.
pub trait LinearOperator<T: Scalar> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T], y: &mut [T]);
}

#[derive(Debug, Clone, Copy)]
pub struct KrylovParams {
    /// Number of wanted eigenpairs.
    pub nev: usize,
    /// Maximum basis size per restart cycle.
    pub subspace: usize,
    /// Relative Ritz residual tolerance, `||OP x - theta x|| <= tol * |theta_max|`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl KrylovParams {
    pub fn new(nev: usize) -> Self {
        Self { nev, subspace: (2 * nev + 10).max(30), tol: 1e-12, max_restarts: 300, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct RitzPairs<T: Scalar> {
    /// Eigenvalues of `OP`, sorted by decreasing magnitude.
    pub values: Vec<Complex64>,
    pub vectors: Vec<Vec<T>>,
    pub residual_estimates: Vec<f64>,
    pub applications: usize,
    pub restarts: usize,
    pub subspace: usize,
}

struct Basis<T: Scalar> {
    vectors: Vec<Vec<T>>,
    rng: ChaCha8Rng,
    n: usize,
}

impl<T: Scalar> Basis<T> {
    fn new(n: usize, seed: u64) -> Self {
        Self { vectors: Vec::new(), rng: ChaCha8Rng::seed_from_u64(seed), n }
    }

    /// Two passes of classical Gram-Schmidt; returns the coefficients.
    fn orthogonalize(&self, w: &mut [T]) -> Vec<T> {
        let mut h: Vec<T> = self.vectors.iter().map(|v| dot(v, w)).collect();
        for (v, hi) in self.vectors.iter().zip(&h) {
            axpy(-*hi, v, w);
        }
        for (v, hi) in self.vectors.iter().zip(h.iter_mut()) {
            let c = dot(v, w);
            axpy(-c, v, w);
            *hi += c;
        }
        h
    }

    /// A fresh random unit vector orthogonal to the current basis.
    fn random_direction(&mut self) -> Result<Vec<T>> {
        for _ in 0..10 {
            let mut w: Vec<T> = (0..self.n).map(|_| T::from_real(self.rng.random_range(-1.0..1.0))).collect();
            self.orthogonalize(&mut w);
            let nrm = norm(&w);
            if nrm > 1e-8 {
                scale(T::from_real(1.0 / nrm), &mut w);
                return Ok(w);
            }
        }
        Err(Error::ConvergenceFailure {
            iterations: self.vectors.len(),
            detail: "krylov: could not generate a new direction (space exhausted)".into(),
        })
    }
}

/// Projected-problem eigensolver: symmetric (Jacobi on the symmetric part) or
/// general (complex Schur).
trait Projected<T: Scalar> {
    fn eig(h: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)>;
    fn from_complex(z: Complex64) -> T;
}

struct SymmetricProjection;
struct GeneralProjection;

impl Projected<f64> for SymmetricProjection {
    fn eig(h: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
        let m = h.nrows();
        let mut a = vec![0.0; m * m];
        for c in 0..m {
            for r in 0..m {
                a[r + c * m] = 0.5 * (h[(r, c)].re + h[(c, r)].re);
            }
        }
        let (vals, vecs) = jacobi_eigen(&a, m)?;
        let values = vals.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
        let vectors = DMatrix::from_fn(m, m, |r, c| Complex64::new(vecs[r + c * m], 0.0));
        Ok((values, vectors))
    }
    fn from_complex(z: Complex64) -> f64 {
        z.re
    }
}

impl Projected<Complex64> for GeneralProjection {
    fn eig(h: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
        complex_eigen(h)
    }
    fn from_complex(z: Complex64) -> Complex64 {
        z
    }
}

/// Thick-restart Lanczos with full reorthogonalization for a symmetric
/// operator. Returns the `nev` eigenpairs of largest magnitude.
pub fn lanczos<O: LinearOperator<f64>>(op: &O, params: &KrylovParams) -> Result<RitzPairs<f64>> {
    krylov_schur::<f64, O, SymmetricProjection>(op, params)
}

/// Restarted Arnoldi with full reorthogonalization for a general complex
/// operator. Returns the `nev` eigenpairs of largest magnitude.
pub fn arnoldi<O: LinearOperator<Complex64>>(op: &O, params: &KrylovParams) -> Result<RitzPairs<Complex64>> {
    krylov_schur::<Complex64, O, GeneralProjection>(op, params)
}

fn krylov_schur<T, O, P>(op: &O, params: &KrylovParams) -> Result<RitzPairs<T>>
where
    T: Scalar,
    O: LinearOperator<T>,
    P: Projected<T>,
{
    let n = op.dim();
    if params.nev == 0 || params.nev > n {
        return Err(Error::InvalidParameter(format!("krylov: nev = {} for dimension {n}", params.nev)));
    }
    let m = params.subspace.max(params.nev + 2).min(n);
    let mut basis = Basis::<T>::new(n, params.seed);
    let start = basis.random_direction()?;
    basis.vectors.push(start);

    let mut h = DMatrix::<Complex64>::zeros(m, m);
    let mut applications = 0;
    let mut w = vec![T::zero(); n];

    for restart in 0..=params.max_restarts {
        // Expand the basis to m vectors; `residual` is the unnormalized next direction.
        let mut p = basis.vectors.len() - 1;
        let mut beta = 0.0;
        let mut residual: Vec<T> = Vec::new();
        while p < m {
            op.apply(&basis.vectors[p], &mut w);
            applications += 1;
            let coeffs = basis.orthogonalize(&mut w);
            for (i, c) in coeffs.iter().enumerate() {
                h[(i, p)] = c.to_complex();
            }
            beta = norm(&w);
            let scale_ref = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1e-300);
            if p + 1 == m {
                residual = w.clone();
                break;
            }
            if beta <= 1e-13 * scale_ref {
                // Invariant subspace: continue with an unrelated direction.
                h[(p + 1, p)] = Complex64::new(0.0, 0.0);
                let fresh = basis.random_direction()?;
                basis.vectors.push(fresh);
                beta = 0.0;
            } else {
                h[(p + 1, p)] = Complex64::new(beta, 0.0);
                let mut v = w.clone();
                scale(T::from_real(1.0 / beta), &mut v);
                basis.vectors.push(v);
            }
            p += 1;
        }

        let (values, vecs) = P::eig(&h)?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| values[b].norm().total_cmp(&values[a].norm()));
        let theta_max = values[order[0]].norm().max(f64::MIN_POSITIVE);
        let estimates: Vec<f64> = order.iter().map(|&i| beta * vecs[(m - 1, i)].norm()).collect();
        let converged = estimates[..params.nev].iter().all(|&e| e <= params.tol * theta_max);

        if converged || restart == params.max_restarts {
            if !converged {
                return Err(Error::ConvergenceFailure {
                    iterations: applications,
                    detail: format!(
                        "krylov: worst wanted Ritz residual {:e} after {restart} restarts (tol {:e})",
                        estimates[..params.nev].iter().cloned().fold(0.0, f64::max),
                        params.tol * theta_max
                    ),
                });
            }
            let mut out_vals = Vec::with_capacity(params.nev);
            let mut out_vecs = Vec::with_capacity(params.nev);
            for &i in &order[..params.nev] {
                let mut x = vec![T::zero(); n];
                for (k, v) in basis.vectors.iter().enumerate().take(m) {
                    axpy(P::from_complex(vecs[(k, i)]), v, &mut x);
                }
                let nrm = norm(&x);
                scale(T::from_real(1.0 / nrm), &mut x);
                out_vals.push(values[i]);
                out_vecs.push(x);
            }
            return Ok(RitzPairs {
                values: out_vals,
                vectors: out_vecs,
                residual_estimates: estimates[..params.nev].to_vec(),
                applications,
                restarts: restart,
                subspace: m,
            });
        }

        // Thick restart: orthonormal basis of the kept Ritz vectors.
        let keep = (params.nev + (m - params.nev) / 2).min(m - 1).max(params.nev);
        let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(keep);
        for &i in &order {
            if q.len() == keep {
                break;
            }
            let mut y: Vec<Complex64> = vecs.column(i).iter().copied().collect();
            for _ in 0..2 {
                for qk in &q {
                    let c = dot(qk, &y);
                    axpy(-c, qk, &mut y);
                }
            }
            let nrm = norm(&y);
            if nrm > 1e-10 {
                scale(Complex64::new(1.0 / nrm, 0.0), &mut y);
                q.push(y);
            }
        }
        let kept = q.len();
        let qmat = DMatrix::from_fn(m, kept, |r, c| q[c][r]);
        let hq = &h * &qmat;
        let hnew = qmat.adjoint() * hq;

        let new_vectors: Vec<Vec<T>> = (0..kept)
            .map(|c| {
                let mut x = vec![T::zero(); n];
                for (k, v) in basis.vectors.iter().enumerate().take(m) {
                    axpy(P::from_complex(qmat[(k, c)]), v, &mut x);
                }
                x
            })
            .collect();
        basis.vectors = new_vectors;

        h.fill(Complex64::new(0.0, 0.0));
        for r in 0..kept {
            for c in 0..kept {
                h[(r, c)] = hnew[(r, c)];
            }
        }
        if beta > 0.0 {
            for c in 0..kept {
                h[(kept, c)] = qmat[(m - 1, c)] * beta;
            }
            let mut v = residual;
            // Re-orthogonalize against the compressed basis before continuing.
            basis.orthogonalize(&mut v);
            let nrm = norm(&v);
            scale(T::from_real(1.0 / nrm), &mut v);
            basis.vectors.push(v);
        } else {
            let fresh = basis.random_direction()?;
            basis.vectors.push(fresh);
        }
    }
    unreachable!("restart loop returns on its last iteration")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::csr::CsrMatrix;

    struct Csr<'a>(&'a CsrMatrix);

    impl LinearOperator<f64> for Csr<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn apply(&self, x: &[f64], y: &mut [f64]) {
            self.0.apply(x, y)
        }
    }

    impl LinearOperator<Complex64> for Csr<'_> {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
            self.0.apply(x, y)
        }
    }

    fn diagonal(vals: &[f64]) -> CsrMatrix {
        CsrMatrix::from_rows(vals.iter().enumerate().map(|(i, &v)| vec![(i, v)]).collect())
    }

    #[test]
    fn lanczos_finds_largest_magnitude() {
        let vals: Vec<f64> = (0..200).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let a = diagonal(&vals);
        let mut params = KrylovParams::new(5);
        params.subspace = 20;
        let ritz = lanczos(&Csr(&a), &params).unwrap();
        for (k, v) in ritz.values.iter().enumerate() {
            assert!((v.re - vals[k]).abs() < 1e-12, "{k}: {v}");
        }
        assert!(ritz.restarts > 0);
    }

    #[test]
    fn arnoldi_on_nonsymmetric_tridiagonal() {
        // Non-normal tridiagonal with real spectrum 2 sqrt(bc) cos(j pi/(n+1)).
        let n = 20;
        let (b, c) = (1.2, 0.8);
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 0.0)];
                if i + 1 < n {
                    r.push((i + 1, b));
                }
                if i > 0 {
                    r.push((i - 1, c));
                }
                r
            })
            .collect();
        let a = CsrMatrix::from_rows(rows);
        let ritz = arnoldi(&Csr(&a), &KrylovParams::new(4)).unwrap();
        let top = 2.0 * (b * c).sqrt() * (std::f64::consts::PI / (n + 1) as f64).cos();
        // Largest magnitude: +-top.
        for v in &ritz.values[..2] {
            assert!((v.norm() - top).abs() < 1e-9, "{v}");
            assert!(v.im.abs() < 1e-9);
        }
    }

    #[test]
    fn invariant_start_space_recovers() {
        // Rank-deficient: only two nonzero eigenvalues, ask for three.
        let mut vals = vec![0.0; 50];
        vals[3] = 5.0;
        vals[7] = -4.0;
        let a = diagonal(&vals);
        let ritz = lanczos(&Csr(&a), &KrylovParams::new(3)).unwrap();
        assert!((ritz.values[0].re - 5.0).abs() < 1e-12);
        assert!((ritz.values[1].re + 4.0).abs() < 1e-12);
        assert!(ritz.values[2].re.abs() < 1e-12);
    }
}
