//! The cross-sectional operators `∂²ₓ + V±` and their spectra.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::jacobi::jacobi_eigen;
use crate::linalg::tridiag::{householder_tridiagonalize, identity, tridiagonal_ql};
use crate::profiles::{BoundaryCondition, CrossSection};

/// Periodic problems below this size go to dense Jacobi.
const JACOBI_LIMIT: usize = 512;

/// Three-point discretization of `∂²ₓ + V` (interior points for Dirichlet).
#[derive(Debug, Clone, PartialEq)]
pub struct SturmOperator {
    pub h: f64,
    pub bc: BoundaryCondition,
    pub diag: Vec<f64>,
    /// `1/h²`, also the corner coupling when periodic.
    pub off: f64,
}

pub fn assemble_sturm(v: &[f64], length: f64, bc: BoundaryCondition) -> Result<SturmOperator> {
    let n = v.len();
    if n < 3 {
        return Err(Error::GridTooSmall(format!("sturm operator needs at least 3 points, got {n}")));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidParameter(format!("domain length {length}")));
    }
    let h = match bc {
        BoundaryCondition::Dirichlet => length / (n + 1) as f64,
        BoundaryCondition::Periodic => length / n as f64,
    };
    let off = 1.0 / (h * h);
    Ok(SturmOperator { h, bc, diag: v.iter().map(|v| v - 2.0 * off).collect(), off })
}

impl SturmOperator {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    /// Column-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i + i * n] = self.diag[i];
            if i + 1 < n {
                a[i + (i + 1) * n] = self.off;
                a[i + 1 + i * n] = self.off;
            }
        }
        if self.bc == BoundaryCondition::Periodic {
            a[(n - 1) * n] += self.off;
            a[n - 1] += self.off;
        }
        a
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let left = if i > 0 { x[i - 1] } else if self.bc == BoundaryCondition::Periodic { x[n - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else if self.bc == BoundaryCondition::Periodic { x[0] } else { 0.0 };
                self.diag[i] * x[i] + self.off * (left + right)
            })
            .collect()
    }

    pub fn norm_inf(&self) -> f64 {
        self.diag.iter().map(|d| d.abs() + 2.0 * self.off).fold(0.0, f64::max)
    }
}

/// Eigenpairs in descending order; `eigenvectors[j]` is the unit vector of
/// `eigenvalues[j]`, sign fixed so its largest entry is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SturmSpectrum {
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Vec<Vec<f64>>,
    pub sup: f64,
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// The `k` largest eigenpairs (all when `k` is `None`).
pub fn solve_sturm(op: &SturmOperator, k: Option<usize>) -> Result<SturmSpectrum> {
    let n = op.n();
    let (values, vectors) = match op.bc {
        BoundaryCondition::Dirichlet => {
            let mut q = identity(n);
            let vals = tridiagonal_ql(&op.diag, &vec![op.off; n - 1], Some(&mut q))?;
            (vals, q)
        }
        BoundaryCondition::Periodic if n < JACOBI_LIMIT => jacobi_eigen(&op.to_dense(), n)?,
        BoundaryCondition::Periodic => {
            let (d, e, mut q) = householder_tridiagonalize(&op.to_dense(), n);
            let vals = tridiagonal_ql(&d, &e, Some(&mut q))?;
            (vals, q)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order.truncate(k.unwrap_or(n).min(n));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| values[j]).collect();
    let eigenvectors = order
        .iter()
        .map(|&j| {
            let mut v = vectors[j * n..(j + 1) * n].to_vec();
            fix_sign(&mut v);
            v
        })
        .collect();
    let sup = *eigenvalues.first().ok_or_else(|| Error::InvalidParameter("requested zero eigenvalues".into()))?;
    Ok(SturmSpectrum { eigenvalues, eigenvectors, sup })
}

/// Zero-dimensional cross-section: the spectrum is the single value `v`.
pub fn point_spectrum(v: f64) -> SturmSpectrum {
    SturmSpectrum { eigenvalues: vec![v], eigenvectors: vec![vec![1.0]], sup: v }
}

/// Spectrum of `∂²ₓ + V_lim` on the given cross-section.
pub fn limit_spectrum(cross_section: CrossSection, v_lim: &[f64], k: Option<usize>) -> Result<SturmSpectrum> {
    match cross_section {
        CrossSection::Point => Ok(point_spectrum(v_lim[0])),
        CrossSection::Interval { length, bc, .. } => solve_sturm(&assemble_sturm(v_lim, length, bc)?, k),
    }
}

pub fn sup_spectrum(s: &SturmSpectrum) -> f64 {
    s.sup
}

impl SturmSpectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// CSV `x,phi_1,...,phi_k` with a one-line header.
    pub fn write_eigenvectors_csv<W: Write>(&self, x: &[f64], mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (1..=self.eigenvectors.len()).map(|j| format!("phi_{j}")).collect();
        writeln!(out, "x,{}", header.join(","))?;
        for (i, xi) in x.iter().enumerate() {
            let row: Vec<String> = self.eigenvectors.iter().map(|v| v[i].to_string()).collect();
            writeln!(out, "{xi},{}", row.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::scalar::dot;
    use std::f64::consts::PI;

    #[test]
    fn stencil_entries() {
        let op = assemble_sturm(&[0.0; 3], PI, BoundaryCondition::Dirichlet).unwrap();
        let h = PI / 4.0;
        assert_eq!(op.h, h);
        assert!(op.diag.iter().all(|&d| d == -2.0 / (h * h)));
        assert_eq!(op.off, 1.0 / (h * h));
        let shifted = assemble_sturm(&[5.0; 3], PI, BoundaryCondition::Dirichlet).unwrap();
        for (a, b) in shifted.diag.iter().zip(&op.diag) {
            assert_eq!(a - b, 5.0);
        }
        let per = assemble_sturm(&[0.0; 4], 1.0, BoundaryCondition::Periodic).unwrap();
        let a = per.to_dense();
        assert_eq!(a[3 * 4], 16.0);
        assert_eq!(a[3], 16.0);
        assert!(assemble_sturm(&[0.0; 2], 1.0, BoundaryCondition::Dirichlet).is_err());
    }

    #[test]
    fn dense_copy_is_symmetric_and_matches_apply() {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Periodic] {
            let op = assemble_sturm(&[1.0, -2.0, 0.5, 3.0, 0.0], 2.0, bc).unwrap();
            let n = op.n();
            let a = op.to_dense();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(a[i + j * n], a[j + i * n]);
                }
            }
            let x = [0.3, -1.0, 2.0, 0.1, 0.7];
            let y = op.apply(&x);
            for i in 0..n {
                let yi: f64 = (0..n).map(|j| a[i + j * n] * x[j]).sum();
                assert!((yi - y[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dirichlet_laplacian_closed_form() {
        let n = 199;
        let op = assemble_sturm(&vec![0.0; n], PI, BoundaryCondition::Dirichlet).unwrap();
        let h = PI / 200.0;
        let s = solve_sturm(&op, None).unwrap();
        for (j, mu) in s.eigenvalues.iter().enumerate() {
            let exact = -(4.0 / (h * h)) * ((j + 1) as f64 * h / 2.0).sin().powi(2);
            assert!((mu - exact).abs() <= 1e-9 * exact.abs(), "j={j}: {mu} vs {exact}");
        }
        assert!((s.sup + 1.0).abs() <= 1e-3);
        assert_eq!(sup_spectrum(&s), s.eigenvalues[0]);
    }

    #[test]
    fn periodic_laplacian_closed_form() {
        let n = 40;
        let op = assemble_sturm(&vec![0.0; n], 2.0 * PI, BoundaryCondition::Periodic).unwrap();
        let h = 2.0 * PI / n as f64;
        let mut exact: Vec<f64> = (0..n).map(|j| -(4.0 / (h * h)) * (j as f64 * PI / n as f64).sin().powi(2)).collect();
        exact.sort_by(|a, b| b.total_cmp(a));
        let s = solve_sturm(&op, None).unwrap();
        for (mu, e) in s.eigenvalues.iter().zip(&exact) {
            assert!((mu - e).abs() < 1e-11 * (1.0 + e.abs()));
        }
    }

    fn check_invariants(op: &SturmOperator, s: &SturmSpectrum) {
        let scale = op.norm_inf();
        assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        for (j, (mu, v)) in s.eigenvalues.iter().zip(&s.eigenvectors).enumerate() {
            let av = op.apply(v);
            let r: f64 = av.iter().zip(v).map(|(a, x)| (a - mu * x).powi(2)).sum::<f64>().sqrt();
            assert!(r <= 1e-10 * scale, "residual {r}");
            for (l, w) in s.eigenvectors.iter().enumerate().take(j + 1) {
                let expected = if l == j { 1.0 } else { 0.0 };
                assert!((dot(v, w) - expected).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn large_periodic_uses_householder_path() {
        let n = 520;
        let v: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let op = assemble_sturm(&v, 30.0, BoundaryCondition::Periodic).unwrap();
        let s = solve_sturm(&op, Some(12)).unwrap();
        assert_eq!(s.len(), 12);
        check_invariants(&op, &s);
    }

    #[test]
    fn point_mode_is_singleton() {
        let s = point_spectrum(-0.25);
        assert_eq!(s.eigenvalues, vec![-0.25]);
        assert_eq!(sup_spectrum(&s), -0.25);
        assert_eq!(limit_spectrum(CrossSection::Point, &[3.0], None).unwrap().sup, 3.0);
    }

    #[test]
    fn json_has_eigenvalues_and_sup() {
        let s = SturmSpectrum { eigenvalues: vec![-1.0, -4.0, -9.0], eigenvectors: vec![], sup: -1.0 };
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        assert_eq!(v, serde_json::json!({"eigenvalues": [-1.0, -4.0, -9.0], "sup": -1.0}));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn potential() -> impl Strategy<Value = (Vec<f64>, bool)> {
            (3usize..40).prop_flat_map(|n| (prop::collection::vec(-5.0f64..5.0, n), any::<bool>()))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn spectrum_invariants((v, periodic) in potential(), length in 0.5f64..10.0) {
                let bc = if periodic { BoundaryCondition::Periodic } else { BoundaryCondition::Dirichlet };
                let op = assemble_sturm(&v, length, bc).unwrap();
                let s = solve_sturm(&op, None).unwrap();
                check_invariants(&op, &s);
            }

            #[test]
            fn shift_covariance((v, periodic) in potential(), v0 in -10.0f64..10.0) {
                let bc = if periodic { BoundaryCondition::Periodic } else { BoundaryCondition::Dirichlet };
                let base = solve_sturm(&assemble_sturm(&v, 3.0, bc).unwrap(), None).unwrap();
                let shifted: Vec<f64> = v.iter().map(|x| x + v0).collect();
                let moved = solve_sturm(&assemble_sturm(&shifted, 3.0, bc).unwrap(), None).unwrap();
                let scale = 1.0 + base.eigenvalues.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                for (j, (a, b)) in base.eigenvalues.iter().zip(&moved.eigenvalues).enumerate() {
                    prop_assert!((b - a - v0).abs() <= 1e-10 * scale);
                    // eigenvectors agree up to sign where the eigenvalue is simple
                    let gap = base.eigenvalues.iter().enumerate().filter(|(l, _)| *l != j)
                        .map(|(_, m)| (m - a).abs()).fold(f64::INFINITY, f64::min);
                    if gap > 1e-3 * scale {
                        let overlap = dot(&base.eigenvectors[j], &moved.eigenvectors[j]).abs();
                        prop_assert!((overlap - 1.0).abs() < 1e-8);
                    }
                }
            }
        }
    }
}
