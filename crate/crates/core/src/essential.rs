//! Essential spectrum of `L`: the dispersion parabolas `λ = μ − s² + ics`
//! over the cross-sectional spectra of `∂²ₓ + V±`, Weyl sequences that
//! witness them, and the coercivity bound to their right.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cylinder::{assemble_cylinder, DiscreteOperator};
use crate::error::{Error, Result};
use crate::linalg::scalar::norm;
use crate::linalg::{arnoldi, KrylovParams, LinearOperator, ShiftedSolver};
use crate::profiles::{glued_potential, BoundaryCondition, CrossSection, CylinderPotential};
use crate::quad::{composite_gauss_legendre, gauss_legendre};
use crate::sturm::SturmSpectrum;

/// Branches this far below `sup_re` are kept for membership but not plotted.
pub const PLOT_DEPTH: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub side: Side,
    pub mu: f64,
    pub plotted: bool,
    pub s: Vec<f64>,
    pub lambda: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssentialSpectrumDescriptor {
    pub c: f64,
    pub sup_re: f64,
    pub sup_plus: f64,
    pub sup_minus: f64,
    pub s_max: f64,
    pub branches: Vec<Branch>,
}

#[derive(Serialize)]
pub struct EssentialSummary {
    pub sup_re: f64,
    pub n_branches: usize,
    pub c: f64,
}

/// One sampled parabola per eigenvalue of each limit spectrum. `s_max`
/// defaults to `3·√(max μ − min retained μ + 1)`.
pub fn dispersion_curves(
    sp_plus: &SturmSpectrum,
    sp_minus: &SturmSpectrum,
    c: f64,
    s_max: Option<f64>,
    n_samples: usize,
) -> Result<EssentialSpectrumDescriptor> {
    if n_samples < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 samples per curve, got {n_samples}")));
    }
    if sp_plus.is_empty() || sp_minus.is_empty() {
        return Err(Error::InvalidParameter("empty limit spectrum".into()));
    }
    let sup_plus = sp_plus.sup;
    let sup_minus = sp_minus.sup;
    let sup_re = sup_plus.max(sup_minus);
    let all = || sp_plus.eigenvalues.iter().chain(&sp_minus.eigenvalues).copied();
    let lowest_retained = all().filter(|&m| m >= sup_re - PLOT_DEPTH).fold(sup_re, f64::min);
    let s_max = match s_max {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::InvalidParameter(format!("s_max = {s}"))),
        None => 3.0 * (sup_re - lowest_retained + 1.0).sqrt(),
    };
    let s: Vec<f64> = (0..n_samples).map(|i| -s_max + 2.0 * s_max * i as f64 / (n_samples - 1) as f64).collect();
    let branch = |side: Side, mu: f64| Branch {
        side,
        mu,
        plotted: mu >= sup_re - PLOT_DEPTH,
        lambda: s.iter().map(|&s| Complex64::new(mu - s * s, c * s)).collect(),
        s: s.clone(),
    };
    let branches = sp_plus
        .eigenvalues
        .iter()
        .map(|&m| branch(Side::Plus, m))
        .chain(sp_minus.eigenvalues.iter().map(|&m| branch(Side::Minus, m)))
        .collect();
    Ok(EssentialSpectrumDescriptor { c, sup_re, sup_plus, sup_minus, s_max, branches })
}

/// `(member, distance)`: distance is the minimum over branches of
/// `|Re λ − (μ − s²)|` with `s = Im λ / c`; for `c = 0`, the distance to the
/// rays `(−∞, μ]`.
pub fn membership(lambda: Complex64, d: &EssentialSpectrumDescriptor, tol: f64) -> (bool, f64) {
    let dist = d
        .branches
        .iter()
        .map(|b| {
            if d.c != 0.0 {
                let s = lambda.im / d.c;
                (lambda.re - (b.mu - s * s)).abs()
            } else if lambda.re <= b.mu {
                lambda.im.abs()
            } else {
                (lambda.re - b.mu).hypot(lambda.im)
            }
        })
        .fold(f64::INFINITY, f64::min);
    (dist <= tol, dist)
}

impl EssentialSpectrumDescriptor {
    pub fn summary(&self) -> EssentialSummary {
        EssentialSummary { sup_re: self.sup_re, n_branches: self.branches.len(), c: self.c }
    }

    /// CSV `branch,s,re,im` over plotted branches.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "branch,s,re,im")?;
        for (j, b) in self.branches.iter().enumerate().filter(|(_, b)| b.plotted) {
            for (s, l) in b.s.iter().zip(&b.lambda) {
                writeln!(out, "{j},{s},{},{}", l.re, l.im)?;
            }
        }
        Ok(())
    }
}

/// The smooth bump `ψ(t) = exp(1 − 1/(1 − (2t−1)²))` on `(0, 1)`, zero outside.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bump;

impl Bump {
    pub fn eval(&self, t: f64) -> f64 {
        let y = 2.0 * t - 1.0;
        let q = 1.0 - y * y;
        if q <= 0.0 {
            0.0
        } else {
            (1.0 - 1.0 / q).exp()
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let y = 2.0 * t - 1.0;
        let q = 1.0 - y * y;
        if q <= 0.0 {
            0.0
        } else {
            self.eval(t) * (-4.0 * y) / (q * q)
        }
    }

    pub fn deriv2(&self, t: f64) -> f64 {
        let y = 2.0 * t - 1.0;
        let q = 1.0 - y * y;
        if q <= 0.0 {
            0.0
        } else {
            let q2 = q * q;
            self.eval(t) * (16.0 * y * y / (q2 * q2) - 8.0 / q2 - 32.0 * y * y / (q2 * q))
        }
    }

    /// `(‖ψ‖₂, ‖ψ′‖₂, ‖ψ″‖₂)` on `[0, 1]`.
    pub fn norms(&self) -> (f64, f64, f64) {
        let rule = gauss_legendre(16);
        let l2 = |f: &dyn Fn(f64) -> f64| composite_gauss_legendre(&rule, 0.0, 1.0, 64, |t| f(t).powi(2)).sqrt();
        (l2(&|t| self.eval(t)), l2(&|t| self.deriv(t)), l2(&|t| self.deriv2(t)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylSequence {
    pub n: usize,
    pub a: f64,
    pub branch: usize,
    pub lambda: Complex64,
    /// `[n², n² + n]`
    pub support: (f64, f64),
    /// `h_z`-weighted `‖uₙ‖₂`.
    pub norm_u: f64,
    pub norm_psi: f64,
    pub residual: f64,
    /// `(‖fₙ‖‖ψ‖ + |c+2ia|‖ψ′‖/n + ‖ψ″‖/n²)/‖ψ‖`
    pub bound: f64,
    #[serde(skip)]
    pub samples: Vec<Complex64>,
}

/// Glued potential `V∞` on a uniform grid of spacing `h_z` covering
/// `[n² − margin, n² + n + margin]`.
pub fn weyl_window(
    cross_section: CrossSection,
    v_plus: &[f64],
    v_minus: &[f64],
    n: usize,
    h_z: f64,
    margin: f64,
) -> Result<CylinderPotential> {
    let lo = (n * n) as f64 - margin;
    let points = (((n as f64 + 2.0 * margin) / h_z).ceil() as usize) + 1;
    let z = (0..points).map(|k| lo + k as f64 * h_z).collect();
    glued_potential(cross_section, v_plus, v_minus, z)
}

/// `φₙ(x,z) = φⱼ(x) uₙ(z)`, `uₙ(z) = n^{−1/2} e^{iaz} ψ(z/n − n)`, and its
/// residual against `λ = μⱼ − a² + ica` for the glued operator built from
/// `v_inf` (Dirichlet in z).
pub fn weyl_sequence(
    n: usize,
    sp: &SturmSpectrum,
    j: usize,
    a: f64,
    psi: &Bump,
    v_inf: &CylinderPotential,
    c: f64,
) -> Result<WeylSequence> {
    if n == 0 || j >= sp.len() {
        return Err(Error::InvalidParameter(format!("weyl index n = {n}, branch {j} of {}", sp.len())));
    }
    let z = v_inf.z_grid();
    let (lo, hi) = ((n * n) as f64, (n * n + n) as f64);
    let (start, end) = (z[0], *z.last().unwrap());
    let h = v_inf.h_z();
    // one spare node on each side so the stencil sees the zero boundary
    if lo - h < start || hi + h > end {
        return Err(Error::GridTooShort { lo, hi, start, end });
    }
    let nx = v_inf.n_x();
    let phi = &sp.eigenvectors[j];
    let mu = sp.eigenvalues[j];
    let lambda = Complex64::new(mu - a * a, c * a);
    let scale = 1.0 / (n as f64).sqrt();
    let u: Vec<Complex64> = z
        .iter()
        .map(|&zk| Complex64::from_polar(scale * psi.eval(zk / n as f64 - n as f64), a * zk))
        .collect();
    let samples: Vec<Complex64> = u.iter().flat_map(|&uk| phi.iter().map(move |&p| uk * p)).collect();
    let op = assemble_cylinder(v_inf, c, BoundaryCondition::Dirichlet)?;
    let lu = op.apply(&samples);
    let r: Vec<Complex64> = lu.iter().zip(&samples).map(|(l, s)| *l - lambda * *s).collect();
    let residual = norm(&r) / norm(&samples);

    let f: Vec<Complex64> = samples
        .iter()
        .enumerate()
        .map(|(idx, s)| *s * (v_inf.layer(idx / nx)[idx % nx] - v_inf.v_plus()[idx % nx]))
        .collect();
    let (np, np1, np2) = psi.norms();
    let norm_u = (h * u.iter().map(|x| x.norm_sqr()).sum::<f64>()).sqrt();
    let f_term = norm(&f) / norm(&samples);
    let nf = n as f64;
    let bound = f_term + (Complex64::new(c, 2.0 * a).norm() * np1 / nf + np2 / (nf * nf)) / np;
    Ok(WeylSequence { n, a, branch: j, lambda, support: (lo, hi), norm_u, norm_psi: np, residual, bound, samples })
}

struct NormalInverse<'a>(&'a ShiftedSolver<Complex64>);

impl LinearOperator<Complex64> for NormalInverse<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.copy_from_slice(x);
        self.0.solve_adjoint_in_place(y).expect("adjoint availability checked at construction");
        self.0.solve_in_place(y);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoercivityEstimate {
    pub lambda0: Complex64,
    /// `‖(λ₀ − L)y‖/‖y‖` at the converged vector: an upper bound for the
    /// smallest singular value that converges to it.
    pub sigma_min: f64,
    pub solves: usize,
}

/// Smallest singular value of `λ₀ − L` by Krylov-accelerated inverse power
/// iteration on `((λ₀ − L)ᴴ(λ₀ − L))⁻¹`.
pub fn coercivity_estimate(op: &DiscreteOperator, lambda0: Complex64) -> Result<CoercivityEstimate> {
    let solver = ShiftedSolver::new(&op.matrix, op.n_x, lambda0)?;
    let mut probe = vec![Complex64::new(0.0, 0.0); op.dim()];
    solver.solve_adjoint_in_place(&mut probe)?;
    let mut params = KrylovParams::new(1);
    params.subspace = params.subspace.min(op.dim());
    params.tol = 1e-10;
    let ritz = arnoldi(&NormalInverse(&solver), &params)?;
    let y = &ritz.vectors[0];
    let ay = op.apply(y);
    let r: Vec<Complex64> = ay.iter().zip(y).map(|(a, x)| lambda0 * *x - *a).collect();
    let sigma_min = norm(&r) / norm(y);
    if !sigma_min.is_finite() {
        return Err(Error::ConvergenceFailure { iterations: ritz.applications, detail: "coercivity iteration produced a non-finite estimate".into() });
    }
    Ok(CoercivityEstimate { lambda0, sigma_min, solves: 2 * ritz.applications })
}
