//! Spatial dynamics: the eigenvalue problem as the first-order system
//! `Y' = A(z) Y`, `Y = (v, ∂_z v)`, `A = A± + B±(z)`, written in the
//! orthonormal eigenbasis of `∂²ₓ + V±`.
//!
//! In that basis `A± = [[0, I], [Γ, 0]]` with `Γ = diag(λ₀ + c²/4 − μⱼ)`, and
//! the bi-semigroup is explicit: with `S = √Γ` (principal branch) and
//! `W = (1/√2)[[S, −I], [S, I]]`, `W A± W⁻¹ = diag(−S, S)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::essential::Side;
use crate::profiles::{gap_curves, CylinderPotential, Nonlinearity};
use crate::quad::trapezoid;
use crate::sturm::{limit_spectrum, SturmSpectrum};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square root with argument in `(−π/2, π/2]` (negative reals map to `+i`).
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let im = if z.im == 0.0 { 0.0 } else { z.im };
    Complex64::new(z.re, im).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitSystem {
    pub n: usize,
    pub mu: Vec<f64>,
    pub lambda0: Complex64,
    pub c: f64,
    pub a: DMatrix<Complex64>,
}

pub fn limit_matrices(sp: &SturmSpectrum, lambda0: Complex64, c: f64, n: usize) -> Result<LimitSystem> {
    if n == 0 || n > sp.len() {
        return Err(Error::InvalidParameter(format!("Galerkin size {n} with {} Sturm eigenvalues", sp.len())));
    }
    let mu = sp.eigenvalues[..n].to_vec();
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        a[(j, n + j)] = ONE;
        a[(n + j, j)] = lambda0 + c * c / 4.0 - mu[j];
    }
    Ok(LimitSystem { n, mu, lambda0, c, a })
}

/// `(+√(λ₀ + c²/4 − μ), −√(λ₀ + c²/4 − μ))` per `μ`.
pub fn sqrt_spectrum(lambda0: Complex64, c: f64, mu: &[f64]) -> Vec<(Complex64, Complex64)> {
    mu.iter()
        .map(|m| {
            let r = principal_sqrt(lambda0 + c * c / 4.0 - m);
            (r, -r)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiSemigroupRealization {
    pub mu: Vec<f64>,
    pub lambda0: Complex64,
    pub c: f64,
    /// `γⱼ² = Re λ₀ + c²/4 − μⱼ`
    pub gamma_sq: Vec<f64>,
    /// `Im λ₀`
    pub beta: f64,
    /// Diagonal of `S`.
    pub s: Vec<Complex64>,
    pub w: DMatrix<Complex64>,
    pub w_inv: DMatrix<Complex64>,
    pub p_s: DMatrix<Complex64>,
    pub p_u: DMatrix<Complex64>,
    /// `min Re sⱼ`
    pub nu: f64,
    /// `min γⱼ²`
    pub alpha: f64,
}

pub fn build_bisemigroup(mu: &[f64], lambda0: Complex64, c: f64) -> Result<BiSemigroupRealization> {
    let n = mu.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty Sturm spectrum".into()));
    }
    let gamma_sq: Vec<f64> = mu.iter().map(|m| lambda0.re + c * c / 4.0 - m).collect();
    let alpha = gamma_sq.iter().copied().fold(f64::INFINITY, f64::min);
    if !(alpha > 0.0) {
        return Err(Error::NotHyperbolic { alpha });
    }
    let beta = lambda0.im;
    let s: Vec<Complex64> = gamma_sq.iter().map(|g| principal_sqrt(Complex64::new(*g, beta))).collect();
    let nu = s.iter().map(|x| x.re).fold(f64::INFINITY, f64::min);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    let mut w_inv = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        w[(j, j)] = s[j] * r;
        w[(j, n + j)] = -ONE * r;
        w[(n + j, j)] = s[j] * r;
        w[(n + j, n + j)] = ONE * r;
        let si = s[j].inv();
        w_inv[(j, j)] = si * r;
        w_inv[(j, n + j)] = si * r;
        w_inv[(n + j, j)] = -ONE * r;
        w_inv[(n + j, n + j)] = ONE * r;
    }
    let selector = |stable: bool| DMatrix::from_fn(2 * n, 2 * n, |i, k| if i == k && ((i < n) == stable) { ONE } else { ZERO });
    let p_s = &w_inv * selector(true) * &w;
    let p_u = &w_inv * selector(false) * &w;
    Ok(BiSemigroupRealization { mu: mu.to_vec(), lambda0, c, gamma_sq, beta, s, w, w_inv, p_s, p_u, nu, alpha })
}

impl BiSemigroupRealization {
    pub fn n(&self) -> usize {
        self.s.len()
    }

    /// `W⁻¹ diag(−S, S) W`
    pub fn generator(&self) -> DMatrix<Complex64> {
        let n = self.n();
        let d = DMatrix::from_fn(2 * n, 2 * n, |i, k| match (i == k, i < n) {
            (true, true) => -self.s[i],
            (true, false) => self.s[i - n],
            _ => ZERO,
        });
        &self.w_inv * d * &self.w
    }

    /// `e^{−Sz}` in W-coordinates (the same diagonal acts on both halves).
    pub fn decay_factors(&self, z: f64) -> Vec<Complex64> {
        self.s.iter().map(|s| (-s * z).exp()).collect()
    }

    /// `T_s(z) P_s` in the original coordinates, `z ≥ 0`.
    pub fn stable_semigroup(&self, z: f64) -> DMatrix<Complex64> {
        self.half_semigroup(z, true)
    }

    /// `T_u(z) P_u` (the backward flow on the unstable range), `z ≥ 0`.
    pub fn unstable_semigroup(&self, z: f64) -> DMatrix<Complex64> {
        self.half_semigroup(z, false)
    }

    fn half_semigroup(&self, z: f64, stable: bool) -> DMatrix<Complex64> {
        let n = self.n();
        let e = self.decay_factors(z);
        let d = DMatrix::from_fn(2 * n, 2 * n, |i, k| if i == k && ((i < n) == stable) { e[i % n] } else { ZERO });
        &self.w_inv * d * &self.w
    }

    /// `Y ↦ W Y` using the block structure.
    pub fn to_w(&self, y: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut x = vec![ZERO; 2 * n];
        for j in 0..n {
            x[j] = (self.s[j] * y[j] - y[n + j]) * r;
            x[n + j] = (self.s[j] * y[j] + y[n + j]) * r;
        }
        x
    }

    /// `X ↦ W⁻¹ X`
    pub fn from_w(&self, x: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mut y = vec![ZERO; 2 * n];
        for j in 0..n {
            y[j] = (x[j] + x[n + j]) / self.s[j] * r;
            y[n + j] = (x[n + j] - x[j]) * r;
        }
        y
    }

    /// Operator norms of the per-mode blocks of `P_s` (equal to those of
    /// `P_u`); their maximum bounds `‖T_s(z)P_s‖ e^{νz}` and `‖T_u(z)P_u‖ e^{νz}`.
    pub fn projection_norms(&self) -> Vec<f64> {
        // P_s block: ½ [1, −1/s; −s, 1] = ½ (1, −s)ᵀ(1, −1/s), a rank-one matrix
        self.s.iter().map(|s| 0.5 * (1.0 + s.norm_sqr()).sqrt() * (1.0 + 1.0 / s.norm_sqr()).sqrt()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayBound {
    /// `Re λ₀ − sup Re σ_ess + c²/4`
    pub alpha_star: f64,
    pub bound: f64,
    pub half_speed: f64,
}

pub fn decay_bound(lambda0: Complex64, c: f64, sup_re_ess: f64) -> Result<DecayBound> {
    if !(lambda0.re > sup_re_ess) {
        return Err(Error::NotRightOfEssential { re_lambda: lambda0.re, sup_re: sup_re_ess });
    }
    let alpha_star = lambda0.re - sup_re_ess + c * c / 4.0;
    let bound = alpha_star.sqrt();
    let half_speed = 0.5 * c.abs();
    debug_assert!(bound > half_speed);
    Ok(DecayBound { alpha_star, bound, half_speed })
}

/// `(g₊, g₋)`: the certified bounds `‖B±(z)‖ ≤ ‖V(·,z) − V±‖_∞`.
pub fn bnorm_curve(v: &CylinderPotential) -> (Vec<f64>, Vec<f64>) {
    gap_curves(v)
}

/// Lower-left block of `B(z_k)` in the basis `φ`: `⟨φⱼ, (V_lim − V(·,z_k)) φₗ⟩`.
pub fn perturbation_blocks(v: &CylinderPotential, v_lim: &[f64], basis: &[Vec<f64>], layers: &[usize]) -> Vec<DMatrix<f64>> {
    let n = basis.len();
    layers
        .iter()
        .map(|&k| {
            let layer = v.layer(k);
            let delta: Vec<f64> = layer.iter().zip(v_lim).map(|(v, l)| l - v).collect();
            DMatrix::from_fn(n, n, |j, l| basis[j].iter().zip(&basis[l]).zip(&delta).map(|((a, b), d)| a * b * d).sum())
        })
        .collect()
}

/// A trajectory `Y(z_k)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub z: Vec<f64>,
    pub y: Vec<Vec<Complex64>>,
}

impl Trajectory {
    pub fn norms(&self) -> Vec<f64> {
        self.y.iter().map(|y| y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()).collect()
    }
}

/// Project a cylinder field `v` (z-major, layers `k0..k1`) onto the basis `φ`:
/// `Y_k = (Φᵀ v_k, Φᵀ ∂_z v_k)` with central differences for `∂_z`
/// (zero ghost values outside the stored layers).
pub fn project_trajectory(field: &[f64], n_x: usize, z: &[f64], basis: &[Vec<f64>], layers: std::ops::Range<usize>) -> Trajectory {
    let h = z[1] - z[0];
    let nz = z.len();
    let layer = |k: isize| -> Vec<f64> {
        if k < 0 || k as usize >= nz {
            vec![0.0; n_x]
        } else {
            field[k as usize * n_x..(k as usize + 1) * n_x].to_vec()
        }
    };
    let proj = |v: &[f64]| -> Vec<f64> { basis.iter().map(|p| p.iter().zip(v).map(|(a, b)| a * b).sum()).collect() };
    let y = layers
        .clone()
        .map(|k| {
            let k = k as isize;
            let v = layer(k);
            let dv: Vec<f64> = layer(k + 1).iter().zip(&layer(k - 1)).map(|(a, b)| (a - b) / (2.0 * h)).collect();
            proj(&v).into_iter().chain(proj(&dv)).map(|x| Complex64::new(x, 0.0)).collect()
        })
        .collect();
    Trajectory { z: z[layers].to_vec(), y }
}

/// Sup-norm defect of the mild-solution identity on `[a, b] = [z₀, z_end]`:
///
/// `Y(z) = T_s(z−a)P_sY(a) + T_u(b−z)P_uY(b) + ∫_a^z T_s(z−ζ)P_sB(ζ)Y(ζ)dζ
///         − ∫_z^b T_u(ζ−z)P_uB(ζ)Y(ζ)dζ`,
///
/// with both integrals by the trapezoid rule on the trajectory grid.
/// `b_lower[k]` is the lower-left block of `B(z_k)`; empty means `B ≡ 0`.
pub fn mild_residual(traj: &Trajectory, bs: &BiSemigroupRealization, b_lower: &[DMatrix<f64>]) -> f64 {
    let m = traj.z.len();
    let n = bs.n();
    if m < 2 {
        return 0.0;
    }
    let h = traj.z[1] - traj.z[0];
    let x: Vec<Vec<Complex64>> = traj.y.iter().map(|y| bs.to_w(y)).collect();
    // forcing in W-coordinates: W (0, B y₁) = (−B y₁, B y₁)/√2
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let g: Vec<Vec<Complex64>> = (0..m)
        .map(|k| {
            if b_lower.is_empty() {
                return vec![ZERO; n];
            }
            let y1 = DVector::from_iterator(n, traj.y[k][..n].iter().copied());
            let bl = b_lower[k].map(|v| Complex64::new(v, 0.0));
            (bl * y1).iter().map(|v| v * r).collect()
        })
        .collect();
    let e = bs.decay_factors(h);

    // stable integral, forward recursion
    let mut i_s = vec![vec![ZERO; n]; m];
    for k in 0..m - 1 {
        for j in 0..n {
            let gk = -g[k][j];
            let gk1 = -g[k + 1][j];
            i_s[k + 1][j] = e[j] * (i_s[k][j] + 0.5 * h * gk) + 0.5 * h * gk1;
        }
    }
    // unstable integral, backward recursion
    let mut i_u = vec![vec![ZERO; n]; m];
    for k in (0..m - 1).rev() {
        for j in 0..n {
            i_u[k][j] = e[j] * (i_u[k + 1][j] + 0.5 * h * g[k + 1][j]) + 0.5 * h * g[k][j];
        }
    }
    let (a, b) = (traj.z[0], traj.z[m - 1]);
    let mut worst: f64 = 0.0;
    for k in 1..m - 1 {
        let es = bs.decay_factors(traj.z[k] - a);
        let eu = bs.decay_factors(b - traj.z[k]);
        let mut d = vec![ZERO; 2 * n];
        for j in 0..n {
            d[j] = x[k][j] - (es[j] * x[0][j] + i_s[k][j]);
            d[n + j] = x[k][n + j] - (eu[j] * x[m - 1][n + j] - i_u[k][j]);
        }
        let dy = bs.from_w(&d);
        worst = worst.max(dy.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayEstimate {
    pub delta_hat: f64,
    #[serde(rename = "M_hat")]
    pub m_hat: f64,
    pub window: (f64, f64),
    pub fit_quality: f64,
}

/// Fit window on a ray of length `extent`: from 60% to 95% of it.
pub fn default_window(extent: f64) -> (f64, f64) {
    (0.6 * extent, 0.95 * extent)
}

/// Least-squares line through `(z, ln ‖Y(z)‖)` for `z` in the window.
pub fn fit_decay(z: &[f64], norms: &[f64], window: (f64, f64)) -> Result<DecayEstimate> {
    let pts: Vec<(f64, f64)> = z.iter().zip(norms).filter(|(z, _)| **z >= window.0 && **z <= window.1).map(|(z, n)| (*z, *n)).collect();
    if pts.len() < 2 {
        return Err(Error::InvalidWindow(format!("window [{}, {}] holds {} samples", window.0, window.1, pts.len())));
    }
    if let Some((z, v)) = pts.iter().find(|(_, n)| !(*n > 0.0)) {
        return Err(Error::InvalidWindow(format!("nonpositive norm {v} at z = {z}")));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1.ln() - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = pts.iter().map(|p| (p.1.ln() - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1.ln() - intercept - slope * p.0).powi(2)).sum();
    let fit_quality = if ss_tot > 0.0 { (1.0 - ss_res / ss_tot).clamp(0.0, 1.0) } else { 1.0 };
    Ok(DecayEstimate { delta_hat: -slope, m_hat: intercept.exp(), window, fit_quality })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GronwallReport {
    pub pass: bool,
    /// `max(‖u(z)‖ − rhs(z))`; nonpositive up to `tol` when passing.
    pub max_violation: f64,
    pub tol: f64,
    pub nu: f64,
    pub m: f64,
    /// Fitted `(N, δ)` of `‖u(z)‖ ≤ N e^{−δz}` over the default window.
    pub n_hat: f64,
    pub delta_hat: f64,
}

/// Pointwise check of
/// `‖u(z)‖ ≤ M e^{−ν(z−a)} + M ∫_a^b e^{−ν|z−ζ|} F(ζ) ‖u(ζ)‖ dζ`
/// on a uniform grid starting at `a = z[0]`, tolerance `10 h²`.
pub fn gronwall_verify(z: &[f64], norms: &[f64], nu: f64, m: f64, fcurve: &[f64]) -> Result<GronwallReport> {
    let len = z.len();
    if len < 2 || norms.len() != len || fcurve.len() != len {
        return Err(Error::InvalidParameter("gronwall_verify needs matching samples on at least 2 points".into()));
    }
    let a = z[0];
    let h = z[1] - z[0];
    let tol = 10.0 * h * h;
    let fu: Vec<f64> = fcurve.iter().zip(norms).map(|(f, u)| f * u).collect();
    let mut worst = f64::NEG_INFINITY;
    let mut integrand = vec![0.0; len];
    for k in 0..len {
        for (l, v) in integrand.iter_mut().enumerate() {
            *v = (-nu * (z[k] - z[l]).abs()).exp() * fu[l];
        }
        let rhs = m * (-nu * (z[k] - a)).exp() + m * trapezoid(z, &integrand);
        worst = worst.max(norms[k] - rhs);
    }
    let rel: Vec<f64> = z.iter().map(|s| s - a).collect();
    let fit = fit_decay(&rel, norms, default_window(rel[len - 1]))?;
    Ok(GronwallReport {
        pass: worst <= tol,
        max_violation: worst,
        tol,
        nu,
        m,
        n_hat: fit.m_hat,
        delta_hat: fit.delta_hat,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideDecay {
    pub side: Side,
    /// `min Re √(λ₀ + c²/4 − μⱼ)` over the limit spectrum of this side.
    pub nu: f64,
    pub fit: DecayEstimate,
    pub gronwall: GronwallReport,
    /// Sup-norm defect of the mild identity, relative to the trajectory.
    pub mild_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayAnalysis {
    pub lambda0: f64,
    pub bound: DecayBound,
    pub plus: SideDecay,
    pub minus: SideDecay,
    /// The slower of the two tails.
    pub delta_hat: f64,
}

/// Decay of a weighted eigenfunction `v = e^{cz/2}u` (z-major field on the
/// grid of `v`, Dirichlet in z) with real eigenvalue `lambda0`. Each half-line
/// is projected onto the eigenbasis of its limit operator; the minus side
/// is reflected, which leaves the weighted equation unchanged.
pub fn analyze_decay(v: &CylinderPotential, c: f64, lambda0: f64, weighted: &[f64], sup_re_ess: f64) -> Result<DecayAnalysis> {
    let nx = v.n_x();
    let nz = v.n_z();
    if weighted.len() != nx * nz {
        return Err(Error::InvalidParameter(format!("field has {} entries for a {nx}×{nz} grid", weighted.len())));
    }
    let z = v.z_grid();
    let mid = (0..nz).min_by(|&a, &b| z[a].abs().total_cmp(&z[b].abs())).unwrap_or(0);
    if nz - mid < 8 || mid < 7 {
        return Err(Error::InvalidParameter("z grid must extend on both sides of 0".into()));
    }
    let bound = decay_bound(Complex64::new(lambda0, 0.0), c, sup_re_ess)?;
    let (g_plus, g_minus) = bnorm_curve(v);
    let h = v.h_z();

    // reflected copies for the minus side: layer k ↦ nz − 1 − k
    let reflected: Vec<f64> = (0..nz).rev().flat_map(|k| weighted[k * nx..(k + 1) * nx].iter().copied()).collect();
    let z_ref: Vec<f64> = z.iter().rev().map(|s| -s).collect();
    let g_ref: Vec<f64> = g_minus.iter().rev().copied().collect();
    let v_ref = CylinderPotential::from_fn(v.cross_section(), z_ref.clone(), |i, k| v.value(i, nz - 1 - k), v.v_minus().to_vec(), v.v_minus().to_vec())?;

    let side = |side: Side, field: &[f64], zs: &[f64], range: std::ops::Range<usize>, lim: &[f64], pot: &CylinderPotential, g: &[f64]| -> Result<SideDecay> {
        let sp = limit_spectrum(v.cross_section(), lim, None)?;
        let traj = project_trajectory(field, nx, zs, &sp.eigenvectors, range.clone());
        let raw = traj.norms();
        let scale = raw.iter().copied().fold(0.0, f64::max);
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter("eigenfunction vanishes on a half-line".into()));
        }
        let norms: Vec<f64> = raw.iter().map(|n| n / scale).collect();
        let bs = build_bisemigroup(&sp.eigenvalues, Complex64::new(lambda0, 0.0), c)?;
        let blocks = perturbation_blocks(pot, lim, &sp.eigenvectors, &range.clone().collect::<Vec<_>>());
        let mild_defect = mild_residual(&traj, &bs, &blocks) / scale;
        let rel: Vec<f64> = (0..norms.len()).map(|k| k as f64 * h).collect();
        let fit = fit_decay(&rel, &norms, default_window(rel[rel.len() - 1]))?;
        let m = bs.projection_norms().into_iter().fold(0.0, f64::max) * norms[0].max(1.0);
        let gronwall = gronwall_verify(&rel, &norms, bs.nu, m, &g[range])?;
        Ok(SideDecay { side, nu: bs.nu, fit, gronwall, mild_defect })
    };
    let plus = side(Side::Plus, weighted, z, mid..nz, v.v_plus(), v, &g_plus)?;
    let minus = side(Side::Minus, &reflected, &z_ref, nz - 1 - mid..nz, v.v_minus(), &v_ref, &g_ref)?;
    let delta_hat = plus.fit.delta_hat.min(minus.fit.delta_hat);
    Ok(DecayAnalysis { lambda0, bound, plus, minus, delta_hat })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllenCahnSystem {
    /// `[[0, 1], [λ₀ + c²/4 − f′(u₊), 0]]`, row-major.
    pub a_plus: [[Complex64; 2]; 2],
    pub a_minus: [[Complex64; 2]; 2],
    /// Positive square roots; the eigenvalues are `±` these.
    pub root_plus: Complex64,
    pub root_minus: Complex64,
    /// `min Re` of the positive roots.
    pub gap: f64,
    pub half_speed: f64,
}

/// The limit systems of the scalar front problem, `limits = (u₋, u₊)`.
pub fn allen_cahn_matrices(f: &Nonlinearity, lambda0: Complex64, c: f64, limits: (f64, f64)) -> Result<AllenCahnSystem> {
    let (um, up) = limits;
    let sup = f.deriv(um).max(f.deriv(up));
    if !(lambda0.re > sup) {
        return Err(Error::NotRightOfEssential { re_lambda: lambda0.re, sup_re: sup });
    }
    let entry = |u: f64| lambda0 + c * c / 4.0 - f.deriv(u);
    let block = |u: f64| [[ZERO, ONE], [entry(u), ZERO]];
    let root_plus = principal_sqrt(entry(up));
    let root_minus = principal_sqrt(entry(um));
    let gap = root_plus.re.min(root_minus.re);
    let half_speed = 0.5 * c.abs();
    debug_assert!(gap > half_speed);
    Ok(AllenCahnSystem { a_plus: block(up), a_minus: block(um), root_plus, root_minus, gap, half_speed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::complex_eigen;
    use crate::profiles::make_cubic;
    use proptest::prelude::*;

    fn spec(vals: &[f64]) -> SturmSpectrum {
        SturmSpectrum { eigenvalues: vals.to_vec(), eigenvectors: vec![], sup: vals[0] }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn limit_matrix_entries() {
        let sys = limit_matrices(&spec(&[-1.0]), c(1.0, 0.0), 2.0, 1).unwrap();
        assert_eq!(sys.a[(1, 0)], c(3.0, 0.0));
        assert_eq!(sys.a.trace(), ZERO);
        assert!(limit_matrices(&spec(&[-1.0]), c(1.0, 0.0), 2.0, 2).is_err());
    }

    #[test]
    fn square_roots() {
        let r = sqrt_spectrum(c(1.0, 0.0), 2.0, &[-1.0]);
        assert!((r[0].0 - c(3f64.sqrt(), 0.0)).norm() < 1e-15);
        let r = sqrt_spectrum(c(1.0, 4.0), 2.0, &[-1.0]);
        assert!((r[0].0 - c(2.0, 1.0)).norm() < 1e-15);
        assert!((r[0].1 + c(2.0, 1.0)).norm() < 1e-15);
        let r = sqrt_spectrum(c(1.0, 0.0), 2.0, &[2.0]);
        assert_eq!(r[0].0, ZERO);
        assert_eq!(principal_sqrt(c(-4.0, -0.0)), c(0.0, 2.0));
    }

    #[test]
    fn bisemigroup_example() {
        let bs = build_bisemigroup(&[-1.0, -4.0], c(1.0, 4.0), 2.0).unwrap();
        assert_eq!(bs.gamma_sq, vec![3.0, 6.0]);
        assert!((bs.s[0] - c(2.0, 1.0)).norm() < 1e-15);
        assert!((bs.nu - 2.0).abs() < 1e-15);
        assert!(bs.nu >= bs.alpha.sqrt());
        let sys = limit_matrices(&spec(&[-1.0, -4.0]), c(1.0, 4.0), 2.0, 2).unwrap();
        assert!((bs.generator() - &sys.a).norm() <= 1e-10);
        assert!(matches!(build_bisemigroup(&[2.0], c(1.0, 0.0), 0.0), Err(Error::NotHyperbolic { .. })));
    }

    #[test]
    fn real_case_is_self_adjoint_like() {
        let bs = build_bisemigroup(&[-1.0, -2.5, -7.0], c(0.5, 0.0), 0.0).unwrap();
        assert!(bs.s.iter().all(|s| s.im == 0.0));
        assert!((bs.nu - bs.alpha.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn w_coordinate_maps_are_inverse() {
        let bs = build_bisemigroup(&[-1.0, -4.0, -9.0], c(0.3, -1.2), 0.8).unwrap();
        let y: Vec<Complex64> = (0..6).map(|i| c(i as f64 - 2.0, 0.5 * i as f64)).collect();
        let x = bs.to_w(&y);
        let dense = &bs.w * DVector::from_vec(y.clone());
        for (a, b) in x.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
        for (a, b) in bs.from_w(&x).iter().zip(&y) {
            assert!((a - b).norm() < 1e-14);
        }
        assert!((&bs.w * &bs.w_inv - DMatrix::identity(6, 6)).norm() < 1e-14);
    }

    #[test]
    fn projection_norms_match_dense() {
        let bs = build_bisemigroup(&[-1.0, -4.0], c(0.7, 2.0), 1.1).unwrap();
        let norms = bs.projection_norms();
        let top = bs.p_s.clone().singular_values().max();
        assert!((top - norms.iter().copied().fold(0.0, f64::max)).abs() < 1e-12);
    }

    #[test]
    fn decay_bound_examples() {
        let d = decay_bound(c(1.0, 0.0), 0.3535534, -0.25).unwrap();
        assert!((d.alpha_star - (1.25 + 0.3535534f64.powi(2) / 4.0)).abs() < 1e-15);
        assert!((d.alpha_star - 1.28125).abs() < 1e-7);
        assert!((d.bound - 1.13193).abs() < 1e-5);
        assert!(d.bound > d.half_speed);
        let near = decay_bound(c(-0.25 + 1e-12, 0.0), 0.8, -0.25).unwrap();
        assert!((near.bound - 0.4).abs() < 1e-9);
        assert!(matches!(decay_bound(c(-1.0, 0.0), 0.0, -0.5), Err(Error::NotRightOfEssential { .. })));
    }

    /// `Y(z) = e^{σ(z−a)} v` for an eigenpair of `A±`.
    fn eigen_trajectory(bs: &BiSemigroupRealization, sys: &LimitSystem, coeffs: &[(usize, Complex64)]) -> Trajectory {
        let (vals, vecs) = complex_eigen(&sys.a).unwrap();
        let z: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let y = z
            .iter()
            .map(|&s| {
                let mut y = vec![ZERO; 2 * bs.n()];
                for &(idx, w) in coeffs {
                    // anchor growing modes at the right end so the data stay bounded
                    let t = if vals[idx].re > 0.0 { s - 10.0 } else { s };
                    for (i, yi) in y.iter_mut().enumerate() {
                        *yi += w * (vals[idx] * t).exp() * vecs[(i, idx)];
                    }
                }
                y
            })
            .collect();
        Trajectory { z, y }
    }

    #[test]
    fn free_trajectories_satisfy_mild_identity() {
        let mu = [-0.5, -2.0, -6.0];
        let lambda0 = c(0.4, 0.9);
        let bs = build_bisemigroup(&mu, lambda0, 0.6).unwrap();
        let sys = limit_matrices(&spec(&mu), lambda0, 0.6, 3).unwrap();
        let (vals, _) = complex_eigen(&sys.a).unwrap();
        let stable: Vec<usize> = (0..6).filter(|&i| vals[i].re < 0.0).collect();
        let unstable: Vec<usize> = (0..6).filter(|&i| vals[i].re > 0.0).collect();
        let one = eigen_trajectory(&bs, &sys, &[(stable[0], ONE)]);
        assert!(mild_residual(&one, &bs, &[]) <= 1e-10);
        let mix = eigen_trajectory(&bs, &sys, &[(stable[1], c(0.3, 1.0)), (unstable[0], c(-2.0, 0.5)), (unstable[2], ONE)]);
        assert!(mild_residual(&mix, &bs, &[]) <= 1e-10);
        // a trajectory that is not a solution is caught
        let mut bad = mix.clone();
        bad.y[50][0] += 1e-3;
        assert!(mild_residual(&bad, &bs, &[]) > 1e-4);
    }

    #[test]
    fn forced_scalar_problem_second_order() {
        // n = 1, B(z) = b constant: Y' = [[0,1],[γ²+b, 0]]Y exactly solvable.
        let bs = build_bisemigroup(&[0.0], c(1.0, 0.0), 0.0).unwrap();
        let b = -0.36;
        let k = (1.0_f64 + b).sqrt();
        let defect = |h: f64| {
            let m = (4.0 / h) as usize;
            let z: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
            let y = z.iter().map(|&s| vec![c((-k * s).exp(), 0.0), c(-k * (-k * s).exp(), 0.0)]).collect();
            let blocks = vec![DMatrix::from_element(1, 1, b); m + 1];
            mild_residual(&Trajectory { z, y }, &bs, &blocks)
        };
        let (d1, d2) = (defect(0.02), defect(0.01));
        assert!(d1 < 1e-4);
        assert!((d1 / d2 - 4.0).abs() < 0.2, "ratio {}", d1 / d2);
    }

    #[test]
    fn fit_examples() {
        let z: Vec<f64> = (0..=100).map(|k| k as f64 * 0.1).collect();
        let y: Vec<f64> = z.iter().map(|s| 3.0 * (-0.9 * s).exp()).collect();
        let f = fit_decay(&z, &y, (2.0, 10.0)).unwrap();
        assert!((f.delta_hat - 0.9).abs() < 1e-12 && (f.m_hat - 3.0).abs() < 1e-10 && (f.fit_quality - 1.0).abs() < 1e-12);
        let g: Vec<f64> = z.iter().map(|s| (0.1 * s).exp()).collect();
        assert!((fit_decay(&z, &g, (2.0, 10.0)).unwrap().delta_hat + 0.1).abs() < 1e-12);
        let mut bad = y.clone();
        bad[50] = 0.0;
        assert!(matches!(fit_decay(&z, &bad, (2.0, 10.0)), Err(Error::InvalidWindow(_))));
        assert!(fit_decay(&z, &y, (20.0, 30.0)).is_err());
    }

    #[test]
    fn gronwall_examples() {
        let nu = 0.8;
        let z: Vec<f64> = (0..=400).map(|k| k as f64 * 0.05).collect();
        let free: Vec<f64> = z.iter().map(|s| 2.0 * (-nu * s).exp()).collect();
        let rep = gronwall_verify(&z, &free, nu, 2.0, &vec![0.0; z.len()]).unwrap();
        assert!(rep.pass && (rep.delta_hat - nu).abs() < 1e-10);
        // u' = (−ν + e^{−z})u  ⇒  u = exp(−νz + 1 − e^{−z}); inequality with M = 1
        let u: Vec<f64> = z.iter().map(|s| (-nu * s + 1.0 - (-s).exp()).exp()).collect();
        let f: Vec<f64> = z.iter().map(|s| (-s).exp()).collect();
        let rep = gronwall_verify(&z, &u, nu, 1.0, &f).unwrap();
        assert!(rep.pass, "violation {}", rep.max_violation);
        // too small a constant fails
        assert!(!gronwall_verify(&z, &u, nu, 0.5, &f).unwrap().pass);
    }

    #[test]
    fn allen_cahn_entries() {
        let f = make_cubic(0.25).unwrap();
        let cs = std::f64::consts::SQRT_2 / 4.0;
        let sys = allen_cahn_matrices(&f, ZERO, cs, (1.0, 0.0)).unwrap();
        assert!((sys.a_minus[1][0] - c(0.78125, 0.0)).norm() < 1e-15);
        assert!((sys.root_minus.re - 0.8838835).abs() < 1e-7);
        assert!((sys.a_plus[1][0] - c(0.28125, 0.0)).norm() < 1e-15);
        assert!((sys.gap - 0.5303301).abs() < 1e-7);
        assert!(sys.gap > sys.half_speed);
        assert!(allen_cahn_matrices(&f, c(-0.3, 0.0), cs, (1.0, 0.0)).is_err());
    }

    #[test]
    fn allen_cahn_decay_analysis() {
        use crate::cylinder::{assemble_cylinder, eig_symmetric, symmetrize};
        use crate::profiles::{exact_front, front_potential, uniform_grid, BoundaryCondition};
        let f = make_cubic(0.25).unwrap();
        let front = exact_front(&f, &uniform_grid(-20.0, 20.0, 801)).unwrap();
        let v = front_potential(&front).unwrap();
        let op = symmetrize(&assemble_cylinder(&v, front.speed, BoundaryCondition::Dirichlet).unwrap()).unwrap();
        let res = eig_symmetric(&op, 1, 0.0).unwrap();
        let field: Vec<f64> = res.pairs[0].vector.iter().map(|x| x.re).collect();
        let d = analyze_decay(&v, front.speed, res.pairs[0].lambda.re, &field, -0.25).unwrap();
        // weighted tails: √(c²/4 − f′(u±)) = 0.530 (+), 0.884 (−)
        assert!((d.plus.fit.delta_hat - 0.5303).abs() < 0.03);
        assert!((d.minus.fit.delta_hat - 0.8839).abs() < 0.03);
        assert_eq!(d.delta_hat, d.plus.fit.delta_hat);
        assert!(d.plus.gronwall.pass && d.minus.gronwall.pass);
        assert!(d.plus.mild_defect < 1e-3 && d.minus.mild_defect < 1e-3);
        assert!(d.delta_hat > d.bound.half_speed);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sqrt_real_part_dominates(g in -50.0f64..50.0, b in -50.0f64..50.0) {
            let r = principal_sqrt(c(g * g, b)).re;
            prop_assert!(r >= g.abs() * (1.0 - 1e-14));
        }

        #[test]
        fn bisemigroup_invariants(
            mu in prop::collection::vec(-30.0f64..0.0, 1..6),
            re in 0.05f64..3.0,
            im in -5.0f64..5.0,
            speed in -3.0f64..3.0,
        ) {
            let bs = build_bisemigroup(&mu, c(re, im), speed).unwrap();
            let n2 = 2 * mu.len();
            let id = DMatrix::<Complex64>::identity(n2, n2);
            prop_assert!((&bs.p_s + &bs.p_u - &id).norm() <= 1e-12);
            prop_assert!((&bs.p_s * &bs.p_s - &bs.p_s).norm() <= 1e-12 * (1.0 + bs.p_s.norm()));
            prop_assert!((&bs.p_u * &bs.p_u - &bs.p_u).norm() <= 1e-12 * (1.0 + bs.p_u.norm()));
            let sys = limit_matrices(&spec(&mu), c(re, im), speed, mu.len()).unwrap();
            let comm = &sys.a * &bs.p_s - &bs.p_s * &sys.a;
            prop_assert!(comm.norm() <= 1e-10 * (1.0 + sys.a.norm()));
            prop_assert!(bs.nu >= bs.alpha.sqrt() * (1.0 - 1e-14));
            for z in [0.1, 1.0, 5.0, 10.0] {
                let worst = bs.decay_factors(z).iter().map(|e| e.norm()).fold(0.0, f64::max);
                prop_assert!(worst <= (-bs.nu * z).exp() * (1.0 + 1e-10));
            }
        }

        #[test]
        fn bnorm_bounds_projected_perturbation(seed in 0u64..1000) {
            use rand::{Rng, SeedableRng};
            use crate::profiles::{uniform_grid, BoundaryCondition, CrossSection};
            use crate::sturm::limit_spectrum;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let cs = CrossSection::interval(2.0, BoundaryCondition::Dirichlet, 8).unwrap();
            let z = uniform_grid(-3.0, 3.0, 13);
            let vals: Vec<f64> = (0..8 * 13).map(|_| rng.random_range(-2.0..2.0)).collect();
            let vp: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = CylinderPotential::new(cs, z, vals, vp.clone(), vp.clone()).unwrap();
            let sp = limit_spectrum(cs, &vp, None).unwrap();
            let (gp, _) = bnorm_curve(&v);
            let blocks = perturbation_blocks(&v, &vp, &sp.eigenvectors, &(0..13).collect::<Vec<_>>());
            for (k, b) in blocks.iter().enumerate() {
                let y = DVector::from_fn(8, |_, _| rng.random_range(-1.0..1.0));
                prop_assert!((b * &y).norm() <= gp[k] * y.norm() * (1.0 + 1e-12));
            }
        }
    }
}
