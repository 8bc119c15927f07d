//! Discretization of `L = ∂²ₓ + ∂²_z + c∂_z + V` on a truncated cylinder and
//! shift-invert eigensolvers for it.
//!
//! Unknowns are ordered z-major, `index = k * n_x + i`, so the matrix has
//! bandwidth `n_x` apart from periodic-in-z wrap-around entries.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::scalar::{norm, Scalar};
use crate::linalg::{arnoldi, lanczos, CsrMatrix, KrylovParams, LinearOperator, ShiftedSolver};
use crate::profiles::{BoundaryCondition, CrossSection, CylinderPotential};
use crate::sturm::limit_spectrum;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteOperator {
    pub matrix: CsrMatrix,
    pub n_x: usize,
    pub n_z: usize,
    /// `None` on a point cross-section.
    pub h_x: Option<f64>,
    pub h_z: f64,
    pub bc_x: Option<BoundaryCondition>,
    pub bc_z: BoundaryCondition,
    pub c: f64,
    pub symmetrized: bool,
    /// Layer weights `d_k` of the similarity `D A D⁻¹`, when symmetrized.
    pub similarity: Option<Vec<f64>>,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
}

pub fn assemble_cylinder(v: &CylinderPotential, c: f64, bc_z: BoundaryCondition) -> Result<DiscreteOperator> {
    let cs = v.cross_section();
    let (nx, nz) = (v.n_x(), v.n_z());
    if !matches!(cs, CrossSection::Point) && nx < 3 {
        return Err(Error::GridTooSmall(format!("cross-section needs at least 3 points, got {nx}")));
    }
    if nz < 3 {
        return Err(Error::GridTooSmall(format!("z grid needs at least 3 points, got {nz}")));
    }
    if !c.is_finite() {
        return Err(Error::InvalidParameter(format!("wave speed {c}")));
    }
    let hz = v.h_z();
    let hx = cs.spacing();
    let bc_x = cs.bc();
    let up = 1.0 / (hz * hz) + c / (2.0 * hz);
    let down = 1.0 / (hz * hz) - c / (2.0 * hz);
    let periodic_z = bc_z == BoundaryCondition::Periodic;

    let mut rows = Vec::with_capacity(nx * nz);
    for k in 0..nz {
        for i in 0..nx {
            let mut row = Vec::with_capacity(7);
            let mut diag = v.value(i, k) - 2.0 / (hz * hz);
            if let (Some(h), Some(bc)) = (hx, bc_x) {
                let ox = 1.0 / (h * h);
                diag -= 2.0 * ox;
                if i > 0 {
                    row.push((k * nx + i - 1, ox));
                } else if bc == BoundaryCondition::Periodic {
                    row.push((k * nx + nx - 1, ox));
                }
                if i + 1 < nx {
                    row.push((k * nx + i + 1, ox));
                } else if bc == BoundaryCondition::Periodic {
                    row.push((k * nx, ox));
                }
            }
            row.push((k * nx + i, diag));
            if k > 0 {
                row.push(((k - 1) * nx + i, down));
            } else if periodic_z {
                row.push(((nz - 1) * nx + i, down));
            }
            if k + 1 < nz {
                row.push(((k + 1) * nx + i, up));
            } else if periodic_z {
                row.push((i, up));
            }
            rows.push(row);
        }
    }
    Ok(DiscreteOperator {
        matrix: CsrMatrix::from_rows(rows),
        n_x: nx,
        n_z: nz,
        h_x: hx,
        h_z: hz,
        bc_x,
        bc_z,
        c,
        symmetrized: false,
        similarity: None,
        x: v.x_grid().to_vec(),
        z: v.z_grid().to_vec(),
    })
}

/// Diagonal similarity over z-layers, `d_{k+1}/d_k = √r` with
/// `r = (1 + c h/2)/(1 - c h/2)`: the discrete form of the weight `e^{cz/2}`.
/// Weights are normalized to 1 at the middle layer.
pub fn symmetrize(op: &DiscreteOperator) -> Result<DiscreteOperator> {
    if op.bc_z == BoundaryCondition::Periodic {
        return Err(Error::Unsupported("symmetrization with periodic z (wrap-around breaks the similarity)".into()));
    }
    let ch = op.c.abs() * op.h_z;
    if ch >= 2.0 {
        return Err(Error::WeightOverflow(ch));
    }
    let r = (1.0 + 0.5 * op.c * op.h_z) / (1.0 - 0.5 * op.c * op.h_z);
    let mid = (op.n_z / 2) as f64;
    let half_log = 0.5 * r.ln();
    let d: Vec<f64> = (0..op.n_z).map(|k| ((k as f64 - mid) * half_log).exp()).collect();
    if d.iter().any(|w| !w.is_finite() || *w == 0.0) {
        return Err(Error::WeightOverflow(ch));
    }
    let nx = op.n_x;
    let matrix = op.matrix.map_entries(|i, j, a| {
        let (ki, kj) = (i / nx, j / nx);
        if ki == kj {
            a
        } else {
            // geometric mean of the two z-couplings, identical for (i,j) and (j,i)
            (a * op.matrix.get(j, i)).sqrt()
        }
    });
    Ok(DiscreteOperator { matrix, symmetrized: true, similarity: Some(d), ..op.clone() })
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.n_x * self.n_z
    }

    pub fn apply<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        self.matrix.mul_vec(x)
    }

    /// Map an eigenvector of the symmetrized operator back to the original
    /// one (`u = D⁻¹ v`). Identity when not symmetrized.
    pub fn unweight<T: Scalar>(&self, v: &[T]) -> Vec<T> {
        match &self.similarity {
            None => v.to_vec(),
            Some(d) => v.iter().enumerate().map(|(idx, x)| *x * T::from_real(1.0 / d[idx / self.n_x])).collect(),
        }
    }

    pub fn write_matrix_market<W: Write>(&self, w: W) -> std::io::Result<()> {
        self.matrix.write_matrix_market(w)
    }
}

/// `‖op·u − λu‖₂ / ‖u‖₂`
pub fn residual(op: &DiscreteOperator, lambda: Complex64, u: &[Complex64]) -> Result<f64> {
    let nu = norm(u);
    if nu == 0.0 || u.len() != op.dim() {
        return Err(Error::InvalidParameter("residual needs a nonzero vector of the operator's dimension".into()));
    }
    let au = op.apply(u);
    let r: f64 = au.iter().zip(u).map(|(a, x)| (*a - lambda * *x).norm_sqr()).sum::<f64>().sqrt();
    Ok(r / nu)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub lambda: Complex64,
    pub residual: f64,
    /// Unit vector, phase fixed so the largest entry is real and positive.
    #[serde(skip)]
    pub vector: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub method: String,
    pub shift: Complex64,
    /// Operator applications (linear solves).
    pub iterations: usize,
    pub restarts: usize,
    pub subspace: usize,
    pub seed: u64,
}

/// Pairs sorted by distance to the shift.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub pairs: Vec<EigenPair>,
    pub solver: SolverInfo,
}

#[derive(Serialize, Deserialize)]
struct PairDoc {
    re: f64,
    im: f64,
    residual: f64,
}

#[derive(Serialize, Deserialize)]
struct EigenResultDoc {
    pairs: Vec<PairDoc>,
    solver: SolverInfo,
}

impl Serialize for EigenResult {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EigenResultDoc {
            pairs: self.pairs.iter().map(|p| PairDoc { re: p.lambda.re, im: p.lambda.im, residual: p.residual }).collect(),
            solver: self.solver.clone(),
        }
        .serialize(s)
    }
}

impl EigenResult {
    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.pairs.iter().map(|p| p.lambda).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.pairs.iter().map(|p| p.residual).fold(0.0, f64::max)
    }

    /// CSV `x,z,value` (real part), rows ordered by x then z.
    pub fn write_vector_csv<W: Write>(&self, op: &DiscreteOperator, pair: usize, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,z,value")?;
        let v = &self.pairs[pair].vector;
        for i in 0..op.n_x {
            for k in 0..op.n_z {
                writeln!(out, "{},{},{}", op.x[i], op.z[k], v[k * op.n_x + i].re)?;
            }
        }
        Ok(())
    }
}

struct ShiftInvert<'a, T: Scalar>(&'a ShiftedSolver<T>);

impl<T: Scalar> LinearOperator<T> for ShiftInvert<'_, T> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &[T], y: &mut [T]) {
        y.copy_from_slice(x);
        self.0.solve_in_place(y);
    }
}

const SHIFT_RETRIES: usize = 3;
const SEED_RETRIES: u64 = 3;
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Factor `A − σI`, nudging σ off an exact eigenvalue if needed.
fn factor_shift<T: Scalar>(op: &DiscreteOperator, shift: T, nudge: impl Fn(T, usize) -> T) -> Result<ShiftedSolver<T>> {
    let mut last = None;
    for attempt in 0..=SHIFT_RETRIES {
        let s = if attempt == 0 { shift } else { nudge(shift, attempt) };
        match ShiftedSolver::new(&op.matrix, op.n_x, s) {
            Ok(solver) => return Ok(solver),
            Err(e @ Error::SingularShift { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

fn nudge_size(shift_abs: f64, attempt: usize) -> f64 {
    1e-7 * (1.0 + shift_abs) * (1u64 << attempt) as f64
}

fn finish<T: Scalar>(
    op: &DiscreteOperator,
    values: &[Complex64],
    vectors: &[Vec<T>],
    shift: Complex64,
    k: usize,
) -> Result<Vec<EigenPair>> {
    let mut pairs = Vec::with_capacity(k);
    for (theta, v) in values.iter().zip(vectors).take(k) {
        let lambda = shift + theta.inv();
        let mut u: Vec<Complex64> = v.iter().map(|x| x.to_complex()).collect();
        let nrm = norm(&u);
        let big = u.iter().copied().fold(Complex64::new(0.0, 0.0), |m, x| if x.norm() > m.norm() * (1.0 + 1e-12) { x } else { m });
        let phase = big.conj() / (big.norm() * nrm);
        u.iter_mut().for_each(|x| *x *= phase);
        let r = residual(op, lambda, &u)?;
        pairs.push(EigenPair { lambda, residual: r, vector: u });
    }
    pairs.sort_by(|a, b| {
        (a.lambda - shift)
            .norm()
            .total_cmp(&(b.lambda - shift).norm())
            .then(b.lambda.re.total_cmp(&a.lambda.re))
            .then(b.lambda.im.total_cmp(&a.lambda.im))
    });
    Ok(pairs)
}

/// `k` eigenpairs of a symmetric operator nearest `target` (shift-invert
/// Lanczos).
pub fn eig_symmetric(op: &DiscreteOperator, k: usize, target: f64) -> Result<EigenResult> {
    eig_symmetric_seeded(op, k, target, DEFAULT_SEED)
}

pub fn eig_symmetric_seeded(op: &DiscreteOperator, k: usize, target: f64, seed: u64) -> Result<EigenResult> {
    if !op.matrix.is_symmetric() {
        return Err(Error::InvalidParameter("eig_symmetric needs a symmetric operator".into()));
    }
    check_count(op, k)?;
    let solver = factor_shift(op, target, |s, a| s + nudge_size(s.abs(), a))?;
    let sigma = solver.shift();
    let mut last = None;
    for attempt in 0..SEED_RETRIES {
        let params = KrylovParams { seed: seed.wrapping_add(attempt), ..krylov_params(op, k) };
        match lanczos(&ShiftInvert(&solver), &params) {
            Ok(ritz) => {
                let pairs = finish(op, &ritz.values, &ritz.vectors, Complex64::new(sigma, 0.0), k)?;
                let solver = SolverInfo {
                    method: "shift-invert lanczos".into(),
                    shift: Complex64::new(sigma, 0.0),
                    iterations: ritz.applications,
                    restarts: ritz.restarts,
                    subspace: ritz.subspace,
                    seed: params.seed,
                };
                return Ok(EigenResult { pairs, solver });
            }
            Err(e @ Error::ConvergenceFailure { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

/// `k` Ritz pairs nearest `shift` (shift-invert Arnoldi over ℂ).
pub fn eig_general(op: &DiscreteOperator, k: usize, shift: Complex64) -> Result<EigenResult> {
    eig_general_seeded(op, k, shift, DEFAULT_SEED)
}

pub fn eig_general_seeded(op: &DiscreteOperator, k: usize, shift: Complex64, seed: u64) -> Result<EigenResult> {
    check_count(op, k)?;
    let solver = factor_shift(op, shift, |s, a| s + nudge_size(s.norm(), a))?;
    let sigma = solver.shift();
    let mut last = None;
    for attempt in 0..SEED_RETRIES {
        let params = KrylovParams { seed: seed.wrapping_add(attempt), ..krylov_params(op, k) };
        match arnoldi(&ShiftInvert(&solver), &params) {
            Ok(ritz) => {
                let pairs = finish(op, &ritz.values, &ritz.vectors, sigma, k)?;
                let solver = SolverInfo {
                    method: "shift-invert arnoldi".into(),
                    shift: sigma,
                    iterations: ritz.applications,
                    restarts: ritz.restarts,
                    subspace: ritz.subspace,
                    seed: params.seed,
                };
                return Ok(EigenResult { pairs, solver });
            }
            Err(e @ Error::ConvergenceFailure { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

fn check_count(op: &DiscreteOperator, k: usize) -> Result<()> {
    if k == 0 || k >= op.dim() {
        return Err(Error::InvalidParameter(format!("requested {k} eigenpairs of a {}-dimensional operator", op.dim())));
    }
    Ok(())
}

fn krylov_params(op: &DiscreteOperator, k: usize) -> KrylovParams {
    let mut p = KrylovParams::new(k);
    p.subspace = p.subspace.min(op.dim());
    p
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionMatch {
    pub lambda: Complex64,
    /// Index into the descending cross-sectional spectrum.
    pub branch: usize,
    /// Fourier mode `m`, `s = 2πm/P`.
    pub mode: i64,
    pub s: f64,
    /// Distance to the discrete dispersion point.
    pub distance: f64,
    /// Distance of the discrete point to the continuum curve `μ − s² + ics`.
    pub continuum_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub max_distance: f64,
    pub period: f64,
    pub matches: Vec<DispersionMatch>,
}

/// Discrete symbol of `∂²_z + c∂_z` at frequency `s` on spacing `h`.
pub fn discrete_symbol(s: f64, c: f64, h: f64) -> Complex64 {
    Complex64::new(-(4.0 / (h * h)) * (0.5 * s * h).sin().powi(2), (c / h) * (s * h).sin())
}

/// Compare eigenvalues of the periodic-in-z operator with a z-independent
/// potential against the discrete dispersion set
/// `{μⱼʰ − (4/h²)sin²(sh/2) + i(c/h)sin(sh) : s = 2πm/P}`.
pub fn dispersion_check(v: &CylinderPotential, c: f64, nev: usize, shift: Complex64) -> Result<DispersionReport> {
    let nz = v.n_z();
    for k in 0..nz {
        if v.layer(k) != v.v_plus() {
            return Err(Error::InvalidParameter("dispersion check needs V(x,z) = V₊(x) on every layer".into()));
        }
    }
    let op = assemble_cylinder(v, c, BoundaryCondition::Periodic)?;
    let h = op.h_z;
    let period = h * nz as f64;
    let sturm = limit_spectrum(v.cross_section(), v.v_plus(), None)?;
    let res = eig_general(&op, nev, shift)?;
    let half = nz as i64 / 2;
    let modes: Vec<(i64, f64, Complex64)> = (-(nz as i64 - 1 - half)..=half)
        .map(|m| {
            let s = 2.0 * PI * m as f64 / period;
            (m, s, discrete_symbol(s, c, h))
        })
        .collect();
    let mut matches = Vec::with_capacity(res.pairs.len());
    for p in &res.pairs {
        let mut best = (f64::INFINITY, 0usize, 0i64, 0.0f64);
        for (j, mu) in sturm.eigenvalues.iter().enumerate() {
            for &(m, s, sym) in &modes {
                let d = (p.lambda - (sym + mu)).norm();
                if d < best.0 {
                    best = (d, j, m, s);
                }
            }
        }
        let (distance, branch, mode, s) = best;
        let mu = sturm.eigenvalues[branch];
        let continuum = Complex64::new(mu - s * s, c * s);
        let continuum_gap = (discrete_symbol(s, c, h) + mu - continuum).norm();
        matches.push(DispersionMatch { lambda: p.lambda, branch, mode, s, distance, continuum_gap });
    }
    let max_distance = matches.iter().map(|m| m.distance).fold(0.0, f64::max);
    Ok(DispersionReport { max_distance, period, matches })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealnessMatch {
    pub lambda: Complex64,
    pub symmetric: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealnessReport {
    pub sup_re_ess: f64,
    pub tol: f64,
    pub right_eigs: Vec<Complex64>,
    pub max_imag: f64,
    pub matched: Vec<RealnessMatch>,
    pub max_gap: f64,
    /// No eigenvalue right of `sup_re_ess` (recorded, not an error).
    pub empty: bool,
    pub pass: bool,
}

/// Filter eigenvalues with `Re λ > sup_re_ess`, report `max |Im λ|` and pair
/// each with the nearest eigenvalue of the symmetrized operator.
pub fn verify_realness(res: &EigenResult, sup_re_ess: f64, tol: f64, symmetric_eigs: &[f64]) -> RealnessReport {
    let right_eigs: Vec<Complex64> = res.pairs.iter().map(|p| p.lambda).filter(|l| l.re > sup_re_ess).collect();
    let max_imag = right_eigs.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
    let matched: Vec<RealnessMatch> = right_eigs
        .iter()
        .map(|&lambda| {
            let (symmetric, gap) = symmetric_eigs
                .iter()
                .map(|&s| (s, (lambda - s).norm()))
                .fold((f64::NAN, f64::INFINITY), |best, cand| if cand.1 < best.1 { cand } else { best });
            RealnessMatch { lambda, symmetric, gap }
        })
        .collect();
    let max_gap = matched.iter().map(|m| m.gap).fold(0.0, f64::max);
    RealnessReport {
        sup_re_ess,
        tol,
        empty: right_eigs.is_empty(),
        pass: max_imag <= tol && max_gap <= tol,
        right_eigs,
        max_imag,
        matched,
        max_gap,
    }
}
