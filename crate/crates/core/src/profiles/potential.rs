use serde::{Deserialize, Serialize};

use super::{FrontProfile, Nonlinearity, StandingWaveProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Dirichlet,
    Periodic,
}

/// The cross-section `Ω`: an interval `(0, ℓ)` sampled at `n` points, or a
/// single point (the one-dimensional front problem, where `V = V(z)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CrossSection {
    Interval { length: f64, bc: BoundaryCondition, n: usize },
    Point,
}

impl CrossSection {
    pub fn interval(length: f64, bc: BoundaryCondition, n: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) || n == 0 {
            return Err(Error::InvalidParameter(format!("interval of length {length} with {n} points")));
        }
        Ok(CrossSection::Interval { length, bc, n })
    }

    pub fn n(&self) -> usize {
        match *self {
            CrossSection::Interval { n, .. } => n,
            CrossSection::Point => 1,
        }
    }

    /// Dirichlet: interior points `(i+1)h`, `h = ℓ/(n+1)`. Periodic: `ih`,
    /// `h = ℓ/n`. Point: `[0]`.
    pub fn spacing(&self) -> Option<f64> {
        match *self {
            CrossSection::Interval { length, bc: BoundaryCondition::Dirichlet, n } => Some(length / (n + 1) as f64),
            CrossSection::Interval { length, bc: BoundaryCondition::Periodic, n } => Some(length / n as f64),
            CrossSection::Point => None,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        match *self {
            CrossSection::Interval { bc, n, .. } => {
                let h = self.spacing().unwrap();
                let off = if bc == BoundaryCondition::Dirichlet { 1.0 } else { 0.0 };
                (0..n).map(|i| (i as f64 + off) * h).collect()
            }
            CrossSection::Point => vec![0.0],
        }
    }

    pub fn bc(&self) -> Option<BoundaryCondition> {
        match *self {
            CrossSection::Interval { bc, .. } => Some(bc),
            CrossSection::Point => None,
        }
    }
}

/// `n` equispaced points on `[lo, hi]`, endpoints included.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|k| lo + k as f64 * h).collect()
}

/// `z_k = -P/2 + kP/n`, `k < n` (one period, right end identified with left).
pub fn periodic_grid(period: f64, n: usize) -> Vec<f64> {
    let h = period / n as f64;
    (0..n).map(|k| -0.5 * period + k as f64 * h).collect()
}

/// Grid samples of `V(x, z)` plus the limit profiles `V±(x)`.
///
/// Values are stored z-major (`values[k * n_x + i] = V(x_i, z_k)`), the
/// ordering used by the discretized operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PotentialDocument", into = "PotentialDocument")]
pub struct CylinderPotential {
    cross_section: CrossSection,
    x: Vec<f64>,
    z: Vec<f64>,
    values: Vec<f64>,
    v_plus: Vec<f64>,
    v_minus: Vec<f64>,
    bound: f64,
}

fn check_uniform(z: &[f64], what: &str) -> Result<()> {
    if z.len() < 2 {
        return Ok(());
    }
    let h = z[1] - z[0];
    if !(h > 0.0) || z.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-9 * h.max(1.0)) {
        return Err(Error::InvalidParameter(format!("{what} grid must be uniform and increasing")));
    }
    Ok(())
}

impl CylinderPotential {
    pub fn new(
        cross_section: CrossSection,
        z: Vec<f64>,
        values: Vec<f64>,
        v_plus: Vec<f64>,
        v_minus: Vec<f64>,
    ) -> Result<Self> {
        let nx = cross_section.n();
        if z.is_empty() {
            return Err(Error::InvalidParameter("empty z grid".into()));
        }
        if values.len() != nx * z.len() {
            return Err(Error::InvalidParameter(format!(
                "values has {} entries, expected {} x {}",
                values.len(),
                nx,
                z.len()
            )));
        }
        if v_plus.len() != nx || v_minus.len() != nx {
            return Err(Error::InvalidParameter(format!("limit profiles must have length {nx}")));
        }
        check_uniform(&z, "z")?;
        let all = values.iter().chain(&v_plus).chain(&v_minus).chain(&z);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("potential contains non-finite entries".into()));
        }
        let bound = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(Self { x: cross_section.grid(), cross_section, z, values, v_plus, v_minus, bound })
    }

    pub fn from_fn(
        cross_section: CrossSection,
        z: Vec<f64>,
        v: impl Fn(usize, usize) -> f64,
        v_plus: Vec<f64>,
        v_minus: Vec<f64>,
    ) -> Result<Self> {
        let nx = cross_section.n();
        let values = (0..z.len()).flat_map(|k| (0..nx).map(move |i| (i, k))).map(|(i, k)| v(i, k)).collect();
        Self::new(cross_section, z, values, v_plus, v_minus)
    }

    pub fn cross_section(&self) -> CrossSection {
        self.cross_section
    }
    pub fn x_grid(&self) -> &[f64] {
        &self.x
    }
    pub fn z_grid(&self) -> &[f64] {
        &self.z
    }
    pub fn n_x(&self) -> usize {
        self.x.len()
    }
    pub fn n_z(&self) -> usize {
        self.z.len()
    }
    pub fn h_z(&self) -> f64 {
        if self.z.len() > 1 {
            self.z[1] - self.z[0]
        } else {
            f64::NAN
        }
    }
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[k * self.x.len() + i]
    }
    /// `V(·, z_k)`
    pub fn layer(&self, k: usize) -> &[f64] {
        let nx = self.x.len();
        &self.values[k * nx..(k + 1) * nx]
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn v_plus(&self) -> &[f64] {
        &self.v_plus
    }
    pub fn v_minus(&self) -> &[f64] {
        &self.v_minus
    }
    /// `sup |V|` over the grid.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// The glued field `V∞` on the same grids: `V₊` for `z ≥ 0`, `V₋` below.
    pub fn glued(&self) -> CylinderPotential {
        glued_potential(self.cross_section, &self.v_plus, &self.v_minus, self.z.clone()).expect("validated inputs")
    }
}

pub fn glued_potential(cross_section: CrossSection, v_plus: &[f64], v_minus: &[f64], z: Vec<f64>) -> Result<CylinderPotential> {
    let zs = z.clone();
    CylinderPotential::from_fn(
        cross_section,
        z,
        |i, k| if zs[k] >= 0.0 { v_plus[i] } else { v_minus[i] },
        v_plus.to_vec(),
        v_minus.to_vec(),
    )
}

/// `V = θ_α(z) f'(1) + (1 - θ_α(z)) f'(w(x))` with `θ_α(z) = (1 + e^{-αz})⁻¹`.
pub fn synth_example_potential(
    f: &Nonlinearity,
    wave: &StandingWaveProfile,
    alpha: f64,
    cross_section: CrossSection,
    z: Vec<f64>,
) -> Result<CylinderPotential> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!("switch rate alpha = {alpha} must be positive")));
    }
    if matches!(cross_section, CrossSection::Point) {
        return Err(Error::InvalidParameter("the example potential needs an interval cross-section".into()));
    }
    let plus = f.deriv(1.0);
    let minus: Vec<f64> = cross_section.grid().iter().map(|&x| f.deriv(wave.eval(x))).collect();
    // θ and 1 - θ each evaluated in their non-cancelling form
    let split = |s: f64| -> (f64, f64) {
        let e = (-alpha * s.abs()).exp();
        let small = e / (1.0 + e);
        let large = 1.0 / (1.0 + e);
        if s >= 0.0 {
            (large, small)
        } else {
            (small, large)
        }
    };
    let zs = z.clone();
    let m = minus.clone();
    CylinderPotential::from_fn(
        cross_section,
        z,
        move |i, k| {
            let (theta, rest) = split(zs[k]);
            theta * plus + rest * m[i]
        },
        vec![plus; minus.len()],
        minus,
    )
}

/// `V = p(x) + q(z)`; both limits are `p + q_limit`.
pub fn separable_potential(cross_section: CrossSection, p: &[f64], z: Vec<f64>, q: &[f64], q_limit: f64) -> Result<CylinderPotential> {
    if p.len() != cross_section.n() || q.len() != z.len() {
        return Err(Error::InvalidParameter(format!(
            "p has {} entries for {} x-points, q has {} for {} z-points",
            p.len(),
            cross_section.n(),
            q.len(),
            z.len()
        )));
    }
    let limit: Vec<f64> = p.iter().map(|v| v + q_limit).collect();
    CylinderPotential::from_fn(cross_section, z, |i, k| p[i] + q[k], limit.clone(), limit)
}

/// `V(z) = f'(ū(z))` on a point cross-section, limits `f'(u±)`.
pub fn front_potential(front: &FrontProfile) -> Result<CylinderPotential> {
    let f = front.nonlinearity;
    let (um, up) = front.limits;
    CylinderPotential::new(
        CrossSection::Point,
        front.z.clone(),
        front.u.iter().map(|&u| f.deriv(u)).collect(),
        vec![f.deriv(up)],
        vec![f.deriv(um)],
    )
}

#[derive(Serialize, Deserialize)]
struct PotentialDocument {
    x_grid: Vec<f64>,
    z_grid: Vec<f64>,
    bc_x: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    length: Option<f64>,
    /// `values[i][k] = V(x_i, z_k)`
    values: Vec<Vec<f64>>,
    v_plus: Vec<f64>,
    v_minus: Vec<f64>,
}

impl From<CylinderPotential> for PotentialDocument {
    fn from(v: CylinderPotential) -> Self {
        let (bc_x, length) = match v.cross_section {
            CrossSection::Interval { length, bc: BoundaryCondition::Dirichlet, .. } => ("dirichlet", Some(length)),
            CrossSection::Interval { length, bc: BoundaryCondition::Periodic, .. } => ("periodic", Some(length)),
            CrossSection::Point => ("point", None),
        };
        let values = (0..v.n_x()).map(|i| (0..v.n_z()).map(|k| v.value(i, k)).collect()).collect();
        PotentialDocument {
            x_grid: v.x,
            z_grid: v.z,
            bc_x: bc_x.into(),
            length,
            values,
            v_plus: v.v_plus,
            v_minus: v.v_minus,
        }
    }
}

impl TryFrom<PotentialDocument> for CylinderPotential {
    type Error = Error;
    fn try_from(doc: PotentialDocument) -> Result<Self> {
        let n = doc.x_grid.len();
        let cross_section = match doc.bc_x.as_str() {
            "point" => CrossSection::Point,
            kind => {
                let bc = match kind {
                    "dirichlet" => BoundaryCondition::Dirichlet,
                    "periodic" => BoundaryCondition::Periodic,
                    other => return Err(Error::InvalidParameter(format!("unknown bc_x `{other}`"))),
                };
                check_uniform(&doc.x_grid, "x")?;
                let length = match (doc.length, n) {
                    (Some(l), _) => l,
                    (None, 0) => return Err(Error::InvalidParameter("empty x grid".into())),
                    (None, 1) if bc == BoundaryCondition::Dirichlet => 2.0 * doc.x_grid[0],
                    (None, 1) => return Err(Error::InvalidParameter("periodic x grid of one point needs `length`".into())),
                    (None, _) => {
                        let h = doc.x_grid[1] - doc.x_grid[0];
                        match bc {
                            BoundaryCondition::Dirichlet => h * (n + 1) as f64,
                            BoundaryCondition::Periodic => h * n as f64,
                        }
                    }
                };
                let cs = CrossSection::interval(length, bc, n)?;
                let expected = cs.grid();
                if expected.iter().zip(&doc.x_grid).any(|(a, b)| (a - b).abs() > 1e-9 * length) {
                    return Err(Error::InvalidParameter(format!("x grid does not match a {kind} grid on (0, {length})")));
                }
                cs
            }
        };
        let nx = cross_section.n();
        let nz = doc.z_grid.len();
        if doc.values.len() != nx || doc.values.iter().any(|r| r.len() != nz) {
            return Err(Error::InvalidParameter(format!("values must be {nx} rows of {nz}")));
        }
        let values = (0..nz).flat_map(|k| doc.values.iter().map(move |row| row[k])).collect();
        CylinderPotential::new(cross_section, doc.z_grid, values, doc.v_plus, doc.v_minus)
    }
}
