use std::path::{Path, PathBuf};

use cylspec::profiles::{
    exact_front, front_potential, periodic_grid, periodic_wave, synth_example_potential, uniform_grid, BoundaryCondition,
    CrossSection, CylinderPotential, FrontProfile, Nonlinearity, StandingWaveProfile,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = cylspec::cylinder::DEFAULT_SEED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub nonlinearity: Nonlinearity,
    pub wave: WaveConfig,
    #[serde(default)]
    pub potential: PotentialConfig,
    /// Required unless the wave is a front, whose speed is fixed by `a`.
    pub speed: Option<f64>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Not echoed into reports, which must not depend on where they land.
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveConfig {
    /// Period `L` of the standing wave (also the cross-section length).
    pub period: Option<f64>,
    #[serde(default)]
    pub front: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Synthetic,
    File,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    /// Switch rate of the synthetic potential.
    pub alpha: f64,
    /// Half-length `Z` of the axial domain.
    pub z_extent: f64,
    pub n_x: usize,
    pub n_z: usize,
    pub bc_x: BoundaryCondition,
    pub bc_z: BoundaryCondition,
    /// Optional localized well `amplitude · e^{−(z/width)²}` added to the
    /// synthetic potential; it leaves the limits unchanged.
    pub well: f64,
    pub well_width: f64,
    pub path: Option<PathBuf>,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            kind: PotentialKind::Synthetic,
            alpha: 1.0,
            z_extent: 20.0,
            n_x: 63,
            n_z: 401,
            bc_x: BoundaryCondition::Periodic,
            bc_z: BoundaryCondition::Dirichlet,
            well: 0.0,
            well_width: 2.0,
            path: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub k: usize,
    /// `[re, im]` shifts; empty means `sup Re σ_ess + 0.25`.
    pub shifts: Vec<[f64; 2]>,
    pub realness_tol: f64,
    pub hypothesis_tol: f64,
    pub hypothesis_window: f64,
    pub curve_samples: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { k: 8, shifts: Vec::new(), realness_tol: 1e-8, hypothesis_tol: 1e-6, hypothesis_window: 0.1, curve_samples: 201 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json, Format::Svg] }
    }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| CliError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let p = &self.potential;
        match (self.wave.period, self.wave.front) {
            (Some(_), true) | (None, false) => return bad("wave: set exactly one of `period` or `front = true`".into()),
            (Some(l), false) if !(l > 0.0 && l.is_finite()) => return bad(format!("wave.period = {l} must be positive")),
            _ => {}
        }
        if self.wave.front && self.nonlinearity.a() > 0.5 {
            return bad(format!("front mode needs a ≤ 1/2, got a = {}", self.nonlinearity.a()));
        }
        if self.wave.front && p.bc_z == BoundaryCondition::Periodic {
            return bad("front mode needs potential.bc_z = \"dirichlet\"".into());
        }
        if self.wave.front && p.kind == PotentialKind::File {
            return bad("front mode builds its own potential; drop potential.kind = \"file\"".into());
        }
        match self.speed {
            None if !self.wave.front => return bad("speed is required unless wave.front = true".into()),
            Some(c) if !c.is_finite() => return bad(format!("speed = {c}")),
            Some(c) if self.wave.front => {
                let want = std::f64::consts::SQRT_2 * (0.5 - self.nonlinearity.a());
                if (c - want).abs() > 1e-12 {
                    return bad(format!("speed = {c} contradicts the front speed {want}"));
                }
            }
            _ => {}
        }
        if !(p.alpha > 0.0) {
            return bad(format!("potential.alpha = {} must be positive", p.alpha));
        }
        if !(p.z_extent > 0.0 && p.z_extent.is_finite()) {
            return bad(format!("potential.z_extent = {} must be positive", p.z_extent));
        }
        if p.n_x < 3 || p.n_z < 3 {
            return bad(format!("grids need at least 3 points, got n_x = {}, n_z = {}", p.n_x, p.n_z));
        }
        if !p.well.is_finite() || !(p.well_width > 0.0) {
            return bad(format!("potential.well = {}, well_width = {}", p.well, p.well_width));
        }
        if p.kind == PotentialKind::File && p.path.is_none() {
            return bad("potential.kind = \"file\" needs potential.path".into());
        }
        if p.kind == PotentialKind::Synthetic && p.path.is_some() {
            return bad("potential.path is only read when potential.kind = \"file\"".into());
        }
        if let (Some(c), PotentialKind::Synthetic) = (self.speed, p.kind) {
            let h = self.h_z();
            if p.bc_z == BoundaryCondition::Dirichlet && c.abs() * h >= 2.0 {
                return bad(format!("|c|·h_z = {} ≥ 2: refine n_z", c.abs() * h));
            }
        }
        let s = &self.solver;
        if s.k == 0 {
            return bad("solver.k must be at least 1".into());
        }
        if s.shifts.iter().flatten().any(|v| !v.is_finite()) {
            return bad("solver.shifts must be finite".into());
        }
        if !(s.realness_tol > 0.0) || !(s.hypothesis_tol > 0.0) {
            return bad("solver tolerances must be positive".into());
        }
        if !(s.hypothesis_window > 0.0 && s.hypothesis_window <= 0.5) {
            return bad(format!("solver.hypothesis_window = {} must lie in (0, 1/2]", s.hypothesis_window));
        }
        if s.curve_samples < 2 {
            return bad("solver.curve_samples must be at least 2".into());
        }
        if self.output.formats.is_empty() {
            return bad("output.formats is empty".into());
        }
        Ok(())
    }

    fn h_z(&self) -> f64 {
        let p = &self.potential;
        match p.bc_z {
            BoundaryCondition::Dirichlet => 2.0 * p.z_extent / (p.n_z - 1) as f64,
            BoundaryCondition::Periodic => 2.0 * p.z_extent / p.n_z as f64,
        }
    }

    pub fn z_grid(&self) -> Vec<f64> {
        let p = &self.potential;
        match p.bc_z {
            BoundaryCondition::Dirichlet => uniform_grid(-p.z_extent, p.z_extent, p.n_z),
            BoundaryCondition::Periodic => periodic_grid(2.0 * p.z_extent, p.n_z),
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    pub fn speed(&self) -> f64 {
        self.speed.unwrap_or_else(|| std::f64::consts::SQRT_2 * (0.5 - self.nonlinearity.a()))
    }
}

/// The wave profile a config describes.
pub enum Wave {
    Standing(StandingWaveProfile),
    Front(FrontProfile),
}

pub fn build_wave(cfg: &RunConfig) -> Result<Wave, CliError> {
    let f = &cfg.nonlinearity;
    match cfg.wave.period {
        Some(l) => Ok(Wave::Standing(periodic_wave(f, l, 1e-12)?)),
        None => Ok(Wave::Front(exact_front(f, &cfg.z_grid())?)),
    }
}

pub fn build_potential(cfg: &RunConfig, wave: &Wave) -> Result<CylinderPotential, CliError> {
    let p = &cfg.potential;
    if p.kind == PotentialKind::File {
        let path = p.path.as_ref().expect("validated");
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        return serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    match wave {
        Wave::Front(front) => Ok(front_potential(front)?),
        Wave::Standing(w) => {
            let cs = CrossSection::interval(w.period, p.bc_x, p.n_x)?;
            let z = cfg.z_grid();
            let v = synth_example_potential(&cfg.nonlinearity, w, p.alpha, cs, z.clone())?;
            if p.well == 0.0 {
                return Ok(v);
            }
            let well = |s: f64| p.well * (-(s / p.well_width).powi(2)).exp();
            Ok(CylinderPotential::from_fn(cs, z.clone(), |i, k| v.value(i, k) + well(z[k]), v.v_plus().to_vec(), v.v_minus().to_vec())?)
        }
    }
}
