use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use cylspec::cylinder::{
    assemble_cylinder, dispersion_check, eig_general_seeded, eig_symmetric_seeded, symmetrize, verify_realness, DiscreteOperator,
    DispersionReport, EigenResult, RealnessReport,
};
use cylspec::essential::{dispersion_curves, EssentialSpectrumDescriptor};
use cylspec::profiles::{check_hypotheses, BoundaryCondition, CylinderPotential, HypothesisReport};
use cylspec::spatial::{analyze_decay, DecayAnalysis};
use cylspec::sturm::{limit_spectrum, SturmSpectrum};

use crate::config::{build_potential, build_wave, Format, RunConfig, Wave};
use crate::error::CliError;
use crate::svg::{render, Plot};

/// Files produced by a command, written together once it has finished.
#[derive(Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    /// Raised after the artifacts are written.
    pub failure: Option<CliError>,
}

impl Artifacts {
    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    fn text(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text.into_bytes()));
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<(), CliError> {
        let mut buf = Vec::new();
        write(&mut buf)?;
        self.files.push((name.to_string(), buf));
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir)?;
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
        }
        Ok(())
    }
}

struct Setup {
    potential: CylinderPotential,
    c: f64,
    sp_plus: SturmSpectrum,
    sp_minus: SturmSpectrum,
}

impl Setup {
    fn sup_re_ess(&self) -> f64 {
        self.sp_plus.sup.max(self.sp_minus.sup)
    }
}

fn setup(cfg: &RunConfig) -> Result<Setup, CliError> {
    let wave = build_wave(cfg)?;
    let potential = build_potential(cfg, &wave)?;
    let cs = potential.cross_section();
    let sp_plus = limit_spectrum(cs, potential.v_plus(), None)?;
    let sp_minus = limit_spectrum(cs, potential.v_minus(), None)?;
    Ok(Setup { potential, c: cfg.speed(), sp_plus, sp_minus })
}

fn shifts(cfg: &RunConfig, sup_re: f64) -> Vec<Complex64> {
    if cfg.solver.shifts.is_empty() {
        vec![Complex64::new(sup_re + 0.25, 0.0)]
    } else {
        cfg.solver.shifts.iter().map(|s| Complex64::new(s[0], s[1])).collect()
    }
}

/// Union of the runs at each shift, duplicates dropped; solver metadata of
/// the first run.
fn merge(runs: Vec<EigenResult>) -> EigenResult {
    let mut runs = runs.into_iter();
    let mut merged = runs.next().expect("at least one shift");
    for run in runs {
        for p in run.pairs {
            if !merged.pairs.iter().any(|q| (q.lambda - p.lambda).norm() <= 1e-9 * (1.0 + p.lambda.norm())) {
                merged.pairs.push(p);
            }
        }
    }
    merged
}

fn eigensolve(cfg: &RunConfig, op: &DiscreteOperator, sup_re: f64) -> Result<EigenResult, CliError> {
    let runs = shifts(cfg, sup_re)
        .into_iter()
        .map(|s| eig_general_seeded(op, cfg.solver.k, s, cfg.seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge(runs))
}

fn symmetric_solve(cfg: &RunConfig, op: &DiscreteOperator, sup_re: f64) -> Result<EigenResult, CliError> {
    let sym = symmetrize(op)?;
    let runs = shifts(cfg, sup_re)
        .into_iter()
        .map(|s| eig_symmetric_seeded(&sym, cfg.solver.k, s.re, cfg.seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(merge(runs))
}

fn realness(cfg: &RunConfig, op: &DiscreteOperator, res: &EigenResult, sup_re: f64) -> Result<RealnessReport, CliError> {
    let sym = symmetric_solve(cfg, op, sup_re)?;
    let eigs: Vec<f64> = sym.pairs.iter().map(|p| p.lambda.re).collect();
    Ok(verify_realness(res, sup_re, cfg.solver.realness_tol, &eigs))
}

fn decay(cfg: &RunConfig, s: &Setup, op: &DiscreteOperator) -> Result<DecayAnalysis, CliError> {
    let sup_re = s.sup_re_ess();
    let sym = symmetric_solve(cfg, op, sup_re)?;
    let top = sym.pairs.iter().max_by(|a, b| a.lambda.re.total_cmp(&b.lambda.re)).expect("k ≥ 1");
    if top.lambda.re <= sup_re {
        return Err(CliError::Hypothesis(format!(
            "no eigenvalue right of the essential spectrum (largest {:.6e} ≤ sup Re σ_ess = {sup_re:.6e})",
            top.lambda.re
        )));
    }
    let field: Vec<f64> = top.vector.iter().map(|x| x.re).collect();
    Ok(analyze_decay(&s.potential, s.c, top.lambda.re, &field, sup_re)?)
}

fn require_dirichlet_z(cfg: &RunConfig, what: &str) -> Result<(), CliError> {
    if cfg.potential.bc_z == BoundaryCondition::Periodic {
        return Err(CliError::Config(format!("{what} needs potential.bc_z = \"dirichlet\"")));
    }
    Ok(())
}

fn essential_descriptor(cfg: &RunConfig, s: &Setup) -> Result<EssentialSpectrumDescriptor, CliError> {
    Ok(dispersion_curves(&s.sp_plus, &s.sp_minus, s.c, None, cfg.solver.curve_samples)?)
}

fn essential_plot(d: &EssentialSpectrumDescriptor, eigs: &[Complex64]) -> String {
    render(&Plot {
        title: "essential spectrum",
        x_label: "Re λ",
        y_label: "Im λ",
        series: d.branches.iter().filter(|b| b.plotted).map(|b| b.lambda.iter().map(|l| (l.re, l.im)).collect()).collect(),
        points: eigs.iter().map(|l| (l.re, l.im)).collect(),
    })
}

#[derive(Serialize)]
struct WaveSummary {
    period: f64,
    energy: f64,
    turning_points: (f64, f64),
    ode_residual: f64,
    periodicity_defect: f64,
}

#[derive(Serialize)]
struct FrontSummary {
    speed: f64,
    limits: (f64, f64),
    u_at_zero: f64,
    residual: f64,
}

pub fn cmd_wave(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let mut out = Artifacts::default();
    match build_wave(cfg)? {
        Wave::Standing(w) => {
            if cfg.wants(Format::Csv) {
                out.csv("wave.csv", |b| w.write_csv(b))?;
            }
            if cfg.wants(Format::Json) {
                out.json(
                    "wave.json",
                    &WaveSummary {
                        period: w.period,
                        energy: w.energy,
                        turning_points: w.turning_points,
                        ode_residual: w.ode_residual(),
                        periodicity_defect: w.periodicity_defect(),
                    },
                )?;
            }
            if cfg.wants(Format::Svg) {
                let series = vec![w.x.iter().copied().zip(w.w.iter().copied()).collect()];
                out.text("wave.svg", render(&Plot { title: "standing wave", x_label: "x", y_label: "w", series, points: vec![] }));
            }
        }
        Wave::Front(front) => {
            if cfg.wants(Format::Csv) {
                out.csv("front.csv", |b| front.write_csv(b))?;
            }
            if cfg.wants(Format::Json) {
                out.json(
                    "front.json",
                    &FrontSummary { speed: front.speed, limits: front.limits, u_at_zero: front.eval(0.0), residual: front.residual() },
                )?;
            }
            if cfg.wants(Format::Svg) {
                let series = vec![front.z.iter().copied().zip(front.u.iter().copied()).collect()];
                out.text("front.svg", render(&Plot { title: "front", x_label: "z", y_label: "u", series, points: vec![] }));
            }
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct EssentialJson {
    sup_re: f64,
    sup_plus: f64,
    sup_minus: f64,
    c: f64,
    n_branches: usize,
    s_max: f64,
}

pub fn cmd_essential(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let s = setup(cfg)?;
    let d = essential_descriptor(cfg, &s)?;
    let mut out = Artifacts::default();
    if cfg.wants(Format::Csv) {
        out.csv("essential.csv", |b| d.write_csv(b))?;
    }
    if cfg.wants(Format::Json) {
        let sum = d.summary();
        out.json(
            "essential.json",
            &EssentialJson { sup_re: sum.sup_re, sup_plus: d.sup_plus, sup_minus: d.sup_minus, c: sum.c, n_branches: sum.n_branches, s_max: d.s_max },
        )?;
    }
    if cfg.wants(Format::Svg) {
        out.text("essential.svg", essential_plot(&d, &[]));
    }
    Ok(out)
}

pub fn cmd_eigs(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let s = setup(cfg)?;
    let op = assemble_cylinder(&s.potential, s.c, cfg.potential.bc_z)?;
    let sup_re = s.sup_re_ess();
    let res = eigensolve(cfg, &op, sup_re)?;
    let real = match cfg.potential.bc_z {
        BoundaryCondition::Dirichlet => Some(realness(cfg, &op, &res, sup_re)?),
        BoundaryCondition::Periodic => None,
    };
    let mut out = Artifacts::default();
    if cfg.wants(Format::Json) {
        out.json("eigs.json", &res)?;
        if let Some(r) = &real {
            out.json("realness.json", r)?;
        }
    }
    if cfg.wants(Format::Csv) {
        out.csv("eigenvector.csv", |b| res.write_vector_csv(&op, 0, b))?;
    }
    if cfg.wants(Format::Svg) {
        out.text("eigs.svg", essential_plot(&essential_descriptor(cfg, &s)?, &res.eigenvalues()));
    }
    Ok(out)
}

pub fn cmd_decay(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    require_dirichlet_z(cfg, "decay")?;
    let s = setup(cfg)?;
    let op = assemble_cylinder(&s.potential, s.c, BoundaryCondition::Dirichlet)?;
    let d = decay(cfg, &s, &op)?;
    let mut out = Artifacts::default();
    if cfg.wants(Format::Json) {
        out.json("decay.json", &d)?;
    }
    if !(d.plus.gronwall.pass && d.minus.gronwall.pass) {
        out.failure = Some(CliError::Hypothesis("Gronwall bound violated".into()));
    }
    Ok(out)
}

#[derive(Serialize)]
struct DispersionJson<'a> {
    pass: bool,
    tol: f64,
    #[serde(flatten)]
    report: &'a DispersionReport,
}

const DISPERSION_TOL: f64 = 1e-8;

/// Periodic-in-z operator with the `+` limit on every layer.
fn dispersion(cfg: &RunConfig, s: &Setup) -> Result<DispersionReport, CliError> {
    let p = &cfg.potential;
    let z = cylspec::profiles::periodic_grid(2.0 * p.z_extent, s.potential.n_z());
    let vp = s.potential.v_plus().to_vec();
    let v = CylinderPotential::from_fn(s.potential.cross_section(), z, |i, _| vp[i], vp.clone(), vp.clone())?;
    // offset from sup so no shift lands on the zero mode
    let shift = cfg.solver.shifts.first().map(|s| Complex64::new(s[0], s[1])).unwrap_or(Complex64::new(s.sp_plus.sup + 0.1, 0.0));
    Ok(dispersion_check(&v, s.c, cfg.solver.k, shift)?)
}

pub fn cmd_dispersion_check(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let s = setup(cfg)?;
    let rep = dispersion(cfg, &s)?;
    let mut out = Artifacts::default();
    if cfg.wants(Format::Json) {
        out.json("dispersion.json", &DispersionJson { pass: rep.max_distance <= DISPERSION_TOL, tol: DISPERSION_TOL, report: &rep })?;
    }
    Ok(out)
}

fn hypotheses(cfg: &RunConfig, s: &Setup) -> HypothesisReport {
    check_hypotheses(&s.potential, cfg.solver.hypothesis_tol, cfg.solver.hypothesis_window)
}

fn hypothesis_failure(h: &HypothesisReport) -> Option<CliError> {
    (!(h.h1_pass && h.h2_pass)).then(|| {
        CliError::Hypothesis(format!(
            "H1 {} (tail sup {:.3e}/{:.3e}), H2 {} (tail change {:.3e}/{:.3e}) at tol {:.1e}",
            if h.h1_pass { "holds" } else { "fails" },
            h.h1_tail_sup.0,
            h.h1_tail_sup.1,
            if h.h2_pass { "holds" } else { "fails" },
            h.h2_tail_change.0,
            h.h2_tail_change.1,
            h.tol_sup
        ))
    })
}

pub fn cmd_hypotheses(cfg: &RunConfig) -> Result<Artifacts, CliError> {
    let s = setup(cfg)?;
    let h = hypotheses(cfg, &s);
    let mut out = Artifacts::default();
    if cfg.wants(Format::Json) {
        out.json("hypotheses.json", &h)?;
    }
    if cfg.wants(Format::Csv) {
        let mut text = String::from("z,g_plus,g_minus\n");
        for ((z, p), m) in h.z.iter().zip(&h.g_plus).zip(&h.g_minus) {
            text.push_str(&format!("{z},{p},{m}\n"));
        }
        out.text("hypotheses.csv", text);
    }
    if cfg.wants(Format::Svg) {
        let curve = |g: &[f64]| h.z.iter().zip(g).map(|(z, g)| (*z, g.max(1e-300).log10())).collect();
        out.text(
            "hypotheses.svg",
            render(&Plot { title: "gap curves", x_label: "z", y_label: "log10 g", series: vec![curve(&h.g_plus), curve(&h.g_minus)], points: vec![] }),
        );
    }
    out.failure = hypothesis_failure(&h);
    Ok(out)
}

#[derive(Serialize)]
struct SturmSuprema {
    plus: f64,
    minus: f64,
}

#[derive(Serialize)]
struct DispersionSummary {
    max_distance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct Report<'a> {
    config: &'a RunConfig,
    hypotheses: HypothesisReport,
    sturm_suprema: SturmSuprema,
    sup_re_ess: f64,
    dispersion: DispersionSummary,
    eigenvalues: EigenResult,
    realness: Option<RealnessReport>,
    decay: Option<DecayAnalysis>,
    /// Why `decay` is absent.
    decay_note: Option<String>,
}

pub type Timings = Vec<(&'static str, f64)>;

pub fn cmd_report(cfg: &RunConfig) -> Result<(Artifacts, Timings), CliError> {
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str| {
        timings.push((name, clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };
    let s = setup(cfg)?;
    lap("setup");
    let h = hypotheses(cfg, &s);
    lap("hypotheses");
    let d = essential_descriptor(cfg, &s)?;
    lap("essential");
    let disp = dispersion(cfg, &s)?;
    lap("dispersion");
    let op = assemble_cylinder(&s.potential, s.c, cfg.potential.bc_z)?;
    let sup_re = s.sup_re_ess();
    let res = eigensolve(cfg, &op, sup_re)?;
    lap("eigs");
    let dirichlet = cfg.potential.bc_z == BoundaryCondition::Dirichlet;
    let real = if dirichlet { Some(realness(cfg, &op, &res, sup_re)?) } else { None };
    lap("realness");
    let (decay, decay_note) = match dirichlet {
        false => (None, Some("decay analysis needs a Dirichlet z boundary".to_string())),
        true => match decay(cfg, &s, &op) {
            Ok(d) => (Some(d), None),
            Err(CliError::Hypothesis(m)) => (None, Some(m)),
            Err(e) => return Err(e),
        },
    };
    lap("decay");

    let mut out = Artifacts::default();
    let failure = hypothesis_failure(&h);
    let report = Report {
        config: cfg,
        hypotheses: h,
        sturm_suprema: SturmSuprema { plus: s.sp_plus.sup, minus: s.sp_minus.sup },
        sup_re_ess: sup_re,
        dispersion: DispersionSummary { max_distance: disp.max_distance, pass: disp.max_distance <= DISPERSION_TOL },
        eigenvalues: res,
        realness: real,
        decay,
        decay_note,
    };
    if cfg.wants(Format::Json) {
        out.json("report.json", &report)?;
    }
    if cfg.wants(Format::Csv) {
        out.csv("essential.csv", |b| d.write_csv(b))?;
    }
    if cfg.wants(Format::Svg) {
        out.text("report.svg", essential_plot(&d, &report.eigenvalues.eigenvalues()));
    }
    out.failure = failure;
    Ok((out, timings))
}
