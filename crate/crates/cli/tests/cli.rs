use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cylspec"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FRONT: &str = r#"
[nonlinearity]
kind = "cubic"
a = 0.25

[wave]
front = true

[potential]
z_extent = 20.0
n_z = 801

[solver]
k = 4
shifts = [[0.0, 0.0]]
"#;

fn standing(period: f64) -> String {
    format!("speed = 0.5\n[nonlinearity]\nkind = \"cubic\"\na = 0.5\n[wave]\nperiod = {period}\n")
}

/// Small synthetic cylinder run; `well` adds eigenvalues right of the essential spectrum.
fn small_synthetic(c: f64, well: f64, alpha: f64) -> String {
    format!(
        r#"speed = {c}
[nonlinearity]
kind = "cubic"
a = 0.5
[wave]
period = {}
[potential]
alpha = {alpha}
n_x = 21
n_z = 201
well = {well}
[solver]
k = 4
"#,
        4.5 * PI
    )
}

#[test]
fn front_profile_csv() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), FRONT, &["wave"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/front.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("z,u"));
    let mid = csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>()).find(|r| r[0].abs() < 1e-12).unwrap();
    assert!((mid[1] - 0.5).abs() < 1e-15);
}

#[test]
fn periodic_orbit_threshold() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &standing(4.0 * PI + 0.1), &["wave"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let w = json(dir.path(), "wave.json");
    assert!((w["period"].as_f64().unwrap() - (4.0 * PI + 0.1)).abs() < 1e-8);
    assert!(dir.path().join("out/wave.csv").exists());

    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &standing(4.0 * PI - 0.1), &["wave"]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("no periodic orbit"), "{err}");
}

/// Constant limits on a Dirichlet interval of length π with n interior points.
fn constant_potential(dir: &Path, vp: f64, vm: f64) -> String {
    let n = 9;
    let h = PI / (n + 1) as f64;
    let x: Vec<f64> = (1..=n).map(|i| i as f64 * h).collect();
    let z: Vec<f64> = (0..21).map(|k| -5.0 + 0.5 * k as f64).collect();
    let values: Vec<Vec<f64>> = (0..n).map(|_| z.iter().map(|&s| if s >= 0.0 { vp } else { vm }).collect()).collect();
    let doc = serde_json::json!({
        "x_grid": x, "z_grid": z, "bc_x": "dirichlet", "length": PI,
        "values": values, "v_plus": vec![vp; n], "v_minus": vec![vm; n],
    });
    let path = dir.join("potential.json");
    std::fs::write(&path, doc.to_string()).unwrap();
    path.display().to_string()
}

fn file_config(path: &str, c: f64) -> String {
    format!(
        "speed = {c}\n[nonlinearity]\nkind = \"cubic\"\na = 0.5\n[wave]\nperiod = 20.0\n[potential]\nkind = \"file\"\npath = \"{path}\"\nn_z = 21\nz_extent = 5.0\n"
    )
}

#[test]
fn essential_constant_limits() {
    let dir = TempDir::new().unwrap();
    let path = constant_potential(dir.path(), 0.3, -1.0);
    let o = run(dir.path(), &file_config(&path, 2.0), &["essential"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let h = PI / 10.0;
    let mu1 = -(4.0 / (h * h)) * (PI / 20.0).sin().powi(2);
    let e = json(dir.path(), "essential.json");
    assert!((e["sup_re"].as_f64().unwrap() - (0.3 + mu1)).abs() < 1e-12);
    assert_eq!(e["sup_re"], e["sup_plus"]);
    // one SVG path per plotted branch
    let csv = std::fs::read_to_string(dir.path().join("out/essential.csv")).unwrap();
    let mut ids: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    ids.dedup();
    let svg = std::fs::read_to_string(dir.path().join("out/essential.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), ids.len());
}

#[test]
fn essential_curves_real_without_speed() {
    let dir = TempDir::new().unwrap();
    let path = constant_potential(dir.path(), 0.3, -1.0);
    let o = run(dir.path(), &file_config(&path, 0.0), &["essential", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("out/essential.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("branch,s,re,im"));
    assert!(csv.lines().skip(1).all(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap() == 0.0));
    assert!(!dir.path().join("out/essential.json").exists());
}

#[test]
fn allen_cahn_eigs_and_decay() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), FRONT, &["eigs"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e = json(dir.path(), "eigs.json");
    let near = e["pairs"].as_array().unwrap().iter().map(|p| p["re"].as_f64().unwrap().hypot(p["im"].as_f64().unwrap())).fold(f64::INFINITY, f64::min);
    assert!(near <= 5e-3);
    let r = json(dir.path(), "realness.json");
    assert!(r["max_imag"].as_f64().unwrap() <= 1e-8);
    assert_eq!(r["pass"], Value::Bool(true));

    let o = run(dir.path(), FRONT, &["decay"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = json(dir.path(), "decay.json");
    let half = d["bound"]["half_speed"].as_f64().unwrap();
    assert!((half - 2f64.sqrt() / 8.0).abs() < 1e-15);
    assert!(d["delta_hat"].as_f64().unwrap() > half);
    assert!(d["plus"]["fit"]["M_hat"].as_f64().unwrap() > 0.0);
}

#[test]
fn empty_right_set_is_flagged_not_fatal() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &small_synthetic(0.5, 0.0, 1.0), &["eigs"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(dir.path(), "realness.json");
    assert_eq!(r["empty"], Value::Bool(true));
    // decay has nothing to work with: hypothesis-failure exit
    let o = run(dir.path(), &small_synthetic(0.5, 0.0, 1.0), &["decay"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
}

#[test]
fn symmetric_decay_rate() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &small_synthetic(0.0, 1.0, 1.0), &["decay"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = json(dir.path(), "decay.json");
    // c = 0: √α* = √(λ₀ − sup Re σ_ess)
    let bound = d["bound"]["bound"].as_f64().unwrap();
    let delta = d["delta_hat"].as_f64().unwrap();
    assert!((delta - bound).abs() <= 0.1 * bound, "{delta} vs {bound}");
    assert_eq!(d["plus"]["gronwall"]["pass"], Value::Bool(true));
    assert_eq!(d["minus"]["gronwall"]["pass"], Value::Bool(true));
}

#[test]
fn slow_switch_fails_hypotheses() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &small_synthetic(0.5, 0.0, 0.1), &["hypotheses"]);
    assert_eq!(o.status.code(), Some(4));
    let h = json(dir.path(), "hypotheses.json");
    assert_eq!(h["h1_pass"], Value::Bool(false));
    assert!(dir.path().join("out/hypotheses.csv").exists());

    let o = run(dir.path(), &small_synthetic(0.5, 0.0, 1.0), &["hypotheses"]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn dispersion_check_command() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &small_synthetic(2.0, 0.0, 1.0), &["dispersion-check"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let d = json(dir.path(), "dispersion.json");
    assert_eq!(d["pass"], Value::Bool(true));
    assert!(d["max_distance"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn config_errors_exit_2_with_one_line() {
    for bad in [
        "speed = 0.5\n[nonlinearity]\nkind = \"cubic\"\na = 1.5\n[wave]\nperiod = 20.0\n",
        "speed = 0.5\nbogus = 1\n[nonlinearity]\nkind = \"cubic\"\na = 0.5\n[wave]\nperiod = 20.0\n",
        "[nonlinearity]\nkind = \"cubic\"\na = 0.5\n[wave]\nperiod = 20.0\n",
        "speed = 0.5\n[nonlinearity]\nkind = \"cubic\"\na = 0.5\n[wave]\nperiod = 20.0\nfront = true\n",
        "speed = 50.0\n[nonlinearity]\nkind = \"cubic\"\na = 0.5\n[wave]\nperiod = 20.0\n",
    ] {
        let dir = TempDir::new().unwrap();
        let o = run(dir.path(), bad, &["essential"]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
        assert_eq!(stderr(&o).lines().count(), 1, "{}", stderr(&o));
        assert!(!dir.path().join("out").exists());
    }
}

#[test]
fn seed_override_is_recorded() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &small_synthetic(0.5, 1.0, 1.0), &["eigs", "--seed", "7", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(json(dir.path(), "eigs.json")["solver"]["seed"], Value::from(7));
    assert!(!dir.path().join("out/eigenvector.csv").exists());
}

#[test]
fn default_report_is_reproducible() {
    let config = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml")).unwrap();
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let t = Instant::now();
    let o = run(a.path(), &config, &["report"]);
    assert!(t.elapsed().as_secs_f64() < 120.0);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(b.path(), &config, &["report"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let read = |d: &TempDir, n: &str| std::fs::read(d.path().join("out").join(n)).unwrap();
    assert_eq!(read(&a, "report.json"), read(&b, "report.json"));
    assert!(a.path().join("out/timings.json").exists());

    let r = json(a.path(), "report.json");
    assert_eq!(r["hypotheses"]["h1_pass"], Value::Bool(true));
    assert_eq!(r["realness"]["pass"], Value::Bool(true));
    assert_eq!(r["decay"]["plus"]["gronwall"]["pass"], Value::Bool(true));
    let sup = r["sup_re_ess"].as_f64().unwrap();
    let sups = &r["sturm_suprema"];
    assert_eq!(sup, sups["plus"].as_f64().unwrap().max(sups["minus"].as_f64().unwrap()));

    let csv = String::from_utf8(read(&a, "essential.csv")).unwrap();
    let mut ids: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    ids.dedup();
    let svg = String::from_utf8(read(&a, "report.svg")).unwrap();
    assert_eq!(svg.matches("<path").count(), ids.len());
}
