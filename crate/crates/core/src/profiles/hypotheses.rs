use serde::{Deserialize, Serialize};

use super::CylinderPotential;
use crate::quad::trapezoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum H3Status {
    /// Bounded cross-sections satisfy the radial condition trivially.
    NotApplicable,
    Pass,
    Fail,
}

/// Numerical check of the decay hypotheses on `g±(z) = ‖V(·,z) - V±‖_∞`.
/// Pairs are `(plus, minus)`; the plus side uses `z ≥ 0`, the minus side `z ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub z: Vec<f64>,
    pub g_plus: Vec<f64>,
    pub g_minus: Vec<f64>,
    pub h1_tail_sup: (f64, f64),
    pub h1_pass: bool,
    pub h2_l1: (f64, f64),
    /// Change of the tail integral when the tail window is doubled.
    pub h2_tail_change: (f64, f64),
    pub h2_pass: bool,
    pub h3_status: H3Status,
    pub tol_sup: f64,
    pub window: f64,
}

/// `(g₊, g₋)` over the whole z grid.
pub fn gap_curves(v: &CylinderPotential) -> (Vec<f64>, Vec<f64>) {
    let dev = |k: usize, lim: &[f64]| v.layer(k).iter().zip(lim).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    (0..v.n_z()).map(|k| (dev(k, v.v_plus()), dev(k, v.v_minus()))).unzip()
}

struct Tail {
    sup: f64,
    l1: f64,
    change: f64,
}

/// `s` are distances `|z| ≥ 0` in increasing order with gap values `g`.
fn tail(s: &[f64], g: &[f64], window: f64) -> Tail {
    if s.is_empty() {
        return Tail { sup: 0.0, l1: 0.0, change: 0.0 };
    }
    let end = *s.last().unwrap();
    let from = |w: f64| s.partition_point(|&x| x < end * (1.0 - w));
    let integral = |start: usize| trapezoid(&s[start..], &g[start..]);
    let w1 = from(window);
    let w2 = from((2.0 * window).min(1.0));
    Tail {
        sup: g[w1..].iter().copied().fold(0.0, f64::max),
        l1: trapezoid(s, g),
        change: integral(w2) - integral(w1),
    }
}

/// H1 passes when both tail suprema over the last `window` fraction of each
/// half-line are at most `tol_sup`; H2 when doubling that tail window changes
/// the tail integral by less than `tol_sup`.
pub fn check_hypotheses(v: &CylinderPotential, tol_sup: f64, window: f64) -> HypothesisReport {
    let (g_plus, g_minus) = gap_curves(v);
    let z = v.z_grid();
    let (sp, gp): (Vec<f64>, Vec<f64>) = z.iter().zip(&g_plus).filter(|(z, _)| **z >= 0.0).map(|(z, g)| (*z, *g)).unzip();
    let (mut sm, mut gm): (Vec<f64>, Vec<f64>) =
        z.iter().zip(&g_minus).filter(|(z, _)| **z <= 0.0).map(|(z, g)| (-*z, *g)).unzip();
    sm.reverse();
    gm.reverse();
    let tp = tail(&sp, &gp, window);
    let tm = tail(&sm, &gm, window);
    HypothesisReport {
        z: z.to_vec(),
        g_plus,
        g_minus,
        h1_tail_sup: (tp.sup, tm.sup),
        h1_pass: tp.sup <= tol_sup && tm.sup <= tol_sup,
        h2_l1: (tp.l1, tm.l1),
        h2_tail_change: (tp.change, tm.change),
        h2_pass: tp.change.abs() < tol_sup && tm.change.abs() < tol_sup && tp.l1.is_finite() && tm.l1.is_finite(),
        h3_status: H3Status::NotApplicable,
        tol_sup,
        window,
    }
}
