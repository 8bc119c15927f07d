use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Nonlinearity;
use crate::error::{Error, Result};
use crate::quad::{composite_gauss_legendre, gauss_legendre};

/// RK4 steps per period.
pub const WAVE_STEPS: usize = 2048;
const GL_NODES: usize = 64;
const GL_PANELS: usize = 4;

/// One period of an `L`-periodic solution of `w'' + f(w) = 0`, sampled at
/// `x_k = k L / WAVE_STEPS`, `k = 0..=WAVE_STEPS`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandingWaveProfile {
    pub nonlinearity: Nonlinearity,
    pub period: f64,
    pub energy: f64,
    pub turning_points: (f64, f64),
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
}

/// Smallest period of small oscillations about `a`.
pub fn min_period(f: &Nonlinearity) -> f64 {
    2.0 * PI / f.deriv(f.a()).sqrt()
}

/// Open energy interval `(F(a), min(F(0), F(1)))` carrying closed orbits.
pub fn energy_range(f: &Nonlinearity) -> (f64, f64) {
    (f.antideriv(f.a()), f.antideriv(0.0).min(f.antideriv(1.0)))
}

fn bisect(mut lo: f64, mut hi: f64, g: impl Fn(f64) -> f64) -> f64 {
    let glo = g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if (g(mid) > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Roots `w₋ < a < w₊` of `F(w) = E`.
pub fn turning_points(f: &Nonlinearity, energy: f64) -> Result<(f64, f64)> {
    let (emin, emax) = energy_range(f);
    if !(energy > emin && energy <= emax) {
        return Err(Error::InvalidParameter(format!("energy {energy} outside ({emin}, {emax}]")));
    }
    let g = |w: f64| f.antideriv(w) - energy;
    Ok((bisect(0.0, f.a(), g), bisect(f.a(), 1.0, g)))
}

/// Period of the orbit at level `E`,
/// `T(E) = √2 ∫ dw / √(E - F(w))` between the turning points.
///
/// With `w = m + (Δ/2) sin t` the endpoint singularities cancel against
/// `E - F(w) = (w₊ - w) D(w₊, w)` where `D` is the divided difference of `F`;
/// each half of `[-π/2, π/2]` is then a smooth integral.
pub fn period_function(f: &Nonlinearity, energy: f64) -> Result<f64> {
    let (wm, wp) = turning_points(f, energy)?;
    Ok(period_between(f, wm, wp, &gauss_legendre(GL_NODES)))
}

fn period_between(f: &Nonlinearity, wm: f64, wp: f64, rule: &(Vec<f64>, Vec<f64>)) -> f64 {
    let delta = wp - wm;
    if delta <= 0.0 {
        return min_period(f);
    }
    let mid = 0.5 * (wp + wm);
    let half = 0.5 * delta;
    let upper = composite_gauss_legendre(rule, 0.0, FRAC_PI_2, GL_PANELS, |t| {
        let w = mid + half * t.sin();
        (1.0 + t.sin()).sqrt() / f.antideriv_slope(wp, w).sqrt()
    });
    let lower = composite_gauss_legendre(rule, -FRAC_PI_2, 0.0, GL_PANELS, |t| {
        let w = mid + half * t.sin();
        (1.0 - t.sin()).sqrt() / (-f.antideriv_slope(wm, w)).sqrt()
    });
    delta.sqrt() * (upper + lower)
}

/// Standing wave of period `l`, energy located by bisection on `T(E) = l`.
pub fn periodic_wave(f: &Nonlinearity, l: f64, tol: f64) -> Result<StandingWaveProfile> {
    if !(tol > 0.0) || !l.is_finite() {
        return Err(Error::InvalidParameter(format!("period {l}, tolerance {tol}")));
    }
    let l_min = min_period(f);
    if l <= l_min {
        return Err(Error::NoPeriodicOrbit { period: l, l_min });
    }
    let rule = gauss_legendre(GL_NODES);
    let (emin, emax) = energy_range(f);
    let period_at = |e: f64| -> Result<f64> {
        let (wm, wp) = turning_points(f, e)?;
        Ok(period_between(f, wm, wp, &rule))
    };

    // Walk the upper end towards the separatrix until the period exceeds l.
    let width = emax - emin;
    let mut gap = 1e-2 * width;
    let mut hi = emax - gap;
    while period_at(hi)? < l {
        gap *= 0.1;
        if gap < 1e-15 * width {
            return Err(Error::BracketFailure { target: l });
        }
        hi = emax - gap;
    }
    let mut lo = emin;
    let mut energy = hi;
    let mut t = period_at(hi)?;
    let mut iterations = 0;
    while (t - l).abs() > tol {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        if iterations > 300 || mid <= lo || mid >= hi {
            return Err(Error::ConvergenceFailure {
                iterations,
                detail: format!("period bisection stalled at T = {t}, target {l}"),
            });
        }
        let tm = period_at(mid)?;
        if tm < l {
            lo = mid;
        } else {
            hi = mid;
        }
        energy = mid;
        t = tm;
    }

    let (wm, wp) = turning_points(f, energy)?;
    let h = l / WAVE_STEPS as f64;
    let rhs = |y: [f64; 2]| [y[1], -f.eval(y[0])];
    let mut x = Vec::with_capacity(WAVE_STEPS + 1);
    let mut w = Vec::with_capacity(WAVE_STEPS + 1);
    let mut dw = Vec::with_capacity(WAVE_STEPS + 1);
    let mut y = [wm, 0.0];
    for k in 0..=WAVE_STEPS {
        x.push(k as f64 * h);
        w.push(y[0]);
        dw.push(y[1]);
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
        let k4 = rhs([y[0] + h * k3[0], y[1] + h * k3[1]]);
        for i in 0..2 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(StandingWaveProfile { nonlinearity: *f, period: l, energy, turning_points: (wm, wp), x, w, dw })
}

impl StandingWaveProfile {
    fn step(&self) -> f64 {
        self.period / WAVE_STEPS as f64
    }

    /// Periodic cubic Hermite interpolation of the samples.
    pub fn eval(&self, x: f64) -> f64 {
        let h = self.step();
        let xr = x.rem_euclid(self.period);
        let k = ((xr / h).floor() as usize).min(WAVE_STEPS - 1);
        let t = (xr - k as f64 * h) / h;
        let (p0, p1) = (self.w[k], self.w[k + 1]);
        let (m0, m1) = (self.dw[k] * h, self.dw[k + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * p0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * p1 + (t3 - t2) * m1
    }

    /// `max_k |w''(x_k) + f(w(x_k))|`, with `w''` from fourth-order periodic
    /// central differences of the stored `w'` samples.
    pub fn ode_residual(&self) -> f64 {
        let n = WAVE_STEPS;
        let h = self.step();
        let d = |k: isize| self.dw[k.rem_euclid(n as isize) as usize];
        (0..n as isize)
            .map(|k| {
                let w2 = (-d(k + 2) + 8.0 * d(k + 1) - 8.0 * d(k - 1) + d(k - 2)) / (12.0 * h);
                (w2 + self.nonlinearity.eval(self.w[k as usize])).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn periodicity_defect(&self) -> f64 {
        (self.w[WAVE_STEPS] - self.w[0]).abs().max((self.dw[WAVE_STEPS] - self.dw[0]).abs())
    }

    /// CSV `x,w` with a one-line header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "x,w")?;
        for (x, w) in self.x.iter().zip(&self.w) {
            writeln!(out, "{x},{w}")?;
        }
        Ok(())
    }
}
