use std::f64::consts::SQRT_2;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::Nonlinearity;
use crate::error::{Error, Result};

/// Closed-form traveling front of the cubic, `ū(z) = (1 + e^{z/√2})⁻¹`,
/// decreasing from `u₋ = 1` to `u₊ = 0` with speed `c = √2 (1/2 - a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontProfile {
    pub nonlinearity: Nonlinearity,
    pub speed: f64,
    /// `(u₋, u₊)`
    pub limits: (f64, f64),
    pub z: Vec<f64>,
    pub u: Vec<f64>,
}

const K: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Logistic `(1 + e^{kz})⁻¹`, overflow-free in both tails.
fn logistic(z: f64) -> f64 {
    let t = K * z;
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// Front for `a ∈ (0, 1/2]` (`a = 1/2` is the standing front, `c = 0`).
pub fn exact_front(f: &Nonlinearity, z: &[f64]) -> Result<FrontProfile> {
    let a = f.a();
    if a > 0.5 {
        return Err(Error::InvalidParameter(format!("closed-form front needs a <= 1/2, got {a}")));
    }
    Ok(FrontProfile {
        nonlinearity: *f,
        speed: SQRT_2 * (0.5 - a),
        limits: (1.0, 0.0),
        z: z.to_vec(),
        u: z.iter().map(|&s| logistic(s)).collect(),
    })
}

impl FrontProfile {
    pub fn eval(&self, z: f64) -> f64 {
        logistic(z)
    }

    /// `ū' = -ū(1-ū)/√2`
    pub fn derivative(&self, z: f64) -> f64 {
        let u = logistic(z);
        let v = logistic(-z);
        -K * u * v
    }

    pub fn second_derivative(&self, z: f64) -> f64 {
        let u = logistic(z);
        let v = logistic(-z);
        0.5 * u * v * (v - u)
    }

    /// `max |ū'' + cū' + f(ū)|` over the samples.
    pub fn residual(&self) -> f64 {
        self.z
            .iter()
            .map(|&z| {
                (self.second_derivative(z) + self.speed * self.derivative(z) + self.nonlinearity.eval(self.eval(z))).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV `z,u` with a one-line header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "z,u")?;
        for (z, u) in self.z.iter().zip(&self.u) {
            writeln!(out, "{z},{u}")?;
        }
        Ok(())
    }
}
