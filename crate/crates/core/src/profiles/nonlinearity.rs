use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cubic bistable reaction term `f(u) = u(1-u)(u-a)`, roots `0 < a < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCubic", into = "RawCubic")]
pub struct Nonlinearity {
    a: f64,
}

#[derive(Serialize, Deserialize)]
struct RawCubic {
    kind: String,
    a: f64,
}

impl TryFrom<RawCubic> for Nonlinearity {
    type Error = Error;
    fn try_from(raw: RawCubic) -> Result<Self> {
        if raw.kind != "cubic" {
            return Err(Error::InvalidParameter(format!("unknown nonlinearity kind `{}`", raw.kind)));
        }
        make_cubic(raw.a)
    }
}

impl From<Nonlinearity> for RawCubic {
    fn from(f: Nonlinearity) -> Self {
        RawCubic { kind: "cubic".into(), a: f.a }
    }
}

pub fn make_cubic(a: f64) -> Result<Nonlinearity> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidParameter(format!("cubic threshold a = {a} must lie in (0, 1)")));
    }
    Ok(Nonlinearity { a })
}

impl Nonlinearity {
    pub fn a(&self) -> f64 {
        self.a
    }

    /// `(0, a, 1)`
    pub fn roots(&self) -> [f64; 3] {
        [0.0, self.a, 1.0]
    }

    pub fn eval(&self, u: f64) -> f64 {
        u * (1.0 - u) * (u - self.a)
    }

    pub fn deriv(&self, u: f64) -> f64 {
        -3.0 * u * u + 2.0 * (1.0 + self.a) * u - self.a
    }

    pub fn deriv2(&self, u: f64) -> f64 {
        -6.0 * u + 2.0 * (1.0 + self.a)
    }

    /// `F(u) = -u⁴/4 + (1+a)u³/3 - a u²/2`, so `F(0) = 0` and `F' = f`.
    pub fn antideriv(&self, u: f64) -> f64 {
        let a = self.a;
        u * u * (-0.25 * u * u + (1.0 + a) * u / 3.0 - 0.5 * a)
    }

    /// `(F(x) - F(y)) / (x - y)` evaluated without cancellation; equals
    /// `f(x)` on the diagonal.
    pub fn antideriv_slope(&self, x: f64, y: f64) -> f64 {
        let a = self.a;
        let s2 = x + y;
        let s3 = x * x + x * y + y * y;
        let s4 = (x * x + y * y) * (x + y);
        -0.25 * s4 + (1.0 + a) * s3 / 3.0 - 0.5 * a * s2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_values() {
        let f = make_cubic(0.5).unwrap();
        assert!((f.eval(0.25) + 0.046875).abs() < 1e-15);
        let g = make_cubic(0.25).unwrap();
        assert!((g.deriv(0.0) + 0.25).abs() < 1e-15);
        assert!((g.deriv(1.0) + 0.75).abs() < 1e-15);
        assert!((g.deriv(0.25) - 0.25 * 0.75).abs() < 1e-15);
    }

    #[test]
    fn rejects_out_of_range() {
        for a in [0.0, 1.0, -0.3, 1.5, f64::NAN] {
            assert!(matches!(make_cubic(a), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn slope_matches_difference_quotient() {
        let f = make_cubic(0.3).unwrap();
        let (x, y) = (0.9, 0.1);
        let q = (f.antideriv(x) - f.antideriv(y)) / (x - y);
        assert!((f.antideriv_slope(x, y) - q).abs() < 1e-15);
        assert!((f.antideriv_slope(0.7, 0.7) - f.eval(0.7)).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let f = make_cubic(0.25).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"kind":"cubic","a":0.25}"#);
        assert_eq!(serde_json::from_str::<Nonlinearity>(&s).unwrap(), f);
        assert!(serde_json::from_str::<Nonlinearity>(r#"{"kind":"cubic","a":2.0}"#).is_err());
    }
}
