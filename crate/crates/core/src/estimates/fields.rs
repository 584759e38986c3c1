use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{BallDomain, GridField};

/// Radial test functions, centered at the domain center, zero on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFunction {
    /// `(1 − |x|/radius)₊`
    Cone { radius: f64 },
    /// `sin²(π(|x| − inner)/(outer − inner))` on `inner < |x| < outer`.
    Bump { inner: f64, outer: f64 },
    Zero,
}

impl TestFunction {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            TestFunction::Cone { radius } => (1.0 - r / radius).max(0.0),
            TestFunction::Bump { inner, outer } => {
                if r <= inner || r >= outer {
                    0.0
                } else {
                    let s = (std::f64::consts::PI * (r - inner) / (outer - inner)).sin();
                    s * s
                }
            }
            TestFunction::Zero => 0.0,
        }
    }

    /// Radial derivative, one-sided at kinks.
    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            TestFunction::Cone { radius } => {
                if r < radius {
                    -1.0 / radius
                } else {
                    0.0
                }
            }
            TestFunction::Bump { inner, outer } => {
                if r <= inner || r >= outer {
                    0.0
                } else {
                    let w = outer - inner;
                    let t = std::f64::consts::PI * (r - inner) / w;
                    std::f64::consts::PI / w * (2.0 * t).sin()
                }
            }
            TestFunction::Zero => 0.0,
        }
    }

    pub fn sample(&self, domain: &Arc<BallDomain>) -> GridField {
        let c = domain.center().to_vec();
        GridField::test_field(domain, |x| {
            let r = x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            self.value(r)
        })
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::Cone { radius } => write!(f, "cone:{radius}"),
            TestFunction::Bump { inner, outer } => write!(f, "bump:{inner},{outer}"),
            TestFunction::Zero => write!(f, "zero"),
        }
    }
}

impl FromStr for TestFunction {
    type Err = LabError;

    /// `cone:R`, `bump:a,b` or `zero`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || LabError::Parse(format!("unknown test function `{s}`"));
        let (head, args) = s.split_once(':').unwrap_or((s, ""));
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',').map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<_>>()?
        };
        match (head.trim(), nums.as_slice()) {
            ("cone", [r]) if *r > 0.0 => Ok(TestFunction::Cone { radius: *r }),
            ("bump", [a, b]) if 0.0 <= *a && a < b => Ok(TestFunction::Bump { inner: *a, outer: *b }),
            ("zero", []) => Ok(TestFunction::Zero),
            _ => Err(bad()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in ["cone:1", "bump:0.2,0.8", "zero"] {
            let t: TestFunction = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        assert!("bump:0.8,0.2".parse::<TestFunction>().is_err());
        assert!("cone".parse::<TestFunction>().is_err());
    }

    #[test]
    fn bump_derivative_matches_difference() {
        let b = TestFunction::Bump { inner: 0.2, outer: 0.8 };
        for r in [0.3, 0.5, 0.71] {
            let fd = (b.value(r + 1e-6) - b.value(r - 1e-6)) / 2e-6;
            assert!((fd - b.derivative(r)).abs() < 1e-6);
        }
    }
}
