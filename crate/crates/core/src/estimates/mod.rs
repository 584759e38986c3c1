//! Discrete checks of the weighted integral inequalities, the pointwise
//! level-set inequality, hole filling and Hölder decay.

mod fields;
mod holder;
mod integrals;
mod pointwise;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::stability::VerdictSummary;

pub use fields::TestFunction;
pub use holder::{
    energy_first_variation, energy_functional, holder_fit, holder_report, weak_residual, FirstVariation,
};
pub use integrals::{
    hole_filling_scales, verify_hole_filling, verify_identity_chain, verify_key_estimate,
    verify_sternberg_zumbrun,
};
pub use pointwise::{
    default_theta, hessian_quantities, matrix_sweep, random_trial, verify_geometric_inequality, verify_matrix_inequality,
    HessianQuantities, MatrixSweep,
};

/// Tolerance factor `c` in `tol(h) = c·h·scale`.
pub const TOL_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
    /// Both sides vanish identically; nothing was tested.
    Empty,
    /// Hölder fit on a numerically constant field.
    ExactConstant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementPoint {
    pub h: f64,
    pub margin: f64,
}

/// Numeric table attached to a report, one row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    pub fn new(columns: &[&str]) -> Self {
        Series {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// LHS/RHS of a discrete inequality or identity, `margin = rhs − lhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub h: f64,
    pub tol: f64,
    pub refinement_history: Vec<RefinementPoint>,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<VerdictSummary>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub series: BTreeMap<String, Series>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl EstimateReport {
    /// Report for an inequality `lhs ≤ rhs` with `tol = 10·h·scale` plus a rounding floor.
    pub fn inequality(name: &str, lhs: f64, rhs: f64, h: f64, scale: f64) -> Self {
        let mut r = EstimateReport {
            name: name.to_string(),
            lhs,
            rhs,
            margin: rhs - lhs,
            h,
            tol: TOL_FACTOR * h * scale.abs() + 1e-12 * (1.0 + scale.abs()),
            refinement_history: Vec::new(),
            verdict: Verdict::Pass,
            stability: None,
            extras: BTreeMap::new(),
            series: BTreeMap::new(),
            notes: Vec::new(),
        };
        r.verdict = r.judge();
        r
    }

    /// Nothing to test: both sides vanish identically.
    pub fn empty(name: &str, h: f64) -> Self {
        let mut r = Self::inequality(name, 0.0, 0.0, h, 0.0);
        r.verdict = Verdict::Empty;
        r
    }

    /// Report for an identity `lhs = rhs`; the margin is `−|lhs − rhs|`.
    pub fn identity(name: &str, lhs: f64, rhs: f64, h: f64, scale: f64) -> Self {
        let mut r = Self::inequality(name, lhs, rhs, h, scale);
        r.margin = -(lhs - rhs).abs();
        r.extras.insert("residual".into(), (lhs - rhs).abs());
        r.verdict = r.judge();
        r
    }

    pub fn residual(&self) -> f64 {
        self.extras.get("residual").copied().unwrap_or(-self.margin)
    }

    /// `true` when the margins in the history never decrease as `h` shrinks.
    pub fn improving(&self) -> bool {
        let mut pts = self.refinement_history.clone();
        pts.sort_by(|a, b| b.h.total_cmp(&a.h));
        pts.len() >= 2 && pts.windows(2).all(|w| w[1].margin >= w[0].margin)
    }

    fn judge(&self) -> Verdict {
        if self.margin < 0.0 && self.margin >= -self.tol && self.improving() {
            Verdict::Inconclusive
        } else if self.margin >= -self.tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Attaches a refinement history and re-evaluates the verdict.
    pub fn with_history(mut self, history: Vec<RefinementPoint>) -> Self {
        self.refinement_history = history;
        if matches!(self.verdict, Verdict::Pass | Verdict::Fail | Verdict::Inconclusive) {
            self.verdict = self.judge();
        }
        self
    }

    /// Widens the tolerance to a known rounding level `noise` and re-evaluates the verdict.
    pub fn with_noise_floor(mut self, noise: f64) -> Self {
        self.extras.insert("noise_floor".into(), noise);
        if noise > self.tol {
            self.tol = noise;
            if matches!(self.verdict, Verdict::Pass | Verdict::Fail | Verdict::Inconclusive) {
                self.verdict = self.judge();
            }
        }
        self
    }

    pub fn with_stability(mut self, s: VerdictSummary) -> Self {
        self.stability = Some(s);
        self
    }

    pub fn extra(mut self, key: &str, value: f64) -> Self {
        self.extras.insert(key.to_string(), value);
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict != Verdict::Fail
    }

    pub const CSV_HEADER: &'static str = "name,h,lhs,rhs,margin,verdict";

    pub fn csv_row(&self) -> String {
        let v = serde_json::to_value(self.verdict).expect("verdict serializes");
        format!(
            "{},{:e},{:e},{:e},{:e},{}",
            self.name,
            self.h,
            self.lhs,
            self.rhs,
            self.margin,
            v.as_str().unwrap_or_default()
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `log₂(e_coarse / e_fine)` for one mesh halving.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Runs `check` at every spacing in `hs` (coarse first) and returns the
/// finest report carrying the whole history.
///
/// For identity reports `observed_order` is recorded from the last two residuals.
pub fn refine(
    hs: &[f64],
    mut check: impl FnMut(f64) -> crate::Result<EstimateReport>,
) -> crate::Result<EstimateReport> {
    let mut last: Option<EstimateReport> = None;
    let mut history = Vec::new();
    let mut residuals = Vec::new();
    for &h in hs {
        let r = check(h)?;
        history.push(RefinementPoint { h, margin: r.margin });
        residuals.push(r.extras.get("residual").copied());
        last = Some(r);
    }
    let mut r = last.ok_or_else(|| crate::LabError::InvalidParameter("no spacings given".into()))?;
    if let [.., Some(a), Some(b)] = residuals[..] {
        r.extras.insert("observed_order".into(), observed_order(a, b));
    }
    Ok(r.with_history(history))
}
