use serde::{Deserialize, Serialize};

use super::pointwise::dot;
use super::{EstimateReport, Series, Verdict};
use crate::error::{LabError, Result};
use crate::grid::{dirichlet_integral, gradient_at, laplacian, GridField};
use crate::nonlinearity::Nonlinearity;

/// Oscillation decay of `u` over the dyadic balls `B_{2^{-k}R}(x0)`, `k = 0..=levels`.
///
/// `rhs` (and the margin) is the fitted exponent `α̂`, the negative slope of
/// `log₂ osc` against `k`. Per-level energy ratios `E_{k+1}/E_k` and the
/// derived hole-filling constant are in `extras` and the `holder` series.
pub fn holder_fit(u: &GridField, x0: &[f64], radius: f64, levels: usize) -> Result<EstimateReport> {
    let d = u.domain();
    let n = d.dim();
    if levels < 3 {
        return Err(LabError::InvalidParameter(format!("levels must be at least 3, got {levels}")));
    }
    if x0.len() != n {
        return Err(LabError::InvalidParameter("center has the wrong dimension".into()));
    }
    let off: f64 = x0.iter().zip(d.center()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    if !(radius > 0.0) || off + radius > d.radius() * (1.0 + 1e-12) {
        return Err(LabError::InvalidParameter(format!("B_{radius} around the given center leaves the domain")));
    }
    let h = d.spacing();
    let excise = 2.0 * h;
    let mut x = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut lo = vec![f64::INFINITY; levels + 1];
    let mut hi = vec![f64::NEG_INFINITY; levels + 1];
    let mut energy = vec![0.0; levels + 1];
    let nf = n as f64;
    for j in 0..d.node_count() {
        d.coord_into(j, &mut x);
        let s = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if s > radius * (1.0 + 1e-12) {
            continue;
        }
        // deepest level whose ball still contains the node
        let deepest = ((radius / s.max(f64::MIN_POSITIVE)).log2().floor().max(0.0) as usize).min(levels);
        let v = u.values()[j];
        let w = if d.is_interior(j) && s >= excise {
            gradient_at(d, u.values(), j, &mut du);
            s.powf(2.0 - nf) * dot(&du, &du)
        } else {
            0.0
        };
        for k in 0..=deepest {
            if s <= radius / (1u64 << k) as f64 * (1.0 + 1e-12) {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
                energy[k] += w;
            }
        }
    }
    let tol = 1e-12 * (1.0 + u.sup_norm());
    let osc: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| b - a).collect();
    if let Some(&o) = osc.iter().find(|o| !o.is_finite() || **o <= tol) {
        return Err(LabError::DegenerateFit {
            oscillation: if o.is_finite() { o } else { 0.0 },
        });
    }
    let energy: Vec<f64> = energy.iter().map(|e| e * d.cell_volume()).collect();

    let ks: Vec<f64> = (0..=levels).map(|k| k as f64).collect();
    let ys: Vec<f64> = osc.iter().map(|o| o.log2()).collect();
    let alpha = -least_squares_slope(&ks, &ys);

    let mut series = Series::new(&["k", "radius", "osc", "log2_osc", "energy"]);
    for k in 0..=levels {
        series.push(vec![k as f64, radius / (1u64 << k) as f64, osc[k], ys[k], energy[k]]);
    }
    let ratios: Vec<f64> = energy.windows(2).filter(|w| w[0] > 0.0 && w[1] > 0.0).map(|w| w[1] / w[0]).collect();
    let mut report = EstimateReport::inequality("holder", 0.0, alpha, h, 0.0).extra("alpha_hat", alpha);
    report.verdict = if alpha > 0.0 { Verdict::Pass } else { Verdict::Fail };
    if !ratios.is_empty() {
        let q = (ratios.iter().map(|r| r.ln()).sum::<f64>() / ratios.len() as f64).exp();
        let qmax = ratios.iter().copied().fold(0.0f64, f64::max);
        report = report.extra("energy_decay_mean", q).extra("energy_decay_max", qmax);
        if qmax < 1.0 {
            let c = qmax / (1.0 - qmax);
            report = report
                .extra("hole_filling_constant", c)
                .extra("decay_exponent", ((c + 1.0) / c).log2());
        }
    }
    report.series.insert("holder".into(), series);
    report
        .notes
        .push("decay exponent is log2((C+1)/C), taken positive".into());
    Ok(report)
}

/// Like [`holder_fit`], but a numerically constant field yields an
/// `exact_constant` report instead of an error.
pub fn holder_report(u: &GridField, x0: &[f64], radius: f64, levels: usize) -> Result<EstimateReport> {
    match holder_fit(u, x0, radius, levels) {
        Err(LabError::DegenerateFit { oscillation }) => {
            let mut r = EstimateReport::empty("holder", u.domain().spacing()).extra("oscillation", oscillation);
            r.verdict = Verdict::ExactConstant;
            Ok(r)
        }
        other => other,
    }
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `½∫|Du|² − ∫F(u)` with the staggered gradient.
pub fn energy_functional(u: &GridField, f: &Nonlinearity) -> f64 {
    let vol = u.domain().cell_volume();
    let potential: f64 = u.interior().iter().map(|&t| f.primitive(t)).sum();
    0.5 * dirichlet_integral(u) - potential * vol
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FirstVariation {
    /// Central difference `(E(u+δξ) − E(u−δξ))/(2δ)`.
    pub fd_slope: f64,
    /// `−∫(Δ_h u + f(u))ξ`
    pub predicted: f64,
}

impl FirstVariation {
    pub fn difference(&self) -> f64 {
        (self.fd_slope - self.predicted).abs()
    }
}

pub fn energy_first_variation(u: &GridField, f: &Nonlinearity, xi: &GridField, delta: f64) -> Result<FirstVariation> {
    u.ensure_same_domain(xi)?;
    if xi.boundary().iter().any(|&v| v != 0.0) {
        return Err(LabError::InvalidParameter("perturbation must vanish on the boundary".into()));
    }
    let plus = u.combine(1.0, xi, delta)?;
    let minus = u.combine(1.0, xi, -delta)?;
    let fd_slope = (energy_functional(&plus, f) - energy_functional(&minus, f)) / (2.0 * delta);
    let lap = laplacian(u);
    let vol = u.domain().cell_volume();
    let predicted = -lap
        .interior()
        .iter()
        .zip(u.interior())
        .zip(xi.interior())
        .map(|((l, &t), z)| (l + f.eval(t)) * z)
        .sum::<f64>()
        * vol;
    Ok(FirstVariation { fd_slope, predicted })
}

/// Weighted `L²` norm of `Δ_h u + f(u)` over interior nodes.
pub fn weak_residual(u: &GridField, f: &Nonlinearity) -> f64 {
    let lap = laplacian(u);
    let s: f64 = lap
        .interior()
        .iter()
        .zip(u.interior())
        .map(|(l, &t)| {
            let r = l + f.eval(t);
            r * r
        })
        .sum();
    (s * u.domain().cell_volume()).sqrt()
}
