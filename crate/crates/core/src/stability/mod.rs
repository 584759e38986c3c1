//! Smallest Dirichlet eigenvalue of `−Δ_h − V`, stability verdicts, the
//! Poincaré constant of the unit ball, and radial eigenvalue reductions.

mod radial;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use radial::{radial_smallest_eigenvalue, RadialPotential};
pub(crate) use radial::parse_pairs as parse_table_pairs;

use crate::error::{LabError, Result};
use crate::grid::{build_ball_domain, BallDomain, GridField};
use crate::nonlinearity::Nonlinearity;
use crate::solver::{solve_in_place, CgSettings, DirichletOperator};

const MAX_OUTER: usize = 2000;

/// Bottom eigenpair of `−Δ_h − V` with zero Dirichlet data.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    pub lambda1: f64,
    /// Zero boundary, unit discrete `L²` norm, positive at its largest-magnitude node.
    pub eigenfield: GridField,
    pub iterations: usize,
    pub residual: f64,
    /// Rayleigh quotient after each outer step.
    pub rayleigh_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda1: f64,
    pub iterations: usize,
    pub residual: f64,
    pub spacing: f64,
    pub interior_nodes: usize,
}

impl SpectralResult {
    pub fn summary(&self) -> SpectralSummary {
        let d = self.eigenfield.domain();
        SpectralSummary {
            lambda1: self.lambda1,
            iterations: self.iterations,
            residual: self.residual,
            spacing: d.spacing(),
            interior_nodes: d.interior_count(),
        }
    }
}

/// Certified lower bound for the smallest eigenvalue of `−Δ_h` on `domain`.
///
/// The interior nodes form a subset of a lattice cube whose Dirichlet
/// spectrum is known in closed form; eigenvalue interlacing does the rest.
pub fn laplacian_lower_bound(domain: &BallDomain) -> f64 {
    let h = domain.spacing();
    let points = (2 * domain.half_width() - 1).max(1) as f64;
    let s = (std::f64::consts::PI / (2.0 * (points + 1.0))).sin();
    domain.dim() as f64 * 4.0 / (h * h) * s * s
}

fn weighted_norm(domain: &BallDomain, v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * domain.cell_volume()).sqrt()
}

/// Inverse power iteration for the bottom of the spectrum of `−Δ_h − V`.
pub fn smallest_eigenvalue(domain: &Arc<BallDomain>, v: Option<&GridField>) -> Result<SpectralResult> {
    if let Some(v) = v {
        v.ensure_on(domain)?;
    }
    let ni = domain.interior_count();
    let pot = v.map(|f| f.interior());
    let vmax = pot.map_or(0.0, |p| p.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    let sigma = vmax.max(0.0) + 1.0;
    let shifted = DirichletOperator::new(domain, -sigma, pot);
    let plain = DirichletOperator::new(domain, 0.0, pot);

    let mut x = vec![1.0; ni];
    let norm = weighted_norm(domain, &x);
    x.iter_mut().for_each(|e| *e /= norm);

    let mut ax = vec![0.0; ni];
    let rayleigh = |x: &[f64], ax: &mut [f64]| -> f64 {
        plain.apply(x, ax);
        let num: f64 = x.iter().zip(ax.iter()).map(|(a, b)| a * b).sum();
        let den: f64 = x.iter().map(|a| a * a).sum();
        num / den
    };
    let mut lambda = rayleigh(&x, &mut ax);
    let mut history = Vec::new();
    let mut best = lambda;
    let mut residual = f64::INFINITY;
    let mut values = vec![0.0; domain.node_count()];
    let settings = CgSettings {
        tol: 1e-12,
        max_iterations: 4 * crate::solver::default_max_iterations(domain),
        require_spd: true,
    };
    for it in 1..=MAX_OUTER {
        let guess = 1.0 / (lambda + sigma).max(1e-300);
        for i in 0..ni {
            values[i] = x[i] * guess;
        }
        solve_in_place(&shifted, &x, &mut values, settings)?;
        let norm = weighted_norm(domain, &values[..ni]);
        for i in 0..ni {
            x[i] = values[i] / norm;
        }
        lambda = rayleigh(&x, &mut ax);
        history.push(lambda);
        best = best.min(lambda);
        let r: Vec<f64> = ax.iter().zip(&x).map(|(a, b)| a - lambda * b).collect();
        residual = weighted_norm(domain, &r);
        if residual <= 1e-8 * lambda.abs().max(1.0) {
            let imax = x
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(bi, bv), (i, &e)| if e.abs() > bv { (i, e.abs()) } else { (bi, bv) })
                .0;
            if ni > 0 && x[imax] < 0.0 {
                x.iter_mut().for_each(|e| *e = -*e);
            }
            let mut full = x.clone();
            full.resize(domain.node_count(), 0.0);
            return Ok(SpectralResult {
                lambda1: lambda,
                eigenfield: GridField::from_values(domain, full)?,
                iterations: it,
                residual,
                rayleigh_history: history,
            });
        }
    }
    Err(LabError::EigenNotConverged {
        iterations: MAX_OUTER,
        best,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone)]
pub struct StabilityVerdict {
    pub verdict: Stability,
    pub lambda1: f64,
    pub tol: f64,
    /// `true` when `lambda1` is a certified lower bound and no eigen solve ran.
    pub certified: bool,
    /// Eigenfield violating the second-variation inequality, when unstable.
    pub witness: Option<GridField>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictSummary {
    pub verdict: Stability,
    pub lambda1: f64,
    pub tol: f64,
    pub certified: bool,
}

impl StabilityVerdict {
    pub fn summary(&self) -> VerdictSummary {
        VerdictSummary {
            verdict: self.verdict,
            lambda1: self.lambda1,
            tol: self.tol,
            certified: self.certified,
        }
    }

    pub fn is_admissible(&self) -> bool {
        self.verdict != Stability::Unstable
    }
}

/// Nodewise potential `V = f'_−(u)` on interior nodes, zero on the boundary.
pub fn linearized_potential(u: &GridField, f: &Nonlinearity) -> Result<GridField> {
    let ni = u.domain().interior_count();
    let mut values = vec![0.0; u.domain().node_count()];
    for (o, &t) in values[..ni].iter_mut().zip(u.interior()) {
        *o = f.left_derivative(t)?;
    }
    GridField::from_values(u.domain(), values)
}

/// Default marginal band `10·h·(1 + ‖V‖∞)^{1/2}`.
pub fn default_tolerance(h: f64, v: &GridField) -> f64 {
    let vmax = v.interior().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    10.0 * h * (1.0 + vmax).sqrt()
}

fn classify(lambda1: f64, tol: f64) -> Stability {
    if lambda1 >= tol {
        Stability::Stable
    } else if lambda1 <= -tol {
        Stability::Unstable
    } else {
        Stability::Marginal
    }
}

/// Stability verdict for `u` as a solution of `−Δu = f(u)`.
pub fn is_stable(u: &GridField, f: &Nonlinearity, tol: Option<f64>) -> Result<StabilityVerdict> {
    let v = linearized_potential(u, f)?;
    let tol = tol.unwrap_or_else(|| default_tolerance(u.domain().spacing(), &v));
    let spec = smallest_eigenvalue(u.domain(), Some(&v))?;
    let verdict = classify(spec.lambda1, tol);
    Ok(StabilityVerdict {
        verdict,
        lambda1: spec.lambda1,
        tol,
        certified: false,
        witness: (verdict == Stability::Unstable).then_some(spec.eigenfield),
    })
}

/// Like [`is_stable`], but skips the eigen solve when the certified bound
/// `λ₁ ≥ λ_box − max V` already exceeds the tolerance.
pub fn is_stable_fast(u: &GridField, f: &Nonlinearity, tol: Option<f64>) -> Result<StabilityVerdict> {
    let v = linearized_potential(u, f)?;
    let tol = tol.unwrap_or_else(|| default_tolerance(u.domain().spacing(), &v));
    let vmax = v.interior().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bound = laplacian_lower_bound(u.domain()) - vmax;
    if bound >= tol {
        return Ok(StabilityVerdict {
            verdict: Stability::Stable,
            lambda1: bound,
            tol,
            certified: true,
            witness: None,
        });
    }
    is_stable(u, f, Some(tol))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareConstant {
    pub n: usize,
    #[serde(rename = "C0")]
    pub c0: f64,
    /// Discrete first eigenvalue of the unit ball it was derived from.
    pub lambda1: f64,
    pub spacing: f64,
}

/// Spacing used for the unit-ball eigenvalue behind [`poincare_constant`] by default.
pub fn default_poincare_spacing(n: usize) -> f64 {
    match n {
        2 => 1.0 / 128.0,
        3 => 1.0 / 32.0,
        4 => 1.0 / 16.0,
        _ => 1.0 / 10.0,
    }
}

/// `C0 = 1.05 / λ₁(B₁)` from the discrete unit-ball eigenvalue.
pub fn poincare_constant(n: usize, h: f64) -> Result<PoincareConstant> {
    let d = build_ball_domain(n, &vec![0.0; n], 1.0, h)?;
    let lambda1 = smallest_eigenvalue(&d, None)?.lambda1;
    Ok(PoincareConstant {
        n,
        c0: 1.05 / lambda1,
        lambda1,
        spacing: h,
    })
}

/// [`poincare_constant`] at [`default_poincare_spacing`], computed once per dimension.
pub fn default_poincare_constant(n: usize) -> Result<PoincareConstant> {
    use std::sync::{Mutex, OnceLock};
    static CACHE: OnceLock<Mutex<Vec<PoincareConstant>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    if let Some(c) = cache.lock().unwrap_or_else(|e| e.into_inner()).iter().find(|c| c.n == n) {
        return Ok(*c);
    }
    let c = poincare_constant(n, default_poincare_spacing(n))?;
    cache.lock().unwrap_or_else(|e| e.into_inner()).push(c);
    Ok(c)
}
