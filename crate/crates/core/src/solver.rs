//! Matrix-free conjugate-gradient solves of Dirichlet problems for
//! `−Δ_h − A − V` on a [`BallDomain`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{laplacian_into, BallDomain, GridField};
use crate::stability;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative 2-norm residual (absolute when the data vanish).
    #[serde(rename = "residual")]
    pub final_residual: f64,
    pub converged: bool,
    /// Preconditioned residual norms, one per iteration.
    #[serde(skip)]
    pub residual_history: Vec<f64>,
    /// Energy norm of the update direction times step length, one per iteration.
    #[serde(skip)]
    pub step_energy: Vec<f64>,
}

/// `−Δ_h − shift − V` acting on interior values with zero boundary data.
#[derive(Clone, Copy)]
pub struct DirichletOperator<'a> {
    pub domain: &'a BallDomain,
    pub shift: f64,
    pub potential: Option<&'a [f64]>,
}

impl<'a> DirichletOperator<'a> {
    pub fn new(domain: &'a BallDomain, shift: f64, potential: Option<&'a [f64]>) -> Self {
        DirichletOperator {
            domain,
            shift,
            potential,
        }
    }

    fn pot(&self, i: usize) -> f64 {
        self.shift + self.potential.map_or(0.0, |v| v[i])
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let d = self.domain;
        let ni = d.interior_count();
        let inv_h2 = 1.0 / (d.spacing() * d.spacing());
        for i in 0..ni {
            let xi = x[i];
            let mut s = 0.0;
            for &j in d.neighbors(i) {
                let j = j as usize;
                let xj = if j < ni { x[j] } else { 0.0 };
                s += xi - xj;
            }
            y[i] = s * inv_h2 - self.pot(i) * xi;
        }
    }

    pub fn diagonal(&self, i: usize) -> f64 {
        let h = self.domain.spacing();
        2.0 * self.domain.dim() as f64 / (h * h) - self.pot(i)
    }

    /// Residual `rhs − (−Δ_h u − shift·u − V·u)` at interior nodes, `u` given on all nodes.
    pub fn residual(&self, values: &[f64], rhs: &[f64], out: &mut [f64]) {
        laplacian_into(self.domain, values, out);
        for (i, o) in out.iter_mut().enumerate() {
            *o = rhs[i] + *o + self.pot(i) * values[i];
        }
    }
}

/// Knobs for a single CG solve.
#[derive(Debug, Clone, Copy)]
pub struct CgSettings {
    pub tol: f64,
    pub max_iterations: usize,
    /// Whether the caller knows the operator is positive definite.
    pub require_spd: bool,
}

impl CgSettings {
    pub fn for_domain(domain: &BallDomain, tol: f64) -> Self {
        CgSettings {
            tol,
            max_iterations: default_max_iterations(domain),
            require_spd: true,
        }
    }
}

pub fn default_max_iterations(domain: &BallDomain) -> usize {
    20 * domain.box_side()
}

/// Weighted Euclidean norm `sqrt(h^n Σ v²)`.
fn wnorm(domain: &BallDomain, v: &[f64]) -> f64 {
    (v.iter().map(|x| x * x).sum::<f64>() * domain.cell_volume()).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `op · u = rhs` in the interior with `u = boundary` on boundary nodes.
///
/// `values` holds the initial guess on all nodes and is overwritten with the
/// solution; its boundary part must already carry the Dirichlet data.
pub fn solve_in_place(
    op: &DirichletOperator,
    rhs: &[f64],
    values: &mut [f64],
    settings: CgSettings,
) -> Result<SolveReport> {
    let domain = op.domain;
    let ni = domain.interior_count();
    let mut r = vec![0.0; ni];
    op.residual(values, rhs, &mut r);

    // Data scale: the right-hand side together with the boundary coupling.
    let mut coupling = vec![0.0; ni];
    {
        let mut boundary_only = values.to_vec();
        boundary_only[..ni].fill(0.0);
        op.residual(&boundary_only, rhs, &mut coupling);
    }
    let denom = wnorm(domain, rhs).max(wnorm(domain, &coupling));
    let scale = if denom > 0.0 { denom } else { 1.0 };
    let target = settings.tol * scale;

    let diag: Vec<f64> = (0..ni)
        .map(|i| {
            let d = op.diagonal(i);
            if d > 0.0 {
                1.0 / d
            } else {
                1.0
            }
        })
        .collect();
    let mut report = SolveReport {
        iterations: 0,
        final_residual: wnorm(domain, &r) / scale,
        converged: false,
        residual_history: Vec::new(),
        step_energy: Vec::new(),
    };
    let mut e = vec![0.0; ni];
    let mut z = vec![0.0; ni];
    let mut p = vec![0.0; ni];
    let mut q = vec![0.0; ni];
    let mut restarts = 0;
    loop {
        if wnorm(domain, &r) <= target {
            report.converged = true;
            break;
        }
        if report.iterations >= settings.max_iterations {
            break;
        }
        e.fill(0.0);
        for i in 0..ni {
            z[i] = diag[i] * r[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while report.iterations < settings.max_iterations {
            op.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                if settings.require_spd && pq <= 0.0 {
                    return Err(LabError::IndefiniteShift {
                        shift: op.shift,
                        lambda1: f64::NAN,
                    });
                }
                break;
            }
            let alpha = rz / pq;
            for i in 0..ni {
                e[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            report.iterations += 1;
            report.step_energy.push(alpha * alpha * pq);
            let rn = wnorm(domain, &r);
            report.residual_history.push(rn / scale);
            if rn <= target {
                break;
            }
            for i in 0..ni {
                z[i] = diag[i] * r[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..ni {
                p[i] = z[i] + beta * p[i];
            }
        }
        for i in 0..ni {
            values[i] += e[i];
        }
        // Recompute the true residual; the recursive one may drift.
        op.residual(values, rhs, &mut r);
        restarts += 1;
        if restarts > 4 {
            report.converged = wnorm(domain, &r) <= target;
            break;
        }
    }
    report.final_residual = wnorm(domain, &r) / scale;
    if values[..ni].iter().any(|v| !v.is_finite()) {
        return Err(LabError::NonFinite {
            node: values.iter().position(|v| !v.is_finite()).unwrap_or(0),
        });
    }
    Ok(report)
}

fn initial_guess(domain: &BallDomain, boundary: &[f64]) -> Vec<f64> {
    let ni = domain.interior_count();
    let mean = if boundary.is_empty() {
        0.0
    } else {
        let first = boundary[0];
        if boundary.iter().all(|&b| b == first) {
            first
        } else {
            boundary.iter().sum::<f64>() / boundary.len() as f64
        }
    };
    let mut values = vec![mean; ni];
    values.extend_from_slice(boundary);
    values
}

/// Solves `−Δ_h u = rhs` with `u = g` on boundary nodes (interior values of `g` are ignored).
pub fn solve_poisson(
    domain: &Arc<BallDomain>,
    rhs: &GridField,
    g: &GridField,
    tol: f64,
) -> Result<(GridField, SolveReport)> {
    if !(tol > 0.0) {
        return Err(LabError::InvalidParameter("tolerance must be positive".into()));
    }
    rhs.ensure_on(domain)?;
    g.ensure_on(domain)?;
    let op = DirichletOperator::new(domain, 0.0, None);
    let mut values = initial_guess(domain, g.boundary());
    let report = solve_in_place(&op, rhs.interior(), &mut values, CgSettings::for_domain(domain, tol))?;
    let u = GridField::from_values(domain, values)?;
    debug_assert!(comparison_holds(rhs, g, &u), "discrete maximum principle violated");
    Ok((u, report))
}

fn comparison_holds(rhs: &GridField, g: &GridField, u: &GridField) -> bool {
    if rhs.interior().iter().all(|&v| v >= 0.0) {
        let floor = g.boundary().iter().copied().fold(0.0, f64::min);
        let slack = 1e-8 * (1.0 + u.sup_norm());
        u.interior().iter().all(|&v| v >= floor - slack)
    } else {
        true
    }
}

/// Dirichlet problem for `−Δ_h − A` with right-hand side and boundary data.
#[derive(Debug, Clone)]
pub struct ShiftedProblem {
    pub domain: Arc<BallDomain>,
    pub shift_a: f64,
    pub rhs: GridField,
    /// Boundary part supplies the Dirichlet data.
    pub dirichlet: GridField,
    /// First Dirichlet eigenvalue of `−Δ_h`, if already known.
    pub lambda1: Option<f64>,
}

impl ShiftedProblem {
    pub fn new(domain: &Arc<BallDomain>, shift_a: f64, rhs: GridField, dirichlet: GridField) -> Self {
        ShiftedProblem {
            domain: domain.clone(),
            shift_a,
            rhs,
            dirichlet,
            lambda1: None,
        }
    }

    pub fn with_lambda1(mut self, lambda1: f64) -> Self {
        self.lambda1 = Some(lambda1);
        self
    }

    /// Confirms `A < λ₁ − 10⁻⁸ λ₁`, using a cheap certified lower bound first.
    pub fn check_admissible(&self) -> Result<()> {
        let a = self.shift_a;
        if a <= 0.0 {
            return Ok(());
        }
        let certified = stability::laplacian_lower_bound(&self.domain);
        if a < certified * (1.0 - 1e-8) {
            return Ok(());
        }
        let lambda1 = match self.lambda1 {
            Some(l) => l,
            None => stability::smallest_eigenvalue(&self.domain, None)?.lambda1,
        };
        if a < lambda1 * (1.0 - 1e-8) {
            Ok(())
        } else {
            Err(LabError::IndefiniteShift { shift: a, lambda1 })
        }
    }
}

pub fn solve_shifted(p: &ShiftedProblem, tol: f64) -> Result<(GridField, SolveReport)> {
    if !(tol > 0.0) {
        return Err(LabError::InvalidParameter("tolerance must be positive".into()));
    }
    p.rhs.ensure_on(&p.domain)?;
    p.dirichlet.ensure_on(&p.domain)?;
    p.check_admissible()?;
    let op = DirichletOperator::new(&p.domain, p.shift_a, None);
    let mut values = initial_guess(&p.domain, p.dirichlet.boundary());
    let report = solve_in_place(&op, p.rhs.interior(), &mut values, CgSettings::for_domain(&p.domain, tol))
        .map_err(|e| match e {
            LabError::IndefiniteShift { shift, .. } => LabError::IndefiniteShift {
                shift,
                lambda1: p.lambda1.unwrap_or(f64::NAN),
            },
            other => other,
        })?;
    Ok((GridField::from_values(&p.domain, values)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_ball_domain;

    #[test]
    fn constant_data_reproduced_exactly() {
        let d = build_ball_domain(2, &[0.0; 2], 1.0, 0.05).unwrap();
        let (u, rep) = solve_poisson(&d, &GridField::zeros(&d), &GridField::constant(&d, 0.3), 1e-10).unwrap();
        assert_eq!(rep.iterations, 0);
        assert!(u.values().iter().all(|&v| v == 0.3));
    }
}
