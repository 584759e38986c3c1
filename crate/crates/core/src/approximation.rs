//! Monotone approximation of a solution `u` of `−Δu = f(u)` on a small ball by
//! solutions `u_ε` of the truncated problems `−Δu_ε = f_ε(u_ε)`.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{io, l2_norm, staggered_inner, w12_distance, BallDomain, GridField};
use crate::nonlinearity::{Nonlinearity, TruncatedNonlinearity};
use crate::solver::{self, solve_in_place, CgSettings, DirichletOperator, ShiftedProblem};
use crate::stability::{default_poincare_constant, is_stable_fast, VerdictSummary};

/// Nodewise slack for the monotonicity claims, relative to `max(1, ‖u‖∞)`.
pub const MONOTONE_TOL: f64 = 1e-10;
/// Slack on `u^(0) ≤ u` before the base solve emits a diagnostic.
pub const COMPARISON_TOL: f64 = 1e-8;
const INNER_TOL: f64 = 1e-12;

/// `(1 − 10⁻⁶)/√(8·C0(n)·(1 + f'_−(1)))`.
pub fn admissible_radius(f: &Nonlinearity, n: usize) -> Result<f64> {
    let a = f.left_derivative(1.0)?;
    let c0 = default_poincare_constant(n)?.c0;
    Ok((1.0 - 1e-6) / (8.0 * c0 * (1.0 + a)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproximationParameters {
    pub r_star: f64,
    pub r0: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub epsilon_schedule: Vec<f64>,
    pub j_max: usize,
    /// Stop once `‖u^(j) − u^(j−1)‖∞ ≤ fixed_point_tol·(1 + ‖u‖∞)`.
    pub fixed_point_tol: f64,
}

/// `{2⁻¹, …, 2⁻⁸}`.
pub fn default_schedule() -> Vec<f64> {
    (1..=8).map(|k| 0.5f64.powi(k)).collect()
}

impl ApproximationParameters {
    /// Validates the radius condition and `r0 ≤ r_star`.
    pub fn new(f: &Nonlinearity, n: usize, r0: f64, epsilon_schedule: Vec<f64>) -> Result<Self> {
        let a = f.left_derivative(1.0)?;
        let k = a - f.eval(1.0);
        let c0 = default_poincare_constant(n)?.c0;
        let r_star = admissible_radius(f, n)?;
        if 1.0 / (c0 * r_star * r_star) <= 8.0 * (1.0 + a) {
            return Err(LabError::InvalidParameter(format!("radius condition fails at r_star = {r_star}")));
        }
        if !(r0 > 0.0 && r0 <= r_star) {
            return Err(LabError::InvalidParameter(format!("r0 = {r0} must lie in (0, r_star = {r_star}]")));
        }
        if epsilon_schedule.is_empty()
            || epsilon_schedule.iter().any(|&e| !(e > 0.0 && e <= 1.0))
            || epsilon_schedule.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(LabError::InvalidParameter(
                "epsilon schedule must be strictly decreasing inside (0, 1]".into(),
            ));
        }
        Ok(ApproximationParameters {
            r_star,
            r0,
            a,
            k,
            c0,
            epsilon_schedule,
            j_max: 500,
            fixed_point_tol: 1e-9,
        })
    }

    /// Also requires `r0 < dist(x0, ∂Ω)/4` for an ambient domain.
    pub fn with_ambient_distance(self, dist: f64) -> Result<Self> {
        if self.r0 < dist / 4.0 {
            Ok(self)
        } else {
            Err(LabError::InvalidParameter(format!(
                "r0 = {} is not below a quarter of the boundary distance {dist}",
                self.r0
            )))
        }
    }
}

/// Outcome of the base solve together with the comparison diagnostic.
#[derive(Debug, Clone)]
pub struct BaseSolution {
    pub field: GridField,
    pub report: solver::SolveReport,
    /// `max(u^(0) − u)` over interior nodes when `u` was certified as a discrete solution.
    pub comparison_excess: Option<f64>,
    pub diagnostic: Option<String>,
}

/// `−Δ_h u^(0) = A u^(0) − K` with `u^(0) = u` on the boundary.
///
/// Pass `comparator_is_solution` when `u` itself solves the discrete problem;
/// then `u^(0) ≤ u` is checked and a violation becomes a diagnostic.
pub fn base_solution(u: &GridField, f: &Nonlinearity, comparator_is_solution: bool) -> Result<BaseSolution> {
    let domain = u.domain();
    let a = f.left_derivative(1.0)?;
    let k = a - f.eval(1.0);
    let rhs = GridField::constant(domain, -k);
    let problem = ShiftedProblem::new(domain, a, rhs, u.clone());
    let (field, report) = solver::solve_shifted(&problem, INNER_TOL)?;
    let mut comparison_excess = None;
    let mut diagnostic = None;
    if comparator_is_solution {
        let excess = field.interior().iter().zip(u.interior()).map(|(b, c)| b - c).fold(f64::NEG_INFINITY, f64::max);
        comparison_excess = Some(excess);
        if excess > COMPARISON_TOL * u.sup_norm().max(1.0) {
            diagnostic = Some(format!("base solution exceeds comparator by {excess:e}"));
        }
    }
    Ok(BaseSolution { field, report, comparison_excess, diagnostic })
}

/// Damped Newton solve of `−Δ_h u = f(u)` with boundary data `g`.
pub fn newton_solve(g: &GridField, f: &Nonlinearity, tol: f64) -> Result<(GridField, usize)> {
    let domain = g.domain().clone();
    let ni = domain.interior_count();
    let mut values = g.values().to_vec();
    values[..ni].iter_mut().for_each(|v| *v = 0.0);
    let zero = DirichletOperator::new(&domain, 0.0, None);

    let residual = |vals: &[f64], out: &mut [f64]| -> f64 {
        // F(u) = f(u) + Δ_h u, zero at a solution.
        let rhs: Vec<f64> = vals[..ni].iter().map(|&t| f.eval(t)).collect();
        zero.residual(vals, &rhs, out);
        out.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    };
    let mut r = vec![0.0; ni];
    let mut norm = residual(&values, &mut r);
    let scale = values[..ni].iter().map(|&t| f.eval(t).abs()).fold(1.0f64, f64::max);
    let h = domain.spacing();
    let floor = |vals: &[f64]| {
        let umax = vals.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        256.0 * f64::EPSILON * (scale + 4.0 * domain.dim() as f64 * umax / (h * h))
    };
    for it in 0..60 {
        let tol_it = (tol * scale).max(floor(&values));
        if !norm.is_finite() {
            return Err(LabError::NewtonFailed("residual is not finite".into()));
        }
        if norm <= tol_it {
            return Ok((GridField::from_values(&domain, values)?, it));
        }
        let mut pot = vec![0.0; ni];
        for (p, &t) in pot.iter_mut().zip(&values[..ni]) {
            *p = f.left_derivative(t)?;
        }
        let jac = DirichletOperator::new(&domain, 0.0, Some(&pot));
        let mut step = vec![0.0; domain.node_count()];
        solve_in_place(&jac, &r, &mut step, CgSettings::for_domain(&domain, 1e-13)).map_err(|e| match e {
            LabError::IndefiniteShift { .. } => LabError::NewtonFailed("linearization is not positive definite".into()),
            other => other,
        })?;
        let mut damping = 1.0;
        loop {
            let trial: Vec<f64> = values
                .iter()
                .enumerate()
                .map(|(i, &v)| if i < ni { v + damping * step[i] } else { v })
                .collect();
            let mut rt = vec![0.0; ni];
            let nt = residual(&trial, &mut rt);
            if nt < norm || damping < 1e-4 {
                if !(nt < norm) && nt > tol_it {
                    return Err(LabError::NewtonFailed(format!("no descent at step {it}, residual {norm:e}")));
                }
                values = trial;
                r = rt;
                norm = nt;
                break;
            }
            damping *= 0.5;
        }
    }
    Err(LabError::NewtonFailed(format!("no convergence in 60 steps, residual {norm:e}")))
}

/// Iterates and limit for one `ε`.
#[derive(Debug, Clone)]
pub struct EpsilonRun {
    pub epsilon: f64,
    /// `u^(1), u^(2), …`; the last entry is the limit `u_ε`.
    pub iterates: Vec<GridField>,
    pub converged: bool,
    /// Last `‖u^(j) − u^(j−1)‖∞`.
    pub final_update: f64,
    /// Discrete `W^{1,2}` distance `‖u_ε − u‖`.
    pub distance: f64,
    pub verdict: VerdictSummary,
}

impl EpsilonRun {
    pub fn limit(&self) -> &GridField {
        self.iterates.last().expect("at least one iterate")
    }
}

/// Where the comparator came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ComparatorSource {
    Supplied,
    NewtonOracle,
}

#[derive(Debug, Clone)]
pub struct IterationTrace {
    pub params: ApproximationParameters,
    pub nonlinearity: String,
    pub comparator: GridField,
    pub comparator_source: ComparatorSource,
    pub base: BaseSolution,
    pub runs: Vec<EpsilonRun>,
}

/// Runs `u^(j)_ε` from `base` until the fixed-point test passes or `j_max`.
pub fn iterate(
    u: &GridField,
    base: &GridField,
    f_eps: &TruncatedNonlinearity,
    params: &ApproximationParameters,
    eps_index: usize,
) -> Result<Vec<GridField>> {
    u.ensure_same_domain(base)?;
    let domain = u.domain();
    let ni = domain.interior_count();
    let scale = u.sup_norm().max(1.0);
    let mono = MONOTONE_TOL * scale;
    let stop = params.fixed_point_tol * (1.0 + u.sup_norm());
    let op = DirichletOperator::new(domain, 0.0, None);
    let settings = CgSettings { tol: INNER_TOL, ..CgSettings::for_domain(domain, INNER_TOL) };

    let mut prev = base.values().to_vec();
    // Boundary data always comes from the comparator.
    prev[ni..].copy_from_slice(u.boundary());
    let mut out = Vec::new();
    let mut defect = vec![0.0; ni];
    for step in 1..=params.j_max {
        let rhs: Vec<f64> = prev[..ni].iter().map(|&t| f_eps.eval(t)).collect();
        op.residual(&prev, &rhs, &mut defect);
        let mut delta = vec![0.0; domain.node_count()];
        solve_in_place(&op, &defect, &mut delta, settings)?;
        let mut next = prev.clone();
        let mut update: f64 = 0.0;
        for i in 0..ni {
            next[i] += delta[i];
            update = update.max(delta[i].abs());
        }
        for i in 0..ni {
            let drop = prev[i] - next[i];
            let over = next[i] - u.values()[i];
            let (worst, magnitude) = if drop >= over { (drop, drop) } else { (over, over) };
            if worst > mono {
                return Err(LabError::MonotonicityViolation { eps_index, step, node: i, magnitude });
            }
        }
        out.push(GridField::from_values(domain, next.clone())?);
        prev = next;
        if update <= stop {
            break;
        }
    }
    Ok(out)
}

fn run_epsilon(
    u: &GridField,
    f: &Nonlinearity,
    base: &GridField,
    params: &ApproximationParameters,
    eps_index: usize,
) -> Result<EpsilonRun> {
    let epsilon = params.epsilon_schedule[eps_index];
    let f_eps = f.truncate(epsilon)?;
    let iterates = iterate(u, base, &f_eps, params, eps_index)?;
    let n = iterates.len();
    let final_update = if n >= 2 {
        iterates[n - 1].max_abs_diff(&iterates[n - 2])?
    } else {
        iterates[0].max_abs_diff(base)?
    };
    let converged = final_update <= params.fixed_point_tol * (1.0 + u.sup_norm());
    let limit = iterates.last().expect("j_max >= 1");
    let distance = w12_distance(limit, u)?;
    let verdict = is_stable_fast(limit, f_eps.as_nonlinearity(), Some(10.0 * u.domain().spacing()))?.summary();
    Ok(EpsilonRun { epsilon, iterates, converged, final_update, distance, verdict })
}

/// Base solve followed by the monotone iteration for every `ε` in the schedule.
pub fn approximate(
    u: &GridField,
    f: &Nonlinearity,
    params: &ApproximationParameters,
    comparator_source: ComparatorSource,
) -> Result<IterationTrace> {
    check_domain(u.domain(), params)?;
    let base = base_solution(u, f, true)?;
    let runs: Vec<Result<EpsilonRun>> = (0..params.epsilon_schedule.len())
        .into_par_iter()
        .map(|k| run_epsilon(u, f, &base.field, params, k))
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(IterationTrace {
        params: params.clone(),
        nonlinearity: f.label().to_string(),
        comparator: u.clone(),
        comparator_source,
        base,
        runs,
    })
}

/// Runs [`approximate`] with the comparator produced by [`newton_solve`] from boundary data `g`.
pub fn approximate_from_boundary(
    g: &GridField,
    f: &Nonlinearity,
    params: &ApproximationParameters,
) -> Result<IterationTrace> {
    let (u, _) = newton_solve(g, f, 1e-13)?;
    approximate(&u, f, params, ComparatorSource::NewtonOracle)
}

fn check_domain(domain: &Arc<BallDomain>, params: &ApproximationParameters) -> Result<()> {
    if domain.radius() > params.r_star * (1.0 + 1e-12) {
        return Err(LabError::InvalidParameter(format!(
            "domain radius {} exceeds r_star = {}",
            domain.radius(),
            params.r_star
        )));
    }
    Ok(())
}

/// Worst margin of one claim with the place it occurred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClaimWitness {
    pub eps_index: usize,
    /// Iterate number `j`; 0 is the base solution.
    pub step: usize,
    pub node: usize,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimsReport {
    pub tolerance: f64,
    pub claim_i: bool,
    pub claim_i_worst: Option<ClaimWitness>,
    pub claim_ii: bool,
    pub claim_ii_worst: Option<ClaimWitness>,
    pub claim_iii: bool,
    /// `max_{j,ε} ‖u^(j)_ε‖²_{W^{1,2}}`.
    pub w12_sup: f64,
    /// `1.1·[2∫|Du|² + 2∫|Au−K|² + ∫(|u^(0)|+|u|)²]`.
    pub w12_bound: f64,
    /// `1.1·[∫|Du|² + 2∫(A·max(|u^(0)|,|u|)+|K|)(u−u^(0)) + ∫(|u^(0)|+|u|)²]`.
    pub w12_bound_sharp: f64,
    /// `∫|D(u^(0)−u)|² ≤ 2∫|Du|² + 2∫|Au−K|²`.
    pub base_energy: f64,
    pub base_energy_bound: f64,
    pub stable_limits: bool,
    /// Distances nonincreasing along the schedule within `10⁻⁸ + 10h`.
    pub distances_monotone: bool,
}

impl ClaimsReport {
    pub fn passed(&self) -> bool {
        self.claim_i && self.claim_ii && self.claim_iii && self.stable_limits && self.base_energy <= self.base_energy_bound
    }
}

fn track(worst: &mut Option<ClaimWitness>, eps_index: usize, step: usize, a: &[f64], b: &[f64]) {
    // Margin a − b ≥ 0 expected.
    for (node, (x, y)) in a.iter().zip(b).enumerate() {
        let m = x - y;
        if worst.is_none_or(|w| m < w.margin) {
            *worst = Some(ClaimWitness { eps_index, step, node, margin: m });
        }
    }
}

/// Verifies claims (i)–(iii) on a finished trace.
pub fn check_claims(trace: &IterationTrace) -> Result<ClaimsReport> {
    let u = &trace.comparator;
    let u0 = &trace.base.field;
    let domain = u.domain();
    let h = domain.spacing();
    let tol = MONOTONE_TOL * u.sup_norm().max(1.0);
    let (a, k) = (trace.params.a, trace.params.k);

    let mut worst_i = None;
    for (e, run) in trace.runs.iter().enumerate() {
        track(&mut worst_i, e, 0, u.interior(), u0.interior());
        let mut prev = u0;
        for (j, it) in run.iterates.iter().enumerate() {
            it.ensure_same_domain(u)?;
            track(&mut worst_i, e, j + 1, it.interior(), prev.interior());
            track(&mut worst_i, e, j + 1, u.interior(), it.interior());
            prev = it;
        }
    }
    let mut worst_ii = None;
    for e in 1..trace.runs.len() {
        // ε decreases along the schedule, so run e dominates run e − 1.
        let (big, small) = (&trace.runs[e - 1], &trace.runs[e]);
        let len = big.iterates.len().max(small.iterates.len());
        for j in 0..len {
            let x = &small.iterates[j.min(small.iterates.len() - 1)];
            let y = &big.iterates[j.min(big.iterates.len() - 1)];
            track(&mut worst_ii, e, j + 1, x.interior(), y.interior());
        }
    }
    let ok = |w: &Option<ClaimWitness>| w.is_none_or(|w| w.margin >= -tol);

    let vol = domain.cell_volume();
    let ni = domain.interior_count();
    let grad_u = staggered_inner(u, u)?;
    let au_k: f64 = u.interior().iter().map(|&t| (a * t - k).powi(2)).sum::<f64>() * vol;
    let sandwich: f64 = (0..ni).map(|i| (u0.values()[i].abs() + u.values()[i].abs()).powi(2)).sum::<f64>() * vol;
    let cross: f64 = (0..ni)
        .map(|i| {
            let (b, c) = (u0.values()[i], u.values()[i]);
            (a * b.abs().max(c.abs()) + k.abs()) * (c - b).max(0.0)
        })
        .sum::<f64>()
        * vol;
    let w12_bound = 1.1 * (2.0 * grad_u + 2.0 * au_k + sandwich);
    let w12_bound_sharp = 1.1 * (grad_u + 2.0 * cross + sandwich);
    let mut w12_sup: f64 = 0.0;
    for run in &trace.runs {
        for it in &run.iterates {
            w12_sup = w12_sup.max(staggered_inner(it, it)? + l2_norm(it).powi(2));
        }
    }
    let diff = u0.combine(1.0, u, -1.0)?;
    let base_energy = staggered_inner(&diff, &diff)?;
    let distances_monotone =
        trace.runs.windows(2).all(|w| w[1].distance <= w[0].distance + 1e-8 + 10.0 * h);
    Ok(ClaimsReport {
        tolerance: tol,
        claim_i: ok(&worst_i),
        claim_i_worst: worst_i,
        claim_ii: ok(&worst_ii),
        claim_ii_worst: worst_ii,
        claim_iii: w12_sup <= w12_bound && w12_sup <= w12_bound_sharp,
        w12_sup,
        w12_bound,
        w12_bound_sharp,
        base_energy,
        base_energy_bound: 2.0 * grad_u + 2.0 * au_k,
        stable_limits: trace.runs.iter().all(|r| r.verdict.verdict != crate::stability::Stability::Unstable),
        distances_monotone,
    })
}

/// Which iterates [`write_trace`] stores as binary fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KeepIterates {
    None,
    #[default]
    Last,
    All,
}

impl FromStr for KeepIterates {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(KeepIterates::None),
            "last" => Ok(KeepIterates::Last),
            "all" => Ok(KeepIterates::All),
            other => Err(LabError::Parse(format!("keep-iterates must be none, last or all, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub epsilon: f64,
    pub iterations: usize,
    pub converged: bool,
    pub final_update: f64,
    pub distance: f64,
    pub verdict: VerdictSummary,
    pub max_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub dim: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub spacing: f64,
    pub nonlinearity: String,
    pub comparator_source: ComparatorSource,
    pub comparator_max: f64,
    pub params: ApproximationParameters,
    pub base_comparison_excess: Option<f64>,
    pub base_diagnostic: Option<String>,
    pub runs: Vec<RunSummary>,
    pub claims: ClaimsReport,
}

impl IterationTrace {
    pub fn summary(&self) -> Result<TraceSummary> {
        let d = self.comparator.domain();
        Ok(TraceSummary {
            dim: d.dim(),
            center: d.center().to_vec(),
            radius: d.radius(),
            spacing: d.spacing(),
            nonlinearity: self.nonlinearity.clone(),
            comparator_source: self.comparator_source,
            comparator_max: self.comparator.max_interior(),
            params: self.params.clone(),
            base_comparison_excess: self.base.comparison_excess,
            base_diagnostic: self.base.diagnostic.clone(),
            runs: self
                .runs
                .iter()
                .map(|r| RunSummary {
                    epsilon: r.epsilon,
                    iterations: r.iterates.len(),
                    converged: r.converged,
                    final_update: r.final_update,
                    distance: r.distance,
                    verdict: r.verdict.clone(),
                    max_value: r.limit().max_interior(),
                })
                .collect(),
            claims: check_claims(self)?,
        })
    }

    /// `(ε, ‖u_ε − u‖)` pairs.
    pub fn distance_series(&self) -> Vec<(f64, f64)> {
        self.runs.iter().map(|r| (r.epsilon, r.distance)).collect()
    }
}

fn write_field(dir: &Path, name: &str, field: &GridField) -> Result<()> {
    let file = fs::File::create(dir.join(name))?;
    io::write_binary(field, BufWriter::new(file))
}

/// Writes `trace.json` plus binary fields into `dir`.
pub fn write_trace(trace: &IterationTrace, dir: &Path, keep: KeepIterates) -> Result<TraceSummary> {
    fs::create_dir_all(dir)?;
    let summary = trace.summary()?;
    fs::write(dir.join("trace.json"), serde_json::to_string_pretty(&summary)?)?;
    if keep == KeepIterates::None {
        return Ok(summary);
    }
    write_field(dir, "comparator.bin", &trace.comparator)?;
    write_field(dir, "base.bin", &trace.base.field)?;
    for (e, run) in trace.runs.iter().enumerate() {
        write_field(dir, &format!("eps{e:02}_limit.bin"), run.limit())?;
        if keep == KeepIterates::All {
            for (j, it) in run.iterates.iter().enumerate() {
                write_field(dir, &format!("eps{e:02}_iter{:03}.bin", j + 1), it)?;
            }
        }
    }
    Ok(summary)
}
