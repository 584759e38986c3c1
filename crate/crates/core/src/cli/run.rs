use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::{ExperimentConfig, ExperimentKind, SolutionSource};
use crate::approximation::{
    approximate, approximate_from_boundary, check_claims, default_schedule, write_trace, ApproximationParameters,
    ComparatorSource, IterationTrace, KeepIterates,
};
use crate::catalog::{sample_to_grid, RadialSolution};
use crate::error::{LabError, Result};
use crate::estimates::{
    default_theta, energy_first_variation, energy_functional, hole_filling_scales, holder_report, matrix_sweep,
    observed_order, verify_geometric_inequality, verify_identity_chain, verify_key_estimate,
    verify_sternberg_zumbrun, weak_residual, EstimateReport, RefinementPoint, Series, TestFunction, Verdict,
};
use crate::grid::{build_ball_domain, io, BallDomain, GridField};
use crate::nonlinearity::Nonlinearity;
use crate::stability::{is_stable, Stability};

pub const VERSION: &str = concat!("stable-lab ", env!("CARGO_PKG_VERSION"));

pub const ESTIMATE_CHECKS: &[&str] = &[
    "geometric",
    "sternberg-zumbrun",
    "identity-chain",
    "key-estimate",
    "hole-filling",
    "weak-residual",
    "energy",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub mandatory: bool,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, value: Option<f64>) -> Self {
        Check {
            name: name.into(),
            mandatory: true,
            passed,
            value,
            detail: String::new(),
        }
    }

    fn optional(mut self) -> Self {
        self.mandatory = false;
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

impl From<&LabError> for ErrorInfo {
    fn from(e: &LabError) -> Self {
        ErrorInfo {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub experiment: ExperimentKind,
    pub config: ExperimentConfig,
    pub summary: Outcome,
    pub checks: Vec<Check>,
    pub reports: Vec<EstimateReport>,
    pub series: BTreeMap<String, Series>,
    pub data: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn exit_code(&self) -> i32 {
        match self.summary {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Error => 2,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Everything an experiment produced, before packaging.
#[derive(Default)]
struct Body {
    checks: Vec<Check>,
    reports: Vec<EstimateReport>,
    /// Per-spacing reports of a refinement study.
    table: Vec<EstimateReport>,
    series: BTreeMap<String, Series>,
    data: serde_json::Map<String, serde_json::Value>,
    csv: Vec<(String, String)>,
    trace: Option<IterationTrace>,
}

/// Runs `cfg` without touching the filesystem (except reading field files).
pub fn run(cfg: &ExperimentConfig) -> ExperimentReport {
    execute(cfg, None)
}

/// Runs `cfg` and writes `report.json`, CSV tables and plot data under `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    fs::create_dir_all(out)?;
    let report = execute(cfg, Some(out));
    fs::write(out.join("report.json"), report.to_json())?;
    if cfg.emit_plot_data {
        for name in report.series.keys() {
            super::plot::emit_plot_data(&report, name, &out.join("plot"))?;
        }
    }
    Ok(report)
}

fn execute(cfg: &ExperimentConfig, out: Option<&Path>) -> ExperimentReport {
    let start = Instant::now();
    let result = cfg.validate().and_then(|_| match cfg.experiment {
        ExperimentKind::Approximate => run_approximate(cfg),
        ExperimentKind::Stability => run_stability(cfg),
        ExperimentKind::VerifyEstimates => run_estimates(cfg),
        ExperimentKind::Holder => run_holder(cfg),
        ExperimentKind::MatrixSweep => run_matrix(cfg),
        ExperimentKind::CatalogCheck => run_catalog(cfg),
    });
    let result = result.and_then(|body| {
        if let Some(dir) = out {
            write_body(cfg, &body, dir)?;
        }
        Ok(body)
    });
    let mut report = ExperimentReport {
        version: VERSION.to_string(),
        experiment: cfg.experiment,
        config: cfg.clone(),
        summary: Outcome::Pass,
        checks: Vec::new(),
        reports: Vec::new(),
        series: BTreeMap::new(),
        data: serde_json::Value::Null,
        error: None,
        wall_clock_seconds: 0.0,
    };
    match result {
        Ok(body) => {
            report.summary = if body.checks.iter().any(|c| c.mandatory && !c.passed) {
                Outcome::Fail
            } else {
                Outcome::Pass
            };
            report.checks = body.checks;
            report.reports = body.reports;
            report.series = body.series;
            report.data = serde_json::Value::Object(body.data);
        }
        Err(e) => {
            report.summary = Outcome::Error;
            report.error = Some(ErrorInfo::from(&e));
        }
    }
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    report
}

fn write_body(cfg: &ExperimentConfig, body: &Body, dir: &Path) -> Result<()> {
    let mut checks = String::from("name,mandatory,passed,value\n");
    for c in &body.checks {
        let v = c.value.map(|v| format!("{v:e}")).unwrap_or_default();
        checks.push_str(&format!("{},{},{},{}\n", c.name, c.mandatory, c.passed, v));
    }
    fs::write(dir.join("checks.csv"), checks)?;
    let rows: Vec<&EstimateReport> = if body.table.is_empty() { body.reports.iter().collect() } else { body.table.iter().collect() };
    if !rows.is_empty() {
        let mut s = format!("{}\n", EstimateReport::CSV_HEADER);
        for r in rows {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        fs::write(dir.join("estimates.csv"), s)?;
    }
    for (name, text) in &body.csv {
        fs::write(dir.join(name), text)?;
    }
    if let Some(trace) = &body.trace {
        let keep: KeepIterates = cfg.approximation.keep_iterates.parse()?;
        write_trace(trace, &dir.join("trace"), keep)?;
    }
    Ok(())
}

fn domain_at(cfg: &ExperimentConfig, h: f64) -> Result<Arc<BallDomain>> {
    let d = &cfg.domain;
    build_ball_domain(d.n, &d.center_or_origin(), d.radius, h)
}

fn catalog_entry(cfg: &ExperimentConfig) -> Result<Option<RadialSolution>> {
    match cfg.problem.solution.parse()? {
        SolutionSource::Catalog(name) => Ok(Some(RadialSolution::parse(&name)?)),
        _ => Ok(None),
    }
}

fn nonlinearity(cfg: &ExperimentConfig) -> Result<Nonlinearity> {
    if let Some(s) = &cfg.problem.nonlinearity {
        return Nonlinearity::parse(s);
    }
    match catalog_entry(cfg)? {
        Some(rs) => Ok(rs.effective_nonlinearity()),
        None => Err(LabError::Parse("problem.nonlinearity is required for this solution source".into())),
    }
}

/// The field `u` on a domain of spacing `h`.
fn solution_at(cfg: &ExperimentConfig, h: f64, f: Option<&Nonlinearity>) -> Result<GridField> {
    match cfg.problem.solution.parse()? {
        SolutionSource::NewtonOracle => {
            let f = f.ok_or_else(|| LabError::Parse("the Newton oracle needs a nonlinearity".into()))?;
            let d = domain_at(cfg, h)?;
            Ok(crate::approximation::newton_solve(&GridField::constant(&d, cfg.problem.boundary), f, cfg.tolerances.newton)?.0)
        }
        SolutionSource::Catalog(name) => {
            let rs = RadialSolution::parse(&name)?;
            let d = domain_at(cfg, h)?;
            if rs.n != d.dim() {
                return Err(LabError::InvalidParameter(format!(
                    "catalog entry `{name}` lives in dimension {}, domain has {}",
                    rs.n,
                    d.dim()
                )));
            }
            Ok(sample_to_grid(&rs, &d, cfg.problem.cap)?.field)
        }
        SolutionSource::File(path) => {
            let u = io::read_binary(fs::File::open(&path)?)?;
            if u.domain().spacing() != h {
                return Err(LabError::InvalidParameter(format!(
                    "field file {} has spacing {}, requested {h}",
                    path.display(),
                    u.domain().spacing()
                )));
            }
            Ok(u)
        }
    }
}

fn is_newton(cfg: &ExperimentConfig) -> bool {
    matches!(cfg.problem.solution.parse(), Ok(SolutionSource::NewtonOracle))
}

/// Spacing used by single-resolution experiments; a field file dictates its own.
fn base_spacing(cfg: &ExperimentConfig) -> Result<f64> {
    match cfg.problem.solution.parse()? {
        SolutionSource::File(path) => Ok(io::read_binary(fs::File::open(path)?)?.domain().spacing()),
        _ => Ok(cfg.domain.spacing),
    }
}

fn run_approximate(cfg: &ExperimentConfig) -> Result<Body> {
    let f = nonlinearity(cfg)?;
    let h = base_spacing(cfg)?;
    let schedule = cfg.approximation.epsilon_schedule.clone().unwrap_or_else(default_schedule);
    let u = solution_at(cfg, h, Some(&f))?;
    let d = u.domain().clone();
    let mut params = ApproximationParameters::new(&f, d.dim(), d.radius(), schedule)?;
    params.j_max = cfg.approximation.j_max;
    params.fixed_point_tol = cfg.tolerances.fixed_point;
    let trace = if is_newton(cfg) {
        approximate_from_boundary(&u, &f, &params)?
    } else {
        approximate(&u, &f, &params, ComparatorSource::Supplied)?
    };
    let claims = check_claims(&trace)?;
    let mut body = Body::default();
    let worst = |w: &Option<crate::approximation::ClaimWitness>| w.as_ref().map(|w| w.margin);
    body.checks.push(Check::new("claim_i", claims.claim_i, worst(&claims.claim_i_worst)));
    body.checks.push(Check::new("claim_ii", claims.claim_ii, worst(&claims.claim_ii_worst)));
    body.checks.push(Check::new("claim_iii", claims.claim_iii, Some(claims.w12_sup)));
    body.checks.push(Check::new("stable_limits", claims.stable_limits, None));
    body.checks.push(Check::new("distances_monotone", claims.distances_monotone, None).optional());
    let last = trace.runs.last().expect("schedule is non-empty");
    let umax = trace.comparator.max_interior();
    let inactive = 1.0 / last.epsilon > umax;
    let dist_ok = last.distance <= cfg.tolerances.final_distance;
    let mut c = Check::new("final_distance", dist_ok, Some(last.distance));
    if !inactive {
        c = c.optional().detail(format!("truncation still active: 1/eps = {} <= max u = {umax}", 1.0 / last.epsilon));
    }
    body.checks.push(c);
    let mut s = Series::new(&["epsilon", "w12_distance"]);
    let mut csv = String::from("epsilon,iterations,converged,distance\n");
    for r in &trace.runs {
        s.push(vec![r.epsilon, r.distance]);
        csv.push_str(&format!("{:e},{},{},{:e}\n", r.epsilon, r.iterates.len(), r.converged, r.distance));
    }
    body.series.insert("distance".into(), s);
    body.csv.push(("distances.csv".into(), csv));
    body.data.insert("trace".into(), serde_json::to_value(trace.summary()?)?);
    body.trace = Some(trace);
    Ok(body)
}

fn run_stability(cfg: &ExperimentConfig) -> Result<Body> {
    let f = nonlinearity(cfg)?;
    let u = solution_at(cfg, base_spacing(cfg)?, Some(&f))?;
    let v = is_stable(&u, &f, cfg.tolerances.stability)?;
    let mut body = Body::default();
    let name = serde_json::to_value(v.verdict)?.as_str().unwrap_or_default().to_string();
    let c = match &cfg.problem.expect {
        Some(e) => Check::new("stability_verdict", *e == name, Some(v.lambda1)).detail(format!("expected {e}, got {name}")),
        None => Check::new("stability_verdict", v.verdict != Stability::Unstable, Some(v.lambda1))
            .optional()
            .detail(name),
    };
    body.checks.push(c);
    body.data.insert("verdict".into(), serde_json::to_value(v.summary())?);
    Ok(body)
}

fn selected_checks(cfg: &ExperimentConfig) -> Vec<String> {
    if !cfg.estimates.checks.is_empty() {
        return cfg.estimates.checks.clone();
    }
    ESTIMATE_CHECKS
        .iter()
        .filter(|c| **c != "key-estimate" || (3..=5).contains(&cfg.domain.n))
        .map(|c| c.to_string())
        .collect()
}

fn reports_at(cfg: &ExperimentConfig, check: &str, h: f64, f: &Nonlinearity) -> Result<Vec<EstimateReport>> {
    let u = solution_at(cfg, h, Some(f))?;
    let d = u.domain().clone();
    let test: TestFunction = cfg.estimates.test_function.parse()?;
    let phi = test.sample(&d);
    let unstable_ok = |r: Result<EstimateReport>| match r {
        Err(LabError::UnstableInput { report, .. }) => {
            let mut r = *report;
            r.verdict = Verdict::Fail;
            r.notes.push("stability hypothesis fails".into());
            Ok(r)
        }
        other => other,
    };
    Ok(match check {
        "geometric" => vec![verify_geometric_inequality(&u, default_theta(&u))?],
        "sternberg-zumbrun" => vec![unstable_ok(verify_sternberg_zumbrun(&u, f, &phi))?],
        "identity-chain" => match verify_identity_chain(&u, f, &phi) {
            Err(LabError::UnstableInput { report, .. }) => vec![unstable_ok(Err(LabError::UnstableInput {
                lambda1: f64::NAN,
                report,
            }))?],
            other => other?,
        },
        "key-estimate" => vec![unstable_ok(verify_key_estimate(&u, f, &phi))?],
        "hole-filling" => {
            let radii = if cfg.estimates.hole_radii.is_empty() {
                let r = d.radius();
                let radii: Vec<f64> = [r / 8.0, r / 4.0, r / 2.0].into_iter().filter(|&s| s > 2.0 * h * (1.0 + 1e-9)).collect();
                if radii.is_empty() {
                    return Err(LabError::OriginResolution { spacing: h, radius: r / 2.0 });
                }
                radii
            } else {
                cfg.estimates.hole_radii.clone()
            };
            vec![hole_filling_scales(&u, &radii)?]
        }
        "weak-residual" => {
            let res = weak_residual(&u, f);
            let scale = crate::grid::l2_norm(&u.map(|t| f.eval(t))).max(1.0);
            vec![EstimateReport::identity("weak_residual", res, 0.0, h, scale)]
        }
        "energy" => {
            let delta = 1e-4;
            let coarse = energy_first_variation(&u, f, &phi, delta)?;
            let fine = energy_first_variation(&u, f, &phi, delta / 2.0)?;
            // Richardson step removes the δ² term of the central difference
            let slope = (4.0 * fine.fd_slope - coarse.fd_slope) / 3.0;
            let energy = energy_functional(&u, f);
            let half_dirichlet = 0.5 * crate::grid::dirichlet_integral(&u);
            let magnitude = 1.0 + half_dirichlet + (half_dirichlet - energy).abs();
            let noise = 4.0 * (d.node_count() as f64).sqrt() * f64::EPSILON * magnitude / delta;
            let scale = slope.abs() + fine.predicted.abs();
            let r = EstimateReport::identity("energy_first_variation", slope, fine.predicted, h, scale)
                .with_noise_floor(noise);
            vec![r.extra("energy", energy)]
        }
        other => return Err(LabError::Parse(format!("unknown estimate check `{other}`"))),
    })
}

fn run_estimates(cfg: &ExperimentConfig) -> Result<Body> {
    let f = nonlinearity(cfg)?;
    let spacings = if cfg.estimates.spacings.is_empty() {
        vec![base_spacing(cfg)?]
    } else {
        cfg.estimates.spacings.clone()
    };
    let mut body = Body::default();
    for check in selected_checks(cfg) {
        let mut per_name: BTreeMap<String, Vec<EstimateReport>> = BTreeMap::new();
        let mut order: Vec<String> = Vec::new();
        for &h in &spacings {
            for r in reports_at(cfg, &check, h, &f)? {
                if !per_name.contains_key(&r.name) {
                    order.push(r.name.clone());
                }
                body.table.push(r.clone());
                per_name.entry(r.name.clone()).or_default().push(r);
            }
        }
        for name in order {
            let runs = per_name.remove(&name).expect("name recorded");
            let history: Vec<RefinementPoint> = runs.iter().map(|r| RefinementPoint { h: r.h, margin: r.margin }).collect();
            let residuals: Vec<Option<f64>> = runs.iter().map(|r| r.extras.get("residual").copied()).collect();
            let mut last = runs.last().expect("at least one spacing").clone();
            let mut s = Series::new(&["h", if residuals[0].is_some() { "residual" } else { "margin" }]);
            for (r, res) in runs.iter().zip(&residuals) {
                s.push(vec![r.h, res.unwrap_or(r.margin)]);
            }
            if let [.., Some(a), Some(b)] = residuals[..] {
                let p = observed_order(a, b);
                last.extras.insert("observed_order".into(), p);
                // rounding-level residuals carry no order information
                let floor = last.extras.get("noise_floor").copied().unwrap_or(0.0);
                let exact = b <= floor.max(1e-10 * (1.0 + last.lhs.abs().max(last.rhs.abs())));
                body.checks.push(
                    Check::new(format!("{name}_order"), exact || p >= cfg.estimates.min_order, Some(p))
                        .detail(if exact { "residual at rounding level" } else { "" }),
                );
            }
            let last = last.with_history(history);
            body.checks.push(Check::new(name.clone(), last.passed(), Some(last.margin)));
            body.series.insert(format!("refinement_{name}"), s);
            for (k, s) in &last.series {
                body.series.insert(format!("{name}_{k}"), s.clone());
            }
            body.reports.push(last);
        }
    }
    Ok(body)
}

fn run_holder(cfg: &ExperimentConfig) -> Result<Body> {
    let f = if is_newton(cfg) { Some(nonlinearity(cfg)?) } else { None };
    let u = solution_at(cfg, base_spacing(cfg)?, f.as_ref())?;
    let d = u.domain();
    let x0 = cfg.holder.center.clone().unwrap_or_else(|| d.center().to_vec());
    let radius = cfg.holder.radius.unwrap_or(d.radius());
    let r = holder_report(&u, &x0, radius, cfg.holder.levels)?;
    let mut body = Body::default();
    let exact = r.verdict == Verdict::ExactConstant;
    body.checks.push(Check::new("holder_positive", r.passed(), Some(r.margin)).detail(if exact { "exact constant" } else { "" }));
    if let (Some(target), false) = (cfg.holder.expected_alpha, exact) {
        let rel = (r.margin - target).abs() / target.abs();
        body.checks.push(
            Check::new("holder_alpha", rel <= cfg.holder.rel_tol, Some(r.margin)).detail(format!("target {target}, relative error {rel:e}")),
        );
    }
    if let Some(h) = r.series.get("holder") {
        let col = |name: &str| h.columns.iter().position(|c| c == name).expect("holder column");
        let (k, l, o, e) = (col("k"), col("log2_osc"), col("osc"), col("energy"));
        let mut a = Series::new(&["k", "log2_osc"]);
        let mut b = Series::new(&["k", "osc", "energy"]);
        for row in &h.rows {
            a.push(vec![row[k], row[l]]);
            b.push(vec![row[k], row[o], row[e]]);
        }
        body.series.insert("holder".into(), a);
        body.series.insert("holder_energy".into(), b);
    }
    body.reports.push(r);
    Ok(body)
}

fn run_matrix(cfg: &ExperimentConfig) -> Result<Body> {
    let mut body = Body::default();
    let mut csv = String::from("n,trials,seed,min_margin,min_scaled_margin,worst_trial,violations\n");
    let mut sweeps = Vec::new();
    for &n in &cfg.matrix.dims {
        let s = matrix_sweep(n, cfg.matrix.trials, cfg.seed)?;
        body.checks.push(Check::new(format!("matrix_n{n}"), s.passed(), Some(s.min_scaled_margin)));
        csv.push_str(&format!(
            "{},{},{},{:e},{:e},{},{}\n",
            s.n, s.trials, s.seed, s.min_margin, s.min_scaled_margin, s.worst_trial, s.violations
        ));
        sweeps.push(s);
    }
    body.csv.push(("matrix.csv".into(), csv));
    body.data.insert("sweeps".into(), serde_json::to_value(sweeps)?);
    Ok(body)
}

/// Band below zero inside which a radial `λ₁` still counts as stable.
pub const RADIAL_BAND: f64 = 1e-2;

fn run_catalog(cfg: &ExperimentConfig) -> Result<Body> {
    let mut body = Body::default();
    let mut entries = Vec::new();
    let mut csv = String::from("name,n,lambda,lambda1,verdict,expected,regularity\n");
    for target in &cfg.catalog.targets {
        let rs = RadialSolution::parse(target)?;
        let lambda1 = rs.radial_lambda1(cfg.catalog.delta, cfg.catalog.points)?;
        let stable = lambda1 >= -RADIAL_BAND;
        let verdict = if lambda1 < 0.0 && !stable {
            "unstable"
        } else if lambda1 < 0.0 {
            "marginal"
        } else {
            "stable"
        };
        let summary = rs.summary();
        body.checks.push(Check::new(
            format!("{target}:residual"),
            summary.max_relative_residual <= crate::catalog::RESIDUAL_TOL,
            Some(summary.max_relative_residual),
        ));
        if let Some(h) = &summary.hardy {
            body.checks.push(Check::new(format!("{target}:hardy"), h.stable == stable, Some(h.coefficient)));
        }
        let expected = rs.expected_stable();
        if let Some(e) = expected {
            body.checks.push(Check::new(format!("{target}:expected"), e == stable, Some(lambda1)).detail(verdict));
        }
        csv.push_str(&format!(
            "{},{},{:e},{:e},{},{},{}\n",
            target,
            rs.n,
            rs.lambda,
            lambda1,
            verdict,
            expected.map_or("none", |e| if e { "stable" } else { "unstable" }),
            serde_json::to_value(summary.regularity_class)?.as_str().unwrap_or_default()
        ));
        entries.push(json!({ "summary": summary, "radial_lambda1": lambda1, "verdict": verdict }));
    }
    body.csv.push(("catalog.csv".into(), csv));
    body.data.insert("entries".into(), serde_json::Value::Array(entries));
    Ok(body)
}

/// Output directory: explicit flag, then the config, then `$STABLE_LAB_OUT/<stem>`,
/// then `stable-lab-out/<stem>`.
pub fn resolve_output(cfg: &ExperimentConfig, config_path: Option<&Path>, flag: Option<&Path>) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output {
        return p.clone();
    }
    let stem = config_path
        .and_then(|p| p.file_stem())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| cfg.experiment.to_string());
    let root = std::env::var_os("STABLE_LAB_OUT").map(PathBuf::from).unwrap_or_else(|| PathBuf::from("stable-lab-out"));
    root.join(stem)
}
