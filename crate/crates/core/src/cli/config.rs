use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Approximate,
    Stability,
    VerifyEstimates,
    Holder,
    MatrixSweep,
    CatalogCheck,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(v.as_str().unwrap_or_default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub n: usize,
    pub radius: f64,
    pub spacing: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec {
            n: 2,
            radius: 1.0,
            spacing: 1.0 / 32.0,
            center: None,
        }
    }
}

impl DomainSpec {
    pub fn center_or_origin(&self) -> Vec<f64> {
        self.center.clone().unwrap_or_else(|| vec![0.0; self.n])
    }
}

/// Where the field `u` comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionSource {
    /// Damped Newton solve with constant boundary value.
    NewtonOracle,
    Catalog(String),
    File(PathBuf),
}

impl FromStr for SolutionSource {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "newton-oracle" {
            Ok(SolutionSource::NewtonOracle)
        } else if let Some(rest) = s.strip_prefix("catalog:") {
            Ok(SolutionSource::Catalog(rest.to_string()))
        } else if let Some(rest) = s.strip_prefix("file:") {
            Ok(SolutionSource::File(PathBuf::from(rest)))
        } else {
            Err(LabError::Parse(format!(
                "solution must be `newton-oracle`, `catalog:<entry>` or `file:<path>`, got `{s}`"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProblemSpec {
    /// Nonlinearity spec string; catalog solutions default to their own.
    pub nonlinearity: Option<String>,
    pub solution: String,
    /// Dirichlet value for the Newton oracle.
    pub boundary: f64,
    /// Cap applied when sampling singular catalog profiles.
    pub cap: f64,
    /// Expected stability verdict for the `stability` experiment.
    pub expect: Option<String>,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec {
            nonlinearity: None,
            solution: "newton-oracle".into(),
            boundary: 0.0,
            cap: 50.0,
            expect: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproximationSpec {
    pub epsilon_schedule: Option<Vec<f64>>,
    pub j_max: usize,
    pub keep_iterates: String,
}

impl Default for ApproximationSpec {
    fn default() -> Self {
        ApproximationSpec {
            epsilon_schedule: None,
            j_max: 500,
            keep_iterates: "last".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimatesSpec {
    /// Subset of `geometric`, `sternberg-zumbrun`, `identity-chain`,
    /// `key-estimate`, `hole-filling`, `weak-residual`, `energy`. Empty means all that apply.
    pub checks: Vec<String>,
    pub test_function: String,
    /// Spacings for the refinement study, coarse first. Empty means the domain spacing only.
    pub spacings: Vec<f64>,
    pub hole_radii: Vec<f64>,
    /// Required observed order of identity residuals.
    pub min_order: f64,
}

impl Default for EstimatesSpec {
    fn default() -> Self {
        EstimatesSpec {
            checks: Vec::new(),
            test_function: "cone:1".into(),
            spacings: Vec::new(),
            hole_radii: Vec::new(),
            min_order: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HolderSpec {
    pub center: Option<Vec<f64>>,
    pub radius: Option<f64>,
    pub levels: usize,
    /// Reference exponent; the fit must land within `rel_tol` of it.
    pub expected_alpha: Option<f64>,
    pub rel_tol: f64,
}

impl Default for HolderSpec {
    fn default() -> Self {
        HolderSpec {
            center: None,
            radius: None,
            levels: 4,
            expected_alpha: None,
            rel_tol: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MatrixSpec {
    pub trials: u64,
    pub dims: Vec<usize>,
}

impl Default for MatrixSpec {
    fn default() -> Self {
        MatrixSpec {
            trials: 1_000_000,
            dims: vec![2, 3, 4, 5, 6],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CatalogSpec {
    pub targets: Vec<String>,
    pub delta: f64,
    pub points: usize,
}

impl Default for CatalogSpec {
    fn default() -> Self {
        CatalogSpec {
            targets: Vec::new(),
            delta: 1e-4,
            points: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Marginal band for stability verdicts; default `10·h·(1+‖V‖∞)^{1/2}`.
    pub stability: Option<f64>,
    pub fixed_point: f64,
    pub newton: f64,
    /// Required final `W^{1,2}` distance once the truncation is inactive.
    pub final_distance: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            stability: None,
            fixed_point: 1e-9,
            newton: 1e-13,
            final_distance: 1e-6,
        }
    }
}

/// One experiment, as read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub emit_plot_data: bool,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub problem: ProblemSpec,
    #[serde(default)]
    pub approximation: ApproximationSpec,
    #[serde(default)]
    pub estimates: EstimatesSpec,
    #[serde(default)]
    pub holder: HolderSpec,
    #[serde(default)]
    pub matrix: MatrixSpec,
    #[serde(default)]
    pub catalog: CatalogSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            seed: 0,
            output: None,
            emit_plot_data: false,
            domain: DomainSpec::default(),
            problem: ProblemSpec::default(),
            approximation: ApproximationSpec::default(),
            estimates: EstimatesSpec::default(),
            holder: HolderSpec::default(),
            matrix: MatrixSpec::default(),
            catalog: CatalogSpec::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        Self::from_table(parse_table(s)?)
    }

    fn from_table(t: toml::Table) -> Result<Self> {
        let cfg: ExperimentConfig = toml::Value::Table(t)
            .try_into()
            .map_err(|e: toml::de::Error| LabError::Parse(e.to_string().trim_end().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        self.validate()?;
        toml::to_string(self).map_err(|e| LabError::Parse(e.to_string()))
    }

    /// Reads `path` and applies `section.key=value` overrides in order.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut table = parse_table(&text)?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        Self::from_table(table)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LabError::Parse(m));
        if self.seed > i64::MAX as u64 {
            return bad(format!("seed {} does not fit a TOML integer", self.seed));
        }
        let d = &self.domain;
        if !(d.radius > 0.0 && d.spacing > 0.0 && d.spacing < d.radius) {
            return bad(format!("domain needs 0 < spacing < radius, got {} and {}", d.spacing, d.radius));
        }
        if let Some(c) = &d.center {
            if c.len() != d.n {
                return bad(format!("domain.center has {} entries for n = {}", c.len(), d.n));
            }
        }
        self.problem.solution.parse::<SolutionSource>()?;
        if let Some(e) = &self.problem.expect {
            if !["stable", "unstable", "marginal"].contains(&e.as_str()) {
                return bad(format!("problem.expect must be stable, unstable or marginal, got `{e}`"));
            }
        }
        self.approximation.keep_iterates.parse::<crate::approximation::KeepIterates>()?;
        self.estimates.test_function.parse::<crate::estimates::TestFunction>()?;
        for c in &self.estimates.checks {
            if !super::run::ESTIMATE_CHECKS.contains(&c.as_str()) {
                return bad(format!("unknown estimate check `{c}`"));
            }
        }
        if self.estimates.spacings.windows(2).any(|w| w[1] >= w[0]) {
            return bad("estimates.spacings must decrease".into());
        }
        if self.experiment == ExperimentKind::CatalogCheck && self.catalog.targets.is_empty() {
            return bad("catalog-check needs catalog.targets".into());
        }
        if self.experiment == ExperimentKind::MatrixSweep && (self.matrix.trials == 0 || self.matrix.dims.is_empty()) {
            return bad("matrix-sweep needs trials > 0 and at least one dimension".into());
        }
        Ok(())
    }
}

fn parse_table(s: &str) -> Result<toml::Table> {
    s.parse::<toml::Table>().map_err(|e| LabError::Parse(e.to_string().trim_end().to_string()))
}

/// `a.b.c=value`; the value is read as TOML, falling back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| LabError::Parse(format!("override `{spec}` is not key=value")))?;
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let keys: Vec<&str> = path.trim().split('.').collect();
    let mut cur = table;
    for k in &keys[..keys.len() - 1] {
        cur = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| LabError::Parse(format!("`{k}` in override `{spec}` is not a section")))?;
    }
    cur.insert(keys[keys.len() - 1].to_string(), value);
    Ok(())
}
