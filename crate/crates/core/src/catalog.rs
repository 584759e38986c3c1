//! Closed-form radial solutions of `−Δu = λ f(u)` on the unit ball with known
//! stability and regularity, plus grid sampling and profile export.

use std::f64::consts::LN_10;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{BallDomain, GridField};
use crate::nonlinearity::Nonlinearity;
use crate::stability::radial_smallest_eigenvalue;

/// Radial samples used by the construction-time residual check.
pub const RESIDUAL_SAMPLES: usize = 10_000;
/// Relative residual accepted by the construction-time check.
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedStability {
    Stable,
    Unstable,
    Marginal,
    DimensionDependent,
}

/// Integrability near the origin: bounded with finite energy, finite energy
/// but unbounded, or integrable with infinite energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegularityClass {
    #[serde(rename = "smooth")]
    Smooth,
    #[serde(rename = "W12_not_Linf")]
    W12NotLinf,
    #[serde(rename = "L1_not_W12")]
    L1NotW12,
    /// Not even locally integrable; only reachable outside the documented parameter ranges.
    #[serde(rename = "not_L1")]
    NotL1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ManufacturedKind {
    Quadratic,
    Eigenfunction,
    /// `u = r^β`.
    Power(f64),
}

impl ManufacturedKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "quadratic" => Ok(ManufacturedKind::Quadratic),
            "eigenfunction" => Ok(ManufacturedKind::Eigenfunction),
            other => {
                let beta = other
                    .strip_prefix("power:")
                    .and_then(|b| b.trim().parse::<f64>().ok())
                    .ok_or_else(|| LabError::Parse(format!("unknown manufactured kind `{other}`")))?;
                Ok(ManufacturedKind::Power(beta))
            }
        }
    }
}

/// Algebraic comparison of a `c/r²` linearized potential with `(n−2)²/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HardyCheck {
    pub coefficient: f64,
    pub hardy_constant: f64,
    pub stable: bool,
}

impl HardyCheck {
    fn new(n: usize, coefficient: f64) -> Self {
        let hardy_constant = (n as f64 - 2.0).powi(2) / 4.0;
        HardyCheck { coefficient, hardy_constant, stable: coefficient <= hardy_constant * (1.0 + 1e-12) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Profile {
    /// `−2 ln r`.
    Log,
    /// `r^{−a} − 1`.
    PowerMinusOne { a: f64 },
    /// `1 − r²`.
    Quadratic,
    /// `Γ(ν+1)(jr/2)^{−ν} J_ν(jr)`, equal to 1 at the origin.
    Bessel { nu: f64, j: f64 },
    /// `r^β`.
    Power { beta: f64 },
    /// `2 ln((1+μ)/(1+μr²))`.
    Liouville { mu: f64 },
}

impl Profile {
    /// `(u, u', u'')` at `r`.
    fn eval(&self, r: f64) -> (f64, f64, f64) {
        match *self {
            Profile::Log => (-2.0 * r.ln(), -2.0 / r, 2.0 / (r * r)),
            Profile::PowerMinusOne { a } => {
                let p = r.powf(-a);
                (p - 1.0, -a * p / r, a * (a + 1.0) * p / (r * r))
            }
            Profile::Quadratic => (1.0 - r * r, -2.0 * r, -2.0),
            Profile::Bessel { nu, j } => bessel_profile(nu, j, r),
            Profile::Power { beta } => {
                let p = r.powf(beta);
                (p, beta * p / r, beta * (beta - 1.0) * p / (r * r))
            }
            Profile::Liouville { mu } => {
                let q = 1.0 + mu * r * r;
                let u = 2.0 * ((1.0 + mu) / q).ln();
                let du = -4.0 * mu * r / q;
                let d2u = -4.0 * mu * (1.0 - mu * r * r) / (q * q);
                (u, du, d2u)
            }
        }
    }

    fn unbounded(&self) -> bool {
        matches!(self, Profile::Log | Profile::PowerMinusOne { .. })
    }
}

/// Normalized `r^{−ν}J_ν(jr)` series and its first two derivatives.
fn bessel_profile(nu: f64, j: f64, r: f64) -> (f64, f64, f64) {
    // u = Σ c_k r^{2k} with c_k = (−1)^k (j/2)^{2k} / (k! (ν+1)_k).
    let q = (j / 2.0).powi(2);
    let (mut u, mut du, mut d2u) = (0.0, 0.0, 0.0);
    let mut c = 1.0;
    let mut r_pow = 1.0; // r^{2k−2}
    for k in 0..200 {
        let kf = k as f64;
        if k == 0 {
            u += c;
        } else {
            u += c * r_pow * r * r;
            du += 2.0 * kf * c * r_pow * r;
            d2u += 2.0 * kf * (2.0 * kf - 1.0) * c * r_pow;
            r_pow *= r * r;
        }
        c *= -q / ((kf + 1.0) * (nu + kf + 1.0));
        if k > 4 && (c * r_pow).abs() * (1.0 + r * r) < 1e-20 {
            break;
        }
    }
    (u, du, d2u)
}

/// First positive zero of `J_ν` located on the normalized series.
fn first_bessel_zero(nu: f64) -> f64 {
    let g = |x: f64| bessel_profile(nu, 1.0, x).0;
    let (mut lo, mut hi) = (1.0, 1.0);
    while g(hi) > 0.0 {
        lo = hi;
        hi += 0.25;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// A radial solution of `−u'' − ((n−1)/r)u' = λ f(u)` on `(0, 1]`.
#[derive(Debug, Clone)]
pub struct RadialSolution {
    /// Catalog name, e.g. `bv:n=5,p=2`.
    pub name: String,
    pub n: usize,
    profile: Profile,
    pub f: Nonlinearity,
    pub lambda: f64,
    pub singular_at_origin: bool,
    pub expected_stability: ExpectedStability,
    /// Dimension from which a dimension-dependent entry is expected to be stable.
    pub stability_threshold: Option<usize>,
    pub regularity_class: RegularityClass,
    pub hardy: Option<HardyCheck>,
    /// Brezis–Vázquez exponent inside `(n/(n−2), p_upper]`.
    pub p_range: Option<bool>,
    /// Worst `|residual| / scale` seen by the construction check.
    pub max_relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogSummary {
    pub name: String,
    pub n: usize,
    pub f: String,
    pub lambda: f64,
    pub singular_at_origin: bool,
    pub expected_stability: ExpectedStability,
    pub stability_threshold: Option<usize>,
    pub regularity_class: RegularityClass,
    pub hardy: Option<HardyCheck>,
    pub p_range: Option<bool>,
    pub max_relative_residual: f64,
}

/// Grid sample of a radial solution and the cap that was applied.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub field: GridField,
    /// Radius inside which the profile was replaced by the cap.
    pub r_cap: Option<f64>,
    pub capped_nodes: usize,
}

/// Upper end of the Brezis–Vázquez exponent range, `(n + 2√(n−1))/(n − 4 + 2√(n−1))`.
pub fn bv_upper_exponent(n: usize) -> f64 {
    let nf = n as f64;
    let s = 2.0 * (nf - 1.0).sqrt();
    (nf + s) / (nf - 4.0 + s)
}

/// `λ_s = a(n − 2 − a)` with `a = 2/(p−1)`.
pub fn bv_lambda(n: usize, p: f64) -> f64 {
    let a = 2.0 / (p - 1.0);
    a * (n as f64 - 2.0 - a)
}

impl RadialSolution {
    fn build(
        name: String,
        n: usize,
        profile: Profile,
        f: Nonlinearity,
        lambda: f64,
        expected_stability: ExpectedStability,
        regularity_class: RegularityClass,
    ) -> Result<Self> {
        let mut rs = RadialSolution {
            name,
            n,
            profile,
            f,
            lambda,
            singular_at_origin: profile.unbounded(),
            expected_stability,
            stability_threshold: None,
            regularity_class,
            hardy: None,
            p_range: None,
            max_relative_residual: 0.0,
        };
        let mut worst: f64 = 0.0;
        for k in 1..=RESIDUAL_SAMPLES {
            let r = k as f64 / RESIDUAL_SAMPLES as f64;
            let (res, scale) = rs.residual_and_scale(r);
            if !res.is_finite() {
                return Err(LabError::NonFinite { node: k });
            }
            worst = worst.max(res.abs() / scale.max(f64::MIN_POSITIVE));
        }
        if worst > RESIDUAL_TOL {
            return Err(LabError::InvalidParameter(format!(
                "{}: radial residual {worst:e} exceeds {RESIDUAL_TOL:e}",
                rs.name
            )));
        }
        rs.max_relative_residual = worst;
        Ok(rs)
    }

    /// `u = −2 ln r` solving `−Δu = 2(n−2)eᵘ`; stable exactly when `n ≥ 10`.
    pub fn gelfand_singular(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(LabError::DimensionOutOfRange(n));
        }
        let lambda = 2.0 * (n as f64 - 2.0);
        let mut rs = Self::build(
            format!("gelfand:n={n}"),
            n,
            Profile::Log,
            Nonlinearity::exp(),
            lambda,
            ExpectedStability::DimensionDependent,
            RegularityClass::W12NotLinf,
        )?;
        rs.stability_threshold = Some(10);
        rs.hardy = Some(HardyCheck::new(n, lambda));
        Ok(rs)
    }

    /// `u = r^{−2/(p−1)} − 1` solving `−Δu = λ_s(1+u)^p`.
    ///
    /// Exponents outside `(n/(n−2), p_upper]` still construct, with `p_range`
    /// cleared and stability/regularity taken from the algebra instead.
    pub fn brezis_vazquez(n: usize, p: f64) -> Result<Self> {
        if !(3..=9).contains(&n) {
            return Err(LabError::DimensionOutOfRange(n));
        }
        if !(p.is_finite() && p > 1.0) {
            return Err(LabError::InvalidParameter(format!("exponent {p} must exceed 1")));
        }
        let nf = n as f64;
        let a = 2.0 / (p - 1.0);
        let lambda = bv_lambda(n, p);
        let in_range = p > nf / (nf - 2.0) && p <= bv_upper_exponent(n);
        let hardy = HardyCheck::new(n, lambda * p);
        let regularity = if in_range {
            RegularityClass::L1NotW12
        } else if a >= nf {
            RegularityClass::NotL1
        } else if 2.0 * a + 2.0 >= nf {
            RegularityClass::L1NotW12
        } else {
            RegularityClass::W12NotLinf
        };
        let stability = if in_range || hardy.stable { ExpectedStability::Stable } else { ExpectedStability::Unstable };
        let mut rs = Self::build(
            format!("bv:n={n},p={p}"),
            n,
            Profile::PowerMinusOne { a },
            Nonlinearity::power(p)?,
            lambda,
            stability,
            regularity,
        )?;
        rs.hardy = Some(hardy);
        rs.p_range = Some(in_range);
        Ok(rs)
    }

    /// Smooth or mildly singular ground truths.
    pub fn manufactured(kind: ManufacturedKind, n: usize) -> Result<Self> {
        if !(2..=12).contains(&n) {
            return Err(LabError::DimensionOutOfRange(n));
        }
        let nf = n as f64;
        match kind {
            ManufacturedKind::Quadratic => Self::build(
                format!("manufactured:quadratic,n={n}"),
                n,
                Profile::Quadratic,
                Nonlinearity::constant(2.0 * nf),
                1.0,
                ExpectedStability::Stable,
                RegularityClass::Smooth,
            ),
            ManufacturedKind::Eigenfunction => {
                let nu = nf / 2.0 - 1.0;
                let j = first_bessel_zero(nu);
                Self::build(
                    format!("manufactured:eigenfunction,n={n}"),
                    n,
                    Profile::Bessel { nu, j },
                    Nonlinearity::linear(1.0),
                    j * j,
                    ExpectedStability::Marginal,
                    RegularityClass::Smooth,
                )
            }
            ManufacturedKind::Power(beta) => {
                if !(beta > 0.0 && beta <= 1.0) {
                    return Err(LabError::InvalidParameter(format!("power exponent {beta} outside (0, 1]")));
                }
                // −Δ r^β = −β(β+n−2) r^{β−2}, written in terms of t = r^β.
                let c = -beta * (beta + nf - 2.0);
                let e = (beta - 2.0) / beta;
                let f = Nonlinearity::custom(&format!("power-profile:{beta}"), move |t: f64| c * t.powf(e));
                let hardy = HardyCheck::new(n, (2.0 - beta) * (beta + nf - 2.0));
                let mut rs = Self::build(
                    format!("manufactured:power:{beta},n={n}"),
                    n,
                    Profile::Power { beta },
                    f,
                    1.0,
                    if hardy.stable { ExpectedStability::Stable } else { ExpectedStability::Unstable },
                    RegularityClass::Smooth,
                )?;
                rs.hardy = Some(hardy);
                Ok(rs)
            }
        }
    }

    /// Planar solution `u = 2 ln((1+μ)/(1+μr²))` of `−Δu = λeᵘ`, `λ = 8μ/(1+μ)²`.
    /// The branch `μ < 1` is stable, `μ = 1` is the turning point.
    pub fn gelfand_regular(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return Err(LabError::InvalidParameter(format!("branch parameter {mu} must be positive")));
        }
        let stability = if mu < 1.0 {
            ExpectedStability::Stable
        } else if mu == 1.0 {
            ExpectedStability::Marginal
        } else {
            ExpectedStability::Unstable
        };
        Self::build(
            format!("gelfand-regular:mu={mu}"),
            2,
            Profile::Liouville { mu },
            Nonlinearity::exp(),
            8.0 * mu / (1.0 + mu).powi(2),
            stability,
            RegularityClass::Smooth,
        )
    }

    /// Parses `gelfand:n=3`, `bv:n=5,p=2`, `manufactured:<kind>,n=3`, `gelfand-regular:mu=0.5`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = || LabError::Parse(format!("unknown catalog entry `{spec}`"));
        let (head, rest) = spec.split_once(':').ok_or_else(bad)?;
        let mut parts: Vec<&str> = rest.split(',').map(str::trim).collect();
        let kind = if head == "manufactured" {
            if parts.is_empty() {
                return Err(bad());
            }
            Some(ManufacturedKind::parse(parts.remove(0))?)
        } else {
            None
        };
        let mut params = Vec::new();
        for kv in parts {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            let v: f64 = v.trim().parse().map_err(|_| bad())?;
            params.push((k.trim(), v));
        }
        let get = |key: &str| params.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(bad);
        let dim = |key: &str| -> Result<usize> {
            let v = get(key)?;
            if v.fract() != 0.0 || v < 0.0 {
                return Err(bad());
            }
            Ok(v as usize)
        };
        match (head, kind) {
            ("gelfand", _) if params.len() == 1 => Self::gelfand_singular(dim("n")?),
            ("bv", _) if params.len() == 2 => Self::brezis_vazquez(dim("n")?, get("p")?),
            ("manufactured", Some(k)) if params.len() == 1 => Self::manufactured(k, dim("n")?),
            ("gelfand-regular", _) if params.len() == 1 => Self::gelfand_regular(get("mu")?),
            _ => Err(bad()),
        }
    }

    pub fn u(&self, r: f64) -> f64 {
        self.profile.eval(r).0
    }

    pub fn du(&self, r: f64) -> f64 {
        self.profile.eval(r).1
    }

    pub fn d2u(&self, r: f64) -> f64 {
        self.profile.eval(r).2
    }

    /// `λ f`, the right-hand side actually solved.
    pub fn effective_nonlinearity(&self) -> Nonlinearity {
        if self.lambda == 1.0 {
            self.f.clone()
        } else {
            self.f.scaled(self.lambda)
        }
    }

    /// `−u'' − ((n−1)/r)u' − λf(u)` and the sum of the magnitudes of its terms.
    pub fn residual_and_scale(&self, r: f64) -> (f64, f64) {
        let (u, du, d2u) = self.profile.eval(r);
        let radial = (self.n as f64 - 1.0) / r * du;
        let rhs = self.lambda * self.f.eval(u);
        (-d2u - radial - rhs, d2u.abs() + radial.abs() + rhs.abs())
    }

    pub fn residual(&self, r: f64) -> f64 {
        self.residual_and_scale(r).0
    }

    /// Linearized potential `λ f'_−(u(r))`.
    pub fn linearized_potential(&self, r: f64) -> f64 {
        self.lambda * self.f.left_derivative(self.u(r)).unwrap_or(f64::NAN)
    }

    /// Bottom of the radial spectrum of `−Δ − λf'_−(u)` on `(δ, 1)`.
    pub fn radial_lambda1(&self, delta: f64, grid_points: usize) -> Result<f64> {
        let pot = |r: f64| -self.linearized_potential(r);
        radial_smallest_eigenvalue(self.n, &pot, delta, grid_points)
    }

    /// Expected stability as a yes/no, resolving dimension dependence.
    pub fn expected_stable(&self) -> Option<bool> {
        match self.expected_stability {
            ExpectedStability::Stable => Some(true),
            ExpectedStability::Unstable => Some(false),
            ExpectedStability::Marginal => None,
            ExpectedStability::DimensionDependent => self.stability_threshold.map(|t| self.n >= t),
        }
    }

    /// Radius `r_cap` with `u(r_cap) = cap` for profiles that blow up at the origin.
    pub fn cap_radius(&self, cap: f64) -> Option<f64> {
        if !self.singular_at_origin {
            return None;
        }
        match self.profile {
            Profile::Log => Some((-cap / 2.0).exp()),
            Profile::PowerMinusOne { a } => Some((cap + 1.0).powf(-1.0 / a)),
            _ => None,
        }
    }

    /// Integrability of `|u'|²r^{n−1}` and `|u|r^{n−1}` near 0 and boundedness of
    /// `u`, measured from exponent fits over `r ∈ [1e-8, 1e-4]`.
    pub fn classify_regularity(&self) -> RegularityClass {
        classify_profile(self.n, |r| self.profile.eval(r))
    }

    pub fn summary(&self) -> CatalogSummary {
        CatalogSummary {
            name: self.name.clone(),
            n: self.n,
            f: self.f.label().to_string(),
            lambda: self.lambda,
            singular_at_origin: self.singular_at_origin,
            expected_stability: self.expected_stability,
            stability_threshold: self.stability_threshold,
            regularity_class: self.regularity_class,
            hardy: self.hardy,
            p_range: self.p_range,
            max_relative_residual: self.max_relative_residual,
        }
    }

    /// Writes `r,u,du,residual` rows for `samples` equally spaced radii in `(0, 1]`.
    pub fn write_profile_csv<W: Write>(&self, mut w: W, samples: usize) -> Result<()> {
        writeln!(w, "r,u,du,residual")?;
        for k in 1..=samples {
            let r = k as f64 / samples as f64;
            let (u, du, _) = self.profile.eval(r);
            writeln!(w, "{r},{u},{du},{}", self.residual(r))?;
        }
        Ok(())
    }
}

/// Least-squares slope of `ln g` against `ln r`.
fn log_slope(rs: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let pts: Vec<(f64, f64)> = rs
        .iter()
        .filter_map(|&r| {
            let v = g(r).abs();
            (v > 0.0 && v.is_finite()).then(|| (r.ln(), v.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

fn classify_profile(n: usize, eval: impl Fn(f64) -> (f64, f64, f64)) -> RegularityClass {
    let nf = n as f64;
    let rs: Vec<f64> = (0..=40).map(|k| (-(4.0 + k as f64 / 10.0) * LN_10).exp()).collect();
    let energy = log_slope(&rs, |r| eval(r).1.powi(2) * r.powf(nf - 1.0));
    let mass = log_slope(&rs, |r| eval(r).0 * r.powf(nf - 1.0));
    // Growth per decade: logarithmic or power blow-up keeps the increments from shrinking.
    let decades: Vec<f64> = (4..=8).map(|k| eval(10f64.powi(-k)).0.abs()).collect();
    let inc: Vec<f64> = decades.windows(2).map(|w| w[1] - w[0]).collect();
    let unbounded = inc.iter().all(|&d| d > 0.0)
        && inc.windows(2).map(|w| w[1] / w[0]).sum::<f64>() / (inc.len() - 1) as f64 >= 0.9;
    let w12 = energy > -1.0;
    let l1 = mass > -1.0;
    match (w12, l1, unbounded) {
        (true, _, false) => RegularityClass::Smooth,
        (true, _, true) => RegularityClass::W12NotLinf,
        (false, true, _) => RegularityClass::L1NotW12,
        (false, false, _) => RegularityClass::NotL1,
    }
}

/// Samples `rs` at every node of an origin-centred `domain`, capping singular
/// profiles at `cap`.
pub fn sample_to_grid(rs: &RadialSolution, domain: &Arc<BallDomain>, cap: f64) -> Result<SampledField> {
    if domain.center().iter().any(|&c| c != 0.0) {
        return Err(LabError::InvalidParameter("catalog sampling needs an origin-centred domain".into()));
    }
    if domain.dim() != rs.n {
        return Err(LabError::InvalidParameter(format!(
            "{} lives in dimension {}, domain has {}",
            rs.name,
            rs.n,
            domain.dim()
        )));
    }
    if rs.singular_at_origin && !(cap.is_finite() && cap > 0.0) {
        return Err(LabError::InvalidParameter(format!("cap {cap} must be positive and finite")));
    }
    let r_cap = rs.cap_radius(cap);
    let mut capped = 0;
    let mut values = Vec::with_capacity(domain.node_count());
    for i in 0..domain.node_count() {
        let r = domain.distance_to_center(i);
        let v = if rs.singular_at_origin {
            if r == 0.0 {
                cap
            } else {
                rs.u(r).min(cap)
            }
        } else {
            rs.u(r)
        };
        if rs.singular_at_origin && v == cap {
            capped += 1;
        }
        values.push(v);
    }
    Ok(SampledField { field: GridField::from_values(domain, values)?, r_cap, capped_nodes: capped })
}

/// Names accepted by [`RadialSolution::parse`], with a one-line description each.
pub fn list() -> Vec<(&'static str, &'static str)> {
    vec![
        ("gelfand:n=<n>", "u = -2 ln r, f = e^t, lambda = 2(n-2); stable iff n >= 10"),
        ("bv:n=<n>,p=<p>", "u = r^(-2/(p-1)) - 1, f = (1+t)^p, lambda = lambda_s; 3 <= n <= 9"),
        ("manufactured:quadratic,n=<n>", "u = 1 - r^2, f = 2n; stable"),
        ("manufactured:eigenfunction,n=<n>", "first Dirichlet eigenfunction, f = t, lambda = lambda_1; marginal"),
        ("manufactured:power:<beta>,n=<n>", "u = r^beta, 0 < beta <= 1; Hoelder-fit target"),
        ("gelfand-regular:mu=<mu>", "planar u = 2 ln((1+mu)/(1+mu r^2)), f = e^t; stable for mu < 1"),
    ]
}
