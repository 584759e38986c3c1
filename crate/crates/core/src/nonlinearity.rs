//! Nonlinearities `f`, their left derivatives and primitives, class checks,
//! and the tangent-line truncation `f_ε`.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

type ScalarMap = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Kind {
    Exp,
    /// `(1 + t)_+^p`.
    Power { p: f64 },
    /// `a t + b`.
    Affine { a: f64, b: f64 },
    /// `max(t, 0)`.
    Ramp,
    /// Piecewise-linear interpolant with linear extrapolation.
    Table { t: Vec<f64>, f: Vec<f64> },
    Scaled { factor: f64, inner: Box<Nonlinearity> },
    Truncated { base: Box<Nonlinearity>, threshold: f64, value: f64, slope: f64 },
    Custom(ScalarMap),
}

/// A scalar nonlinearity with left derivative and primitive `F(0) = 0`.
#[derive(Clone)]
pub struct Nonlinearity {
    kind: Kind,
    label: String,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nonlinearity({})", self.label)
    }
}

impl fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

const PROBES: [f64; 6] = [1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8];

impl Nonlinearity {
    pub fn exp() -> Self {
        Nonlinearity { kind: Kind::Exp, label: "exp".into() }
    }

    /// `(1 + t)_+^p`, `p > 0`.
    pub fn power(p: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(LabError::InvalidParameter(format!("power exponent {p} must be positive")));
        }
        Ok(Nonlinearity { kind: Kind::Power { p }, label: format!("pow:p={p}") })
    }

    pub fn affine(a: f64, b: f64) -> Self {
        assert!(a.is_finite() && b.is_finite(), "affine coefficients must be finite");
        Nonlinearity { kind: Kind::Affine { a, b }, label: format!("affine:a={a},b={b}") }
    }

    pub fn constant(c: f64) -> Self {
        Self::affine(0.0, c)
    }

    pub fn linear(a: f64) -> Self {
        Self::affine(a, 0.0)
    }

    pub fn ramp() -> Self {
        Nonlinearity { kind: Kind::Ramp, label: "ramp".into() }
    }

    /// Piecewise-linear interpolant of `(t, f)` samples, `t` strictly increasing.
    pub fn table(t: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if t.len() != f.len() || t.len() < 2 {
            return Err(LabError::InvalidParameter("table needs at least two (t, f) rows".into()));
        }
        if t.iter().chain(&f).any(|v| !v.is_finite()) || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::InvalidParameter("table abscissae must be finite and strictly increasing".into()));
        }
        let label = format!("table:{}rows", t.len());
        Ok(Nonlinearity { kind: Kind::Table { t, f }, label })
    }

    pub fn table_from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let (t, f) = crate::stability::parse_table_pairs(&text)?;
        let mut nl = Self::table(t, f)?;
        nl.label = format!("table:{}", path.display());
        Ok(nl)
    }

    /// Black-box map; derivatives are numeric and the primitive is adaptive Simpson.
    pub fn custom(label: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Nonlinearity { kind: Kind::Custom(Arc::new(f)), label: label.to_string() }
    }

    /// `factor · self`.
    pub fn scaled(&self, factor: f64) -> Self {
        Nonlinearity {
            kind: Kind::Scaled { factor, inner: Box::new(self.clone()) },
            label: format!("{factor}*{}", self.label),
        }
    }

    /// Parses `exp`, `pow:p=<float>`, `affine:a=<float>,b=<float>`, `ramp`, `table:<csv-path>`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let bad = || LabError::Parse(format!("unrecognized nonlinearity `{spec}`"));
        match spec {
            "exp" => return Ok(Self::exp()),
            "ramp" => return Ok(Self::ramp()),
            _ => {}
        }
        if let Some(path) = spec.strip_prefix("table:") {
            return Self::table_from_csv(Path::new(path));
        }
        let (head, args) = spec.split_once(':').ok_or_else(bad)?;
        let params = parse_params(args).ok_or_else(bad)?;
        let get = |key: &str| params.iter().find(|(k, _)| k == key).map(|(_, v)| *v);
        match head {
            "pow" if params.len() == 1 => Self::power(get("p").ok_or_else(bad)?),
            "affine" if params.len() == 2 => Ok(Self::affine(get("a").ok_or_else(bad)?, get("b").ok_or_else(bad)?)),
            _ => Err(bad()),
        }
    }

    /// Spec string or descriptive label.
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Exp => t.exp(),
            Kind::Power { p } => {
                let s = 1.0 + t;
                if s > 0.0 {
                    s.powf(*p)
                } else {
                    0.0
                }
            }
            Kind::Affine { a, b } => a * t + b,
            Kind::Ramp => t.max(0.0),
            Kind::Table { t: ts, f } => {
                let k = segment(ts, t);
                f[k] + slope(ts, f, k) * (t - ts[k])
            }
            Kind::Scaled { factor, inner } => factor * inner.eval(t),
            Kind::Truncated { base, threshold, value, slope } => {
                if t < *threshold {
                    base.eval(t)
                } else {
                    value + slope * (t - threshold)
                }
            }
            Kind::Custom(f) => f(t),
        }
    }

    /// Left derivative `f'_−(t)`.
    pub fn left_derivative(&self, t: f64) -> Result<f64> {
        Ok(match &self.kind {
            Kind::Exp => t.exp(),
            Kind::Power { p } => {
                let s = 1.0 + t;
                if s > 0.0 {
                    p * s.powf(p - 1.0)
                } else {
                    0.0
                }
            }
            Kind::Affine { a, .. } => *a,
            Kind::Ramp => {
                if t > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Table { t: ts, f } => slope(ts, f, left_segment(ts, t)),
            Kind::Scaled { factor, inner } => factor * inner.left_derivative(t)?,
            Kind::Truncated { base, threshold, slope, .. } => {
                if t <= *threshold {
                    base.left_derivative(t)?
                } else {
                    *slope
                }
            }
            Kind::Custom(f) => numeric_left_derivative(f.as_ref(), t)?,
        })
    }

    /// Primitive `F(t) = ∫₀ᵗ f`.
    pub fn primitive(&self, t: f64) -> f64 {
        match &self.kind {
            Kind::Exp => t.exp_m1(),
            Kind::Power { p } => {
                let s = (1.0 + t).max(0.0);
                (s.powf(p + 1.0) - 1.0) / (p + 1.0)
            }
            Kind::Affine { a, b } => 0.5 * a * t * t + b * t,
            Kind::Ramp => 0.5 * t.max(0.0).powi(2),
            Kind::Table { .. } => self.table_primitive(t),
            Kind::Scaled { factor, inner } => factor * inner.primitive(t),
            Kind::Truncated { base, threshold, value, slope } => {
                if t <= *threshold {
                    base.primitive(t)
                } else {
                    let d = t - threshold;
                    base.primitive(*threshold) + value * d + 0.5 * slope * d * d
                }
            }
            Kind::Custom(f) => adaptive_simpson(f.as_ref(), 0.0, t),
        }
    }

    fn table_primitive(&self, t: f64) -> f64 {
        let Kind::Table { t: ts, f } = &self.kind else { unreachable!() };
        // Integral of the interpolant from ts[0] to x.
        let from_start = |x: f64| -> f64 {
            let mut acc = 0.0;
            let k = segment(ts, x);
            if x <= ts[0] {
                let v = f[0] + slope(ts, f, 0) * (x - ts[0]);
                return -0.5 * (f[0] + v) * (ts[0] - x);
            }
            for j in 0..k {
                acc += 0.5 * (f[j] + f[j + 1]) * (ts[j + 1] - ts[j]);
            }
            let v = f[k] + slope(ts, f, k) * (x - ts[k]);
            acc + 0.5 * (f[k] + v) * (x - ts[k])
        };
        from_start(t) - from_start(0.0)
    }

    /// Largest `|f'_−|` over a 1001-point ladder on `[a, b]`.
    pub fn lipschitz_bound_on(&self, a: f64, b: f64) -> Result<f64> {
        let mut m: f64 = 0.0;
        for i in 0..=1000 {
            let t = a + (b - a) * i as f64 / 1000.0;
            m = m.max(self.left_derivative(t)?.abs());
        }
        Ok(m)
    }

    /// Sample-ladder check that `f` is nondecreasing and midpoint convex on `[a, b]`.
    pub fn verify_class_c(&self, a: f64, b: f64, samples: usize) -> Result<ClassVerdict> {
        if !(a < b) || samples < 3 {
            return Err(LabError::InvalidParameter("need a < b and at least 3 samples".into()));
        }
        let ts: Vec<f64> = (0..samples).map(|i| a + (b - a) * i as f64 / (samples - 1) as f64).collect();
        let fs: Vec<f64> = ts.iter().map(|&t| self.eval(t)).collect();
        let slack = |x: f64, y: f64| 1e-12 * (1.0 + x.abs() + y.abs());
        let monotone_witness = (0..samples - 1)
            .find(|&i| fs[i] > fs[i + 1] + slack(fs[i], fs[i + 1]))
            .map(|i| [ts[i], ts[i + 1]]);
        let convexity_witness = (0..samples - 2)
            .find(|&i| {
                let mid = self.eval(0.5 * (ts[i] + ts[i + 2]));
                mid > 0.5 * (fs[i] + fs[i + 2]) + slack(fs[i], fs[i + 2])
            })
            .map(|i| [ts[i], ts[i + 1], ts[i + 2]]);
        Ok(ClassVerdict {
            passes: monotone_witness.is_none() && convexity_witness.is_none(),
            monotone_witness,
            convexity_witness,
        })
    }

    /// Tangent-line truncation above `1/ε`.
    pub fn truncate(&self, epsilon: f64) -> Result<TruncatedNonlinearity> {
        if !(epsilon > 0.0 && epsilon <= 1.0) {
            return Err(LabError::InvalidParameter(format!("epsilon {epsilon} outside (0, 1]")));
        }
        let threshold = 1.0 / epsilon;
        let value = self.eval(threshold);
        let slope = self.left_derivative(threshold)?;
        let a = self.left_derivative(1.0)?;
        let k = a - self.eval(1.0);
        if !(value.is_finite() && slope.is_finite()) {
            return Err(LabError::NonLipschitz { t: threshold });
        }
        let label = format!("trunc[eps={epsilon}]({})", self.label);
        Ok(TruncatedNonlinearity {
            f: Nonlinearity {
                kind: Kind::Truncated { base: Box::new(self.clone()), threshold, value, slope },
                label,
            },
            epsilon,
            a,
            k,
            lipschitz: slope,
        })
    }
}

/// Outcome of [`Nonlinearity::verify_class_c`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassVerdict {
    pub passes: bool,
    /// First adjacent pair with `f(t_i) > f(t_{i+1})`.
    pub monotone_witness: Option<[f64; 2]>,
    /// First triple violating midpoint convexity.
    pub convexity_witness: Option<[f64; 3]>,
}

/// `f_ε` together with the constants `A = f'_−(1)` and `K = f'_−(1) − f(1)`.
#[derive(Debug, Clone)]
pub struct TruncatedNonlinearity {
    f: Nonlinearity,
    pub epsilon: f64,
    pub a: f64,
    pub k: f64,
    /// Global Lipschitz constant `f'_−(1/ε)`.
    pub lipschitz: f64,
}

impl TruncatedNonlinearity {
    pub fn as_nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }

    pub fn base(&self) -> &Nonlinearity {
        match &self.f.kind {
            Kind::Truncated { base, .. } => base,
            _ => unreachable!(),
        }
    }

    pub fn threshold(&self) -> f64 {
        1.0 / self.epsilon
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.f.eval(t)
    }

    pub fn left_derivative(&self, t: f64) -> Result<f64> {
        self.f.left_derivative(t)
    }

    pub fn primitive(&self, t: f64) -> f64 {
        self.f.primitive(t)
    }

    /// Lower bound `A t − K` valid for class-𝒞 bases.
    pub fn lower_line(&self, t: f64) -> f64 {
        self.a * t - self.k
    }
}

/// Free-function form of [`Nonlinearity::left_derivative`].
pub fn left_derivative(f: &Nonlinearity, t: f64) -> Result<f64> {
    f.left_derivative(t)
}

pub fn truncate(f: &Nonlinearity, epsilon: f64) -> Result<TruncatedNonlinearity> {
    f.truncate(epsilon)
}

pub fn primitive(f: &Nonlinearity, t: f64) -> f64 {
    f.primitive(t)
}

pub fn verify_class_c(f: &Nonlinearity, a: f64, b: f64, samples: usize) -> Result<ClassVerdict> {
    f.verify_class_c(a, b, samples)
}

fn parse_params(args: &str) -> Option<Vec<(String, f64)>> {
    args.split(',')
        .map(|kv| {
            let (k, v) = kv.split_once('=')?;
            let v: f64 = v.trim().parse().ok()?;
            v.is_finite().then(|| (k.trim().to_string(), v))
        })
        .collect()
}

/// Segment used to evaluate the interpolant at `t` (clamped to the end segments).
fn segment(ts: &[f64], t: f64) -> usize {
    let k = ts.partition_point(|&x| x <= t);
    k.saturating_sub(1).min(ts.len() - 2)
}

/// Segment whose slope is the left derivative at `t`: `ts[k] < t <= ts[k+1]`.
fn left_segment(ts: &[f64], t: f64) -> usize {
    let k = ts.partition_point(|&x| x < t);
    k.saturating_sub(1).min(ts.len() - 2)
}

fn slope(ts: &[f64], f: &[f64], k: usize) -> f64 {
    (f[k + 1] - f[k]) / (ts[k + 1] - ts[k])
}

/// Richardson-extrapolated backward difference over the probe ladder.
fn numeric_left_derivative(f: &(dyn Fn(f64) -> f64 + Send + Sync), t: f64) -> Result<f64> {
    let ft = f(t);
    let q: Vec<f64> = PROBES.iter().map(|&h| (ft - f(t - h)) / h).collect();
    if q.iter().any(|v| !v.is_finite()) {
        return Err(LabError::NonLipschitz { t });
    }
    if (q[q.len() - 1] - q[0]).abs() > 100.0 * (1.0 + q[0].abs()) {
        return Err(LabError::NonLipschitz { t });
    }
    let r: Vec<f64> = q.windows(2).map(|w| (10.0 * w[1] - w[0]) / 9.0).collect();
    // Most stable extrapolant: smallest change between consecutive estimates.
    let best = (0..r.len() - 1)
        .min_by(|&i, &j| {
            let di = (r[i + 1] - r[i]).abs();
            let dj = (r[j + 1] - r[j]).abs();
            di.partial_cmp(&dj).unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    Ok(r[best + 1])
}

fn adaptive_simpson(f: &(dyn Fn(f64) -> f64 + Send + Sync), a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &(dyn Fn(f64) -> f64 + Send + Sync),
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(fa, fm, fb, a, b);
    let tol = 1e-12 * (1.0 + whole.abs());
    recurse(f, a, b, fa, fm, fb, whole, tol, 40)
}
