use std::path::Path;
use std::sync::Arc;

use crate::error::{LabError, Result};

/// Radial potential `V(r)` for the reduced operator `−v'' − ((n−1)/r)v' + V v`.
#[derive(Clone)]
pub enum RadialPotential {
    Zero,
    /// `V(r) = −c / r²`.
    Hardy { c: f64 },
    /// Linear interpolation of `(r, V)` samples, constant beyond the ends.
    Table { r: Vec<f64>, v: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for RadialPotential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RadialPotential::Zero => write!(f, "Zero"),
            RadialPotential::Hardy { c } => write!(f, "Hardy {{ c: {c} }}"),
            RadialPotential::Table { r, .. } => write!(f, "Table({} samples)", r.len()),
            RadialPotential::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl RadialPotential {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialPotential::Zero => 0.0,
            RadialPotential::Hardy { c } => -c / (r * r),
            RadialPotential::Table { r: rs, v } => interpolate(rs, v, r),
            RadialPotential::Custom(f) => f(r),
        }
    }

    /// Parses `zero`, `hardy:c=<float>`, `table:<csv path>` or a bare `.csv` path.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "zero" {
            return Ok(RadialPotential::Zero);
        }
        if let Some(rest) = spec.strip_prefix("hardy:") {
            let c = rest
                .strip_prefix("c=")
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|c| c.is_finite())
                .ok_or_else(|| LabError::Parse(format!("bad hardy potential `{spec}`")))?;
            return Ok(RadialPotential::Hardy { c });
        }
        let path = spec.strip_prefix("table:").unwrap_or(spec);
        if spec.starts_with("table:") || path.ends_with(".csv") {
            return Self::from_csv(Path::new(path));
        }
        Err(LabError::Parse(format!("unknown radial potential `{spec}`")))
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let (r, v) = parse_pairs(&text)?;
        if r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LabError::Parse("radial table must be strictly increasing in r".into()));
        }
        Ok(RadialPotential::Table { r, v })
    }
}

/// Reads two numeric columns, skipping blank lines, `#` comments and a header.
pub(crate) fn parse_pairs(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = (cols.len() == 2)
            .then(|| Some((cols[0].parse::<f64>().ok()?, cols[1].parse::<f64>().ok()?)))
            .flatten();
        match parsed {
            Some((x, y)) if x.is_finite() && y.is_finite() => {
                xs.push(x);
                ys.push(y);
            }
            _ if xs.is_empty() && lineno == 0 => continue,
            _ => return Err(LabError::Parse(format!("line {}: expected two numbers", lineno + 1))),
        }
    }
    if xs.len() < 2 {
        return Err(LabError::Parse("table needs at least two rows".into()));
    }
    Ok((xs, ys))
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let k = xs.partition_point(|&t| t <= x) - 1;
    let w = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + w * (ys[k + 1] - ys[k])
}

/// Smallest eigenvalue of `−v'' − ((n−1)/r)v' + V(r)v` on `(δ, 1)` with zero
/// Dirichlet data at both ends.
///
/// The quotient `∫(v_s² r^{n−2} + V rⁿ v²) ds / ∫v² rⁿ ds` in `s = ln r` is
/// discretized on a uniform `s` grid with `grid_points` nodes; the bottom
/// eigenvalue of the resulting symmetric tridiagonal pencil is located by
/// inertia counting and bisection.
pub fn radial_smallest_eigenvalue(
    n: usize,
    v: &dyn Fn(f64) -> f64,
    delta: f64,
    grid_points: usize,
) -> Result<f64> {
    if n < 2 {
        return Err(LabError::DimensionOutOfRange(n));
    }
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(LabError::InvalidParameter(format!("excision radius {delta} outside (0, 0.1]")));
    }
    if grid_points < 100 {
        return Err(LabError::InvalidParameter("at least 100 radial grid points required".into()));
    }
    let s0 = delta.ln();
    let cells = grid_points - 1;
    let ds = -s0 / cells as f64;
    let nf = n as f64;
    let m = cells - 1;
    // Stiffness (diag, off) and mass for interior nodes 1..=cells-1.
    let mut diag = Vec::with_capacity(m);
    let mut off = Vec::with_capacity(m);
    let mut mass = Vec::with_capacity(m);
    let link = |k: usize| ((s0 + (k as f64 + 0.5) * ds).exp()).powf(nf - 2.0) / ds;
    for i in 1..=m {
        let r = (s0 + i as f64 * ds).exp();
        let rn = r.powf(nf);
        let pot = v(r);
        if !pot.is_finite() {
            return Err(LabError::InvalidParameter(format!("potential not finite at r = {r}")));
        }
        diag.push(link(i - 1) + link(i) + pot * rn * ds);
        mass.push(rn * ds);
        if i < m {
            off.push(-link(i));
        }
    }
    let negatives_below = |x: f64| -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..m {
            let mut p = diag[i] - x * mass[i];
            if i > 0 {
                p -= off[i - 1] * off[i - 1] / q;
            }
            if p == 0.0 {
                p = -f64::EPSILON * (diag[i].abs() + x.abs() * mass[i]).max(f64::MIN_POSITIVE);
            }
            if p < 0.0 {
                count += 1;
            }
            q = p;
        }
        count
    };
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..m {
        let radius = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < m { off[i].abs() } else { 0.0 };
        lo = lo.min((diag[i] - radius) / mass[i]);
        hi = hi.max((diag[i] + radius) / mass[i]);
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid.abs().max(1.0) || mid == lo || mid == hi {
            break;
        }
        if negatives_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
