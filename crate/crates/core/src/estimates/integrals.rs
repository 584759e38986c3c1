use super::pointwise::{dot, NodeCalc};
use super::{EstimateReport, Series, Verdict};
use crate::error::{LabError, Result};
use crate::grid::{gradient_at, GridField};
use crate::nonlinearity::Nonlinearity;
use crate::stability::{is_stable_fast, Stability, StabilityVerdict};

fn check_test_field(u: &GridField, phi: &GridField) -> Result<()> {
    u.ensure_same_domain(phi)?;
    if phi.boundary().iter().any(|&v| v != 0.0) {
        return Err(LabError::InvalidParameter("test field must vanish on the boundary".into()));
    }
    Ok(())
}

/// Threshold for dividing by `|Du|²` where only boundedness matters.
fn near_zero_theta(u: &GridField) -> f64 {
    1e-10 * (1.0 + u.sup_norm() / u.domain().radius())
}

fn gate(report: EstimateReport, verdict: &StabilityVerdict) -> Result<EstimateReport> {
    let report = report.with_stability(verdict.summary());
    if verdict.verdict == Stability::Unstable {
        return Err(LabError::UnstableInput {
            lambda1: verdict.lambda1,
            report: Box::new(report),
        });
    }
    Ok(report)
}

/// `|D²u|² − |D|Du||²` at the loaded node, zero where `|Du| ≤ θ`.
fn tangential(calc: &NodeCalc, theta: f64, mv: &mut [f64]) -> f64 {
    let n = calc.du.len();
    let g2 = dot(&calc.du, &calc.du);
    let h2: f64 = calc.hess.iter().map(|x| x * x).sum();
    if g2.sqrt() <= theta {
        return 0.0;
    }
    for (a, o) in mv.iter_mut().enumerate() {
        *o = dot(&calc.hess[a * n..(a + 1) * n], &calc.du);
    }
    h2 - dot(mv, mv) / g2
}

/// `∫(|D²u|² − |D|Du||²)ζ² ≤ ∫|Du|²|Dζ|²`, run together with a stability check of `u`.
pub fn verify_sternberg_zumbrun(u: &GridField, f: &Nonlinearity, zeta: &GridField) -> Result<EstimateReport> {
    check_test_field(u, zeta)?;
    let stab = is_stable_fast(u, f, None)?;
    let d = u.domain();
    let n = d.dim();
    let theta = near_zero_theta(u);
    let mut calc = NodeCalc::new(u);
    let mut dz = vec![0.0; n];
    let mut mv = vec![0.0; n];
    let (mut lhs, mut rhs) = (0.0, 0.0);
    for i in 0..d.interior_count() {
        let z = zeta.values()[i];
        gradient_at(d, zeta.values(), i, &mut dz);
        let dz2 = dot(&dz, &dz);
        if z == 0.0 && dz2 == 0.0 {
            continue;
        }
        calc.load(i, true);
        lhs += tangential(&calc, theta, &mut mv) * z * z;
        rhs += dot(&calc.du, &calc.du) * dz2;
    }
    let vol = d.cell_volume();
    let (lhs, rhs) = (lhs * vol, rhs * vol);
    let report = if lhs == 0.0 && rhs == 0.0 {
        EstimateReport::empty("sternberg_zumbrun", d.spacing())
    } else {
        EstimateReport::inequality("sternberg_zumbrun", lhs, rhs, d.spacing(), lhs.abs().max(rhs.abs()))
    };
    gate(report, &stab)
}

/// The two inequalities obtained from the reversed Poincaré formula with `ζ = |x|η`
/// and the integration-by-parts identity between them.
///
/// Returns `[d1_1, d1_xx, d1_5]`; the middle one is an identity report.
pub fn verify_identity_chain(u: &GridField, f: &Nonlinearity, eta: &GridField) -> Result<Vec<EstimateReport>> {
    check_test_field(u, eta)?;
    let stab = is_stable_fast(u, f, None)?;
    let d = u.domain();
    let n = d.dim();
    let nf = n as f64;
    let h = d.spacing();
    let theta = near_zero_theta(u);
    let mut calc = NodeCalc::new(u);
    let mut de = vec![0.0; n];
    let mut mv = vec![0.0; n];
    let [mut a1, mut sz, mut b, mut c, mut dd, mut e, mut l, mut p] = [0.0f64; 8];
    for i in 0..d.interior_count() {
        let et = eta.values()[i];
        gradient_at(d, eta.values(), i, &mut de);
        if et == 0.0 && dot(&de, &de) == 0.0 {
            continue;
        }
        calc.load(i, true);
        let x = &calc.x;
        let du = &calc.du;
        let g2 = dot(du, du);
        let r2 = dot(x, x);
        let dux = dot(du, x);
        let lap: f64 = (0..n).map(|k| calc.hess[k * n + k]).sum();
        let e2 = et * et;
        let t = tangential(&calc, theta, &mut mv);
        for (k, o) in mv.iter_mut().enumerate() {
            *o = dot(&calc.hess[k * n..(k + 1) * n], du);
        }
        a1 += g2 * e2;
        sz += t * r2 * e2;
        b += dot(&mv, x) * e2;
        c += g2 * dot(&de, &de) * r2;
        dd += g2 * dot(&de, x) * et;
        e += dux * dot(du, &de) * et;
        l += lap * dux * e2;
        if r2 > 0.0 {
            p += dux * dux / r2 * e2;
        }
    }
    let vol = d.cell_volume();
    let [a1, sz, b, c, dd, e, l, p] = [a1, sz, b, c, dd, e, l, p].map(|v| v * vol);

    let make = |name: &str, lhs: f64, rhs: f64, scale: f64, identity: bool| {
        if scale == 0.0 {
            EstimateReport::empty(name, h)
        } else if identity {
            EstimateReport::identity(name, lhs, rhs, h, scale)
        } else {
            EstimateReport::inequality(name, lhs, rhs, h, scale)
        }
    };
    let first = make(
        "d1_1",
        (nf - 1.0) * a1,
        -sz - 2.0 * b + c,
        (nf - 1.0) * a1.abs() + sz.abs() + 2.0 * b.abs() + c.abs(),
        false,
    );
    let ibp = make(
        "d1_xx",
        -2.0 * l,
        (2.0 - nf) * a1 - 2.0 * dd + 4.0 * e,
        2.0 * l.abs() + (nf - 2.0).abs() * a1.abs() + 2.0 * dd.abs() + 4.0 * e.abs(),
        true,
    );
    let third = make(
        "d1_5",
        2.0 * (nf - 2.0) * a1,
        (nf - 1.0) * p + c - 2.0 * dd + 4.0 * e,
        2.0 * (nf - 2.0) * a1.abs() + (nf - 1.0) * p.abs() + c.abs() + 2.0 * dd.abs() + 4.0 * e.abs(),
        false,
    );
    let s = stab.summary();
    let reports: Vec<EstimateReport> = [first, ibp, third].into_iter().map(|r| r.with_stability(s.clone())).collect();
    if stab.verdict == Stability::Unstable {
        return Err(LabError::UnstableInput {
            lambda1: stab.lambda1,
            report: Box::new(reports[0].clone()),
        });
    }
    Ok(reports)
}

struct KeySums {
    lhs: f64,
    rhs: f64,
    scale: f64,
}

fn key_sums(u: &GridField, phi: &GridField, excise: f64) -> KeySums {
    let d = u.domain();
    let n = d.dim();
    let nf = n as f64;
    let c1 = (nf - 2.0) * (6.0 - nf) / 4.0;
    let mut calc = NodeCalc::new(u);
    let mut dp = vec![0.0; n];
    let mut t = [0.0f64; 5];
    for i in 0..d.interior_count() {
        let r = d.distance_to_center(i);
        if r < excise {
            continue;
        }
        let ph = phi.values()[i];
        gradient_at(d, phi.values(), i, &mut dp);
        if ph == 0.0 && dot(&dp, &dp) == 0.0 {
            continue;
        }
        calc.load(i, false);
        let g2 = dot(&calc.du, &calc.du);
        let dux = dot(&calc.du, &calc.x);
        let w = r.powf(2.0 - nf);
        t[0] += g2 * w * ph * ph;
        t[1] += dux * dux * r.powf(-nf) * ph * ph;
        t[2] += g2 * r.powf(4.0 - nf) * dot(&dp, &dp);
        t[3] += g2 * w * dot(&calc.x, &dp) * ph;
        t[4] += dux * dot(&calc.du, &dp) * ph * w;
    }
    let t = t.map(|v| v * d.cell_volume());
    let parts = [c1 * t[0], (nf - 3.0) * t[1], t[2], -nf * t[3], 4.0 * t[4]];
    KeySums {
        lhs: parts[0] + parts[1],
        rhs: parts[2] + parts[3] + parts[4],
        scale: parts.iter().map(|v| v.abs()).sum(),
    }
}

/// Weighted key estimate in dimensions 3 to 5, origin excised inside radius `2h`.
///
/// The values with the excision radius halved are kept in `extras`.
pub fn verify_key_estimate(u: &GridField, f: &Nonlinearity, phi: &GridField) -> Result<EstimateReport> {
    let d = u.domain();
    if !(3..=5).contains(&d.dim()) {
        return Err(LabError::DimensionOutOfRange(d.dim()));
    }
    check_test_field(u, phi)?;
    let h = d.spacing();
    if 2.0 * h >= d.radius() {
        return Err(LabError::OriginResolution {
            spacing: h,
            radius: d.radius(),
        });
    }
    let stab = is_stable_fast(u, f, None)?;
    let main = key_sums(u, phi, 2.0 * h);
    let half = key_sums(u, phi, h);
    let report = if main.scale == 0.0 {
        EstimateReport::empty("key_estimate", h)
    } else {
        EstimateReport::inequality("key_estimate", main.lhs, main.rhs, h, main.scale)
    }
    .extra("excision_radius", 2.0 * h)
    .extra("lhs_excise_h", half.lhs)
    .extra("rhs_excise_h", half.rhs)
    .extra("margin_excise_h", half.rhs - half.lhs);
    gate(report, &stab)
}

/// Weighted Dirichlet energies `∫|x|^{2−n}|Du|²` over `[excise, r)` and `[r, 2r)`.
fn ball_and_annulus(u: &GridField, r: f64) -> (f64, f64) {
    let d = u.domain();
    let nf = d.dim() as f64;
    let excise = 2.0 * d.spacing();
    let mut du = vec![0.0; d.dim()];
    let (mut ball, mut ann) = (0.0, 0.0);
    for i in 0..d.interior_count() {
        let s = d.distance_to_center(i);
        if s < excise || s >= 2.0 * r {
            continue;
        }
        gradient_at(d, u.values(), i, &mut du);
        let v = s.powf(2.0 - nf) * dot(&du, &du);
        if s < r {
            ball += v;
        } else {
            ann += v;
        }
    }
    (ball * d.cell_volume(), ann * d.cell_volume())
}

/// Ratio `ρ(r)` of the weighted energy on `B_{2r}∖B_r` to that on `B_r`.
///
/// `lhs` is the ball energy, `rhs` the annulus energy; the ratio is in `extras`.
pub fn verify_hole_filling(u: &GridField, r: f64) -> Result<EstimateReport> {
    let d = u.domain();
    if !(r > 0.0) || 2.0 * r > d.radius() * (1.0 + 1e-12) {
        return Err(LabError::InvalidParameter(format!("need 0 < 2r <= {}, got r = {r}", d.radius())));
    }
    let h = d.spacing();
    if 2.0 * h >= r {
        return Err(LabError::OriginResolution { spacing: h, radius: r });
    }
    let (ball, ann) = ball_and_annulus(u, r);
    if ball <= 0.0 {
        return Ok(EstimateReport::empty("hole_filling", h).extra("r", r));
    }
    let mut report = EstimateReport::inequality("hole_filling", ball, ann, h, ball.max(ann));
    report.verdict = Verdict::Pass;
    Ok(report.extra("r", r).extra("ratio", ann / ball))
}

/// [`verify_hole_filling`] at several radii: reports the infimum of `ρ`, the
/// implied constant `C = 1/inf ρ` and the decay exponent `log₂((C+1)/C)`.
pub fn hole_filling_scales(u: &GridField, radii: &[f64]) -> Result<EstimateReport> {
    let h = u.domain().spacing();
    let mut series = Series::new(&["r", "ratio"]);
    let mut inf = f64::INFINITY;
    for &r in radii {
        let rep = verify_hole_filling(u, r)?;
        if let Some(&q) = rep.extras.get("ratio") {
            series.push(vec![r, q]);
            inf = inf.min(q);
        }
    }
    if series.rows.is_empty() {
        return Ok(EstimateReport::empty("hole_filling_scales", h));
    }
    let c = 1.0 / inf;
    let mut report = EstimateReport::inequality("hole_filling_scales", 0.0, inf, h, 0.0)
        .extra("inf_ratio", inf)
        .extra("implied_constant", c)
        .extra("decay_exponent", ((c + 1.0) / c).log2());
    report.verdict = if inf > 0.0 { Verdict::Pass } else { Verdict::Fail };
    report.series.insert("hole_filling".into(), series);
    report
        .notes
        .push("decay exponent is log2((C+1)/C), taken positive".into());
    Ok(report)
}
