use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::EstimateReport;
use crate::error::{LabError, Result};
use crate::grid::{gradient_at, hessian_at, BallDomain, GridField};

/// Per-node scratch: offset from the center, gradient and Hessian of a field.
pub(super) struct NodeCalc<'a> {
    domain: &'a BallDomain,
    values: &'a [f64],
    lattice: Vec<i32>,
    pub x: Vec<f64>,
    pub du: Vec<f64>,
    pub hess: Vec<f64>,
}

impl<'a> NodeCalc<'a> {
    pub fn new(u: &'a GridField) -> Self {
        let n = u.domain().dim();
        NodeCalc {
            domain: u.domain(),
            values: u.values(),
            lattice: vec![0; n],
            x: vec![0.0; n],
            du: vec![0.0; n],
            hess: vec![0.0; n * n],
        }
    }

    pub fn load(&mut self, i: usize, with_hessian: bool) {
        self.domain.offset_into(i, &mut self.x);
        gradient_at(self.domain, self.values, i, &mut self.du);
        if with_hessian {
            hessian_at(self.domain, self.values, i, &mut self.lattice, &mut self.hess);
        }
    }
}

pub(super) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mat_vec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let n = v.len();
    for (a, o) in out.iter_mut().enumerate() {
        *o = dot(&m[a * n..(a + 1) * n], v);
    }
}

fn frob_sq(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum()
}

fn trace(m: &[f64], n: usize) -> f64 {
    (0..n).map(|a| m[a * n + a]).sum()
}

/// `10·h·(1 + max |D²u|)`, the default gradient threshold.
pub fn default_theta(u: &GridField) -> f64 {
    let d = u.domain();
    let mut calc = NodeCalc::new(u);
    let mut hmax = 0.0f64;
    for i in 0..d.interior_count() {
        calc.load(i, true);
        hmax = hmax.max(frob_sq(&calc.hess).sqrt());
    }
    10.0 * d.spacing() * (1.0 + hmax)
}

/// Second-order quantities of `u` on interior nodes.
///
/// On inactive nodes (`|Du| ≤ θ`) `dmod_sq` and `inf_lap` are set to zero.
#[derive(Debug, Clone)]
pub struct HessianQuantities {
    pub theta: f64,
    pub hess_norm_sq: Vec<f64>,
    pub grad_norm: Vec<f64>,
    /// `|D|Du||² = |D²u·Du|²/|Du|²`
    pub dmod_sq: Vec<f64>,
    /// `⟨D²u·Du, Du⟩`
    pub inf_lap: Vec<f64>,
    /// Trace of the discrete Hessian.
    pub laplacian: Vec<f64>,
    pub active: Vec<bool>,
}

impl HessianQuantities {
    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Worst relative violations of `|D|Du||² ≤ |D²u|²` and `|Δ∞u| ≤ |D²u||Du|²`.
    pub fn invariant_violations(&self) -> (f64, f64) {
        let mut cs = f64::NEG_INFINITY;
        let mut op = f64::NEG_INFINITY;
        for i in (0..self.active.len()).filter(|&i| self.active[i]) {
            let hs = self.hess_norm_sq[i];
            let g = self.grad_norm[i];
            cs = cs.max((self.dmod_sq[i] - hs) / (1.0 + hs));
            let bound = hs.sqrt() * g * g;
            op = op.max((self.inf_lap[i].abs() - bound) / (1.0 + bound));
        }
        (cs, op)
    }
}

pub fn hessian_quantities(u: &GridField, theta: f64) -> Result<HessianQuantities> {
    if !(theta > 0.0) {
        return Err(LabError::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    let d = u.domain();
    let n = d.dim();
    let ni = d.interior_count();
    let mut q = HessianQuantities {
        theta,
        hess_norm_sq: vec![0.0; ni],
        grad_norm: vec![0.0; ni],
        dmod_sq: vec![0.0; ni],
        inf_lap: vec![0.0; ni],
        laplacian: vec![0.0; ni],
        active: vec![false; ni],
    };
    let mut calc = NodeCalc::new(u);
    let mut mv = vec![0.0; n];
    for i in 0..ni {
        calc.load(i, true);
        let g2 = dot(&calc.du, &calc.du);
        q.hess_norm_sq[i] = frob_sq(&calc.hess);
        q.grad_norm[i] = g2.sqrt();
        q.laplacian[i] = trace(&calc.hess, n);
        if g2.sqrt() > theta {
            mat_vec(&calc.hess, &calc.du, &mut mv);
            q.active[i] = true;
            q.dmod_sq[i] = dot(&mv, &mv) / g2;
            q.inf_lap[i] = dot(&mv, &calc.du);
        }
    }
    Ok(q)
}

fn matrix_margin(m: &[f64], e: &[f64], me: &mut [f64]) -> f64 {
    let n = e.len();
    mat_vec(m, e, me);
    let mee = dot(me, e);
    let lhs = trace(m, n) - mee;
    (n as f64 - 1.0) * (frob_sq(m) - 2.0 * dot(me, me) + mee * mee) - lhs * lhs
}

/// `(n−1)[|M|² − 2|Me|² + ⟨Me,e⟩²] − (tr M − ⟨Me,e⟩)²` for symmetric row-major `M` and unit `e`.
pub fn verify_matrix_inequality(m: &[f64], e: &[f64]) -> Result<f64> {
    let n = e.len();
    if n == 0 || m.len() != n * n {
        return Err(LabError::InvalidParameter("matrix and vector sizes disagree".into()));
    }
    if (dot(e, e).sqrt() - 1.0).abs() > 1e-12 {
        return Err(LabError::InvalidParameter("direction is not a unit vector".into()));
    }
    for a in 0..n {
        for b in 0..a {
            if m[a * n + b] != m[b * n + a] {
                return Err(LabError::InvalidParameter("matrix is not symmetric".into()));
            }
        }
    }
    Ok(matrix_margin(m, e, &mut vec![0.0; n]))
}

/// Result of the random symmetric-matrix sweep in one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSweep {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub min_margin: f64,
    /// Smallest `margin / (1 + |M|⁴)`.
    pub min_scaled_margin: f64,
    pub worst_trial: u64,
    /// Trials with scaled margin below `−1e-9`.
    pub violations: u64,
}

impl MatrixSweep {
    pub fn passed(&self) -> bool {
        self.violations == 0 && self.min_scaled_margin >= -1e-9
    }
}

fn trial_seed(seed: u64, n: usize, trial: u64) -> u64 {
    // splitmix64 finalizer over the packed triple
    let mut z = seed ^ (n as u64).rotate_left(48) ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Gaussian symmetric `M` and uniform unit `e` for trial `trial`.
pub fn random_trial(n: usize, seed: u64, trial: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, n, trial));
    let mut m = vec![0.0; n * n];
    for a in 0..n {
        for b in a..n {
            let v: f64 = StandardNormal.sample(&mut rng);
            m[a * n + b] = v;
            m[b * n + a] = v;
        }
    }
    let mut e: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let norm = dot(&e, &e).sqrt().max(f64::MIN_POSITIVE);
    e.iter_mut().for_each(|x| *x /= norm);
    (m, e)
}

#[derive(Clone, Copy)]
struct Acc {
    scaled: f64,
    margin: f64,
    trial: u64,
    violations: u64,
}

impl Acc {
    fn merge(self, o: Acc) -> Acc {
        let (scaled, trial) = if (o.scaled, o.trial) < (self.scaled, self.trial) {
            (o.scaled, o.trial)
        } else {
            (self.scaled, self.trial)
        };
        Acc {
            scaled,
            trial,
            margin: self.margin.min(o.margin),
            violations: self.violations + o.violations,
        }
    }
}

/// Parallel sweep over `trials` random pairs; the result does not depend on the thread count.
pub fn matrix_sweep(n: usize, trials: u64, seed: u64) -> Result<MatrixSweep> {
    if n < 2 {
        return Err(LabError::DimensionOutOfRange(n));
    }
    let empty = Acc {
        scaled: f64::INFINITY,
        margin: f64::INFINITY,
        trial: u64::MAX,
        violations: 0,
    };
    let acc = (0..trials)
        .into_par_iter()
        .fold(
            || (empty, vec![0.0; n]),
            |(acc, mut me), t| {
                let (m, e) = random_trial(n, seed, t);
                let margin = matrix_margin(&m, &e, &mut me);
                let f2 = frob_sq(&m);
                let scaled = margin / (1.0 + f2 * f2);
                let one = Acc {
                    scaled,
                    margin,
                    trial: t,
                    violations: u64::from(scaled < -1e-9),
                };
                (acc.merge(one), me)
            },
        )
        .map(|(a, _)| a)
        .reduce(|| empty, Acc::merge);
    Ok(MatrixSweep {
        n,
        trials,
        seed,
        min_margin: acc.margin,
        min_scaled_margin: acc.scaled,
        worst_trial: acc.trial,
        violations: acc.violations,
    })
}

/// Pointwise level-set inequality on active nodes; the margin is the worst node.
pub fn verify_geometric_inequality(u: &GridField, theta: f64) -> Result<EstimateReport> {
    let d = u.domain();
    let h = d.spacing();
    let n = d.dim() as f64;
    let q = hessian_quantities(u, theta)?;
    let hmax = q.hess_norm_sq.iter().fold(0.0f64, |m, &x| m.max(x)).sqrt();
    if theta < 10.0 * h * hmax {
        return Err(LabError::InvalidParameter(format!(
            "theta {theta} is below 10·h·|D²u| = {}",
            10.0 * h * hmax
        )));
    }
    let mut worst = (f64::INFINITY, 0.0, 0.0, usize::MAX);
    let mut scale = 0.0f64;
    for i in (0..q.active.len()).filter(|&i| q.active[i]) {
        let g2 = q.grad_norm[i] * q.grad_norm[i];
        let normal = q.inf_lap[i] / g2;
        let l = q.laplacian[i] - normal;
        let lhs = l * l;
        let rhs = (n - 1.0) * (q.hess_norm_sq[i] - 2.0 * q.dmod_sq[i] + normal * normal);
        scale = scale.max(lhs.abs()).max(rhs.abs());
        if rhs - lhs < worst.0 {
            worst = (rhs - lhs, lhs, rhs, i);
        }
    }
    let active = q.active_count();
    let mut report = if active == 0 {
        EstimateReport::empty("geometric", h)
    } else {
        let mut r = EstimateReport::inequality("geometric", worst.1, worst.2, h, scale);
        r.margin = worst.0;
        r.extras.insert("worst_node".into(), worst.3 as f64);
        r.with_history(Vec::new())
    };
    report.extras.insert("active_nodes".into(), active as f64);
    report.extras.insert("theta".into(), theta);
    Ok(report)
}
