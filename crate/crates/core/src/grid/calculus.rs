//! Finite-difference calculus on a [`BallDomain`].
//!
//! Every operator works with the `(2n+1)`-point stencil. Values at boundary
//! nodes enter as Dirichlet data.

use super::domain::BallDomain;
use super::field::{upper_index, GridField, SymmetricMatrixField, VectorField};
use crate::error::Result;

/// Discrete Laplacian at interior nodes; boundary entries of the result are zero.
pub fn laplacian(u: &GridField) -> GridField {
    let domain = u.domain();
    let mut out = vec![0.0; domain.node_count()];
    laplacian_into(domain, u.values(), &mut out[..domain.interior_count()]);
    GridField::from_values(domain, out).expect("laplacian of a finite field is finite")
}

/// Writes `Δ_h u` for every interior node into `out`, given values on all nodes.
pub fn laplacian_into(domain: &BallDomain, values: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (domain.spacing() * domain.spacing());
    for (i, o) in out.iter_mut().enumerate().take(domain.interior_count()) {
        let ui = values[i];
        let s: f64 = domain
            .neighbors(i)
            .iter()
            .map(|&j| values[j as usize] - ui)
            .sum();
        *o = s * inv_h2;
    }
}

/// Central-difference gradient at interior node `i`.
pub fn gradient_at(domain: &BallDomain, values: &[f64], i: usize, out: &mut [f64]) {
    let inv_2h = 0.5 / domain.spacing();
    let nb = domain.neighbors(i);
    for (d, o) in out.iter_mut().enumerate().take(domain.dim()) {
        *o = (values[nb[2 * d + 1] as usize] - values[nb[2 * d] as usize]) * inv_2h;
    }
}

pub fn gradient(u: &GridField) -> VectorField {
    let domain = u.domain();
    let n = domain.dim();
    let mut data = vec![0.0; domain.interior_count() * n];
    for (i, g) in data.chunks_mut(n).enumerate() {
        gradient_at(domain, u.values(), i, g);
    }
    VectorField::new(n, data)
}

/// Hessian at interior node `i`, written row-major into an `n*n` buffer.
///
/// Mixed derivatives use the four-corner formula when all corners are nodes
/// of the domain and the mean of the available one-quadrant formulas otherwise.
pub fn hessian_at(domain: &BallDomain, values: &[f64], i: usize, lattice: &mut [i32], out: &mut [f64]) {
    let n = domain.dim();
    let inv_h2 = 1.0 / (domain.spacing() * domain.spacing());
    let nb = domain.neighbors(i);
    let ui = values[i];
    for d in 0..n {
        let um = values[nb[2 * d] as usize];
        let up = values[nb[2 * d + 1] as usize];
        out[d * n + d] = (up - 2.0 * ui + um) * inv_h2;
    }
    domain.lattice_into(i, lattice);
    for a in 0..n {
        for b in (a + 1)..n {
            let mut corners = [None; 4];
            for (slot, (sa, sb)) in [(1, 1), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
                lattice[a] += sa;
                lattice[b] += sb;
                corners[slot] = domain.locate(lattice).map(|j| values[j]);
                lattice[a] -= sa;
                lattice[b] -= sb;
            }
            let value = if let [Some(pp), Some(pm), Some(mp), Some(mm)] = corners {
                (pp - pm - mp + mm) * 0.25 * inv_h2
            } else {
                let mut sum = 0.0;
                let mut count = 0;
                for (slot, (sa, sb)) in [(1i32, 1i32), (1, -1), (-1, 1), (-1, -1)].into_iter().enumerate() {
                    if let Some(c) = corners[slot] {
                        let ua = values[nb[2 * a + usize::from(sa > 0)] as usize];
                        let ub = values[nb[2 * b + usize::from(sb > 0)] as usize];
                        sum += (sa * sb) as f64 * (c - ua - ub + ui) * inv_h2;
                        count += 1;
                    }
                }
                if count > 0 {
                    sum / count as f64
                } else {
                    0.0
                }
            };
            out[a * n + b] = value;
            out[b * n + a] = value;
        }
    }
}

pub fn hessian(u: &GridField) -> SymmetricMatrixField {
    let domain = u.domain();
    let n = domain.dim();
    let w = n * (n + 1) / 2;
    let mut data = vec![0.0; domain.interior_count() * w];
    let mut lattice = vec![0i32; n];
    let mut full = vec![0.0; n * n];
    for i in 0..domain.interior_count() {
        hessian_at(domain, u.values(), i, &mut lattice, &mut full);
        for a in 0..n {
            for b in a..n {
                data[i * w + upper_index(n, a, b)] = full[a * n + b];
            }
        }
    }
    SymmetricMatrixField::new(n, data)
}

/// `h^n`-weighted sum of `g` (times `weight`, if given) over interior nodes.
pub fn integrate(g: &GridField, weight: Option<&GridField>) -> Result<f64> {
    let vol = g.domain().cell_volume();
    let s: f64 = match weight {
        None => g.interior().iter().sum(),
        Some(w) => {
            g.ensure_same_domain(w)?;
            g.interior().iter().zip(w.interior()).map(|(a, b)| a * b).sum()
        }
    };
    Ok(s * vol)
}

/// Calls `visit(a, b)` for every lattice link with at least one interior end,
/// each link exactly once, with `b = a + e_d` for some axis `d`.
pub fn for_each_link(domain: &BallDomain, mut visit: impl FnMut(usize, usize)) {
    let n = domain.dim();
    for i in 0..domain.interior_count() {
        let nb = domain.neighbors(i);
        for d in 0..n {
            let minus = nb[2 * d] as usize;
            if !domain.is_interior(minus) {
                visit(minus, i);
            }
            visit(i, nb[2 * d + 1] as usize);
        }
    }
}

/// `Σ_links D⁺u · D⁺v · h^n`, the staggered gradient inner product.
///
/// For `u` vanishing on the boundary this equals `h^n Σ_int u (−Δ_h v)` exactly.
pub fn staggered_inner(u: &GridField, v: &GridField) -> Result<f64> {
    u.ensure_same_domain(v)?;
    let domain = u.domain();
    let (uv, vv) = (u.values(), v.values());
    let mut s = 0.0;
    for_each_link(domain, |a, b| s += (uv[b] - uv[a]) * (vv[b] - vv[a]));
    let h = domain.spacing();
    Ok(s / (h * h) * domain.cell_volume())
}

/// Staggered Dirichlet integral `Σ_links |D⁺u|² h^n`.
pub fn dirichlet_integral(u: &GridField) -> f64 {
    staggered_inner(u, u).expect("same field")
}

/// Squared discrete `W^{1,2}` norm: interior `L²` part plus staggered gradient part.
pub fn w12_norm_sq(u: &GridField) -> f64 {
    let vol = u.domain().cell_volume();
    let l2: f64 = u.interior().iter().map(|v| v * v).sum::<f64>() * vol;
    l2 + dirichlet_integral(u)
}

/// Discrete `W^{1,2}` distance between two fields on the same domain.
pub fn w12_distance(u: &GridField, v: &GridField) -> Result<f64> {
    let diff = u.combine(1.0, v, -1.0)?;
    Ok(w12_norm_sq(&diff).sqrt())
}

/// Discrete `L²` norm over interior nodes.
pub fn l2_norm(u: &GridField) -> f64 {
    let vol = u.domain().cell_volume();
    (u.interior().iter().map(|v| v * v).sum::<f64>() * vol).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_ball_domain;

    #[test]
    fn mixed_derivative_fallback_exact_on_quadratics() {
        let d = build_ball_domain(2, &[0.0, 0.0], 1.0, 0.25).unwrap();
        let u = GridField::from_fn(&d, |x| 3.0 * x[0] * x[1] + x[0] * x[0] - 2.0 * x[1] * x[1] + x[0]);
        let hs = hessian(&u);
        for i in 0..d.interior_count() {
            assert!((hs.get(i, 0, 1) - 3.0).abs() < 1e-12);
            assert!((hs.get(i, 0, 0) - 2.0).abs() < 1e-12);
            assert!((hs.get(i, 1, 1) + 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn links_counted_once() {
        let d = build_ball_domain(2, &[0.0, 0.0], 1.0, 0.5).unwrap();
        let mut count = 0;
        for_each_link(&d, |_, _| count += 1);
        // 9 interior nodes in a 3x3 block: 12 inner links plus 12 links to the rim.
        assert_eq!(count, 24);
    }
}
