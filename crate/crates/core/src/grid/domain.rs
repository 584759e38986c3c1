use std::sync::Arc;

use crate::error::{LabError, Result};

/// Where a lattice point sits relative to the discrete ball.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior(usize),
    Boundary(usize),
}

/// Lattice discretization of the ball `B_R(x0)` in `n` dimensions.
///
/// Interior nodes are lattice points strictly inside the sphere. Boundary
/// nodes are the lattice points outside it that are stencil neighbours of
/// some interior node, so they lie within one spacing of the sphere. Both
/// sets are stored in lexicographic lattice order, interior first.
#[derive(Debug)]
pub struct BallDomain {
    dim: usize,
    center: Vec<f64>,
    radius: f64,
    spacing: f64,
    half_width: i32,
    side: usize,
    n_interior: usize,
    n_boundary: usize,
    /// Lattice offsets, `dim` entries per node, interior then boundary.
    lattice: Vec<i16>,
    /// Per line prefix: index of the first interior node and half length of the run.
    line_start: Vec<u32>,
    line_half: Vec<i32>,
    /// Sorted box keys of boundary nodes.
    boundary_keys: Vec<u64>,
    /// `2 * dim` neighbour indices per interior node, ordered `-e0, +e0, -e1, ...`.
    neighbors: Vec<u32>,
}

impl PartialEq for BallDomain {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.center == other.center
            && self.radius == other.radius
            && self.spacing == other.spacing
    }
}

/// Builds the discrete ball of radius `radius` and lattice spacing `spacing`.
pub fn build_ball_domain(
    n: usize,
    center: &[f64],
    radius: f64,
    spacing: f64,
) -> Result<Arc<BallDomain>> {
    BallDomain::new(n, center, radius, spacing).map(Arc::new)
}

impl BallDomain {
    pub fn new(n: usize, center: &[f64], radius: f64, spacing: f64) -> Result<Self> {
        if !(2..=5).contains(&n) {
            return Err(LabError::DimensionOutOfRange(n));
        }
        if center.len() != n || center.iter().any(|c| !c.is_finite()) {
            return Err(LabError::InvalidParameter(format!(
                "center must be a finite {n}-vector"
            )));
        }
        if !(radius.is_finite() && radius > 0.0 && spacing.is_finite() && spacing > 0.0) {
            return Err(LabError::InvalidParameter(
                "radius and spacing must be positive and finite".into(),
            ));
        }
        if spacing >= radius {
            return Err(LabError::SpacingTooCoarse { spacing, radius });
        }
        let ratio = radius / spacing;
        let rr = ratio * ratio;
        let half_width = ratio.floor() as i64 + 1;
        if half_width > 16000 {
            return Err(LabError::InvalidParameter(format!(
                "lattice half width {half_width} exceeds the supported range"
            )));
        }
        let half_width = half_width as i32;
        let side = (2 * half_width + 1) as usize;
        let n_lines = side.pow((n - 1) as u32);

        let estimate = unit_ball_volume(n) * rr.powf(n as f64 / 2.0);
        if estimate > 4.0e8 {
            return Err(LabError::InvalidParameter(format!(
                "about {estimate:.0} interior nodes requested; refusing"
            )));
        }

        let mut line_start = vec![0u32; n_lines];
        let mut line_half = vec![-1i32; n_lines];
        let mut lattice: Vec<i16> = Vec::with_capacity((estimate as usize + 16) * n);
        let mut n_interior = 0usize;
        let mut prefix = vec![-half_width; n - 1];
        for line in 0..n_lines {
            let s: i64 = prefix.iter().map(|&p| (p as i64) * (p as i64)).sum();
            line_start[line] = n_interior as u32;
            if (s as f64) < rr {
                let mut k = (rr - s as f64).sqrt().floor() as i64;
                while k >= 0 && (s + k * k) as f64 >= rr {
                    k -= 1;
                }
                while ((s + (k + 1) * (k + 1)) as f64) < rr {
                    k += 1;
                }
                if k >= 0 {
                    line_half[line] = k as i32;
                    for last in -k..=k {
                        lattice.extend(prefix.iter().map(|&p| p as i16));
                        lattice.push(last as i16);
                    }
                    n_interior += (2 * k + 1) as usize;
                }
            }
            advance(&mut prefix, half_width);
        }
        if n_interior > u32::MAX as usize / 2 {
            return Err(LabError::InvalidParameter("too many nodes".into()));
        }

        let mut domain = BallDomain {
            dim: n,
            center: center.to_vec(),
            radius,
            spacing,
            half_width,
            side,
            n_interior,
            n_boundary: 0,
            lattice,
            line_start,
            line_half,
            boundary_keys: Vec::new(),
            neighbors: Vec::new(),
        };

        let mut keys = Vec::new();
        let mut point = vec![0i32; n];
        for i in 0..n_interior {
            domain.lattice_into(i, &mut point);
            for d in 0..n {
                for step in [-1, 1] {
                    point[d] += step;
                    if domain.interior_index(&point).is_none() {
                        keys.push(domain.box_key(&point));
                    }
                    point[d] -= step;
                }
            }
        }
        keys.sort_unstable();
        keys.dedup();
        domain.n_boundary = keys.len();
        for &key in &keys {
            domain.push_key_lattice(key);
        }
        domain.boundary_keys = keys;

        let mut neighbors = Vec::with_capacity(n_interior * 2 * n);
        for i in 0..n_interior {
            domain.lattice_into(i, &mut point);
            for d in 0..n {
                for step in [-1, 1] {
                    point[d] += step;
                    let idx = domain
                        .locate(&point)
                        .expect("stencil neighbour must be classified");
                    neighbors.push(idx as u32);
                    point[d] -= step;
                }
            }
        }
        domain.neighbors = neighbors;
        Ok(domain)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Largest lattice offset along any axis; the lattice box is `[-m, m]^n`.
    pub fn half_width(&self) -> i32 {
        self.half_width
    }

    /// Number of lattice points along one axis of the enclosing box.
    pub fn box_side(&self) -> usize {
        self.side
    }

    pub fn interior_count(&self) -> usize {
        self.n_interior
    }

    pub fn boundary_count(&self) -> usize {
        self.n_boundary
    }

    pub fn node_count(&self) -> usize {
        self.n_interior + self.n_boundary
    }

    /// Volume of one lattice cell, `h^n`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    /// Lattice offsets of node `idx` (interior or boundary numbering combined).
    pub fn lattice(&self, idx: usize) -> &[i16] {
        &self.lattice[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn lattice_into(&self, idx: usize, out: &mut [i32]) {
        for (o, &k) in out.iter_mut().zip(self.lattice(idx)) {
            *o = k as i32;
        }
    }

    /// Physical coordinates of node `idx`.
    pub fn coord_into(&self, idx: usize, out: &mut [f64]) {
        for ((o, &k), &c) in out.iter_mut().zip(self.lattice(idx)).zip(&self.center) {
            *o = c + self.spacing * k as f64;
        }
    }

    pub fn coord(&self, idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.coord_into(idx, &mut x);
        x
    }

    /// Coordinates of node `idx` relative to the center.
    pub fn offset_into(&self, idx: usize, out: &mut [f64]) {
        for (o, &k) in out.iter_mut().zip(self.lattice(idx)) {
            *o = self.spacing * k as f64;
        }
    }

    /// Distance of node `idx` to the center.
    pub fn distance_to_center(&self, idx: usize) -> f64 {
        let s: i64 = self.lattice(idx).iter().map(|&k| (k as i64) * (k as i64)).sum();
        self.spacing * (s as f64).sqrt()
    }

    /// The `2n` stencil neighbours of interior node `i`, ordered `-e0, +e0, -e1, +e1, ...`.
    pub fn neighbors(&self, i: usize) -> &[u32] {
        let w = 2 * self.dim;
        &self.neighbors[i * w..(i + 1) * w]
    }

    pub fn is_interior(&self, idx: usize) -> bool {
        idx < self.n_interior
    }

    /// Index of the interior node at lattice offset `k`, if any.
    pub fn interior_index(&self, k: &[i32]) -> Option<usize> {
        let m = self.half_width;
        if k.iter().any(|&c| c < -m || c > m) {
            return None;
        }
        let mut line = 0usize;
        for &c in &k[..self.dim - 1] {
            line = line * self.side + (c + m) as usize;
        }
        let half = self.line_half[line];
        let last = k[self.dim - 1];
        if half < 0 || last < -half || last > half {
            return None;
        }
        Some(self.line_start[line] as usize + (last + half) as usize)
    }

    pub fn classify(&self, k: &[i32]) -> Option<NodeKind> {
        if let Some(i) = self.interior_index(k) {
            return Some(NodeKind::Interior(i));
        }
        if k.iter().any(|&c| c < -self.half_width || c > self.half_width) {
            return None;
        }
        let key = self.box_key(k);
        self.boundary_keys
            .binary_search(&key)
            .ok()
            .map(NodeKind::Boundary)
    }

    /// Combined index (interior first, then boundary) of lattice offset `k`.
    pub fn locate(&self, k: &[i32]) -> Option<usize> {
        match self.classify(k)? {
            NodeKind::Interior(i) => Some(i),
            NodeKind::Boundary(b) => Some(self.n_interior + b),
        }
    }

    fn box_key(&self, k: &[i32]) -> u64 {
        let m = self.half_width;
        k.iter()
            .fold(0u64, |acc, &c| acc * self.side as u64 + (c + m) as u64)
    }

    fn push_key_lattice(&mut self, mut key: u64) {
        let start = self.lattice.len();
        self.lattice.resize(start + self.dim, 0);
        for d in (0..self.dim).rev() {
            let c = (key % self.side as u64) as i32 - self.half_width;
            self.lattice[start + d] = c as i16;
            key /= self.side as u64;
        }
    }
}

fn advance(prefix: &mut [i32], m: i32) {
    for c in prefix.iter_mut().rev() {
        if *c < m {
            *c += 1;
            return;
        }
        *c = -m;
    }
}

/// Volume of the unit ball in `n` dimensions.
pub fn unit_ball_volume(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(n - 2) * 2.0 * PI / n as f64,
    }
}

/// Area of the unit sphere in `n` dimensions.
pub fn unit_sphere_area(n: usize) -> f64 {
    n as f64 * unit_ball_volume(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_disk_has_nine_interior_nodes() {
        let d = BallDomain::new(2, &[0.0, 0.0], 1.0, 0.5).unwrap();
        assert_eq!(d.interior_count(), 9);
        assert_eq!(d.interior_index(&[0, 0]), Some(4));
        assert!(d.interior_index(&[2, 0]).is_none());
        assert!(matches!(d.classify(&[2, 0]), Some(NodeKind::Boundary(_))));
    }

    #[test]
    fn neighbours_are_symmetric() {
        let d = BallDomain::new(3, &[0.1, 0.0, -0.2], 1.0, 0.2).unwrap();
        for i in 0..d.interior_count() {
            for (slot, &j) in d.neighbors(i).iter().enumerate() {
                let j = j as usize;
                if d.is_interior(j) {
                    assert_eq!(d.neighbors(j)[slot ^ 1] as usize, i);
                }
            }
        }
    }

    #[test]
    fn boundary_nodes_hug_the_sphere() {
        let d = BallDomain::new(2, &[0.0, 0.0], 1.0, 0.05).unwrap();
        for b in 0..d.boundary_count() {
            let r = d.distance_to_center(d.interior_count() + b);
            assert!((1.0..1.0 + 0.05 + 1e-12).contains(&r));
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((unit_ball_volume(2) - std::f64::consts::PI).abs() < 1e-15);
        assert!((unit_sphere_area(3) - 4.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}
