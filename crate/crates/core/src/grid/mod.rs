//! Cartesian lattice discretization of balls with finite-difference calculus.

mod calculus;
mod domain;
mod field;
pub mod io;

pub use calculus::{
    dirichlet_integral, for_each_link, gradient, gradient_at, hessian, hessian_at, integrate,
    l2_norm, laplacian, laplacian_into, staggered_inner, w12_distance, w12_norm_sq,
};
pub use domain::{build_ball_domain, unit_ball_volume, unit_sphere_area, BallDomain, NodeKind};
pub use field::{upper_index, GridField, SymmetricMatrixField, VectorField};
