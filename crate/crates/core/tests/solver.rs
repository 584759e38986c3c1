use proptest::prelude::*;
use stable_lab::grid::{build_ball_domain, staggered_inner, GridField};
use stable_lab::solver::{
    solve_in_place, solve_poisson, solve_shifted, CgSettings, DirichletOperator, ShiftedProblem,
};
use stable_lab::stability::smallest_eigenvalue;
use stable_lab::LabError;

fn max_err_vs(u: &GridField, exact: impl Fn(&[f64]) -> f64) -> f64 {
    let d = u.domain();
    let mut x = vec![0.0; d.dim()];
    let mut e: f64 = 0.0;
    for i in 0..d.interior_count() {
        d.coord_into(i, &mut x);
        e = e.max((u.values()[i] - exact(&x)).abs());
    }
    e
}

fn paraboloid(x: &[f64]) -> f64 {
    1.0 - x.iter().map(|v| v * v).sum::<f64>()
}

#[test]
fn poisson_disk_first_order() {
    let mut errs = Vec::new();
    for h in [1.0 / 32.0, 1.0 / 64.0] {
        let d = build_ball_domain(2, &[0.0; 2], 1.0, h).unwrap();
        let (u, rep) = solve_poisson(&d, &GridField::constant(&d, 4.0), &GridField::zeros(&d), 1e-10).unwrap();
        assert!(rep.converged && rep.final_residual <= 1e-10);
        assert_eq!(u.boundary().iter().filter(|&&v| v != 0.0).count(), 0);
        errs.push(max_err_vs(&u, paraboloid));
    }
    assert!(errs[1] <= 4.0 / 64.0, "{errs:?}");
    assert!(errs[1] < errs[0]);
}

#[test]
fn constant_boundary_data_exact() {
    let d = build_ball_domain(3, &[0.0; 3], 1.0, 0.1).unwrap();
    let (u, rep) = solve_poisson(&d, &GridField::zeros(&d), &GridField::constant(&d, -2.5), 1e-10).unwrap();
    assert!(rep.converged);
    assert!(u.values().iter().all(|&v| v == -2.5));
}

#[test]
fn poisson_paraboloid_in_higher_dimensions() {
    for (n, h) in [(3, 1.0 / 24.0), (4, 1.0 / 12.0), (5, 1.0 / 8.0)] {
        let d = build_ball_domain(n, &vec![0.0; n], 1.0, h).unwrap();
        let rhs = GridField::constant(&d, 2.0 * n as f64);
        let (u, rep) = solve_poisson(&d, &rhs, &GridField::zeros(&d), 1e-10).unwrap();
        assert!(rep.converged);
        let e = max_err_vs(&u, paraboloid);
        assert!(e <= 4.0 * h, "n={n}: {e}");
        // With boundary data taken from the exact profile the stencil is exact.
        let g = GridField::from_fn(&d, paraboloid);
        let (v, _) = solve_poisson(&d, &rhs, &g, 1e-12).unwrap();
        assert!(max_err_vs(&v, paraboloid) < 1e-9);
    }
}

#[test]
fn zero_shift_matches_poisson() {
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 32.0).unwrap();
    let rhs = GridField::from_fn(&d, |x| 1.0 + x[0]);
    let g = GridField::from_fn(&d, |x| x[1]);
    let (a, _) = solve_poisson(&d, &rhs, &g, 1e-10).unwrap();
    let (b, _) = solve_shifted(&ShiftedProblem::new(&d, 0.0, rhs, g), 1e-10).unwrap();
    assert_eq!(a, b);
}

#[test]
fn shifted_solve_recovers_eigenfield() {
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 32.0).unwrap();
    let eig = smallest_eigenvalue(&d, None).unwrap();
    let half = 0.5 * eig.lambda1;
    let rhs = eig.eigenfield.map(|v| half * v);
    let p = ShiftedProblem::new(&d, half, rhs, GridField::zeros(&d));
    let (u, rep) = solve_shifted(&p, 1e-12).unwrap();
    assert!(rep.converged);
    assert!(u.max_abs_diff(&eig.eigenfield).unwrap() < 1e-7 * eig.eigenfield.sup_norm());

    let bad = ShiftedProblem::new(&d, 2.0 * eig.lambda1, GridField::zeros(&d), GridField::zeros(&d));
    assert!(matches!(solve_shifted(&bad, 1e-10), Err(LabError::IndefiniteShift { .. })));
    let known = bad.clone().with_lambda1(eig.lambda1);
    assert!(matches!(solve_shifted(&known, 1e-10), Err(LabError::IndefiniteShift { .. })));
}

#[test]
fn cg_energy_error_non_increasing() {
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 32.0).unwrap();
    let op = DirichletOperator::new(&d, 0.0, None);
    let rhs: Vec<f64> = (0..d.interior_count()).map(|i| 1.0 + (i % 7) as f64).collect();
    let mut exact = vec![0.0; d.node_count()];
    solve_in_place(&op, &rhs, &mut exact, CgSettings::for_domain(&d, 1e-14)).unwrap();
    let exact = GridField::from_values(&d, exact).unwrap();
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let mut v = vec![0.0; d.node_count()];
        let mut s = CgSettings::for_domain(&d, 1e-14);
        s.max_iterations = k;
        let rep = solve_in_place(&op, &rhs, &mut v, s).unwrap();
        assert!(rep.step_energy.iter().all(|&e| e >= 0.0));
        let diff = GridField::from_values(&d, v).unwrap().combine(1.0, &exact, -1.0).unwrap();
        let energy = staggered_inner(&diff, &diff).unwrap();
        assert!(energy <= last * (1.0 + 1e-9), "k={k}: {energy} > {last}");
        last = energy;
    }
}

#[test]
fn solve_report_json_keys() {
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 0.25).unwrap();
    let (_, rep) = solve_poisson(&d, &GridField::constant(&d, 1.0), &GridField::zeros(&d), 1e-10).unwrap();
    let json = serde_json::to_value(&rep).unwrap();
    let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(keys, ["converged", "iterations", "residual"]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn maximum_principle(a in 0.0f64..3.0, b in 0.0f64..2.0, c in 0.0f64..1.0, k in 1.0f64..6.0) {
        let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 24.0).unwrap();
        let rhs = GridField::from_fn(&d, |x| a * (k * x[0]).sin().powi(2) + b * x[1].abs());
        let g = GridField::from_fn(&d, |x| c * (1.0 + (k * x[1]).cos()));
        let (u, _) = solve_poisson(&d, &rhs, &g, 1e-10).unwrap();
        prop_assert!(u.min_interior() >= -1e-10);
        let shifted = ShiftedProblem::new(&d, -a, rhs.clone(), GridField::from_fn(&d, |x| x[0] - 2.0));
        let (w, _) = solve_shifted(&shifted, 1e-10).unwrap();
        prop_assert!(w.min_interior() >= -3.0 - 1e-10);
    }

    #[test]
    fn comparison_principle(s in 0.0f64..1.0, bump in 0.0f64..2.0, lift in 0.0f64..1.0) {
        let d = build_ball_domain(2, &[0.0; 2], 0.8, 0.8 / 24.0).unwrap();
        let shift = s * 3.0;
        let rhs2 = GridField::from_fn(&d, |x| x[0] * x[1]);
        let rhs1 = rhs2.map(|v| v + bump);
        let g2 = GridField::from_fn(&d, |x| x[0]);
        let g1 = g2.map(|v| v + lift);
        let (u1, _) = solve_shifted(&ShiftedProblem::new(&d, shift, rhs1, g1), 1e-10).unwrap();
        let (u2, _) = solve_shifted(&ShiftedProblem::new(&d, shift, rhs2, g2), 1e-10).unwrap();
        let worst = u1.interior().iter().zip(u2.interior()).map(|(a, b)| a - b).fold(f64::INFINITY, f64::min);
        prop_assert!(worst >= -1e-10, "{worst}");
    }
}
