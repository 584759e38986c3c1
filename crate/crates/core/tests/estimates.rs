use std::f64::consts::PI;

use proptest::prelude::*;
use stable_lab::approximation::newton_solve;
use stable_lab::catalog::{sample_to_grid, ManufacturedKind, RadialSolution};
use stable_lab::estimates::{
    default_theta, energy_first_variation, energy_functional, hessian_quantities, hole_filling_scales,
    holder_fit, holder_report, matrix_sweep, observed_order, refine, verify_geometric_inequality,
    verify_hole_filling, verify_identity_chain, verify_key_estimate, verify_matrix_inequality,
    verify_sternberg_zumbrun, weak_residual, TestFunction, Verdict,
};
use stable_lab::grid::{build_ball_domain, unit_sphere_area, GridField};
use stable_lab::nonlinearity::Nonlinearity;
use stable_lab::solver::solve_poisson;
use stable_lab::LabError;

/// Composite Simpson rule on `[a, b]` with `m` (even) panels.
fn simpson(a: f64, b: f64, m: usize, g: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / m as f64;
    let mut s = g(a) + g(b);
    for k in 1..m {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * g(a + k as f64 * h);
    }
    s * h / 3.0
}

fn quadratic(n: usize, h: f64) -> GridField {
    let d = build_ball_domain(n, &vec![0.0; n], 1.0, h).unwrap();
    GridField::from_fn(&d, |x| 1.0 - x.iter().map(|v| v * v).sum::<f64>())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn hessian_quantities_closed_forms() {
    for n in 2..=4 {
        let d = build_ball_domain(n, &vec![0.0; n], 1.0, 1.0 / 8.0).unwrap();
        let u = GridField::from_fn(&d, |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>());
        let q = hessian_quantities(&u, 1e-6).unwrap();
        for i in 0..d.interior_count() {
            if !q.active[i] {
                assert!(d.distance_to_center(i) < 1e-12);
                continue;
            }
            let r2 = d.distance_to_center(i).powi(2);
            assert!((q.inf_lap[i] - r2).abs() < 1e-12);
            assert!((q.dmod_sq[i] - 1.0).abs() < 1e-12);
            assert!((q.hess_norm_sq[i] - n as f64).abs() < 1e-12);
        }
        let (cs, op) = q.invariant_violations();
        assert!(cs <= 1e-10 && op <= 1e-10);
    }
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 8.0).unwrap();
    let affine = GridField::from_fn(&d, |x| 2.0 * x[0] - x[1] + 3.0);
    let q = hessian_quantities(&affine, 1e-6).unwrap();
    assert!(q.hess_norm_sq.iter().all(|&v| v.abs() < 1e-20));
    assert!(q.dmod_sq.iter().all(|&v| v.abs() < 1e-20));
    let rank_one = GridField::from_fn(&d, |x| 0.5 * x[0] * x[0]);
    let q = hessian_quantities(&rank_one, 1e-9).unwrap();
    for i in (0..d.interior_count()).filter(|&i| q.active[i]) {
        let x0 = d.coord(i)[0];
        assert!((q.inf_lap[i] - x0 * x0).abs() < 1e-12);
        assert!((q.dmod_sq[i] - 1.0).abs() < 1e-12);
        assert!((q.hess_norm_sq[i] - 1.0).abs() < 1e-12);
    }
    assert!(hessian_quantities(&rank_one, 0.0).is_err());
}

#[test]
fn matrix_inequality_examples() {
    for n in 2..=6 {
        let mut id = vec![0.0; n * n];
        let mut e1 = vec![0.0; n];
        for a in 0..n {
            id[a * n + a] = 1.0;
        }
        e1[n - 1] = 1.0;
        assert!(verify_matrix_inequality(&id, &e1).unwrap().abs() < 1e-12);
        let mut m = vec![0.0; n * n];
        m[0] = 1.0;
        assert!((verify_matrix_inequality(&m, &e1).unwrap() - (n as f64 - 2.0)).abs() < 1e-12);
    }
    assert!(verify_matrix_inequality(&[1.0, 0.0, 0.0, 1.0], &[1.0, 1.0]).is_err());
    assert!(verify_matrix_inequality(&[1.0, 2.0, 0.0, 1.0], &[1.0, 0.0]).is_err());
}

#[test]
fn matrix_sweep_is_reproducible() {
    for n in 2..=6 {
        let a = matrix_sweep(n, 20_000, 42).unwrap();
        assert!(a.passed(), "{a:?}");
        assert_eq!(a, matrix_sweep(n, 20_000, 42).unwrap());
        assert_ne!(a.min_margin, matrix_sweep(n, 20_000, 43).unwrap().min_margin);
    }
    // Thread count does not change the result.
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let threaded = pool.install(|| matrix_sweep(4, 5_000, 7).unwrap());
    assert_eq!(threaded, matrix_sweep(4, 5_000, 7).unwrap());
}

#[test]
fn geometric_inequality_examples() {
    for (n, h) in [(2, 1.0 / 64.0), (3, 1.0 / 24.0)] {
        let d = build_ball_domain(n, &vec![0.0; n], 2.0, h).unwrap();
        let sphere = GridField::from_fn(&d, |x| 0.5 * x.iter().map(|v| v * v).sum::<f64>());
        let r = verify_geometric_inequality(&sphere, default_theta(&sphere)).unwrap();
        assert!(r.extras["active_nodes"] > 100.0);
        assert!(r.margin.abs() < 1e-10, "{r:?}");
        assert!((r.lhs - (n as f64 - 1.0).powi(2)).abs() < 1e-10);
        let plane = GridField::from_fn(&d, |x| x[0]);
        let r = verify_geometric_inequality(&plane, default_theta(&plane)).unwrap();
        assert!(r.lhs.abs() < 1e-20 && r.rhs.abs() < 1e-20);
        assert_eq!(r.verdict, Verdict::Pass);
    }
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 8.0).unwrap();
    let sphere = GridField::from_fn(&d, |x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
    assert!(matches!(verify_geometric_inequality(&sphere, 0.01), Err(LabError::InvalidParameter(_))));
    let flat = GridField::constant(&d, 2.0);
    assert_eq!(verify_geometric_inequality(&flat, 1.0).unwrap().verdict, Verdict::Empty);
}

#[test]
fn geometric_inequality_on_gelfand_branch() {
    let sol = RadialSolution::gelfand_regular(0.5).unwrap();
    let mut margins = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0, 1.0 / 64.0] {
        let d = build_ball_domain(2, &[0.0; 2], 1.0, h).unwrap();
        let u = sample_to_grid(&sol, &d, f64::INFINITY).unwrap().field;
        let r = verify_geometric_inequality(&u, default_theta(&u)).unwrap();
        assert!(r.margin >= -r.tol, "{r:?}");
        margins.push(r.margin);
    }
    assert!(margins.iter().all(|m| m.abs() < 1e-9), "{margins:?}");
}

#[test]
fn sternberg_zumbrun_closed_form() {
    let f = Nonlinearity::constant(4.0);
    let cone = TestFunction::Cone { radius: 1.0 };
    for h in [1.0 / 32.0, 1.0 / 64.0, 1.0 / 128.0] {
        let u = quadratic(2, h);
        let zeta = cone.sample(u.domain());
        let r = verify_sternberg_zumbrun(&u, &f, &zeta).unwrap();
        assert!(r.margin > 0.0);
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.stability.as_ref().unwrap().verdict, stable_lab::stability::Stability::Stable);
        if h == 1.0 / 128.0 {
            assert!(rel(r.lhs, 2.0 * PI / 3.0) < 0.02, "{}", r.lhs);
            assert!(rel(r.rhs, 2.0 * PI) < 0.02, "{}", r.rhs);
        }
    }
    let u = quadratic(2, 1.0 / 16.0);
    let r = verify_sternberg_zumbrun(&u, &f, &GridField::zeros(u.domain())).unwrap();
    assert_eq!(r.verdict, Verdict::Empty);
    let affine = GridField::from_fn(u.domain(), |x| x[0] + 0.5 * x[1]);
    let r = verify_sternberg_zumbrun(&affine, &Nonlinearity::constant(0.0), &cone.sample(u.domain())).unwrap();
    assert!(r.lhs.abs() < 1e-12 && r.rhs > 0.0);
    // A test field with boundary values is rejected.
    assert!(verify_sternberg_zumbrun(&u, &f, &GridField::constant(u.domain(), 1.0)).is_err());
}

#[test]
fn sternberg_zumbrun_rejects_unstable_input() {
    // Bottom eigenfunction with f(t) = 2λ₁ t: linearized operator has λ₁ − 2λ₁ < 0.
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 16.0).unwrap();
    let eig = stable_lab::stability::smallest_eigenvalue(&d, None).unwrap();
    let f = Nonlinearity::linear(2.0 * eig.lambda1);
    let zeta = TestFunction::Cone { radius: 1.0 }.sample(&d);
    match verify_sternberg_zumbrun(&eig.eigenfield, &f, &zeta) {
        Err(LabError::UnstableInput { lambda1, report }) => {
            assert!(lambda1 < 0.0);
            assert_eq!(report.name, "sternberg_zumbrun");
            assert_eq!(report.stability.unwrap().verdict, stable_lab::stability::Stability::Unstable);
        }
        other => panic!("expected UnstableInput, got {other:?}"),
    }
}

#[test]
fn identity_chain_on_quadratic() {
    let f = Nonlinearity::constant(4.0);
    let eta = TestFunction::Cone { radius: 0.5 };
    // radial oracle for u = 1 − r², n = 2
    let s = unit_sphere_area(2);
    let int = |g: &dyn Fn(f64) -> f64| s * simpson(0.0, 0.5, 2000, g);
    let e = |r: f64| eta.value(r);
    let a1 = int(&|r| 4.0 * r * r * e(r).powi(2) * r);
    let lhs_xx = int(&|r| -16.0 * r * r * e(r).powi(2) * r);
    let mut residuals = Vec::new();
    for h in [1.0 / 64.0, 1.0 / 128.0] {
        let u = quadratic(2, h);
        let reps = verify_identity_chain(&u, &f, &eta.sample(u.domain())).unwrap();
        assert_eq!(reps.len(), 3);
        assert!(reps.iter().all(|r| r.verdict == Verdict::Pass), "{reps:?}");
        assert!(rel(reps[0].lhs, a1) < 0.02);
        assert!(rel(reps[1].lhs, lhs_xx) < 0.02);
        residuals.push(reps[1].residual());
    }
    assert!(observed_order(residuals[0], residuals[1]) >= 0.9, "{residuals:?}");

    let u = quadratic(2, 1.0 / 16.0);
    let zero = GridField::zeros(u.domain());
    let reps = verify_identity_chain(&u, &f, &zero).unwrap();
    assert!(reps.iter().all(|r| r.verdict == Verdict::Empty));
}

#[test]
fn identity_chain_on_affine() {
    let eta = TestFunction::Bump { inner: 0.1, outer: 0.7 };
    let f = Nonlinearity::constant(0.0);
    let mut res = Vec::new();
    for h in [1.0 / 32.0, 1.0 / 64.0] {
        let d = build_ball_domain(2, &[0.0; 2], 1.0, h).unwrap();
        let u = GridField::from_fn(&d, |x| 3.0 * x[0] - x[1]);
        let reps = verify_identity_chain(&u, &f, &eta.sample(&d)).unwrap();
        // Δu = 0, and the right side cancels to rounding
        assert!(reps[1].lhs.abs() < 1e-10);
        res.push(reps[1].residual());
    }
    assert!(res.iter().all(|&r| r < 1e-10), "{res:?}");
    let refined = refine(&[1.0 / 32.0, 1.0 / 64.0], |h| {
        let d = build_ball_domain(2, &[0.0; 2], 1.0, h).unwrap();
        let u = GridField::from_fn(&d, |x| 3.0 * x[0] - x[1]);
        Ok(verify_identity_chain(&u, &f, &eta.sample(&d))?.swap_remove(1))
    })
    .unwrap();
    assert_eq!(refined.refinement_history.len(), 2);
    assert!(refined.extras.contains_key("observed_order"));
}

fn key_oracle_quadratic(n: usize, phi: &TestFunction) -> (f64, f64) {
    let nf = n as f64;
    let c1 = (nf - 2.0) * (6.0 - nf) / 4.0;
    let s = unit_sphere_area(n);
    let (a, b) = (0.2, 0.8);
    let lhs = s * simpson(a, b, 4000, |r| 4.0 * (c1 + nf - 3.0) * r.powi(3) * phi.value(r).powi(2));
    let rhs = s * simpson(a, b, 4000, |r| {
        4.0 * r.powi(5) * phi.derivative(r).powi(2) + (16.0 - 4.0 * nf) * r.powi(4) * phi.value(r) * phi.derivative(r)
    });
    (lhs, rhs)
}

#[test]
fn key_estimate_matches_radial_oracle() {
    let phi = TestFunction::Bump { inner: 0.2, outer: 0.8 };
    let (lhs, rhs) = key_oracle_quadratic(3, &phi);
    assert!(rhs > lhs);
    let f = Nonlinearity::constant(6.0);
    let mut errs = Vec::new();
    for h in [1.0 / 16.0, 1.0 / 32.0] {
        let u = quadratic(3, h);
        let r = verify_key_estimate(&u, &f, &phi.sample(u.domain())).unwrap();
        assert!(r.margin >= -r.tol);
        assert_eq!(r.extras["margin_excise_h"], r.margin);
        errs.push(rel(r.lhs, lhs).max(rel(r.rhs, rhs)));
    }
    // central differences of the bump: second order
    assert!(errs[1] < errs[0] / 3.0 && errs[1] < 0.03, "{errs:?}");
}

#[test]
fn key_estimate_affine_against_oracle() {
    // u = g·x₁ in three dimensions, angular averages give closed radial integrals.
    let n = 3;
    let nf = 3.0;
    let phi = TestFunction::Bump { inner: 0.2, outer: 0.8 };
    let s = unit_sphere_area(n);
    let lhs = s * simpson(0.2, 0.8, 4000, |r| (0.75 + (nf - 3.0) / nf) * r * phi.value(r).powi(2));
    let rhs = s * simpson(0.2, 0.8, 4000, |r| {
        r.powi(3) * phi.derivative(r).powi(2) + (4.0 / nf - nf) * r * r * phi.value(r) * phi.derivative(r)
    });
    let d = build_ball_domain(n, &[0.0; 3], 1.0, 1.0 / 32.0).unwrap();
    let u = GridField::from_fn(&d, |x| x[0]);
    let r = verify_key_estimate(&u, &Nonlinearity::constant(0.0), &phi.sample(&d)).unwrap();
    assert!(rel(r.lhs, lhs) < 1e-3 && rel(r.rhs, rhs) < 0.03, "{r:?} vs {lhs} {rhs}");
    assert!(r.margin > 0.0);
}

#[test]
fn key_estimate_guards() {
    let f = Nonlinearity::constant(4.0);
    let u2 = quadratic(2, 1.0 / 8.0);
    assert!(matches!(
        verify_key_estimate(&u2, &f, &GridField::zeros(u2.domain())),
        Err(LabError::DimensionOutOfRange(2))
    ));
    let d = build_ball_domain(3, &[0.0; 3], 1.0, 0.5).unwrap();
    let u = GridField::from_fn(&d, |x| 1.0 - x.iter().map(|v| v * v).sum::<f64>());
    assert!(matches!(
        verify_key_estimate(&u, &f, &GridField::zeros(&d)),
        Err(LabError::OriginResolution { .. })
    ));
    let u = quadratic(3, 1.0 / 8.0);
    let r = verify_key_estimate(&u, &Nonlinearity::constant(6.0), &GridField::zeros(u.domain())).unwrap();
    assert_eq!(r.verdict, Verdict::Empty);
}

#[test]
fn hole_filling_affine_three_dimensions() {
    let h = 1.0 / 48.0;
    let d = build_ball_domain(3, &[0.0; 3], 1.0, h).unwrap();
    let u = GridField::from_fn(&d, |x| x[2]);
    for r in [0.25, 0.5] {
        let rep = verify_hole_filling(&u, r).unwrap();
        // ∫|x|^{-1} over a shell [a, b] in ℝ³ is 2π(b² − a²)
        let oracle = (4.0 * r * r - r * r) / (r * r - 4.0 * h * h);
        assert!(rel(rep.extras["ratio"], oracle) < 0.05, "{} vs {oracle}", rep.extras["ratio"]);
    }
    let flat = GridField::constant(&d, 1.0);
    assert_eq!(verify_hole_filling(&flat, 0.25).unwrap().verdict, Verdict::Empty);
    assert!(verify_hole_filling(&u, 0.6).is_err());
}

#[test]
fn hole_filling_catalog_scales() {
    let sol = RadialSolution::manufactured(ManufacturedKind::Quadratic, 3).unwrap();
    let d = build_ball_domain(3, &[0.0; 3], 1.0, 1.0 / 32.0).unwrap();
    let u = sample_to_grid(&sol, &d, f64::INFINITY).unwrap().field;
    let rep = hole_filling_scales(&u, &[0.125, 0.25, 0.5]).unwrap();
    let inf = rep.extras["inf_ratio"];
    assert!(inf > 1.0, "{rep:?}");
    assert_eq!(rep.series["hole_filling"].rows.len(), 3);
    assert!(rep.extras["decay_exponent"] > 0.0);
}

#[test]
fn holder_fit_power_profiles() {
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 128.0).unwrap();
    for beta in [0.25f64, 0.5, 0.75, 1.0] {
        let u = GridField::from_fn(&d, |x| (x[0] * x[0] + x[1] * x[1]).sqrt().powf(beta));
        let r = holder_fit(&u, &[0.0, 0.0], 1.0, 4).unwrap();
        assert!(rel(r.extras["alpha_hat"], beta) < 0.05, "beta {beta}: {r:?}");
        assert_eq!(r.series["holder"].rows.len(), 5);
    }
    let affine = GridField::from_fn(&d, |x| 2.0 * x[0] + 1.0);
    let r = holder_fit(&affine, &[0.0, 0.0], 1.0, 4).unwrap();
    assert!(rel(r.margin, 1.0) < 0.05);
    let five = GridField::constant(&d, 5.0);
    assert!(matches!(holder_fit(&five, &[0.0, 0.0], 1.0, 4), Err(LabError::DegenerateFit { .. })));
    assert_eq!(holder_report(&five, &[0.0, 0.0], 1.0, 4).unwrap().verdict, Verdict::ExactConstant);
    assert!(holder_fit(&affine, &[0.0, 0.0], 1.0, 2).is_err());
    assert!(holder_fit(&affine, &[0.5, 0.0], 0.6, 3).is_err());
}

#[test]
fn holder_energy_decay_of_power_profile() {
    // E(ρ) ∝ ρ^{2β} for u = |x|^β in the plane.
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 128.0).unwrap();
    let u = GridField::from_fn(&d, |x| (x[0] * x[0] + x[1] * x[1]).sqrt().powf(0.5));
    let r = holder_fit(&u, &[0.0, 0.0], 1.0, 3).unwrap();
    assert!(rel(r.extras["energy_decay_mean"], 0.5) < 0.1, "{r:?}");
    assert!(r.extras["decay_exponent"] > 0.0);
}

#[test]
fn energy_examples() {
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 16.0).unwrap();
    assert_eq!(energy_functional(&GridField::zeros(&d), &Nonlinearity::constant(1.0)), 0.0);
    let mut errs = Vec::new();
    for h in [1.0 / 64.0, 1.0 / 128.0] {
        let u = quadratic(2, h);
        errs.push((energy_functional(&u, &Nonlinearity::constant(4.0)) + PI).abs());
    }
    assert!(errs[1] < errs[0] && errs[1] < 0.05, "{errs:?}");
}

#[test]
fn energy_first_variation_of_solver_output() {
    let d = build_ball_domain(2, &[0.0; 2], 0.4, 1.0 / 32.0).unwrap();
    let f = Nonlinearity::exp();
    let (u, _) = newton_solve(&GridField::zeros(&d), &f, 1e-13).unwrap();
    let xi = TestFunction::Cone { radius: 0.4 }.sample(&d);
    let fv = energy_first_variation(&u, &f, &xi, 1e-4).unwrap();
    assert!(fv.fd_slope.abs() <= 1e-6 && fv.predicted.abs() <= 1e-10, "{fv:?}");
    // Off-solution: slope matches the discrete residual pairing.
    let v = u.map(|t| 2.0 * t);
    let fv = energy_first_variation(&v, &f, &xi, 1e-4).unwrap();
    assert!(fv.predicted.abs() > 1e-4 && fv.difference() <= 1e-6, "{fv:?}");
}

#[test]
fn weak_residual_examples() {
    for n in 2..=3 {
        let u = quadratic(n, 1.0 / 16.0);
        assert!(weak_residual(&u, &Nonlinearity::constant(2.0 * n as f64)) < 1e-10);
    }
    let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 32.0).unwrap();
    let (u, _) = solve_poisson(&d, &GridField::constant(&d, 1.0), &GridField::zeros(&d), 1e-12).unwrap();
    assert!(weak_residual(&u, &Nonlinearity::constant(1.0)) < 1e-9);

    let sol = RadialSolution::gelfand_regular(0.5).unwrap();
    let f = sol.effective_nonlinearity();
    let res: Vec<f64> = [1.0 / 32.0, 1.0 / 64.0]
        .iter()
        .map(|&h| {
            let d = build_ball_domain(2, &[0.0; 2], 1.0, h).unwrap();
            weak_residual(&sample_to_grid(&sol, &d, f64::INFINITY).unwrap().field, &f)
        })
        .collect();
    assert!(observed_order(res[0], res[1]) >= 1.5, "{res:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn matrix_inequality_random(n in 2usize..=6, seed in any::<u64>(), scale in -3.0f64..3.0) {
        let (mut m, e) = stable_lab::estimates::random_trial(n, seed, 0);
        let s = 10f64.powf(scale);
        m.iter_mut().for_each(|v| *v *= s);
        let f2: f64 = m.iter().map(|v| v * v).sum();
        let margin = verify_matrix_inequality(&m, &e).unwrap();
        prop_assert!(margin >= -1e-9 * (1.0 + f2 * f2));
    }

    #[test]
    fn cauchy_schwarz_on_random_polynomials(c in proptest::collection::vec(-2.0f64..2.0, 6)) {
        let d = build_ball_domain(2, &[0.0; 2], 1.0, 1.0 / 12.0).unwrap();
        let u = GridField::from_fn(&d, |x| {
            c[0] * x[0] + c[1] * x[1] + c[2] * x[0] * x[0] + c[3] * x[0] * x[1] + c[4] * x[1].powi(3) + c[5] * (3.0 * x[0]).sin()
        });
        let q = hessian_quantities(&u, default_theta(&u)).unwrap();
        let (cs, op) = q.invariant_violations();
        prop_assert!(cs <= 1e-10 && op <= 1e-10);
        let g = verify_geometric_inequality(&u, default_theta(&u)).unwrap();
        prop_assert!(g.margin >= -1e-9 * (1.0 + g.lhs.abs() + g.rhs.abs()));
    }

    #[test]
    fn sternberg_zumbrun_for_stable_solver_output(level in -1.0f64..1.0, tilt in -1.0f64..1.0) {
        let d = build_ball_domain(2, &[0.0; 2], 0.4, 0.4 / 24.0).unwrap();
        let f = Nonlinearity::exp();
        let g = GridField::from_fn(&d, |x| level + tilt * x[0]);
        let (u, _) = newton_solve(&g, &f, 1e-13).unwrap();
        let zeta = TestFunction::Cone { radius: 0.4 }.sample(&d);
        let r = verify_sternberg_zumbrun(&u, &f, &zeta).unwrap();
        prop_assert!(r.margin >= -r.tol, "{:?}", r);
    }
}
