//! Cross-module invariants checked over seeded random points: derivative
//! oracles against finite differences, tangency and symmetry of Riemannian
//! quantities, fixed-point and equivalence properties of the maps, and
//! determinant nonvanishing under admissible step sizes.

use nalgebra::{dvector, DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use saddle_dynamics::experiment::InitDistribution;
use saddle_dynamics::jacobian::{
    self, differential, fd_differential, relative_frobenius, spectral_report,
};
use saddle_dynamics::objective::{
    classify_critical_point, default_fd_step, finite_difference_gradient,
    finite_difference_hessian, riemannian_gradient, riemannian_hessian, BlockPartition,
    Domain, DEFAULT_TOL_EIG, DEFAULT_TOL_GRAD,
};
use saddle_dynamics::suite::{
    self, canonical_simplex_matrix, make_nesterov_example, make_quadratic,
    make_simplex_quadratic, make_sphere_rayleigh, FixtureCatalog, NESTEROV_BOX,
};
use saddle_dynamics::{Method, ObjectiveProblem, OptimizerMap};

fn sample_in_domain(problem: &ObjectiveProblem, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let dim = problem.dim();
    match problem.domain() {
        Domain::Euclidean { .. } => {
            // stay inside the box where the planar fixture's Lipschitz
            // constant is valid; harmless restriction for the others
            InitDistribution::symmetric_box(dim, NESTEROV_BOX.0, NESTEROV_BOX.1).sample(dim, rng)
        }
        Domain::UnitSphere { .. } => InitDistribution::UniformSphere.sample(dim, rng),
        Domain::SimplexInterior { .. } => InitDistribution::DirichletUniform.sample(dim, rng),
    }
}

fn h4() -> DMatrix<f64> {
    DMatrix::from_row_slice(
        4,
        4,
        &[
            2.0, 1.0, 0.0, 0.0, //
            1.0, -3.0, 1.0, 0.0, //
            0.0, 1.0, 4.0, 1.0, //
            0.0, 0.0, 1.0, -1.0,
        ],
    )
}

fn catalog_problems() -> Vec<ObjectiveProblem> {
    FixtureCatalog::standard()
        .entries()
        .iter()
        .map(|e| e.problem.clone())
        .collect()
}

#[test]
fn fd_gradient_and_hessian_match_analytic_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for problem in catalog_problems() {
        for _ in 0..100 {
            let x = sample_in_domain(&problem, &mut rng);
            let h = default_fd_step(&x);

            let g = problem.gradient(&x);
            let g_fd = finite_difference_gradient(&problem, &x, h);
            let g_err = (&g_fd - &g).norm();
            if g.norm() > 1e-8 {
                assert!(
                    g_err / g.norm() <= 1e-5,
                    "{}: gradient rel err {:.3e}",
                    problem.name(),
                    g_err / g.norm()
                );
            } else {
                assert!(g_err <= 1e-10);
            }

            let hess = problem.hessian(&x);
            let hess_fd = finite_difference_hessian(&problem, &x, h);
            let h_err = (&hess_fd - &hess).norm() / hess.norm();
            assert!(
                h_err <= 1e-4,
                "{}: hessian rel err {:.3e}",
                problem.name(),
                h_err
            );
        }
    }
}

#[test]
fn riemannian_gradient_lies_in_tangent_space() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let sphere = make_sphere_rayleigh(suite::canonical_rayleigh_matrix(4)).unwrap();
    let simplex = make_simplex_quadratic(canonical_simplex_matrix(4)).unwrap();
    for _ in 0..100 {
        let x = sample_in_domain(&sphere, &mut rng);
        let v = riemannian_gradient(&sphere, &x).unwrap();
        assert!(x.dot(&v).abs() <= 1e-10);

        let x = sample_in_domain(&simplex, &mut rng);
        let v = riemannian_gradient(&simplex, &x).unwrap();
        assert!(v.sum().abs() <= 1e-10);
    }
}

#[test]
fn riemannian_hessian_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for problem in catalog_problems() {
        for _ in 0..25 {
            let x = sample_in_domain(&problem, &mut rng);
            let h = riemannian_hessian(&problem, &x).unwrap();
            assert!((h.clone() - h.transpose()).norm() <= 1e-12);
        }
    }
}

#[test]
fn known_critical_points_classify_as_labeled() {
    FixtureCatalog::standard().verify().unwrap();
    // and the larger members of each family
    for problem in [
        make_quadratic(h4()),
        make_sphere_rayleigh(DMatrix::from_diagonal(&dvector![1.0, 2.0, 5.0])).unwrap(),
        make_simplex_quadratic(canonical_simplex_matrix(5)).unwrap(),
    ] {
        suite::verify_known_critical_points(&problem).unwrap();
    }
}

/// Every method fixes the critical points of its fixture.
#[test]
fn critical_points_are_fixed_points_of_every_method() {
    let nesterov = make_nesterov_example();
    let sphere = make_sphere_rayleigh(DMatrix::from_diagonal(&dvector![1.0, 2.0, 5.0])).unwrap();
    let simplex = make_simplex_quadratic(canonical_simplex_matrix(3)).unwrap();

    let euclidean_methods = [
        Method::GradientDescent,
        Method::ProximalPoint,
        Method::CoordinateDescent,
        Method::BlockCoordinateDescent(BlockPartition::singletons(2)),
        Method::MirrorDescentEuclidean,
    ];
    for method in euclidean_methods {
        let map = OptimizerMap::new(method, 0.05, &nesterov).unwrap();
        for cp in nesterov.known_critical_points() {
            assert!((map.step(&cp.point).unwrap() - &cp.point).norm() <= 1e-10);
        }
    }
    let map = OptimizerMap::new(Method::ManifoldGradientDescent, 0.05, &sphere).unwrap();
    for cp in sphere.known_critical_points() {
        assert!((map.step(&cp.point).unwrap() - &cp.point).norm() <= 1e-10);
    }
    let map = OptimizerMap::new(Method::MirrorDescentEntropy, 0.05, &simplex).unwrap();
    for cp in simplex.known_critical_points() {
        assert!((map.step(&cp.point).unwrap() - &cp.point).norm() <= 1e-10);
    }
}

/// Plumbing consequence of an admissible step: gradient descent does not
/// increase the objective.
#[test]
fn gd_descends_with_admissible_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for problem in [
        make_nesterov_example(),
        make_quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])),
        make_quadratic(h4()),
    ] {
        let alpha = 0.9 / problem.lipschitz().l;
        let map = OptimizerMap::new(Method::GradientDescent, alpha, &problem).unwrap();
        for _ in 0..100 {
            let x = sample_in_domain(&problem, &mut rng);
            let y = map.step(&x).unwrap();
            assert!(problem.value(&y) <= problem.value(&x) + 1e-12);
        }
    }
}

#[test]
fn bcd_with_singletons_equals_cd_and_mirror_euclidean_equals_gd() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let problems = [
        make_nesterov_example(),
        make_quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])),
        make_quadratic(h4()),
    ];
    let mut pairs = 0;
    while pairs < 100 {
        for problem in &problems {
            let d = problem.dim();
            let alpha = rng.gen_range(0.01..0.2);
            let x = sample_in_domain(problem, &mut rng);

            let cd = OptimizerMap::new(Method::CoordinateDescent, alpha, problem).unwrap();
            let bcd = OptimizerMap::new(
                Method::BlockCoordinateDescent(BlockPartition::singletons(d)),
                alpha,
                problem,
            )
            .unwrap();
            assert!((cd.step(&x).unwrap() - bcd.step(&x).unwrap()).norm() <= 1e-14);

            let gd = OptimizerMap::new(Method::GradientDescent, alpha, problem).unwrap();
            let me = OptimizerMap::new(Method::MirrorDescentEuclidean, alpha, problem).unwrap();
            assert!((gd.step(&x).unwrap() - me.step(&x).unwrap()).norm() <= 1e-14);
            pairs += 1;
        }
    }
}

/// Analytic differentials match central differences for every Euclidean
/// method on every Euclidean fixture.
#[test]
fn analytic_differentials_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let problems = [
        make_nesterov_example(),
        make_quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])),
        make_quadratic(h4()),
    ];
    for problem in &problems {
        let d = problem.dim();
        let methods = [
            Method::GradientDescent,
            Method::ProximalPoint,
            Method::CoordinateDescent,
            Method::BlockCoordinateDescent(if d == 4 {
                BlockPartition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap()
            } else {
                BlockPartition::singletons(d)
            }),
            Method::MirrorDescentEuclidean,
        ];
        for method in methods {
            let is_prox = method == Method::ProximalPoint;
            let alpha = 0.9 / problem.lipschitz().l;
            let map = OptimizerMap::new(method, alpha, problem).unwrap();
            for _ in 0..50 {
                let x = sample_in_domain(problem, &mut rng);
                let analytic = match map.method() {
                    // mirror descent with the Euclidean map is gradient
                    // descent; its general-point differential is the GD one
                    Method::MirrorDescentEuclidean => {
                        jacobian::dg_gradient_descent(&map, &x).unwrap()
                    }
                    _ => differential(&map, &x).unwrap(),
                };
                // larger step for the proximal map: its inner solve leaves
                // residual noise of order 1e-10 in each evaluation
                let h = if is_prox { 1e-4 } else { 1e-5 } * f64::max(1.0, x.amax());
                let fd = fd_differential(&map, &x, h).unwrap();
                let err = relative_frobenius(&analytic, &fd);
                assert!(
                    err <= 1e-5,
                    "{} on {}: rel Frobenius {err:.3e}",
                    map.method().name(),
                    problem.name()
                );
            }
        }
    }
}

/// |det Dg| stays away from zero for admissible step sizes. The manifold
/// and mirror maps have no general-point analytic differential, so their
/// determinants come from the finite-difference Jacobian on the tangent
/// space.
#[test]
fn determinants_do_not_vanish_under_admissible_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);

    let check = |map: &OptimizerMap, x: &DVector<f64>, use_fd: bool| {
        let dg = if use_fd {
            fd_differential(map, x, 1e-5).unwrap()
        } else {
            differential(map, x).unwrap()
        };
        let report = spectral_report(&dg, 1e-9, 1e-12).unwrap();
        assert!(
            report.det_nonzero,
            "{}: det {:.3e} at {x:?}",
            map.method().name(),
            report.det
        );
    };

    let nesterov = make_nesterov_example();
    let coupled = make_quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
    let quartic = make_quadratic(h4());

    for _ in 0..100 {
        let x = sample_in_domain(&nesterov, &mut rng);
        let gd = OptimizerMap::new(Method::GradientDescent, 0.9 / 11.0, &nesterov).unwrap();
        check(&gd, &x, false);
        let prox = OptimizerMap::new(Method::ProximalPoint, 0.9 / 11.0, &nesterov).unwrap();
        check(&prox, &x, false);

        let x = sample_in_domain(&coupled, &mut rng);
        let cd = OptimizerMap::new(Method::CoordinateDescent, 0.9, &coupled).unwrap();
        check(&cd, &x, false);

        let x = sample_in_domain(&quartic, &mut rng);
        let partition = BlockPartition::new(vec![vec![0, 1], vec![2, 3]], 4).unwrap();
        let alpha = 0.9 / quartic.l_block(&partition);
        let bcd =
            OptimizerMap::new(Method::BlockCoordinateDescent(partition), alpha, &quartic).unwrap();
        check(&bcd, &x, false);
    }

    let sphere = make_sphere_rayleigh(DMatrix::from_diagonal(&dvector![1.0, 2.0, 5.0])).unwrap();
    let mgd = OptimizerMap::new(Method::ManifoldGradientDescent, 0.05, &sphere).unwrap();
    let simplex = make_simplex_quadratic(canonical_simplex_matrix(3)).unwrap();
    let mw_alpha = 0.9 / simplex.lipschitz().l;
    let mw = OptimizerMap::new(Method::MirrorDescentEntropy, mw_alpha, &simplex).unwrap();
    for _ in 0..100 {
        let x = sample_in_domain(&sphere, &mut rng);
        check(&mgd, &x, true);
        let x = sample_in_domain(&simplex, &mut rng);
        check(&mw, &x, true);
    }
}

/// Exact spectrum at the planar saddle and eigenvalue agreement between the
/// two mirror-descent differential routes.
#[test]
fn fixed_point_spectra_are_exact_and_similarity_invariant() {
    let nesterov = make_nesterov_example();
    let map = OptimizerMap::new(Method::GradientDescent, 0.1, &nesterov).unwrap();
    let dg = differential(&map, &dvector![0.0, 0.0]).unwrap();
    let report = spectral_report(&dg, 1e-9, 1e-12).unwrap();
    let mut mods: Vec<f64> = report.eigenvalues.iter().map(|e| e.re).collect();
    mods.sort_by(f64::total_cmp);
    assert!((mods[0] - 0.9).abs() <= 1e-12 && (mods[1] - 1.1).abs() <= 1e-12);

    let simplex = make_simplex_quadratic(canonical_simplex_matrix(3)).unwrap();
    let mw = OptimizerMap::new(Method::MirrorDescentEntropy, 0.3, &simplex).unwrap();
    let centroid = DVector::from_element(3, 1.0 / 3.0);
    let plain = jacobian::dg_mirror_descent_at_fixed_point(&mw, &centroid).unwrap();
    let symmetric = jacobian::dg_mirror_descent_symmetrized(&mw, &centroid).unwrap();
    let a = spectral_report(&plain, 1e-9, 1e-12).unwrap();
    let b = spectral_report(&symmetric, 1e-9, 1e-12).unwrap();
    for (ea, eb) in a.eigenvalues.iter().zip(&b.eigenvalues) {
        assert!((ea - eb).norm() <= 1e-10);
    }
}

/// Gradient-descent iterates on a diagonal quadratic follow the closed form
/// `x_t,i = (1 - a lambda_i)^t x_0,i`.
#[test]
fn gd_iterates_match_quadratic_closed_form() {
    let h = DMatrix::from_diagonal(&dvector![1.0, -1.0]);
    let problem = make_quadratic(h);
    let alpha = 0.5;
    let map = OptimizerMap::new(Method::GradientDescent, alpha, &problem).unwrap();
    let x0 = dvector![1.0, 1.0];
    let mut x = x0.clone();
    let mut factors = dvector![1.0, 1.0];
    for _ in 0..50 {
        x = map.step(&x).unwrap();
        factors[0] *= 1.0 - alpha * 1.0;
        factors[1] *= 1.0 - alpha * (-1.0);
        assert!((x[0] - factors[0] * x0[0]).abs() <= 1e-10);
        assert!((x[1] - factors[1] * x0[1]).abs() <= 1e-10);
    }
}

/// Stored smoothness constants dominate the curvature seen at random points.
#[test]
fn lipschitz_constants_dominate_observed_curvature() {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for problem in catalog_problems() {
        let lip = problem.lipschitz();
        let partition = BlockPartition::singletons(problem.dim());
        let l_b = problem.l_block(&partition);
        assert!(lip.l >= lip.l_max - 1e-12);
        for _ in 0..1000 {
            let x = sample_in_domain(&problem, &mut rng);
            let h = problem.hessian(&x);
            let spectral = h
                .symmetric_eigenvalues()
                .iter()
                .fold(0.0, |m, &e| f64::max(m, e.abs()));
            assert!(spectral <= lip.l + 1e-9, "{}: L violated", problem.name());
            let diag_max = h.diagonal().iter().fold(0.0, |m, &e| f64::max(m, e.abs()));
            assert!(diag_max <= lip.l_max + 1e-9);
            assert!(diag_max <= l_b + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Multiplicative weights maps the simplex interior into itself for any
    /// interior point and any positive step.
    #[test]
    fn mw_preserves_simplex(
        raw in prop::collection::vec(1e-6f64..1.0, 3),
        alpha in 1e-3f64..2.0,
    ) {
        let simplex = make_simplex_quadratic(canonical_simplex_matrix(3)).unwrap();
        let total: f64 = raw.iter().sum();
        let x = DVector::from_vec(raw.iter().map(|v| v / total).collect());
        let map = OptimizerMap::new(Method::MirrorDescentEntropy, alpha, &simplex).unwrap();
        let y = map.step(&x).unwrap();
        prop_assert!(y.iter().all(|&v| v > 0.0));
        prop_assert!((y.sum() - 1.0).abs() <= 1e-12);
    }

    /// The sphere retraction keeps iterates on the sphere for any start and
    /// moderate step.
    #[test]
    fn manifold_step_preserves_sphere(
        raw in prop::collection::vec(-1.0f64..1.0, 3),
        alpha in 1e-3f64..0.5,
    ) {
        let norm = DVector::from_vec(raw.clone()).norm();
        prop_assume!(norm > 1e-3);
        let x = DVector::from_vec(raw) / norm;
        let sphere = make_sphere_rayleigh(DMatrix::from_diagonal(&dvector![1.0, 2.0, 5.0])).unwrap();
        let map = OptimizerMap::new(Method::ManifoldGradientDescent, alpha, &sphere).unwrap();
        let y = map.step(&x).unwrap();
        prop_assert!((y.norm() - 1.0).abs() <= 1e-12);
    }

    /// The proximal step satisfies its optimality identity wherever the
    /// subproblem is strongly convex.
    #[test]
    fn prox_identity_holds(
        x0 in -2.0f64..2.0,
        x1 in -2.0f64..2.0,
        alpha in 1e-3f64..0.08,
    ) {
        let problem = make_nesterov_example();
        let map = OptimizerMap::new(Method::ProximalPoint, alpha, &problem).unwrap();
        let x = dvector![x0, x1];
        let z = map.step(&x).unwrap();
        let residual = (&z + problem.gradient(&z) * alpha - &x).norm();
        prop_assert!(residual <= 1e-10);
    }

    /// Spectral classification agrees with the stored label for random
    /// indefinite diagonal quadratics: the origin is unstable for gradient
    /// descent exactly when some eigenvalue is negative.
    #[test]
    fn gd_instability_tracks_negative_curvature(
        l1 in 0.1f64..3.0,
        l2 in -3.0f64..3.0,
        alpha_frac in 0.1f64..0.9,
    ) {
        prop_assume!(l2.abs() > 1e-3);
        let problem = make_quadratic(DMatrix::from_diagonal(&dvector![l1, l2]));
        let alpha = alpha_frac / problem.lipschitz().l;
        let map = OptimizerMap::new(Method::GradientDescent, alpha, &problem).unwrap();
        let dg = differential(&map, &dvector![0.0, 0.0]).unwrap();
        let report = spectral_report(&dg, 1e-9, 1e-12).unwrap();
        prop_assert_eq!(report.is_unstable, l2 < 0.0);
        prop_assert!(report.det_nonzero);
    }
}

#[test]
fn classify_known_points_by_name() {
    // the four CLI-addressable fixture families resolve and classify
    for name in ["nesterov", "quadratic:4", "sphere-rayleigh:3", "simplex-quadratic:4"] {
        let problem = saddle_dynamics::fixture_by_name(name).unwrap();
        for cp in problem.known_critical_points() {
            let class =
                classify_critical_point(&problem, &cp.point, DEFAULT_TOL_GRAD, DEFAULT_TOL_EIG)
                    .unwrap();
            assert!(class.matches(cp.label));
        }
    }
}
