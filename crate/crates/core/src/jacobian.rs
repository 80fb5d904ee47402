//! Differentials of the optimizer maps and spectral classification of
//! fixed points.
//!
//! Euclidean methods get their analytic Jacobian at any point:
//!
//! - gradient descent   `Dg(x) = Id - a hess f(x)`
//! - proximal point     `Dg(x) = (Id + a hess f(g(x)))^{-1}`
//! - coordinate descent `Dg(x) = prod_j (Id - a e_j e_j^T hess f(y_j))`
//!   over the sweep's intermediate points, later factors on the left
//! - block coordinate descent: same product with block projectors `P_S`
//!
//! The sphere and simplex methods get a tangent-space differential at fixed
//! points, where the closed forms hold:
//!
//! - manifold gradient descent `Id_T - a hess_R f(x*)`
//! - mirror descent            `Id_T - a (hess_R Phi)^{-1} hess_R f(x*)`
//!
//! Away from fixed points, [`fd_differential`] provides the central-difference
//! Jacobian that cross-validates every analytic formula.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::maps::{Method, OptimizerMap};
use crate::objective::{riemannian_gradient, riemannian_hessian, symmetrize, Domain};

/// Instability margin: a fixed point is unstable when the largest eigenvalue
/// modulus exceeds `1 + TOL_SPEC`.
pub const DEFAULT_TOL_SPEC: f64 = 1e-9;
/// Determinants below this magnitude count as vanishing.
pub const DEFAULT_TOL_DET: f64 = 1e-12;
/// Gradient-norm tolerance for the fixed-point-only formulas.
pub const FIXED_POINT_GRAD_TOL: f64 = 1e-8;
/// QR-iteration cap for the nonsymmetric eigensolver.
const SCHUR_MAX_ITERS: usize = 10_000;

/// A map differential: ambient `d x d` for Euclidean methods, or
/// tangent-restricted `(D-1) x (D-1)` in the orthonormal basis `basis`
/// for sphere/simplex methods.
#[derive(Debug, Clone)]
pub struct MapDifferential {
    pub matrix: DMatrix<f64>,
    pub basis: Option<DMatrix<f64>>,
}

impl MapDifferential {
    fn ambient(matrix: DMatrix<f64>) -> Self {
        MapDifferential { matrix, basis: None }
    }
}

/// Spectral summary of a differential.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Eigenvalues sorted by decreasing modulus (ties broken by real part,
    /// then imaginary part) so reports are reproducible.
    pub eigenvalues: Vec<Complex<f64>>,
    pub spectral_radius: f64,
    pub max_modulus: f64,
    /// Determinant, computed by LU factorization (an independent route from
    /// the eigensolve).
    pub det: f64,
    /// `max_modulus > 1 + tol_spec`.
    pub is_unstable: bool,
    /// `|det| > tol_det`.
    pub det_nonzero: bool,
}

impl std::fmt::Display for SpectralReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "eigenvalues:")?;
        for ev in &self.eigenvalues {
            writeln!(f, "  {:+.12e} {:+.12e}i  (|.| = {:.12e})", ev.re, ev.im, ev.norm())?;
        }
        writeln!(f, "spectral_radius = {:.12e}", self.spectral_radius)?;
        writeln!(f, "det = {:.12e}", self.det)?;
        writeln!(f, "unstable = {}", self.is_unstable)?;
        write!(f, "det_nonzero = {}", self.det_nonzero)
    }
}

/// Analytic differential of the map at `x`, dispatched on the method.
/// Manifold and mirror methods require `x` to be a fixed point and return
/// `NotAFixedPoint` otherwise.
pub fn differential(map: &OptimizerMap, x: &DVector<f64>) -> Result<MapDifferential> {
    match map.method() {
        Method::GradientDescent => dg_gradient_descent(map, x),
        Method::ProximalPoint => dg_proximal_point(map, x),
        Method::CoordinateDescent => dg_coordinate_descent(map, x),
        Method::BlockCoordinateDescent(_) => dg_block_coordinate_descent(map, x),
        Method::ManifoldGradientDescent => dg_manifold_gd_at_fixed_point(map, x),
        Method::MirrorDescentEntropy | Method::MirrorDescentEuclidean => {
            dg_mirror_descent_at_fixed_point(map, x)
        }
    }
}

/// `Id - a hess f(x)`; eigenvalues are `1 - a lambda_i`.
pub fn dg_gradient_descent(map: &OptimizerMap, x: &DVector<f64>) -> Result<MapDifferential> {
    let d = x.len();
    let h = map.problem().hessian(x);
    Ok(MapDifferential::ambient(DMatrix::identity(d, d) - h * map.alpha()))
}

/// `(Id + a hess f(z))^{-1}` at `z = prox(x)`, by dense LU solve.
pub fn dg_proximal_point(map: &OptimizerMap, x: &DVector<f64>) -> Result<MapDifferential> {
    let d = x.len();
    let z = map.prox_step(x)?;
    let system = DMatrix::identity(d, d) + map.problem().hessian(&z) * map.alpha();
    let inverse = system
        .lu()
        .solve(&DMatrix::identity(d, d))
        .ok_or(Error::SingularMatrix)?;
    Ok(MapDifferential::ambient(inverse))
}

/// Coordinate-descent differential via the sweep's true intermediates.
pub fn dg_coordinate_descent(map: &OptimizerMap, x: &DVector<f64>) -> Result<MapDifferential> {
    let (_, visited) = map.cd_sweep_with_intermediates(x)?;
    dg_coordinate_descent_with_intermediates(map, &visited)
}

/// Ordered product of the per-coordinate factors
/// `Id - a e_i e_i^T hess f(y_i)`, the factor for a later coordinate
/// multiplying on the left. `visited[i]` is the point before coordinate `i`
/// updated, as returned by `cd_sweep_with_intermediates`.
pub fn dg_coordinate_descent_with_intermediates(
    map: &OptimizerMap,
    visited: &[DVector<f64>],
) -> Result<MapDifferential> {
    let d = map.problem().dim();
    if visited.len() != d {
        return Err(Error::Config(format!(
            "expected {d} sweep intermediates, got {}",
            visited.len()
        )));
    }
    let alpha = map.alpha();
    let mut product = DMatrix::<f64>::identity(d, d);
    for (i, y) in visited.iter().enumerate() {
        let h = map.problem().hessian(y);
        // (Id - a e_i e_i^T H) M only rewrites row i of M
        let update = h.row(i) * &product;
        let mut row = product.row_mut(i);
        row -= update * alpha;
    }
    Ok(MapDifferential::ambient(product))
}

/// Block-coordinate-descent differential via the sweep's intermediates.
pub fn dg_block_coordinate_descent(map: &OptimizerMap, x: &DVector<f64>) -> Result<MapDifferential> {
    let Method::BlockCoordinateDescent(partition) = map.method() else {
        return Err(Error::Config(
            "dg_block_coordinate_descent requires a block-coordinate-descent map".to_string(),
        ));
    };
    let (_, visited) = map.bcd_sweep_with_intermediates(x, partition)?;
    let alpha = map.alpha();
    let d = map.problem().dim();
    let mut product = DMatrix::<f64>::identity(d, d);
    for (block, y) in partition.blocks().iter().zip(&visited) {
        let h = map.problem().hessian(y);
        // (Id - a P_S H) M rewrites exactly the rows in S, all of them
        // against the pre-block product
        let updates: Vec<_> = block.iter().map(|&i| (i, h.row(i) * &product)).collect();
        for (i, update) in updates {
            let mut row = product.row_mut(i);
            row -= update * alpha;
        }
    }
    Ok(MapDifferential::ambient(product))
}

fn require_fixed_point(map: &OptimizerMap, x: &DVector<f64>) -> Result<()> {
    let grad_norm = riemannian_gradient(map.problem(), x)?.norm();
    if grad_norm > FIXED_POINT_GRAD_TOL {
        return Err(Error::NotAFixedPoint {
            grad_norm,
            tol: FIXED_POINT_GRAD_TOL,
        });
    }
    Ok(())
}

/// `Id_T - a hess_R f(x*)` in an orthonormal tangent basis at the fixed
/// point `x*` on the sphere. The formula only holds where the Riemannian
/// gradient vanishes; elsewhere it returns `NotAFixedPoint`.
pub fn dg_manifold_gd_at_fixed_point(
    map: &OptimizerMap,
    x: &DVector<f64>,
) -> Result<MapDifferential> {
    require_fixed_point(map, x)?;
    let basis = map.problem().domain().tangent_basis(x);
    let hr = riemannian_hessian(map.problem(), x)?;
    let restricted = symmetrize(&(basis.transpose() * hr * &basis));
    let t = restricted.nrows();
    Ok(MapDifferential {
        matrix: DMatrix::identity(t, t) - restricted * map.alpha(),
        basis: Some(basis),
    })
}

/// `Id_T - a A^{-1} H_T` at an interior fixed point, with `A` the
/// tangent-restricted mirror-map Hessian (`diag(1/x_i)` for entropy) and
/// `H_T` the tangent-restricted Hessian of `f`. With the Euclidean mirror
/// map `A = Id`, this is exactly the gradient-descent differential.
pub fn dg_mirror_descent_at_fixed_point(
    map: &OptimizerMap,
    x: &DVector<f64>,
) -> Result<MapDifferential> {
    require_fixed_point(map, x)?;
    match map.method() {
        Method::MirrorDescentEuclidean => dg_gradient_descent(map, x),
        _ => {
            let (a, h, basis) = mirror_tangent_operators(map, x)?;
            let t = a.nrows();
            let a_inv_h = a.lu().solve(&h).ok_or(Error::SingularMatrix)?;
            Ok(MapDifferential {
                matrix: DMatrix::identity(t, t) - a_inv_h * map.alpha(),
                basis: Some(basis),
            })
        }
    }
}

/// The similar symmetric form `Id_T - a A^{-1/2} H_T A^{-1/2}`, which has
/// the same eigenvalues as [`dg_mirror_descent_at_fixed_point`].
pub fn dg_mirror_descent_symmetrized(
    map: &OptimizerMap,
    x: &DVector<f64>,
) -> Result<MapDifferential> {
    require_fixed_point(map, x)?;
    match map.method() {
        Method::MirrorDescentEuclidean => dg_gradient_descent(map, x),
        _ => {
            let (a, h, basis) = mirror_tangent_operators(map, x)?;
            let t = a.nrows();
            let eig = a.symmetric_eigen();
            if eig.eigenvalues.iter().any(|&e| e <= 0.0) {
                return Err(Error::SingularMatrix);
            }
            let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| 1.0 / e.sqrt()));
            let a_inv_sqrt = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
            let sandwich = symmetrize(&(&a_inv_sqrt * h * &a_inv_sqrt));
            Ok(MapDifferential {
                matrix: DMatrix::identity(t, t) - sandwich * map.alpha(),
                basis: Some(basis),
            })
        }
    }
}

fn mirror_tangent_operators(
    map: &OptimizerMap,
    x: &DVector<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let domain = map.problem().domain();
    let basis = domain.tangent_basis(x);
    // entropy mirror map: hess Phi = diag(1/x_i)
    let phi_hess = DMatrix::from_diagonal(&x.map(|v| 1.0 / v));
    let a = symmetrize(&(basis.transpose() * phi_hess * &basis));
    let hr = riemannian_hessian(map.problem(), x)?;
    let h = symmetrize(&(basis.transpose() * hr * &basis));
    Ok((a, h, basis))
}

/// Central-difference Jacobian of the map `g`.
///
/// Euclidean domains difference along the ambient axes. Sphere and simplex
/// domains difference along an orthonormal tangent basis, retract the
/// perturbed points (normalization on the sphere; the simplex needs none,
/// tangent steps preserve the affine constraint), and project the image
/// differences back onto the same basis.
pub fn fd_differential(map: &OptimizerMap, x: &DVector<f64>, h: f64) -> Result<MapDifferential> {
    let domain = map.problem().domain();
    match domain {
        Domain::Euclidean { dim } => {
            let mut jac = DMatrix::zeros(dim, dim);
            for j in 0..dim {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let column = (map.step(&xp)? - map.step(&xm)?) / (2.0 * h);
                jac.set_column(j, &column);
            }
            Ok(MapDifferential::ambient(jac))
        }
        Domain::UnitSphere { .. } | Domain::SimplexInterior { .. } => {
            let basis = domain.tangent_basis(x);
            let t = basis.ncols();
            let retract = |v: DVector<f64>| -> DVector<f64> {
                match domain {
                    Domain::UnitSphere { .. } => {
                        let n = v.norm();
                        v / n
                    }
                    _ => v,
                }
            };
            let mut jac = DMatrix::zeros(t, t);
            for j in 0..t {
                let dir = basis.column(j).into_owned();
                let xp = retract(x + &dir * h);
                let xm = retract(x - &dir * h);
                let diff = (map.step(&xp)? - map.step(&xm)?) / (2.0 * h);
                jac.set_column(j, &(basis.transpose() * diff));
            }
            Ok(MapDifferential {
                matrix: jac,
                basis: Some(basis),
            })
        }
    }
}

/// Dense nonsymmetric eigensolve plus LU determinant of a differential.
pub fn spectral_report(
    dg: &MapDifferential,
    tol_spec: f64,
    tol_det: f64,
) -> Result<SpectralReport> {
    let m = &dg.matrix;
    if !m.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteIterate);
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITERS)
        .ok_or(Error::EigensolverFailure)?;
    let mut eigenvalues: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().cloned().collect();
    eigenvalues.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    let max_modulus = eigenvalues.first().map(|e| e.norm()).unwrap_or(0.0);
    let det = m.determinant();
    Ok(SpectralReport {
        spectral_radius: max_modulus,
        max_modulus,
        det,
        is_unstable: max_modulus > 1.0 + tol_spec,
        det_nonzero: det.abs() > tol_det,
        eigenvalues,
    })
}

/// Relative Frobenius distance between two differentials, the yardstick for
/// analytic-vs-finite-difference cross-checks.
pub fn relative_frobenius(a: &MapDifferential, b: &MapDifferential) -> f64 {
    let denom = a.matrix.norm().max(1e-30);
    (&a.matrix - &b.matrix).norm() / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::Method;
    use crate::objective::BlockPartition;
    use crate::suite;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    #[test]
    fn gd_differential_at_nesterov_saddle() {
        let p = suite::make_nesterov_example();
        let map = OptimizerMap::new(Method::GradientDescent, 0.1, &p).unwrap();
        let dg = dg_gradient_descent(&map, &dvector![0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(dg.matrix[(0, 0)], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(dg.matrix[(1, 1)], 1.1, epsilon = 1e-15);

        let report = spectral_report(&dg, DEFAULT_TOL_SPEC, DEFAULT_TOL_DET).unwrap();
        assert!(report.is_unstable);
        assert_abs_diff_eq!(report.spectral_radius, 1.1, epsilon = 1e-12);
        assert_abs_diff_eq!(report.det, 0.99, epsilon = 1e-12);
    }

    #[test]
    fn gd_differential_zero_alpha_is_identity() {
        let p = suite::make_nesterov_example();
        let map = OptimizerMap::new(Method::GradientDescent, 1e-300, &p).unwrap();
        let dg = dg_gradient_descent(&map, &dvector![0.7, -0.3]).unwrap();
        assert!((dg.matrix - DMatrix::<f64>::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn prox_differential_indefinite_quadratic() {
        let p = suite::make_quadratic(DMatrix::from_diagonal(&dvector![1.0, -1.0]));
        let map = OptimizerMap::new(Method::ProximalPoint, 0.25, &p).unwrap();
        let dg = dg_proximal_point(&map, &dvector![0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(dg.matrix[(0, 0)], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(dg.matrix[(1, 1)], 4.0 / 3.0, epsilon = 1e-12);
        // the negative curvature direction is expanding: 1/(1 + a lambda) > 1
        assert!(dg.matrix[(1, 1)] > 1.0);
    }

    #[test]
    fn cd_differential_diagonal_hessian() {
        let p = suite::make_quadratic(DMatrix::from_diagonal(&dvector![2.0, -1.0, 0.5]));
        let alpha = 0.2;
        let map = OptimizerMap::new(Method::CoordinateDescent, alpha, &p).unwrap();
        let dg = dg_coordinate_descent(&map, &dvector![0.4, -0.2, 1.0]).unwrap();
        let expect =
            DMatrix::from_diagonal(&dvector![1.0 - alpha * 2.0, 1.0 + alpha, 1.0 - alpha * 0.5]);
        assert!((dg.matrix - expect).norm() < 1e-14);
    }

    #[test]
    fn cd_differential_frozen_saddle_spectrum() {
        // J = (Id - 0.2 e2 e2^T H)(Id - 0.2 e1 e1^T H) for H = [[1,2],[2,1]]
        let p = suite::make_quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        let map = OptimizerMap::new(Method::CoordinateDescent, 0.2, &p).unwrap();
        let dg = dg_coordinate_descent(&map, &dvector![0.0, 0.0]).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.8, -0.4, -0.32, 0.96]);
        assert!((dg.matrix.clone() - expect).norm() < 1e-15);
        let report = spectral_report(&dg, DEFAULT_TOL_SPEC, DEFAULT_TOL_DET).unwrap();
        assert_abs_diff_eq!(report.spectral_radius, 1.2466060555964673, epsilon = 1e-12);
        assert!(report.is_unstable);
    }

    #[test]
    fn cd_differential_matches_finite_difference_on_nesterov() {
        let p = suite::make_nesterov_example();
        let map = OptimizerMap::new(Method::CoordinateDescent, 0.08, &p).unwrap();
        let x = dvector![0.9, -1.3];
        let analytic = dg_coordinate_descent(&map, &x).unwrap();
        let fd = fd_differential(&map, &x, 1e-5).unwrap();
        assert!(relative_frobenius(&analytic, &fd) <= 1e-5);
    }

    #[test]
    fn cd_differential_rejects_wrong_intermediate_count() {
        let p = suite::make_nesterov_example();
        let map = OptimizerMap::new(Method::CoordinateDescent, 0.08, &p).unwrap();
        let err = dg_coordinate_descent_with_intermediates(&map, &vec![dvector![0.0, 0.0]; 3]);
        assert!(err.is_err());
    }

    #[test]
    fn bcd_differential_single_block_is_gd() {
        let p = suite::make_quadratic(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        let partition = BlockPartition::single_block(2);
        let bcd = OptimizerMap::new(Method::BlockCoordinateDescent(partition), 0.15, &p).unwrap();
        let gd = OptimizerMap::new(Method::GradientDescent, 0.15, &p).unwrap();
        let x = dvector![0.3, -0.8];
        let a = dg_block_coordinate_descent(&bcd, &x).unwrap();
        let b = dg_gradient_descent(&gd, &x).unwrap();
        assert!((a.matrix - b.matrix).norm() < 1e-15);
    }

    #[test]
    fn bcd_differential_singletons_match_cd() {
        let p = suite::make_nesterov_example();
        let bcd = OptimizerMap::new(
            Method::BlockCoordinateDescent(BlockPartition::singletons(2)),
            0.07,
            &p,
        )
        .unwrap();
        let cd = OptimizerMap::new(Method::CoordinateDescent, 0.07, &p).unwrap();
        let x = dvector![1.4, 0.6];
        let a = dg_block_coordinate_descent(&bcd, &x).unwrap();
        let b = dg_coordinate_descent(&cd, &x).unwrap();
        assert!((a.matrix - b.matrix).norm() <= 1e-14);
    }

    #[test]
    fn manifold_differential_at_eigenvectors() {
        let p = suite::make_sphere_rayleigh(DMatrix::from_diagonal(&dvector![1.0, 2.0])).unwrap();
        let map = OptimizerMap::new(Method::ManifoldGradientDescent, 0.1, &p).unwrap();

        // saddle e2: tangent curvature -2, eigenvalue 1 - 0.1 (-2) = 1.2
        let dg = dg_manifold_gd_at_fixed_point(&map, &dvector![0.0, 1.0]).unwrap();
        assert_eq!(dg.matrix.nrows(), 1);
        assert_abs_diff_eq!(dg.matrix[(0, 0)], 1.2, epsilon = 1e-12);

        // minimum e1: tangent curvature 2, eigenvalue 0.8
        let dg = dg_manifold_gd_at_fixed_point(&map, &dvector![1.0, 0.0]).unwrap();
        assert_abs_diff_eq!(dg.matrix[(0, 0)], 0.8, epsilon = 1e-12);
    }

    #[test]
    fn manifold_differential_requires_fixed_point() {
        let p = suite::make_sphere_rayleigh(DMatrix::from_diagonal(&dvector![1.0, 2.0])).unwrap();
        let map = OptimizerMap::new(Method::ManifoldGradientDescent, 0.1, &p).unwrap();
        let x = dvector![0.6, 0.8];
        assert!(matches!(
            dg_manifold_gd_at_fixed_point(&map, &x),
            Err(Error::NotAFixedPoint { .. })
        ));
    }

    #[test]
    fn manifold_differential_matches_finite_difference() {
        let p = suite::make_sphere_rayleigh(DMatrix::from_diagonal(&dvector![1.0, 2.0, 5.0])).unwrap();
        let map = OptimizerMap::new(Method::ManifoldGradientDescent, 0.1, &p).unwrap();
        let x = dvector![0.0, 1.0, 0.0];
        let analytic = dg_manifold_gd_at_fixed_point(&map, &x).unwrap();
        let fd = fd_differential(&map, &x, 1e-5).unwrap();
        assert!(relative_frobenius(&analytic, &fd) <= 1e-6);
    }

    #[test]
    fn mirror_differential_euclidean_map_equals_gd() {
        let p = suite::make_quadratic(DMatrix::from_diagonal(&dvector![1.0, -1.0]));
        let mirror = OptimizerMap::new(Method::MirrorDescentEuclidean, 0.1, &p).unwrap();
        let gd = OptimizerMap::new(Method::GradientDescent, 0.1, &p).unwrap();
        let origin = dvector![0.0, 0.0];
        let a = dg_mirror_descent_at_fixed_point(&mirror, &origin).unwrap();
        let b = dg_gradient_descent(&gd, &origin).unwrap();
        assert_eq!(a.matrix, b.matrix);
    }

    #[test]
    fn mirror_differential_centroid_unstable_and_similar() {
        let p = suite::make_simplex_quadratic(suite::canonical_simplex_matrix(3)).unwrap();
        let alpha = 0.3;
        let map = OptimizerMap::new(Method::MirrorDescentEntropy, alpha, &p).unwrap();
        let centroid = DVector::from_element(3, 1.0 / 3.0);

        let dg = dg_mirror_descent_at_fixed_point(&map, &centroid).unwrap();
        let report = spectral_report(&dg, DEFAULT_TOL_SPEC, DEFAULT_TOL_DET).unwrap();
        // A = 3 Id on the tangent space, so eigenvalues are 1 -+ (a/3) sqrt(7)
        let expect = 1.0 + alpha / 3.0 * 7f64.sqrt();
        assert_abs_diff_eq!(report.spectral_radius, expect, epsilon = 1e-10);
        assert!(report.is_unstable);

        let sym = dg_mirror_descent_symmetrized(&map, &centroid).unwrap();
        let sym_report = spectral_report(&sym, DEFAULT_TOL_SPEC, DEFAULT_TOL_DET).unwrap();
        for (a, b) in report.eigenvalues.iter().zip(&sym_report.eigenvalues) {
            assert!((a - b).norm() <= 1e-10);
        }
    }

    #[test]
    fn mirror_differential_matches_finite_difference_at_centroid() {
        let p = suite::make_simplex_quadratic(suite::canonical_simplex_matrix(3)).unwrap();
        let map = OptimizerMap::new(Method::MirrorDescentEntropy, 0.2, &p).unwrap();
        let centroid = DVector::from_element(3, 1.0 / 3.0);
        let analytic = dg_mirror_descent_at_fixed_point(&map, &centroid).unwrap();
        let fd = fd_differential(&map, &centroid, 1e-5).unwrap();
        assert!(relative_frobenius(&analytic, &fd) <= 1e-6);
    }

    #[test]
    fn mirror_differential_requires_fixed_point() {
        let p = suite::make_simplex_quadratic(suite::canonical_simplex_matrix(3)).unwrap();
        let map = OptimizerMap::new(Method::MirrorDescentEntropy, 0.2, &p).unwrap();
        assert!(matches!(
            dg_mirror_descent_at_fixed_point(&map, &dvector![0.6, 0.3, 0.1]),
            Err(Error::NotAFixedPoint { .. })
        ));
    }

    #[test]
    fn fd_differential_exact_on_affine_map() {
        // GD on a quadratic is affine, so central differences are exact
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let p = suite::make_quadratic(h.clone());
        let alpha = 0.15;
        let map = OptimizerMap::new(Method::GradientDescent, alpha, &p).unwrap();
        let fd = fd_differential(&map, &dvector![0.4, -0.9], 1e-5).unwrap();
        let expect = DMatrix::identity(2, 2) - h * alpha;
        assert!((fd.matrix - expect).norm() <= 1e-9);
    }

    #[test]
    fn spectral_report_identity_and_ordering() {
        let dg = MapDifferential::ambient(DMatrix::identity(3, 3));
        let report = spectral_report(&dg, DEFAULT_TOL_SPEC, DEFAULT_TOL_DET).unwrap();
        assert!(!report.is_unstable);
        assert_abs_diff_eq!(report.spectral_radius, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(report.det, 1.0, epsilon = 1e-14);
        assert!(report.det_nonzero);

        let rotation = DMatrix::from_row_slice(2, 2, &[0.0, -2.0, 2.0, 0.0]);
        let report = spectral_report(&MapDifferential::ambient(rotation), 1e-9, 1e-12).unwrap();
        // complex pair 2i, -2i: modulus 2 for both
        assert_abs_diff_eq!(report.max_modulus, 2.0, epsilon = 1e-12);
        assert_eq!(report.spectral_radius, report.max_modulus);
        assert!(report.is_unstable);
    }

    #[test]
    fn spectral_report_rejects_non_finite() {
        let dg = MapDifferential::ambient(DMatrix::from_element(2, 2, f64::NAN));
        assert!(spectral_report(&dg, 1e-9, 1e-12).is_err());
    }
}
