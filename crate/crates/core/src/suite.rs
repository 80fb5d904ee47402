//! Ground-truth fixture problems with known, labeled critical points.
//!
//! Four families:
//!
//! - non-convex quadratics `f(x) = 1/2 x^T H x` (origin is the unique
//!   critical point, a strict saddle whenever `H` is indefinite);
//! - the planar example `f(x, y) = 1/2 x^2 + 1/4 y^4 - 1/2 y^2` with a
//!   saddle at the origin and minima at `(0, +-1)`;
//! - Rayleigh quotients `f(x) = x^T M x` on the unit sphere (critical points
//!   are the unit eigenvectors of `M`);
//! - quadratics on the simplex interior built with equal row sums so the
//!   centroid is an interior critical point.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objective::{
    classify_critical_point, riemannian_gradient, symmetrize, CriticalPointLabel, Domain,
    Lipschitz, ObjectiveProblem, DEFAULT_TOL_EIG, DEFAULT_TOL_GRAD,
};

/// Experiment box for the planar example. Its quartic term has unbounded
/// curvature globally, so the stored Lipschitz constant is the supremum of
/// the Hessian norm over this box; iterates that leave it are on their way
/// to divergence and get caught by the experiment's divergence radius.
pub const NESTEROV_BOX: (f64, f64) = (-2.0, 2.0);

/// Hessian-norm bound for the planar example on [`NESTEROV_BOX`]:
/// `max(1, 3 * 2^2 - 1) = 11`.
pub const NESTEROV_LIPSCHITZ: f64 = 11.0;

/// Minimum eigenvalue gap accepted by [`make_sphere_rayleigh`].
pub const EIGENVALUE_GAP_TOL: f64 = 1e-8;

/// Maximum row-sum spread accepted by [`make_simplex_quadratic`].
pub const ROW_SUM_TOL: f64 = 1e-10;

/// `f(x) = 1/2 x^T H x` on Euclidean space. The origin is registered as a
/// strict saddle iff `lambda_min(H) < 0`, as a local minimum otherwise.
pub fn make_quadratic(h: DMatrix<f64>) -> ObjectiveProblem {
    let h = symmetrize(&h);
    let d = h.nrows();
    let eigs = h.symmetric_eigenvalues();
    let l = eigs.iter().fold(0.0, |m, &e| f64::max(m, e.abs()));
    let l_max = h.diagonal().iter().fold(0.0, |m, &e| f64::max(m, e.abs()));
    let lambda_min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let label = if lambda_min < 0.0 {
        CriticalPointLabel::StrictSaddle
    } else {
        CriticalPointLabel::LocalMin
    };
    let h_val = h.clone();
    let h_grad = h.clone();
    let h_hess = h.clone();
    ObjectiveProblem::new(
        format!("quadratic:{d}"),
        Domain::Euclidean { dim: d },
        move |x| 0.5 * x.dot(&(&h_val * x)),
        move |x| &h_grad * x,
        move |_| h_hess.clone(),
        Lipschitz {
            l: l.max(f64::MIN_POSITIVE),
            l_max: l_max.max(f64::MIN_POSITIVE),
        },
    )
    .with_critical_point(DVector::zeros(d), label)
    .with_constant_hessian(h)
}

/// The planar example `f(x, y) = 1/2 x^2 + 1/4 y^4 - 1/2 y^2`, with the
/// saddle `z1 = (0, 0)` and the isolated minima `z2 = (0, -1)`,
/// `z3 = (0, 1)`. Its gradient map has the closed form
/// `g(x, y) = ((1 - a) x, (1 + a) y - a y^3)`.
pub fn make_nesterov_example() -> ObjectiveProblem {
    ObjectiveProblem::new(
        "nesterov",
        Domain::Euclidean { dim: 2 },
        |x| 0.5 * x[0] * x[0] + 0.25 * x[1].powi(4) - 0.5 * x[1] * x[1],
        |x| DVector::from_vec(vec![x[0], x[1].powi(3) - x[1]]),
        |x| DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0 * x[1] * x[1] - 1.0])),
        Lipschitz {
            l: NESTEROV_LIPSCHITZ,
            l_max: NESTEROV_LIPSCHITZ,
        },
    )
    .with_critical_point(DVector::from_vec(vec![0.0, 0.0]), CriticalPointLabel::StrictSaddle)
    .with_critical_point(DVector::from_vec(vec![0.0, -1.0]), CriticalPointLabel::LocalMin)
    .with_critical_point(DVector::from_vec(vec![0.0, 1.0]), CriticalPointLabel::LocalMin)
}

/// Rayleigh quotient `f(x) = x^T M x` on the unit sphere.
///
/// Critical points are the unit eigenvectors `+-v_i`; the tangent-restricted
/// Riemannian Hessian at `v_i` has eigenvalues `2 (lambda_j - lambda_i)`, so
/// `v_i` is a local minimum iff `lambda_i` is the smallest eigenvalue and a
/// strict saddle otherwise (including the maximal eigenvector, a local max).
/// Errors with `RepeatedEigenvalues` when a gap falls below 1e-8, since a
/// repeated eigenvalue makes the registered points degenerate.
pub fn make_sphere_rayleigh(m: DMatrix<f64>) -> Result<ObjectiveProblem> {
    let m = symmetrize(&m);
    let d = m.nrows();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    for w in order.windows(2) {
        let gap = eig.eigenvalues[w[1]] - eig.eigenvalues[w[0]];
        if gap.abs() < EIGENVALUE_GAP_TOL {
            return Err(Error::RepeatedEigenvalues { gap });
        }
    }

    let l = eig.eigenvalues.iter().fold(0.0, |acc, &e| f64::max(acc, e.abs())) * 2.0;
    let l_max = m.diagonal().iter().fold(0.0, |acc, &e| f64::max(acc, e.abs())) * 2.0;
    let m_val = m.clone();
    let m_grad = m.clone();
    let m_hess = m.clone();
    let mut problem = ObjectiveProblem::new(
        format!("sphere-rayleigh:{d}"),
        Domain::UnitSphere { ambient_dim: d },
        move |x| x.dot(&(&m_val * x)),
        move |x| (&m_grad * x) * 2.0,
        move |_| &m_hess * 2.0,
        Lipschitz { l, l_max },
    )
    .with_constant_hessian(&m * 2.0);

    let min_index = order[0];
    for i in 0..d {
        let v = eig.eigenvectors.column(i).into_owned();
        let v = &v / v.norm();
        let label = if i == min_index {
            CriticalPointLabel::LocalMin
        } else {
            CriticalPointLabel::StrictSaddle
        };
        problem = problem
            .with_critical_point(v.clone(), label)
            .with_critical_point(-v, label);
    }
    Ok(problem)
}

/// `f(x) = 1/2 x^T Q x` on the simplex interior, for symmetric `Q` with
/// equal row sums. Equal row sums give `Q 1 = c 1`, so the tangent-projected
/// gradient vanishes at the centroid, making it an interior critical point.
/// Its label comes from the eigenvalues of the tangent-restricted `P Q P`;
/// if that spectrum touches zero the centroid is left unregistered.
pub fn make_simplex_quadratic(q: DMatrix<f64>) -> Result<ObjectiveProblem> {
    let q = symmetrize(&q);
    let d = q.nrows();
    let row_sums: Vec<f64> = (0..d).map(|i| q.row(i).sum()).collect();
    let spread = row_sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - row_sums.iter().cloned().fold(f64::INFINITY, f64::min);
    if spread.abs() > ROW_SUM_TOL {
        return Err(Error::RowSumMismatch { spread });
    }

    let l = q
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0, |m, &e| f64::max(m, e.abs()));
    let l_max = q.diagonal().iter().fold(0.0, |m, &e| f64::max(m, e.abs()));
    let q_val = q.clone();
    let q_grad = q.clone();
    let q_hess = q.clone();
    let mut problem = ObjectiveProblem::new(
        format!("simplex-quadratic:{d}"),
        Domain::SimplexInterior { ambient_dim: d },
        move |x| 0.5 * x.dot(&(&q_val * x)),
        move |x| &q_grad * x,
        move |_| q_hess.clone(),
        Lipschitz {
            l: l.max(f64::MIN_POSITIVE),
            l_max: l_max.max(f64::MIN_POSITIVE),
        },
    )
    .with_constant_hessian(q.clone());

    let centroid = DVector::from_element(d, 1.0 / d as f64);
    let domain = Domain::SimplexInterior { ambient_dim: d };
    let basis = domain.tangent_basis(&centroid);
    let restricted = symmetrize(&(basis.transpose() * &q * basis));
    let lambda_min = restricted
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if lambda_min < -DEFAULT_TOL_EIG {
        problem = problem.with_critical_point(centroid, CriticalPointLabel::StrictSaddle);
    } else if lambda_min > DEFAULT_TOL_EIG {
        problem = problem.with_critical_point(centroid, CriticalPointLabel::LocalMin);
    }
    Ok(problem)
}

/// Canonical indefinite diagonal for `quadratic:<d>`: `1, -1, 2, -2, ...`.
pub fn canonical_quadratic_matrix(d: usize) -> DMatrix<f64> {
    let diag = DVector::from_fn(d, |i, _| {
        let magnitude = (i / 2 + 1) as f64;
        if i % 2 == 0 {
            magnitude
        } else {
            -magnitude
        }
    });
    DMatrix::from_diagonal(&diag)
}

/// Canonical matrix for `sphere-rayleigh:<d>`: `diag(1, 2, ..., d)`.
pub fn canonical_rayleigh_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| (i + 1) as f64))
}

/// Canonical matrix for `simplex-quadratic:<D>`.
///
/// For `D = 3` this is the reference fixture
/// `[[2,-1,0],[-1,0,2],[0,2,-1]]` (row sums 1, centroid a strict saddle
/// with tangent spectrum `+-sqrt(7)`). Other dimensions use a symmetric
/// circulant with weight 1 at circular distance 1 and -2 at distance 2,
/// which keeps row sums equal and the tangent spectrum mixed and nonzero.
pub fn canonical_simplex_matrix(d: usize) -> DMatrix<f64> {
    if d == 3 {
        return DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 0.0, 2.0, 0.0, 2.0, -1.0]);
    }
    DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            return 0.0;
        }
        let gap = i.abs_diff(j);
        match gap.min(d - gap) {
            1 => 1.0,
            2 => -2.0,
            _ => 0.0,
        }
    })
}

/// One catalog entry: a fixture plus a note on where it comes from.
#[derive(Debug, Clone)]
pub struct FixtureEntry {
    pub problem: ObjectiveProblem,
    pub note: &'static str,
}

/// The standard fixture catalog, one representative per family.
#[derive(Debug)]
pub struct FixtureCatalog {
    entries: Vec<FixtureEntry>,
}

impl FixtureCatalog {
    pub fn standard() -> Self {
        let entries = vec![
            FixtureEntry {
                problem: make_quadratic(canonical_quadratic_matrix(2)),
                note: "non-convex quadratic diag(1,-1); stable set of the origin is the x1-axis",
            },
            FixtureEntry {
                problem: make_nesterov_example(),
                note: "planar quartic example; the x-axis is the stable set of the saddle",
            },
            FixtureEntry {
                problem: make_sphere_rayleigh(canonical_rayleigh_matrix(3))
                    .expect("canonical rayleigh matrix has distinct eigenvalues"),
                note: "Rayleigh quotient on the sphere; eigenvectors are the critical points",
            },
            FixtureEntry {
                problem: make_simplex_quadratic(canonical_simplex_matrix(3))
                    .expect("canonical simplex matrix has equal row sums"),
                note: "equal-row-sum quadratic on the simplex; centroid is an interior saddle",
            },
        ];
        FixtureCatalog { entries }
    }

    pub fn entries(&self) -> &[FixtureEntry] {
        &self.entries
    }

    /// Check that every registered critical point classifies as labeled.
    pub fn verify(&self) -> Result<()> {
        for entry in &self.entries {
            verify_known_critical_points(&entry.problem)?;
        }
        Ok(())
    }
}

/// Re-classify each registered critical point and fail if any label does
/// not verify.
pub fn verify_known_critical_points(problem: &ObjectiveProblem) -> Result<()> {
    for (i, cp) in problem.known_critical_points().iter().enumerate() {
        let grad_norm = riemannian_gradient(problem, &cp.point)?.norm();
        if grad_norm > DEFAULT_TOL_GRAD {
            return Err(Error::Config(format!(
                "critical point {i} of {} has gradient norm {grad_norm:.3e}",
                problem.name()
            )));
        }
        let class = classify_critical_point(problem, &cp.point, DEFAULT_TOL_GRAD, DEFAULT_TOL_EIG)?;
        if !class.matches(cp.label) {
            return Err(Error::Config(format!(
                "critical point {i} of {} classifies as {class}, stored label {:?}",
                problem.name(),
                cp.label
            )));
        }
    }
    Ok(())
}

/// Resolve a fixture by CLI name: `quadratic:<d>`, `nesterov`,
/// `sphere-rayleigh:<d>`, or `simplex-quadratic:<D>`.
pub fn fixture_by_name(name: &str) -> Result<ObjectiveProblem> {
    let parse_dim = |spec: &str, min: usize| -> Result<usize> {
        let d: usize = spec
            .parse()
            .map_err(|_| Error::Config(format!("bad dimension `{spec}` in fixture name `{name}`")))?;
        if d < min {
            return Err(Error::Config(format!(
                "fixture `{name}` needs dimension >= {min}"
            )));
        }
        Ok(d)
    };
    if name == "nesterov" {
        return Ok(make_nesterov_example());
    }
    if let Some(spec) = name.strip_prefix("quadratic:") {
        return Ok(make_quadratic(canonical_quadratic_matrix(parse_dim(spec, 1)?)));
    }
    if let Some(spec) = name.strip_prefix("sphere-rayleigh:") {
        return make_sphere_rayleigh(canonical_rayleigh_matrix(parse_dim(spec, 2)?));
    }
    if let Some(spec) = name.strip_prefix("simplex-quadratic:") {
        return make_simplex_quadratic(canonical_simplex_matrix(parse_dim(spec, 2)?));
    }
    Err(Error::Config(format!("unknown fixture `{name}`")))
}
