//! Objective-function model: value/gradient/Hessian oracles, domain
//! descriptors, Riemannian derivatives, and finite-difference verification
//! oracles.
//!
//! Three domains are supported: full Euclidean space, the unit sphere
//! embedded in `R^D`, and the interior of the probability simplex. The
//! sphere and simplex both have codimension one, so their tangent spaces
//! have dimension `D - 1`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Absolute tolerance for the sphere and simplex membership tests.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Default gradient-norm tolerance for critical-point classification.
pub const DEFAULT_TOL_GRAD: f64 = 1e-8;
/// Default eigenvalue tolerance separating strict saddles from degenerate points.
pub const DEFAULT_TOL_EIG: f64 = 1e-8;

/// Constraint set an objective is defined on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// All of `R^d`.
    Euclidean { dim: usize },
    /// `{x in R^D : ||x||_2 = 1}`.
    UnitSphere { ambient_dim: usize },
    /// `{x in R^D : x_i > 0, sum x_i = 1}`.
    SimplexInterior { ambient_dim: usize },
}

impl Domain {
    pub fn ambient_dim(&self) -> usize {
        match *self {
            Domain::Euclidean { dim } => dim,
            Domain::UnitSphere { ambient_dim } | Domain::SimplexInterior { ambient_dim } => {
                ambient_dim
            }
        }
    }

    /// Dimension of the tangent space: `d` for Euclidean, `D - 1` otherwise.
    pub fn tangent_dim(&self) -> usize {
        match *self {
            Domain::Euclidean { dim } => dim,
            Domain::UnitSphere { ambient_dim } | Domain::SimplexInterior { ambient_dim } => {
                ambient_dim - 1
            }
        }
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.check_membership(x).is_ok()
    }

    /// Membership test. Euclidean accepts all finite vectors; the sphere
    /// requires `| ||x|| - 1 | <= 1e-10`; the simplex interior requires all
    /// components strictly positive and `|sum - 1| <= 1e-10`.
    pub fn check_membership(&self, x: &DVector<f64>) -> Result<()> {
        let fail = |reason: String| Error::DomainViolation {
            domain: self.to_string(),
            reason,
        };
        if x.len() != self.ambient_dim() {
            return Err(fail(format!(
                "dimension {} does not match ambient dimension {}",
                x.len(),
                self.ambient_dim()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(fail("non-finite component".to_string()));
        }
        match *self {
            Domain::Euclidean { .. } => Ok(()),
            Domain::UnitSphere { .. } => {
                let err = (x.norm() - 1.0).abs();
                if err <= MEMBERSHIP_TOL {
                    Ok(())
                } else {
                    Err(fail(format!("| ||x|| - 1 | = {err:.3e}")))
                }
            }
            Domain::SimplexInterior { .. } => {
                if let Some(min) = x.iter().cloned().reduce(f64::min) {
                    if min <= 0.0 {
                        return Err(fail(format!("component {min:.3e} is not positive")));
                    }
                }
                let err = (x.sum() - 1.0).abs();
                if err <= MEMBERSHIP_TOL {
                    Ok(())
                } else {
                    Err(fail(format!("|sum - 1| = {err:.3e}")))
                }
            }
        }
    }

    /// Orthogonal projection of `v` onto the tangent space at `x`.
    ///
    /// Sphere: `(Id - x x^T) v`. Simplex: `v - mean(v) * ones` (the affine
    /// constraint `sum = 1` has normal `ones`). Euclidean: identity.
    pub fn tangent_project(&self, x: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match *self {
            Domain::Euclidean { .. } => v.clone(),
            Domain::UnitSphere { .. } => v - x * x.dot(v),
            Domain::SimplexInterior { ambient_dim } => {
                let mean = v.sum() / ambient_dim as f64;
                v.map(|vi| vi - mean)
            }
        }
    }

    /// The tangent projector as a dense matrix.
    pub fn tangent_projector(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.ambient_dim();
        match *self {
            Domain::Euclidean { .. } => DMatrix::identity(d, d),
            Domain::UnitSphere { .. } => DMatrix::identity(d, d) - x * x.transpose(),
            Domain::SimplexInterior { .. } => {
                DMatrix::identity(d, d) - DMatrix::from_element(d, d, 1.0 / d as f64)
            }
        }
    }

    /// Orthonormal basis of the tangent space at `x`, as the columns of a
    /// `D x tangent_dim` matrix.
    ///
    /// Built from a column-pivoted QR of the tangent projector, so the basis
    /// is deterministic for a given `x` and spans exactly the projector's
    /// range even when coordinate axes line up with the normal direction.
    pub fn tangent_basis(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.ambient_dim();
        match *self {
            Domain::Euclidean { .. } => DMatrix::identity(d, d),
            _ => {
                let q = self.tangent_projector(x).col_piv_qr().q();
                q.columns(0, self.tangent_dim()).into_owned()
            }
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Domain::Euclidean { dim } => write!(f, "euclidean({dim})"),
            Domain::UnitSphere { ambient_dim } => write!(f, "unit-sphere({ambient_dim})"),
            Domain::SimplexInterior { ambient_dim } => write!(f, "simplex-interior({ambient_dim})"),
        }
    }
}

/// Label stored with a fixture's known critical point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalPointLabel {
    LocalMin,
    StrictSaddle,
}

/// Outcome of [`classify_critical_point`].
///
/// Local maximizers fold into `StrictSaddle`: they have a strictly negative
/// Hessian eigenvalue, which is the only property the classification uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalPointClass {
    NotCritical,
    LocalMinCandidate,
    StrictSaddle,
    Degenerate,
}

impl CriticalPointClass {
    pub fn matches(&self, label: CriticalPointLabel) -> bool {
        matches!(
            (self, label),
            (CriticalPointClass::LocalMinCandidate, CriticalPointLabel::LocalMin)
                | (CriticalPointClass::StrictSaddle, CriticalPointLabel::StrictSaddle)
        )
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CriticalPointClass::NotCritical => "not_critical",
            CriticalPointClass::LocalMinCandidate => "local_min_candidate",
            CriticalPointClass::StrictSaddle => "strict_saddle",
            CriticalPointClass::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for CriticalPointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct KnownCriticalPoint {
    pub point: DVector<f64>,
    pub label: CriticalPointLabel,
}

/// Smoothness constants: `l` bounds the Hessian spectral norm, `l_max` the
/// largest diagonal curvature. Smallest known valid values, or conservative
/// upper bounds when the true suprema are not available in closed form.
#[derive(Debug, Clone, Copy)]
pub struct Lipschitz {
    pub l: f64,
    pub l_max: f64,
}

/// Ordered partition of the coordinate indices `{0, .., dim-1}` into
/// disjoint nonempty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPartition {
    dim: usize,
    blocks: Vec<Vec<usize>>,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Vec<usize>>, dim: usize) -> Result<Self> {
        let mut seen = vec![false; dim];
        if blocks.is_empty() {
            return Err(Error::InvalidPartition("no blocks".to_string()));
        }
        for block in &blocks {
            if block.is_empty() {
                return Err(Error::InvalidPartition("empty block".to_string()));
            }
            for &i in block {
                if i >= dim {
                    return Err(Error::InvalidPartition(format!(
                        "index {i} out of range for dimension {dim}"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidPartition(format!("index {i} repeated")));
                }
                seen[i] = true;
            }
        }
        if let Some(i) = seen.iter().position(|covered| !covered) {
            return Err(Error::InvalidPartition(format!("index {i} not covered")));
        }
        Ok(BlockPartition { dim, blocks })
    }

    /// One singleton block per coordinate, in ascending order.
    pub fn singletons(dim: usize) -> Self {
        BlockPartition {
            dim,
            blocks: (0..dim).map(|i| vec![i]).collect(),
        }
    }

    /// A single block containing every coordinate.
    pub fn single_block(dim: usize) -> Self {
        BlockPartition {
            dim,
            blocks: vec![(0..dim).collect()],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

type ScalarOracle = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;
type VectorOracle = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
type MatrixOracle = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// An objective with derivative oracles, a domain, smoothness constants,
/// and (for fixtures) known critical points with labels.
///
/// Oracles are pure functions; a problem is immutable after construction
/// and safe to evaluate from many threads.
#[derive(Clone)]
pub struct ObjectiveProblem {
    name: String,
    domain: Domain,
    value: ScalarOracle,
    gradient: VectorOracle,
    hessian: MatrixOracle,
    lipschitz: Lipschitz,
    known_critical_points: Vec<KnownCriticalPoint>,
    constant_hessian: Option<DMatrix<f64>>,
}

impl ObjectiveProblem {
    pub fn new(
        name: impl Into<String>,
        domain: Domain,
        value: impl Fn(&DVector<f64>) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        hessian: impl Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        lipschitz: Lipschitz,
    ) -> Self {
        ObjectiveProblem {
            name: name.into(),
            domain,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
            lipschitz,
            known_critical_points: Vec::new(),
            constant_hessian: None,
        }
    }

    pub fn with_critical_point(mut self, point: DVector<f64>, label: CriticalPointLabel) -> Self {
        self.known_critical_points.push(KnownCriticalPoint { point, label });
        self
    }

    /// Record that the Hessian is the same matrix everywhere, which makes
    /// per-block Lipschitz constants exact instead of falling back to `l`.
    pub fn with_constant_hessian(mut self, hessian: DMatrix<f64>) -> Self {
        self.constant_hessian = Some(symmetrize(&hessian));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.ambient_dim()
    }

    pub fn lipschitz(&self) -> Lipschitz {
        self.lipschitz
    }

    pub fn known_critical_points(&self) -> &[KnownCriticalPoint] {
        &self.known_critical_points
    }

    pub fn constant_hessian(&self) -> Option<&DMatrix<f64>> {
        self.constant_hessian.as_ref()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (self.value)(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.gradient)(x)
    }

    /// Ambient Hessian, symmetrized as `(H + H^T) / 2`.
    pub fn hessian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        symmetrize(&(self.hessian)(x))
    }

    /// Per-partition Lipschitz constant `max_i ||H_{S_i}||_2`. Exact when the
    /// Hessian is constant; otherwise the conservative bound `l` (a principal
    /// submatrix's spectral norm never exceeds the full matrix's).
    pub fn l_block(&self, partition: &BlockPartition) -> f64 {
        match &self.constant_hessian {
            Some(h) => partition
                .blocks()
                .iter()
                .map(|block| {
                    let sub = h.select_rows(block.iter()).select_columns(block.iter());
                    sub.symmetric_eigenvalues().iter().fold(0.0, |m, &e| f64::max(m, e.abs()))
                })
                .fold(0.0, f64::max),
            None => self.lipschitz.l,
        }
    }
}

impl fmt::Debug for ObjectiveProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ObjectiveProblem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("lipschitz", &self.lipschitz)
            .field("known_critical_points", &self.known_critical_points.len())
            .finish()
    }
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Riemannian gradient: the ambient gradient projected onto the tangent
/// space at `x` (identity projection on Euclidean domains).
pub fn riemannian_gradient(problem: &ObjectiveProblem, x: &DVector<f64>) -> Result<DVector<f64>> {
    problem.domain().check_membership(x)?;
    Ok(riemannian_gradient_unchecked(problem, x))
}

/// Same as [`riemannian_gradient`] without the membership check; used on
/// iterates already produced by a domain-preserving map.
pub(crate) fn riemannian_gradient_unchecked(
    problem: &ObjectiveProblem,
    x: &DVector<f64>,
) -> DVector<f64> {
    let g = problem.gradient(x);
    problem.domain().tangent_project(x, &g)
}

/// Riemannian Hessian as an ambient-coordinate matrix whose restriction to
/// the tangent space drives spectral classification.
///
/// Euclidean: the ambient Hessian. Simplex (affine constraint): `P H P`.
/// Sphere with the projection retraction: `P (H - (x^T grad) Id) P`.
pub fn riemannian_hessian(problem: &ObjectiveProblem, x: &DVector<f64>) -> Result<DMatrix<f64>> {
    problem.domain().check_membership(x)?;
    let h = problem.hessian(x);
    let out = match problem.domain() {
        Domain::Euclidean { .. } => h,
        Domain::SimplexInterior { .. } => {
            let p = problem.domain().tangent_projector(x);
            symmetrize(&(&p * h * &p))
        }
        Domain::UnitSphere { ambient_dim } => {
            let p = problem.domain().tangent_projector(x);
            let curvature = x.dot(&problem.gradient(x));
            let corrected = h - DMatrix::identity(ambient_dim, ambient_dim) * curvature;
            symmetrize(&(&p * corrected * &p))
        }
    };
    Ok(out)
}

/// Central-difference step `1e-5 * max(1, ||x||_inf)`.
pub fn default_fd_step(x: &DVector<f64>) -> f64 {
    1e-5 * f64::max(1.0, x.amax())
}

/// Central-difference gradient, component-wise `(f(x + h e_i) - f(x - h e_i)) / 2h`.
pub fn finite_difference_gradient(
    problem: &ObjectiveProblem,
    x: &DVector<f64>,
    h: f64,
) -> DVector<f64> {
    let d = x.len();
    DVector::from_fn(d, |i, _| {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        (problem.value(&xp) - problem.value(&xm)) / (2.0 * h)
    })
}

/// Central second differences, symmetrized:
/// `H_ij ~ [f(x+he_i+he_j) - f(x+he_i-he_j) - f(x-he_i+he_j) + f(x-he_i-he_j)] / 4h^2`.
pub fn finite_difference_hessian(
    problem: &ObjectiveProblem,
    x: &DVector<f64>,
    h: f64,
) -> DMatrix<f64> {
    let d = x.len();
    let eval = |di: f64, i: usize, dj: f64, j: usize| {
        let mut p = x.clone();
        p[i] += di;
        p[j] += dj;
        problem.value(&p)
    };
    let raw = DMatrix::from_fn(d, d, |i, j| {
        (eval(h, i, h, j) - eval(h, i, -h, j) - eval(-h, i, h, j) + eval(-h, i, -h, j))
            / (4.0 * h * h)
    });
    symmetrize(&raw)
}

/// Full diagnosis of a candidate critical point.
#[derive(Debug, Clone)]
pub struct CriticalPointReport {
    /// Norm of the Riemannian gradient at the point.
    pub grad_norm: f64,
    /// Eigenvalues of the tangent-restricted Riemannian Hessian, ascending.
    pub tangent_hessian_eigenvalues: Vec<f64>,
    pub class: CriticalPointClass,
}

pub fn critical_point_report(
    problem: &ObjectiveProblem,
    x: &DVector<f64>,
    tol_grad: f64,
    tol_eig: f64,
) -> Result<CriticalPointReport> {
    let grad_norm = riemannian_gradient(problem, x)?.norm();
    let basis = problem.domain().tangent_basis(x);
    let hr = riemannian_hessian(problem, x)?;
    let restricted = symmetrize(&(basis.transpose() * hr * &basis));
    let mut eigenvalues: Vec<f64> = restricted.symmetric_eigenvalues().iter().cloned().collect();
    eigenvalues.sort_by(|a, b| a.total_cmp(b));

    let class = if grad_norm > tol_grad {
        CriticalPointClass::NotCritical
    } else {
        let min = eigenvalues.first().copied().unwrap_or(0.0);
        if min < -tol_eig {
            CriticalPointClass::StrictSaddle
        } else if min > tol_eig {
            CriticalPointClass::LocalMinCandidate
        } else {
            CriticalPointClass::Degenerate
        }
    };
    Ok(CriticalPointReport {
        grad_norm,
        tangent_hessian_eigenvalues: eigenvalues,
        class,
    })
}

/// Classify `x` as not critical, a local-minimum candidate, a strict saddle,
/// or degenerate, from the spectrum of the tangent-restricted Riemannian
/// Hessian.
pub fn classify_critical_point(
    problem: &ObjectiveProblem,
    x: &DVector<f64>,
    tol_grad: f64,
    tol_eig: f64,
) -> Result<CriticalPointClass> {
    Ok(critical_point_report(problem, x, tol_grad, tol_eig)?.class)
}
