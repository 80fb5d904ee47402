//! First-order methods as pure maps `g: X -> X` with a fixed step size.
//!
//! Each method is the literal update rule of its defining iteration:
//!
//! - gradient descent          `g(x) = x - a grad f(x)`
//! - proximal point            `g(x) = argmin_z f(z) + ||x - z||^2 / 2a`
//! - coordinate descent        one Gauss-Seidel sweep in ascending index order
//! - block coordinate descent  one sweep over the blocks in declared order
//! - manifold gradient descent `g(x) = P( x - a P_T grad f(x) )` on the sphere
//! - mirror descent            `g(x) = h( grad Phi(x) - a grad f(x) )`
//!
//! Maps are pure; an [`OptimizerMap`] is immutable and usable from many
//! threads concurrently.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::objective::{BlockPartition, Domain, ObjectiveProblem};

/// Residual tolerance for the proximal subproblem's optimality identity
/// `z + a grad f(z) = x`.
pub const PROX_RESIDUAL_TOL: f64 = 1e-10;
/// Newton iteration cap for the proximal subproblem.
pub const PROX_MAX_ITERS: usize = 100;
/// Below this norm the sphere retraction refuses to normalize.
pub const RETRACTION_MIN_NORM: f64 = 1e-14;

/// The first-order method an [`OptimizerMap`] applies.
#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    GradientDescent,
    ProximalPoint,
    CoordinateDescent,
    BlockCoordinateDescent(BlockPartition),
    ManifoldGradientDescent,
    /// Mirror descent with the entropy mirror map `Phi(x) = sum x_i log x_i`
    /// on the simplex interior: the multiplicative-weights update.
    MirrorDescentEntropy,
    /// Mirror descent with `Phi(x) = ||x||^2 / 2`; coincides with gradient
    /// descent.
    MirrorDescentEuclidean,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::GradientDescent => "gd",
            Method::ProximalPoint => "prox",
            Method::CoordinateDescent => "cd",
            Method::BlockCoordinateDescent(_) => "bcd",
            Method::ManifoldGradientDescent => "manifold-gd",
            Method::MirrorDescentEntropy => "mirror-entropy",
            Method::MirrorDescentEuclidean => "mirror-euclidean",
        }
    }

    fn compatible_with(&self, domain: Domain) -> bool {
        match self {
            Method::ManifoldGradientDescent => matches!(domain, Domain::UnitSphere { .. }),
            Method::MirrorDescentEntropy => matches!(domain, Domain::SimplexInterior { .. }),
            _ => matches!(domain, Domain::Euclidean { .. }),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Method-specific admissible step-size bound: the map is a local
/// diffeomorphism and saddles are unstable for `alpha` strictly below it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizeBound {
    pub kind: BoundKind,
    pub limit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `alpha < 1/L` (gradient descent, proximal point).
    InverseL,
    /// `alpha < 1/L_max` (coordinate descent).
    InverseLMax,
    /// `alpha < 1/L_b` for the chosen partition (block coordinate descent).
    InverseLBlock,
    /// `alpha < mu/L` with `mu` the mirror map's strong convexity (1 for
    /// both the entropy map on the simplex and the Euclidean map).
    MirrorRatio,
    /// Manifold gradient descent admits some positive constant that depends
    /// on the manifold's reach; it has no closed form, so `1/L` stands in as
    /// a conservative surrogate.
    ManifoldSurrogate,
}

impl StepSizeBound {
    /// `true` iff `alpha` is strictly below the bound (and positive).
    pub fn admits(&self, alpha: f64) -> bool {
        alpha > 0.0 && alpha < self.limit
    }
}

impl fmt::Display for StepSizeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            BoundKind::InverseL => "1/L",
            BoundKind::InverseLMax => "1/L_max",
            BoundKind::InverseLBlock => "1/L_b",
            BoundKind::MirrorRatio => "mu/L",
            BoundKind::ManifoldSurrogate => "1/L (surrogate)",
        };
        write!(f, "alpha < {} = {:.6e}", kind, self.limit)
    }
}

/// A named first-order method bound to a problem and a step size.
#[derive(Debug, Clone)]
pub struct OptimizerMap<'a> {
    method: Method,
    alpha: f64,
    problem: &'a ObjectiveProblem,
}

impl<'a> OptimizerMap<'a> {
    /// Build a map, validating `alpha > 0`, method/domain compatibility,
    /// and (for block coordinate descent) that the partition matches the
    /// problem dimension.
    pub fn new(method: Method, alpha: f64, problem: &'a ObjectiveProblem) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Config(format!("step size must be positive, got {alpha}")));
        }
        if !method.compatible_with(problem.domain()) {
            return Err(Error::MethodDomainMismatch {
                method: method.name().to_string(),
                domain: problem.domain().to_string(),
            });
        }
        if let Method::BlockCoordinateDescent(partition) = &method {
            if partition.dim() != problem.dim() {
                return Err(Error::InvalidPartition(format!(
                    "partition over {} coordinates on a {}-dimensional problem",
                    partition.dim(),
                    problem.dim()
                )));
            }
        }
        Ok(OptimizerMap { method, alpha, problem })
    }

    pub fn method(&self) -> &Method {
        &self.method
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn problem(&self) -> &'a ObjectiveProblem {
        self.problem
    }

    /// Apply one step of the configured method.
    pub fn step(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.method {
            Method::GradientDescent | Method::MirrorDescentEuclidean => self.gd_step(x),
            Method::ProximalPoint => self.prox_step(x),
            Method::CoordinateDescent => self.cd_sweep(x),
            Method::BlockCoordinateDescent(partition) => self.bcd_sweep(x, &partition.clone()),
            Method::ManifoldGradientDescent => self.manifold_gd_step(x),
            Method::MirrorDescentEntropy => self.mirror_descent_step(x),
        }
    }

    /// The admissible bound for this map's method on this problem.
    pub fn step_size_bound(&self) -> StepSizeBound {
        let lip = self.problem.lipschitz();
        match &self.method {
            Method::GradientDescent | Method::ProximalPoint => StepSizeBound {
                kind: BoundKind::InverseL,
                limit: 1.0 / lip.l,
            },
            Method::CoordinateDescent => StepSizeBound {
                kind: BoundKind::InverseLMax,
                limit: 1.0 / lip.l_max,
            },
            Method::BlockCoordinateDescent(partition) => StepSizeBound {
                kind: BoundKind::InverseLBlock,
                limit: 1.0 / self.problem.l_block(partition),
            },
            Method::MirrorDescentEntropy | Method::MirrorDescentEuclidean => StepSizeBound {
                kind: BoundKind::MirrorRatio,
                limit: 1.0 / lip.l,
            },
            Method::ManifoldGradientDescent => StepSizeBound {
                kind: BoundKind::ManifoldSurrogate,
                limit: 1.0 / lip.l,
            },
        }
    }

    /// `x - a grad f(x)`.
    pub fn gd_step(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        ensure_finite(x - self.problem.gradient(x) * self.alpha)
    }

    /// Proximal point: the unique `z` with `z + a grad f(z) = x`, found by
    /// damped Newton on that identity, warm-started at `z = x`. The Newton
    /// Jacobian `Id + a hess f(z)` is positive definite for `a < 1/L`, and
    /// the residual must drop below [`PROX_RESIDUAL_TOL`] within
    /// [`PROX_MAX_ITERS`] iterations. The tolerance scales with `max(1, ||x||)`:
    /// far from the origin, rounding alone leaves a residual of order
    /// `eps * ||x||`, so an absolute 1e-10 would be unattainable on
    /// diverging trajectories.
    pub fn prox_step(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let d = x.len();
        let residual = |z: &DVector<f64>| z + self.problem.gradient(z) * self.alpha - x;
        let tol = PROX_RESIDUAL_TOL * f64::max(1.0, x.norm());

        let mut z = x.clone();
        let mut r = residual(&z);
        let mut r_norm = r.norm();
        for _ in 0..PROX_MAX_ITERS {
            if !r_norm.is_finite() {
                return Err(Error::NonFiniteIterate);
            }
            if r_norm <= tol {
                return ensure_finite(z);
            }
            let jac = DMatrix::identity(d, d) + self.problem.hessian(&z) * self.alpha;
            let delta = jac.lu().solve(&r).ok_or(Error::SingularMatrix)?;

            // full Newton step, halved while it fails to reduce the residual
            let mut t = 1.0;
            loop {
                let cand = &z - &delta * t;
                let cand_r = residual(&cand);
                let cand_norm = cand_r.norm();
                if cand_norm < r_norm || t < 1e-8 {
                    z = cand;
                    r = cand_r;
                    r_norm = cand_norm;
                    break;
                }
                t *= 0.5;
            }
        }
        Err(Error::InnerSolveFailure {
            residual: r_norm,
            iters: PROX_MAX_ITERS,
            tol,
        })
    }

    /// One Gauss-Seidel sweep: coordinates update in ascending index order,
    /// each from the gradient at the partially updated point.
    pub fn cd_sweep(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.cd_sweep_with_intermediates(x)?.0)
    }

    /// As [`cd_sweep`](Self::cd_sweep), also returning the point visited
    /// before each coordinate update (the first entry is `x` itself). The
    /// coordinate-descent differential evaluates Hessians at exactly these
    /// points.
    pub fn cd_sweep_with_intermediates(
        &self,
        x: &DVector<f64>,
    ) -> Result<(DVector<f64>, Vec<DVector<f64>>)> {
        let d = x.len();
        let mut y = x.clone();
        let mut visited = Vec::with_capacity(d);
        for i in 0..d {
            visited.push(y.clone());
            let g = self.problem.gradient(&y);
            y[i] -= self.alpha * g[i];
        }
        Ok((ensure_finite(y)?, visited))
    }

    /// One block sweep: blocks update in declared order, all coordinates of
    /// a block simultaneously from the gradient at the partially updated
    /// point. With singleton blocks in ascending order this is exactly a
    /// coordinate-descent sweep.
    pub fn bcd_sweep(&self, x: &DVector<f64>, partition: &BlockPartition) -> Result<DVector<f64>> {
        Ok(self.bcd_sweep_with_intermediates(x, partition)?.0)
    }

    /// As [`bcd_sweep`](Self::bcd_sweep), also returning the point visited
    /// before each block update.
    pub fn bcd_sweep_with_intermediates(
        &self,
        x: &DVector<f64>,
        partition: &BlockPartition,
    ) -> Result<(DVector<f64>, Vec<DVector<f64>>)> {
        let mut y = x.clone();
        let mut visited = Vec::with_capacity(partition.blocks().len());
        for block in partition.blocks() {
            visited.push(y.clone());
            let g = self.problem.gradient(&y);
            for &j in block {
                y[j] -= self.alpha * g[j];
            }
        }
        Ok((ensure_finite(y)?, visited))
    }

    /// `v = x - a (Id - x x^T) grad f(x)`, retracted to the sphere as
    /// `v / ||v||`.
    pub fn manifold_gd_step(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.problem.domain().check_membership(x)?;
        let g = self.problem.gradient(x);
        let tangent = self.problem.domain().tangent_project(x, &g);
        let v = x - tangent * self.alpha;
        let norm = v.norm();
        if norm < RETRACTION_MIN_NORM {
            return Err(Error::ZeroProjection);
        }
        ensure_finite(v / norm)
    }

    /// Multiplicative weights: `x_i exp(-a df/dx_i) / sum_j x_j exp(-a df/dx_j)`,
    /// computed in log space with a max shift so large exponents cannot
    /// overflow. The Euclidean mirror map is dispatched to
    /// [`gd_step`](Self::gd_step) by [`step`](Self::step).
    pub fn mirror_descent_step(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.problem.domain().check_membership(x)?;
        let g = self.problem.gradient(x);
        let logits = DVector::from_fn(x.len(), |i, _| x[i].ln() - self.alpha * g[i]);
        let shift = logits.max();
        let weights = logits.map(|w| (w - shift).exp());
        let total = weights.sum();
        ensure_finite(weights / total)
    }
}

fn ensure_finite(x: DVector<f64>) -> Result<DVector<f64>> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::NonFiniteIterate)
    }
}
