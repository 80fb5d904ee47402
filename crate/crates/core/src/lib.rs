//! First-order optimization methods viewed as discrete dynamical systems.
//!
//! Each method — gradient descent, proximal point, coordinate descent,
//! block coordinate descent, manifold gradient descent on the unit sphere,
//! and mirror descent (multiplicative weights on the simplex) — is a pure
//! map `g: X -> X`. The crate computes the differential `Dg` at fixed
//! points, classifies strict saddles by the spectrum of the Riemannian
//! Hessian, flags unstable fixed points by `max_i |lambda_i(Dg)| > 1`, and
//! runs seeded Monte-Carlo experiments measuring how often random
//! initializations end up at a strict saddle (they essentially never do;
//! the stable set of the saddles is measure zero for admissible step
//! sizes).
//!
//! Modules:
//!
//! - [`objective`]: objective oracles, domains, Riemannian derivatives,
//!   finite-difference checks, critical-point classification
//! - [`maps`]: the optimizer maps and their step-size bounds
//! - [`jacobian`]: analytic and finite-difference differentials, spectral
//!   reports
//! - [`suite`]: fixture problems with known labeled critical points
//! - [`experiment`]: seeded trajectories, Monte-Carlo experiments, CSV
//!   artifacts

pub use nalgebra;

pub mod error;
pub mod experiment;
pub mod jacobian;
pub mod maps;
pub mod objective;
pub mod suite;

pub use error::{Error, Result};
pub use experiment::{
    run_experiment, run_experiment_on_points, run_experiment_with_threads, run_trajectory,
    sweep_stepsize, ExperimentConfig, ExperimentOutput, ExperimentSummary, InitDistribution,
    LimitClass, Termination, TrajectoryRecord,
};
pub use jacobian::{differential, fd_differential, spectral_report, MapDifferential, SpectralReport};
pub use maps::{BoundKind, Method, OptimizerMap, StepSizeBound};
pub use objective::{
    classify_critical_point, critical_point_report, finite_difference_gradient,
    finite_difference_hessian, riemannian_gradient, riemannian_hessian, BlockPartition,
    CriticalPointClass, CriticalPointLabel, CriticalPointReport, Domain, Lipschitz,
    ObjectiveProblem,
};
pub use suite::{
    fixture_by_name, make_nesterov_example, make_quadratic, make_simplex_quadratic,
    make_sphere_rayleigh, FixtureCatalog,
};
