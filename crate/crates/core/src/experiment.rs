//! Seeded Monte-Carlo experiments: sample initializations, iterate a method
//! to termination, classify limits against the fixture's known critical
//! points, and aggregate the saddle fraction.
//!
//! Reproducibility contract: every trajectory draws from its own generator
//! seeded by `mix(master_seed, run_index)`, records are assembled in
//! `run_index` order, and the CSV contains no timing. Reruns with the same
//! master seed are byte-identical regardless of how many worker threads run
//! the trajectories.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::{Method, OptimizerMap};
use crate::objective::{riemannian_gradient, Domain, ObjectiveProblem};

/// Default gradient-norm tolerance for convergence.
pub const DEFAULT_TOL_GRAD: f64 = 1e-9;
/// Default step-norm tolerance for convergence.
pub const DEFAULT_TOL_STEP: f64 = 1e-12;
/// Default iteration cap.
pub const DEFAULT_MAX_ITERS: usize = 100_000;
/// Default norm beyond which a trajectory counts as diverged.
pub const DEFAULT_DIVERGENCE_RADIUS: f64 = 1e6;
/// Default matching radius against known critical points.
pub const DEFAULT_SADDLE_MATCH_RADIUS: f64 = 1e-4;
/// Simplex components below this threshold terminate a trajectory as
/// boundary-converged; multiplicative weights has boundary fixed points the
/// interior theory does not cover, and f64 cannot represent the interior
/// any closer than this.
pub const SIMPLEX_UNDERFLOW: f64 = 1e-300;

/// Worker-count environment variable; 0 or unset means auto.
pub const THREADS_ENV_VAR: &str = "SADDLE_DYNAMICS_THREADS";

/// How initial points are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum InitDistribution {
    /// Independent uniform coordinates on `[lo_i, hi_i)`.
    UniformBox { lo: DVector<f64>, hi: DVector<f64> },
    /// Normalized standard Gaussian vector.
    UniformSphere,
    /// Symmetric Dirichlet(1): normalized standard exponentials.
    DirichletUniform,
}

impl InitDistribution {
    /// Uniform box with the same bounds on every coordinate.
    pub fn symmetric_box(dim: usize, lo: f64, hi: f64) -> Self {
        InitDistribution::UniformBox {
            lo: DVector::from_element(dim, lo),
            hi: DVector::from_element(dim, hi),
        }
    }

    pub fn compatible_with(&self, domain: Domain) -> bool {
        match self {
            InitDistribution::UniformBox { lo, hi } => {
                matches!(domain, Domain::Euclidean { .. })
                    && lo.len() == domain.ambient_dim()
                    && hi.len() == domain.ambient_dim()
            }
            InitDistribution::UniformSphere => matches!(domain, Domain::UnitSphere { .. }),
            InitDistribution::DirichletUniform => matches!(domain, Domain::SimplexInterior { .. }),
        }
    }

    pub fn sample(&self, dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
        match self {
            InitDistribution::UniformBox { lo, hi } => {
                DVector::from_fn(dim, |i, _| rng.gen_range(lo[i]..hi[i]))
            }
            InitDistribution::UniformSphere => loop {
                let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
                let norm = v.norm();
                if norm > 1e-12 {
                    return v / norm;
                }
            },
            InitDistribution::DirichletUniform => {
                // -ln(1 - U) is Exp(1); 1 - U avoids ln(0)
                let e = DVector::from_fn(dim, |_, _| -(1.0 - rng.gen::<f64>()).ln());
                let total = e.sum();
                e / total
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InitDistribution::UniformBox { .. } => "uniform-box",
            InitDistribution::UniformSphere => "uniform-sphere",
            InitDistribution::DirichletUniform => "dirichlet",
        }
    }
}

/// Everything a Monte-Carlo run needs besides the problem itself.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Fixture name, used for resolution at the CLI layer and echoed in
    /// summaries.
    pub problem: String,
    pub method: Method,
    pub alpha: f64,
    pub n_inits: usize,
    pub init: InitDistribution,
    pub max_iters: usize,
    pub tol_grad: f64,
    pub tol_step: f64,
    pub divergence_radius: f64,
    pub saddle_match_radius: f64,
    pub master_seed: u64,
    /// CSV destination; empty means no files are written.
    pub output_path: String,
}

impl ExperimentConfig {
    /// A config with the standard termination defaults.
    pub fn new(
        problem: impl Into<String>,
        method: Method,
        alpha: f64,
        init: InitDistribution,
        n_inits: usize,
        master_seed: u64,
    ) -> Self {
        ExperimentConfig {
            problem: problem.into(),
            method,
            alpha,
            n_inits,
            init,
            max_iters: DEFAULT_MAX_ITERS,
            tol_grad: DEFAULT_TOL_GRAD,
            tol_step: DEFAULT_TOL_STEP,
            divergence_radius: DEFAULT_DIVERGENCE_RADIUS,
            saddle_match_radius: DEFAULT_SADDLE_MATCH_RADIUS,
            master_seed,
            output_path: String::new(),
        }
    }

    pub fn validate(&self, problem: &ObjectiveProblem) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(self.alpha > 0.0) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.n_inits == 0 {
            return fail("n_inits must be at least 1".to_string());
        }
        if !(self.tol_grad > 0.0 && self.tol_step > 0.0 && self.saddle_match_radius > 0.0) {
            return fail("tolerances and match radius must be positive".to_string());
        }
        if !(self.divergence_radius > self.saddle_match_radius) {
            return fail("divergence radius must exceed the saddle match radius".to_string());
        }
        if self.max_iters == 0 {
            return fail("max_iters must be at least 1".to_string());
        }
        if !self.init.compatible_with(problem.domain()) {
            return fail(format!(
                "init distribution {} does not match domain {}",
                self.init.name(),
                problem.domain()
            ));
        }
        if let InitDistribution::UniformBox { lo, hi } = &self.init {
            if lo.iter().zip(hi.iter()).any(|(a, b)| !(a < b)) {
                return fail("box bounds must satisfy lo < hi per coordinate".to_string());
            }
        }
        Ok(())
    }
}

/// Why a trajectory stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    Diverged,
    MaxIters,
    Boundary,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::Diverged => "diverged",
            Termination::MaxIters => "max_iters",
            Termination::Boundary => "boundary",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What a converged trajectory's limit matched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitClass {
    LocalMin,
    StrictSaddle,
    /// Converged, but no registered critical point within the match radius.
    /// Reported rather than silently binned so unknown saddles cannot hide.
    UnmatchedCritical,
    None,
}

impl LimitClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            LimitClass::LocalMin => "local_min",
            LimitClass::StrictSaddle => "strict_saddle",
            LimitClass::UnmatchedCritical => "unmatched_critical",
            LimitClass::None => "none",
        }
    }
}

impl fmt::Display for LimitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One trajectory's outcome.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub run_index: usize,
    pub seed: u64,
    pub x0: DVector<f64>,
    pub x_final: DVector<f64>,
    pub iters: usize,
    pub final_grad_norm: f64,
    pub termination: Termination,
    pub limit_class: LimitClass,
    pub matched_critical_point: Option<usize>,
    pub distance_to_match: Option<f64>,
}

/// Counts by termination reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TerminationCounts {
    pub converged: usize,
    pub diverged: usize,
    pub max_iters: usize,
    pub boundary: usize,
}

/// Counts by limit class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LimitCounts {
    pub local_min: usize,
    pub strict_saddle: usize,
    pub unmatched_critical: usize,
    pub none: usize,
}

/// Aggregate statistics of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub terminations: TerminationCounts,
    pub limits: LimitCounts,
    /// Fraction of runs whose limit matched a strict saddle; the empirical
    /// proxy for the measure of the stable set of the saddles.
    pub saddle_fraction: f64,
    pub wall_time: Duration,
}

impl fmt::Display for ExperimentSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem = {}", self.config.problem)?;
        writeln!(f, "method = {}", self.config.method.name())?;
        writeln!(f, "alpha = {}", self.config.alpha)?;
        writeln!(f, "init = {}", self.config.init.name())?;
        writeln!(f, "n_inits = {}", self.config.n_inits)?;
        writeln!(f, "max_iters = {}", self.config.max_iters)?;
        writeln!(f, "tol_grad = {}", self.config.tol_grad)?;
        writeln!(f, "tol_step = {}", self.config.tol_step)?;
        writeln!(f, "divergence_radius = {}", self.config.divergence_radius)?;
        writeln!(f, "saddle_match_radius = {}", self.config.saddle_match_radius)?;
        writeln!(f, "master_seed = {}", self.config.master_seed)?;
        writeln!(f, "terminated_converged = {}", self.terminations.converged)?;
        writeln!(f, "terminated_diverged = {}", self.terminations.diverged)?;
        writeln!(f, "terminated_max_iters = {}", self.terminations.max_iters)?;
        writeln!(f, "terminated_boundary = {}", self.terminations.boundary)?;
        writeln!(f, "limit_local_min = {}", self.limits.local_min)?;
        writeln!(f, "limit_strict_saddle = {}", self.limits.strict_saddle)?;
        writeln!(f, "limit_unmatched_critical = {}", self.limits.unmatched_critical)?;
        writeln!(f, "limit_none = {}", self.limits.none)?;
        writeln!(f, "saddle_fraction = {}", self.saddle_fraction)?;
        write!(f, "wall_time_s = {:.3}", self.wall_time.as_secs_f64())
    }
}

/// Mix a master seed and a run index into a per-trajectory seed
/// (splitmix64 finalizer over the pair, so sampling is independent of
/// execution order).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Worker count from [`THREADS_ENV_VAR`] (0 = auto).
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(0)
}

fn grad_norm_lenient(problem: &ObjectiveProblem, x: &DVector<f64>) -> f64 {
    if !x.iter().all(|v| v.is_finite()) {
        return f64::NAN;
    }
    let g = problem.gradient(x);
    problem.domain().tangent_project(x, &g).norm()
}

/// Iterate the map from `x0` until convergence, divergence, boundary
/// underflow, or the iteration cap; classify the limit on convergence.
pub fn run_trajectory(
    map: &OptimizerMap,
    x0: &DVector<f64>,
    config: &ExperimentConfig,
) -> Result<TrajectoryRecord> {
    run_trajectory_indexed(map, x0, config, 0, 0)
}

/// As [`run_trajectory`], carrying the run index and seed into the record.
pub fn run_trajectory_indexed(
    map: &OptimizerMap,
    x0: &DVector<f64>,
    config: &ExperimentConfig,
    run_index: usize,
    seed: u64,
) -> Result<TrajectoryRecord> {
    let problem = map.problem();
    let simplex = matches!(problem.domain(), Domain::SimplexInterior { .. });
    let mut x = x0.clone();
    let mut grad_norm = riemannian_gradient(problem, &x)?.norm();
    let mut iters = 0usize;

    let termination = 'run: {
        if grad_norm <= config.tol_grad {
            break 'run Termination::Converged;
        }
        loop {
            if iters >= config.max_iters {
                break 'run Termination::MaxIters;
            }
            let next = match map.step(&x) {
                Ok(v) => v,
                Err(Error::NonFiniteIterate) => break 'run Termination::Diverged,
                Err(e) => return Err(e),
            };
            iters += 1;
            if next.norm() > config.divergence_radius {
                x = next;
                break 'run Termination::Diverged;
            }
            if simplex && next.min() < SIMPLEX_UNDERFLOW {
                x = next;
                break 'run Termination::Boundary;
            }
            let step_norm = (&next - &x).norm();
            x = next;
            grad_norm = grad_norm_lenient(problem, &x);
            if grad_norm <= config.tol_grad || step_norm <= config.tol_step {
                break 'run Termination::Converged;
            }
        }
    };
    grad_norm = grad_norm_lenient(problem, &x);

    let mut limit_class = LimitClass::None;
    let mut matched = None;
    let mut distance = None;
    if termination == Termination::Converged {
        let nearest = problem
            .known_critical_points()
            .iter()
            .enumerate()
            .map(|(i, cp)| (i, (&x - &cp.point).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match nearest {
            Some((i, d)) if d <= config.saddle_match_radius => {
                limit_class = match problem.known_critical_points()[i].label {
                    crate::objective::CriticalPointLabel::LocalMin => LimitClass::LocalMin,
                    crate::objective::CriticalPointLabel::StrictSaddle => LimitClass::StrictSaddle,
                };
                matched = Some(i);
                distance = Some(d);
            }
            _ => limit_class = LimitClass::UnmatchedCritical,
        }
    }

    Ok(TrajectoryRecord {
        run_index,
        seed,
        x0: x0.clone(),
        x_final: x,
        iters,
        final_grad_norm: grad_norm,
        termination,
        limit_class,
        matched_critical_point: matched,
        distance_to_match: distance,
    })
}

/// Experiment results: the summary plus every per-trajectory record.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub records: Vec<TrajectoryRecord>,
}

/// Run a seeded experiment, with worker count taken from
/// [`THREADS_ENV_VAR`]. Writes the CSV and summary when the config names an
/// output path.
pub fn run_experiment(problem: &ObjectiveProblem, config: &ExperimentConfig) -> Result<ExperimentOutput> {
    run_experiment_with_threads(problem, config, threads_from_env())
}

/// As [`run_experiment`] with an explicit worker count (0 = auto, 1 = no
/// thread pool).
pub fn run_experiment_with_threads(
    problem: &ObjectiveProblem,
    config: &ExperimentConfig,
    threads: usize,
) -> Result<ExperimentOutput> {
    config.validate(problem)?;
    let dim = problem.dim();
    let inits: Vec<(usize, u64, DVector<f64>)> = (0..config.n_inits)
        .map(|i| {
            let seed = derive_seed(config.master_seed, i as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (i, seed, config.init.sample(dim, &mut rng))
        })
        .collect();
    run_on_inits(problem, config, inits, threads)
}

/// Run the experiment machinery on caller-supplied initializations (used for
/// deterministic grids such as on-axis positive controls). Seeds are still
/// derived per index for the record echo.
pub fn run_experiment_on_points(
    problem: &ObjectiveProblem,
    config: &ExperimentConfig,
    points: &[DVector<f64>],
    threads: usize,
) -> Result<ExperimentOutput> {
    let mut config = config.clone();
    config.n_inits = points.len();
    config.validate(problem)?;
    let inits: Vec<(usize, u64, DVector<f64>)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, derive_seed(config.master_seed, i as u64), p.clone()))
        .collect();
    run_on_inits(problem, &config, inits, threads)
}

fn run_on_inits(
    problem: &ObjectiveProblem,
    config: &ExperimentConfig,
    inits: Vec<(usize, u64, DVector<f64>)>,
    threads: usize,
) -> Result<ExperimentOutput> {
    let start = Instant::now();
    let map = OptimizerMap::new(config.method.clone(), config.alpha, problem)?;

    let run_one = |(i, seed, x0): &(usize, u64, DVector<f64>)| {
        run_trajectory_indexed(&map, x0, config, *i, *seed)
    };
    let records: Vec<TrajectoryRecord> = if threads == 1 {
        inits.iter().map(run_one).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| inits.par_iter().map(run_one).collect::<Result<_>>())?
    };

    let summary = summarize(config.clone(), &records, start.elapsed());
    if !config.output_path.is_empty() {
        write_records_csv(Path::new(&config.output_path), &records, problem.dim())?;
        write_summary_file(&summary_path(Path::new(&config.output_path)), &summary)?;
    }
    Ok(ExperimentOutput { summary, records })
}

/// Aggregate records into counts and the saddle fraction.
pub fn summarize(
    config: ExperimentConfig,
    records: &[TrajectoryRecord],
    wall_time: Duration,
) -> ExperimentSummary {
    let mut terminations = TerminationCounts::default();
    let mut limits = LimitCounts::default();
    for r in records {
        match r.termination {
            Termination::Converged => terminations.converged += 1,
            Termination::Diverged => terminations.diverged += 1,
            Termination::MaxIters => terminations.max_iters += 1,
            Termination::Boundary => terminations.boundary += 1,
        }
        match r.limit_class {
            LimitClass::LocalMin => limits.local_min += 1,
            LimitClass::StrictSaddle => limits.strict_saddle += 1,
            LimitClass::UnmatchedCritical => limits.unmatched_critical += 1,
            LimitClass::None => limits.none += 1,
        }
    }
    let saddle_fraction = if records.is_empty() {
        0.0
    } else {
        limits.strict_saddle as f64 / records.len() as f64
    };
    ExperimentSummary {
        config,
        terminations,
        limits,
        saddle_fraction,
        wall_time,
    }
}

/// Step-size sweep: one experiment per alpha, each with a master seed
/// derived from `(master_seed, alpha index)`; output paths get an
/// `_alpha<i>` suffix.
pub fn sweep_stepsize(
    problem: &ObjectiveProblem,
    base: &ExperimentConfig,
    alphas: &[f64],
    threads: usize,
) -> Result<Vec<ExperimentSummary>> {
    let mut summaries = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        let mut config = base.clone();
        config.alpha = alpha;
        config.master_seed = derive_seed(base.master_seed, i as u64);
        if !base.output_path.is_empty() {
            config.output_path = suffixed_path(Path::new(&base.output_path), &format!("_alpha{i}"))
                .to_string_lossy()
                .into_owned();
        }
        summaries.push(run_experiment_with_threads(problem, &config, threads)?.summary);
    }
    Ok(summaries)
}

fn suffixed_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let ext = path.extension().map(|e| e.to_string_lossy().into_owned());
    let name = match ext {
        Some(ext) => format!("{stem}{suffix}.{ext}"),
        None => format!("{stem}{suffix}"),
    };
    path.with_file_name(name)
}

/// `<output>.csv -> <output>.summary.txt` next to the CSV.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    suffixed_path(csv_path, "").with_extension("summary.txt")
}

/// One CSV row per record: `run_index, seed, x0_*, xf_*, iters,
/// final_grad_norm, termination, limit_class, matched_cp, distance`.
/// Written to a temporary sibling and renamed in, so failures leave no
/// partial file.
pub fn write_records_csv(path: &Path, records: &[TrajectoryRecord], dim: usize) -> Result<()> {
    let mut text = String::new();
    text.push_str("run_index,seed");
    for i in 0..dim {
        text.push_str(&format!(",x0_{i}"));
    }
    for i in 0..dim {
        text.push_str(&format!(",xf_{i}"));
    }
    text.push_str(",iters,final_grad_norm,termination,limit_class,matched_cp,distance\n");
    for r in records {
        text.push_str(&format!("{},{}", r.run_index, r.seed));
        for v in r.x0.iter() {
            text.push_str(&format!(",{v}"));
        }
        for v in r.x_final.iter() {
            text.push_str(&format!(",{v}"));
        }
        text.push_str(&format!(
            ",{},{},{},{}",
            r.iters, r.final_grad_norm, r.termination, r.limit_class
        ));
        match r.matched_critical_point {
            Some(i) => text.push_str(&format!(",{i}")),
            None => text.push(','),
        }
        match r.distance_to_match {
            Some(d) => text.push_str(&format!(",{d}\n")),
            None => text.push_str(",\n"),
        }
    }
    write_atomically(path, &text)
}

/// Summary as flat `key = value` text, written atomically like the CSV.
pub fn write_summary_file(path: &Path, summary: &ExperimentSummary) -> Result<()> {
    write_atomically(path, &format!("{summary}\n"))
}

fn write_atomically(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
