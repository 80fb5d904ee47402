//! Flat `key = value` experiment-config files with `#` comments.
//!
//! ```text
//! # which fixture and method
//! problem = nesterov
//! method = gd                  # gd | prox | cd | bcd | manifold-gd | mw | mirror-euclidean
//! alpha = 0.1
//! # blocks = 0,1;2,3           # bcd only: blocks separated by ';', indices by ','
//!
//! n_inits = 1000
//! init = uniform-box           # uniform-box | uniform-sphere | dirichlet
//! box_lo = -2                  # single value broadcasts to every coordinate
//! box_hi = 2
//!
//! max_iters = 100000
//! tol_grad = 1e-9
//! tol_step = 1e-12
//! divergence_radius = 1e6
//! saddle_match_radius = 1e-4
//! master_seed = 42
//! output = runs/nesterov.csv   # empty or absent: no files written
//! ```

use std::collections::BTreeMap;

use saddle_dynamics::nalgebra::DVector;
use saddle_dynamics::experiment::{self, ExperimentConfig, InitDistribution};
use saddle_dynamics::objective::{BlockPartition, Domain};
use saddle_dynamics::{fixture_by_name, Method, ObjectiveProblem};

pub struct ParsedExperiment {
    pub problem: ObjectiveProblem,
    pub config: ExperimentConfig,
}

pub fn parse_method(token: &str, blocks: Option<&str>, dim: usize) -> Result<Method, String> {
    match token {
        "gd" => Ok(Method::GradientDescent),
        "prox" => Ok(Method::ProximalPoint),
        "cd" => Ok(Method::CoordinateDescent),
        "bcd" => {
            let spec = blocks.ok_or("method bcd requires blocks (e.g. `0,1;2,3`)")?;
            Ok(Method::BlockCoordinateDescent(parse_blocks(spec, dim)?))
        }
        "manifold-gd" => Ok(Method::ManifoldGradientDescent),
        "mw" | "mirror-entropy" => Ok(Method::MirrorDescentEntropy),
        "mirror-euclidean" => Ok(Method::MirrorDescentEuclidean),
        other => Err(format!(
            "unknown method `{other}` (expected gd, prox, cd, bcd, manifold-gd, mw, mirror-euclidean)"
        )),
    }
}

pub fn parse_blocks(spec: &str, dim: usize) -> Result<BlockPartition, String> {
    let mut blocks = Vec::new();
    for block in spec.split(';') {
        let indices: Result<Vec<usize>, _> =
            block.split(',').map(|t| t.trim().parse::<usize>()).collect();
        blocks.push(indices.map_err(|_| format!("bad block `{block}` in `{spec}`"))?);
    }
    BlockPartition::new(blocks, dim).map_err(|e| e.to_string())
}

pub fn parse_point(spec: &str, dim: usize) -> Result<DVector<f64>, String> {
    let values: Result<Vec<f64>, _> = spec.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let values = values.map_err(|_| format!("bad point `{spec}`"))?;
    if values.len() != dim {
        return Err(format!(
            "point has {} coordinates, fixture needs {dim}",
            values.len()
        ));
    }
    Ok(DVector::from_vec(values))
}

fn parse_bounds(spec: &str, dim: usize) -> Result<DVector<f64>, String> {
    let values: Result<Vec<f64>, _> = spec.split(',').map(|t| t.trim().parse::<f64>()).collect();
    let values = values.map_err(|_| format!("bad bound list `{spec}`"))?;
    match values.len() {
        1 => Ok(DVector::from_element(dim, values[0])),
        n if n == dim => Ok(DVector::from_vec(values)),
        n => Err(format!("bound list has {n} entries, expected 1 or {dim}")),
    }
}

pub fn parse_experiment_file(text: &str) -> Result<ParsedExperiment, String> {
    let mut pairs: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or(format!("line {}: expected `key = value`", lineno + 1))?;
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }

    let known = [
        "problem", "method", "alpha", "blocks", "n_inits", "init", "box_lo", "box_hi",
        "max_iters", "tol_grad", "tol_step", "divergence_radius", "saddle_match_radius",
        "master_seed", "output",
    ];
    for key in pairs.keys() {
        if !known.contains(&key.as_str()) {
            return Err(format!("unknown config key `{key}`"));
        }
    }

    let require = |key: &str| {
        pairs
            .get(key)
            .cloned()
            .ok_or(format!("missing required key `{key}`"))
    };
    let numeric = |key: &str, default: f64| -> Result<f64, String> {
        match pairs.get(key) {
            Some(v) => v.parse().map_err(|_| format!("bad number for `{key}`: `{v}`")),
            None => Ok(default),
        }
    };
    let integer = |key: &str, default: u64| -> Result<u64, String> {
        match pairs.get(key) {
            Some(v) => v.parse().map_err(|_| format!("bad integer for `{key}`: `{v}`")),
            None => Ok(default),
        }
    };

    let problem_name = require("problem")?;
    let problem = fixture_by_name(&problem_name).map_err(|e| e.to_string())?;
    let dim = problem.dim();

    let method = parse_method(&require("method")?, pairs.get("blocks").map(|s| s.as_str()), dim)?;
    let alpha: f64 = require("alpha")?
        .parse()
        .map_err(|_| "bad number for `alpha`".to_string())?;
    if !(alpha > 0.0) {
        return Err(format!("alpha must be positive, got {alpha}"));
    }

    let init = match pairs.get("init").map(|s| s.as_str()) {
        Some("uniform-box") | None if matches!(problem.domain(), Domain::Euclidean { .. }) => {
            InitDistribution::UniformBox {
                lo: parse_bounds(pairs.get("box_lo").map(|s| s.as_str()).unwrap_or("-2"), dim)?,
                hi: parse_bounds(pairs.get("box_hi").map(|s| s.as_str()).unwrap_or("2"), dim)?,
            }
        }
        Some("uniform-sphere") => InitDistribution::UniformSphere,
        Some("dirichlet") => InitDistribution::DirichletUniform,
        None => match problem.domain() {
            Domain::Euclidean { .. } => unreachable!("handled above"),
            Domain::UnitSphere { .. } => InitDistribution::UniformSphere,
            Domain::SimplexInterior { .. } => InitDistribution::DirichletUniform,
        },
        Some(other) => {
            return Err(format!(
                "unknown init `{other}` (expected uniform-box, uniform-sphere, dirichlet)"
            ))
        }
    };

    let config = ExperimentConfig {
        problem: problem_name,
        method,
        alpha,
        n_inits: integer("n_inits", 1000)? as usize,
        init,
        max_iters: integer("max_iters", experiment::DEFAULT_MAX_ITERS as u64)? as usize,
        tol_grad: numeric("tol_grad", experiment::DEFAULT_TOL_GRAD)?,
        tol_step: numeric("tol_step", experiment::DEFAULT_TOL_STEP)?,
        divergence_radius: numeric("divergence_radius", experiment::DEFAULT_DIVERGENCE_RADIUS)?,
        saddle_match_radius: numeric(
            "saddle_match_radius",
            experiment::DEFAULT_SADDLE_MATCH_RADIUS,
        )?,
        master_seed: integer("master_seed", 0)?,
        output_path: pairs.get("output").cloned().unwrap_or_default(),
    };
    config.validate(&problem).map_err(|e| e.to_string())?;
    Ok(ParsedExperiment { problem, config })
}
