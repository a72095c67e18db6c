use std::path::PathBuf;

use anyhow::{Context, Result};
use hapke_elmm::io::{read_cube, read_spectra_csv, write_json, write_matrix};
use hapke_elmm::solver::{unmix, SolverConfig};
use hapke_elmm::{Error, UnmixResult};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::apply_common;
use crate::manifest::{ensure_dir, Run};
use crate::recipe::Recipe;
use crate::UnmixArgs;

#[derive(Debug, Deserialize)]
struct UnmixRecipe {
    cube: PathBuf,
    #[serde(default)]
    endmembers: Option<PathBuf>,
    out: PathBuf,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(flatten)]
    solver: SolverConfig,
}

#[derive(Debug, Serialize)]
struct Stats {
    mean: f64,
    min: f64,
    median: f64,
    max: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        };
        Self {
            mean: v.iter().sum::<f64>() / n as f64,
            min: v[0],
            median,
            max: v[n - 1],
        }
    }
}

#[derive(Debug, Serialize)]
struct GroundTruthScores {
    abundance_rmse: f64,
    /// Only when the cube stores scaling ground truth.
    psi_rmse: Option<f64>,
}

#[derive(Debug, Serialize)]
struct UnmixSummary {
    solver: SolverConfig,
    cube: PathBuf,
    endmembers: PathBuf,
    materials: Vec<String>,
    bands: usize,
    pixels: usize,
    residual_rmse: Stats,
    iterations_mean: f64,
    iterations_max: usize,
    converged: usize,
    degenerate: usize,
    ground_truth: Option<GroundTruthScores>,
    /// Largest increase between consecutive entries of any objective trace.
    max_objective_rise: f64,
    objective_traces: Vec<Vec<f64>>,
}

fn rmse(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    ((a - b).norm_squared() / a.len() as f64).sqrt()
}

fn max_rise(result: &UnmixResult) -> f64 {
    result
        .objective_traces
        .iter()
        .flat_map(|t| t.windows(2).map(|w| w[1] - w[0]))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0)
}

pub fn run(args: UnmixArgs) -> Result<()> {
    let mut run = Run::start("unmix");
    let mut recipe = Recipe::load(args.common.config.as_deref(), &["cube", "endmembers", "out"])?;
    apply_common(&mut recipe, &args.common)?;
    recipe.set("cube", args.cube.as_ref())?;
    recipe.set("endmembers", args.endmembers.as_ref())?;
    recipe.set("model", args.solver)?;
    recipe.set("init", args.init)?;
    recipe.set("max_iters", args.max_iters)?;
    if args.psi_min.is_some() || args.psi_max.is_some() {
        let current: SolverConfig = recipe.parse().unwrap_or_default();
        let (lo, hi) = current.psi_bounds;
        recipe.set(
            "psi_bounds",
            Some((args.psi_min.unwrap_or(lo), args.psi_max.unwrap_or(hi))),
        )?;
    }
    let r: UnmixRecipe = recipe.parse()?;
    r.solver.validate()?;

    let file = read_cube(&r.cube).with_context(|| format!("reading cube {}", r.cube.display()))?;
    run.input(&r.cube);
    let em_path = match r.endmembers.clone().or_else(|| file.endmembers_path()) {
        Some(p) => p,
        None => return Err(Error::InvalidInput("no endmember file given and the cube references none".into()).into()),
    };
    let (axis, s0) = read_spectra_csv(&em_path)
        .and_then(|t| t.into_endmembers())
        .with_context(|| format!("reading endmembers {}", em_path.display()))?;
    run.input(&em_path);
    if axis.len() != file.cube.bands() {
        return Err(Error::Dimension(format!(
            "endmembers have {} bands, cube has {}",
            axis.len(),
            file.cube.bands()
        ))
        .into());
    }

    let result = unmix(&file.cube.x, &s0, &r.solver)?;

    let ground_truth = match &file.cube.ground_truth {
        Some(gt) if gt.abundances.shape() == result.abundances.shape() => Some(GroundTruthScores {
            abundance_rmse: rmse(&result.abundances, &gt.abundances),
            psi_rmse: gt.psi.as_ref().map(|psi| rmse(&result.psi, psi)),
        }),
        _ => None,
    };

    ensure_dir(&r.out)?;
    let abundances = r.out.join("abundances.bin");
    write_matrix(&abundances, &result.abundances)?;
    let psi = r.out.join("psi.bin");
    write_matrix(&psi, &result.psi)?;

    let summary = UnmixSummary {
        solver: r.solver,
        cube: r.cube.clone(),
        endmembers: em_path,
        materials: s0.labels().to_vec(),
        bands: file.cube.bands(),
        pixels: file.cube.pixels(),
        residual_rmse: Stats::of(&result.residual_rmse),
        iterations_mean: result.iterations.iter().sum::<usize>() as f64 / result.iterations.len() as f64,
        iterations_max: result.iterations.iter().copied().max().unwrap_or(0),
        converged: result.converged.iter().filter(|&&c| c).count(),
        degenerate: result.degenerate.iter().filter(|&&d| d).count(),
        ground_truth,
        max_objective_rise: max_rise(&result),
        objective_traces: result.objective_traces,
    };
    let summary_path = r.out.join("summary.json");
    write_json(&summary_path, &summary)?;
    for p in [&abundances, &psi, &summary_path] {
        run.output(p);
    }

    let brief = serde_json::json!({
        "solver": summary.solver.model,
        "mean_residual_rmse": summary.residual_rmse.mean,
        "ground_truth": summary.ground_truth,
    });
    run.finish(&r.out, r.seed, recipe.echo(), Some(brief))
}
