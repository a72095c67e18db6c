use std::path::PathBuf;

use anyhow::Result;
use hapke_elmm::io::{write_curve_csv, write_sweep_csv};
use hapke_elmm::metrics::{albedo_curve, angle_sweep, omega_grid, ModelPair, SweepGrid};
use hapke_elmm::{Geometry, ReflectanceModel};
use serde::Deserialize;
use serde_json::json;

use super::{apply_common, load_materials};
use crate::manifest::{ensure_dir, Run};
use crate::recipe::Recipe;
use crate::SweepArgs;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveSpec {
    theta0: f64,
    theta: f64,
    #[serde(default)]
    phi: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepRecipe {
    albedo: PathBuf,
    #[serde(default)]
    photometry: Option<PathBuf>,
    out: PathBuf,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    theta0_values: Option<Vec<f64>>,
    #[serde(default)]
    theta_values: Option<Vec<f64>>,
    #[serde(default)]
    phi: f64,
    #[serde(default)]
    model_pair: ModelPair,
    /// Geometries at which `omega,reflectance` curves are also written.
    #[serde(default)]
    curves: Vec<CurveSpec>,
    #[serde(default = "default_curve_points")]
    curve_points: usize,
}

fn default_curve_points() -> usize {
    101
}

fn angle_label(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

pub fn run(args: SweepArgs) -> Result<()> {
    let mut run = Run::start("sweep");
    let mut recipe = Recipe::load(args.common.config.as_deref(), &["albedo", "photometry", "out"])?;
    apply_common(&mut recipe, &args.common)?;
    recipe.set("albedo", args.albedo.as_ref())?;
    recipe.set("photometry", args.photometry.as_ref())?;
    let g = &args.geometry;
    recipe.set("theta0_values", g.theta0.map(|t| vec![t]))?;
    recipe.set("theta_values", g.theta.map(|t| vec![t]))?;
    recipe.set("phi", g.phi)?;
    recipe.set(
        "model_pair",
        g.model.map(|m| ModelPair {
            reference: m,
            approximation: ReflectanceModel::Linear,
        }),
    )?;
    let r: SweepRecipe = recipe.parse()?;

    let defaults = SweepGrid::default();
    let grid = SweepGrid {
        theta0_values: r.theta0_values.unwrap_or(defaults.theta0_values),
        theta_values: r.theta_values.unwrap_or(defaults.theta_values),
        phi: r.phi,
        model_pair: r.model_pair,
    };
    grid.validate()?;

    let (lib, params) = load_materials(&r.albedo, r.photometry.as_deref())?;
    run.input(&r.albedo);
    if let Some(p) = &r.photometry {
        run.input(p);
    }
    ensure_dir(&r.out)?;

    let mut materials = Vec::new();
    for (spectrum, p) in lib.spectra().iter().zip(&params) {
        let sweep = angle_sweep(spectrum, p, &grid)?;
        let path = r.out.join(format!("sweep_{}.csv", spectrum.material()));
        write_sweep_csv(&path, &sweep)?;
        run.output(&path);
        materials.push(json!({
            "material": spectrum.material(),
            "mean_albedo": spectrum.mean(),
            "mean_sam_rad": sweep.mean_sam(),
            "mean_rmse": sweep.mean_rmse(),
            "flagged_cells": sweep.flagged(),
        }));

        let omegas = omega_grid(r.curve_points);
        for c in &r.curves {
            let geom = Geometry::new(c.theta0, c.theta, c.phi)?;
            for model in [grid.model_pair.reference, grid.model_pair.approximation] {
                let samples = albedo_curve(&geom, p, model, &omegas)?;
                let path = r.out.join(format!(
                    "curve_{}_{}_t0-{}_t-{}_phi-{}.csv",
                    spectrum.material(),
                    model,
                    angle_label(c.theta0),
                    angle_label(c.theta),
                    angle_label(c.phi)
                ));
                write_curve_csv(&path, &samples)?;
                run.output(&path);
            }
        }
    }

    let summary = json!({
        "model_pair": grid.model_pair,
        "albedo_source": r.albedo,
        "grid": { "theta0": grid.theta0_values.len(), "theta": grid.theta_values.len(), "phi": grid.phi },
        "materials": materials,
    });
    run.finish(&r.out, r.seed, recipe.echo(), Some(summary))
}
