use std::path::PathBuf;

use anyhow::Result;
use hapke_elmm::io::{write_cube, write_endmembers_csv, CubeExtras, GenerationInfo};
use hapke_elmm::scene::{reference_endmembers, simulate_cube, SceneConfig};
use serde::Deserialize;
use serde_json::json;

use super::{apply_common, load_materials};
use crate::manifest::{ensure_dir, Run};
use crate::recipe::Recipe;
use crate::SimulateArgs;

#[derive(Debug, Deserialize)]
struct SimulateRecipe {
    albedo: PathBuf,
    #[serde(default)]
    photometry: Option<PathBuf>,
    out: PathBuf,
    #[serde(flatten)]
    scene: SceneConfig,
}

pub fn run(args: SimulateArgs) -> Result<()> {
    let mut run = Run::start("simulate");
    let mut recipe = Recipe::load(args.common.config.as_deref(), &["albedo", "photometry", "out"])?;
    apply_common(&mut recipe, &args.common)?;
    recipe.set("albedo", args.albedo.as_ref())?;
    recipe.set("photometry", args.photometry.as_ref())?;
    recipe.set("model", args.geometry.model)?;
    recipe.set("pixels", args.pixels)?;
    recipe.set("snr_db", args.snr_db)?;
    let g = &args.geometry;
    if g.theta0.is_some() || g.theta.is_some() || g.phi.is_some() {
        recipe.set(
            "geometry_sampler",
            Some(json!({
                "kind": "fixed",
                "theta0": g.theta0.unwrap_or(0.0),
                "theta": g.theta.unwrap_or(0.0),
                "phi": g.phi.unwrap_or(0.0),
            })),
        )?;
    }

    // The material count defaults to the number of spectra in the albedo file.
    if recipe.get("materials").is_none() {
        if let Some(albedo) = recipe.get("albedo").and_then(|v| v.as_str()) {
            let lib = hapke_elmm::io::read_albedo_csv(albedo.as_ref())?;
            recipe.set_default("materials", lib.spectra().len())?;
        }
    }
    let r: SimulateRecipe = recipe.parse()?;
    r.scene.validate()?;

    let (lib, params) = load_materials(&r.albedo, r.photometry.as_deref())?;
    run.input(&r.albedo);
    if let Some(p) = &r.photometry {
        run.input(p);
    }
    let cube = simulate_cube(lib.axis(), lib.spectra(), &params, &r.scene)?;
    let s0 = reference_endmembers(lib.spectra(), &params, r.scene.model, &r.scene.reference_geometry)?;

    ensure_dir(&r.out)?;
    let endmembers = r.out.join("endmembers.csv");
    write_endmembers_csv(&endmembers, lib.axis(), &s0)?;
    let sidecar_path = r.out.join("cube.json");
    let extras = CubeExtras {
        materials: s0.labels().to_vec(),
        endmembers: Some("endmembers.csv".to_string()),
        generation: Some(GenerationInfo {
            model: r.scene.model,
            snr_db: r.scene.snr_db,
            seed: r.scene.seed,
            reference_geometry: r.scene.reference_geometry,
            scaled_mixing: r.scene.scaling.is_some(),
        }),
    };
    let sidecar = write_cube(&sidecar_path, &cube, &extras)?;
    run.output(&sidecar_path);
    run.output(&r.out.join(&sidecar.data));
    if let Some(gt) = &sidecar.ground_truth {
        run.output(&r.out.join(&gt.abundances));
        if let Some(psi) = &gt.psi {
            run.output(&r.out.join(psi));
        }
    }
    run.output(&endmembers);

    let summary = json!({
        "bands": cube.bands(),
        "pixels": cube.pixels(),
        "materials": s0.labels(),
        "scaling_ground_truth": sidecar.ground_truth.as_ref().is_some_and(|g| g.psi.is_some()),
    });
    run.finish(&r.out, Some(r.scene.seed), recipe.echo(), Some(summary))
}
