use std::path::PathBuf;

use anyhow::{Context, Result};
use hapke_elmm::hapke::endmember_variant;
use hapke_elmm::io::write_spectra_csv;
use hapke_elmm::{Geometry, ReflectanceModel};
use serde::Deserialize;

use super::{apply_common, apply_geometry, load_materials};
use crate::manifest::{ensure_dir, Run};
use crate::recipe::Recipe;
use crate::ForwardArgs;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForwardRecipe {
    albedo: PathBuf,
    #[serde(default)]
    photometry: Option<PathBuf>,
    #[serde(default = "default_model")]
    model: ReflectanceModel,
    #[serde(default)]
    theta0: f64,
    #[serde(default)]
    theta: f64,
    #[serde(default)]
    phi: f64,
    out: PathBuf,
    #[serde(default)]
    seed: Option<u64>,
}

fn default_model() -> ReflectanceModel {
    ReflectanceModel::Full
}

pub fn run(args: ForwardArgs) -> Result<()> {
    let mut run = Run::start("forward");
    let mut recipe = Recipe::load(args.common.config.as_deref(), &["albedo", "photometry", "out"])?;
    apply_common(&mut recipe, &args.common)?;
    apply_geometry(&mut recipe, &args.geometry)?;
    recipe.set("albedo", args.albedo.as_ref())?;
    recipe.set("photometry", args.photometry.as_ref())?;
    let r: ForwardRecipe = recipe.parse()?;

    let geometry = Geometry::new(r.theta0, r.theta, r.phi)?;
    let (lib, params) = load_materials(&r.albedo, r.photometry.as_deref())?;
    run.input(&r.albedo);
    if let Some(p) = &r.photometry {
        run.input(p);
    }

    let columns = lib
        .spectra()
        .iter()
        .zip(&params)
        .map(|(s, p)| {
            endmember_variant(s, &geometry, p, r.model)
                .with_context(|| format!("{} model for material '{}'", r.model, s.material()))
        })
        .collect::<Result<Vec<_>>>()?;

    ensure_dir(&r.out)?;
    let path = r.out.join("reflectance.csv");
    let named: Vec<(&str, &[f64])> = lib
        .spectra()
        .iter()
        .zip(&columns)
        .map(|(s, c)| (s.material(), c.as_slice()))
        .collect();
    write_spectra_csv(&path, lib.axis(), &named)?;
    run.output(&path);
    run.finish(&r.out, r.seed, recipe.echo(), None)
}
