pub mod forward;
pub mod simulate;
pub mod sweep;
pub mod unmix;
pub mod verify;

use std::path::Path;

use anyhow::{Context, Result};
use hapke_elmm::io::{read_albedo_csv, read_photometry};
use hapke_elmm::{PhotometricParams, SpectralLibrary};

use crate::recipe::Recipe;
use crate::{CommonArgs, GeometryArgs};

/// Applies the flags shared by every command to `recipe`.
pub(crate) fn apply_common(recipe: &mut Recipe, common: &CommonArgs) -> Result<()> {
    recipe.set("out", common.out.as_ref())?;
    recipe.set("seed", common.seed)
}

pub(crate) fn apply_geometry(recipe: &mut Recipe, geometry: &GeometryArgs) -> Result<()> {
    recipe.set("model", geometry.model)?;
    recipe.set("theta0", geometry.theta0)?;
    recipe.set("theta", geometry.theta)?;
    recipe.set("phi", geometry.phi)
}

/// Albedo library with one set of photometric parameters per material.
pub(crate) fn load_materials(
    albedo: &Path,
    photometry: Option<&Path>,
) -> Result<(SpectralLibrary, Vec<PhotometricParams>)> {
    let lib = read_albedo_csv(albedo).with_context(|| format!("reading albedo file {}", albedo.display()))?;
    let params = match photometry {
        Some(path) => {
            let phot = read_photometry(path).with_context(|| format!("reading photometry {}", path.display()))?;
            lib.spectra()
                .iter()
                .map(|s| phot.for_material(s.material()))
                .collect::<hapke_elmm::Result<Vec<_>>>()?
        }
        None => vec![PhotometricParams::lambertian(); lib.spectra().len()],
    };
    Ok((lib, params))
}
