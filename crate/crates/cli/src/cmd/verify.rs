use std::path::PathBuf;

use anyhow::{Context, Result};
use hapke_elmm::io::{read_cube, read_spectra_csv, write_json};
use hapke_elmm::scene::conservation_error;
use hapke_elmm::{validate_cube, Error};
use serde::Deserialize;
use serde_json::json;

use crate::manifest::{ensure_dir, Run};
use crate::recipe::Recipe;
use crate::VerifyArgs;

/// Largest tolerated deviation from `X = S0 (Ψ ⊙ A)` in a noiseless cube.
const CONSERVATION_TOL: f64 = 1e-12;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyRecipe {
    cube: PathBuf,
    #[serde(default)]
    endmembers: Option<PathBuf>,
    #[serde(default)]
    out: Option<PathBuf>,
}

pub fn run(args: VerifyArgs) -> Result<()> {
    let mut run = Run::start("verify");
    let mut recipe = Recipe::load(args.config.as_deref(), &["cube", "endmembers", "out"])?;
    recipe.set("cube", args.cube.as_ref())?;
    recipe.set("endmembers", args.endmembers.as_ref())?;
    recipe.set("out", args.out.as_ref())?;
    let r: VerifyRecipe = recipe.parse()?;

    let file = read_cube(&r.cube).with_context(|| format!("reading cube {}", r.cube.display()))?;
    run.input(&r.cube);
    let mut problems: Vec<String> = validate_cube(&file.cube).iter().map(ToString::to_string).collect();

    let noiseless = file.sidecar.generation.as_ref().is_some_and(|g| g.snr_db.is_none());
    let has_psi = file.cube.ground_truth.as_ref().is_some_and(|g| g.psi.is_some());
    let em_path = r.endmembers.clone().or_else(|| file.endmembers_path());
    let conservation = match (noiseless && has_psi, &em_path) {
        (true, Some(path)) => {
            let (_, s0) = read_spectra_csv(path)
                .and_then(|t| t.into_endmembers())
                .with_context(|| format!("reading endmembers {}", path.display()))?;
            run.input(path);
            let err = conservation_error(&file.cube, &s0)?.unwrap_or(0.0);
            if !(err <= CONSERVATION_TOL) {
                problems.push(format!(
                    "cube deviates from S0 (psi * A) by {err:e} (tolerance {CONSERVATION_TOL:e})"
                ));
            }
            Some(err)
        }
        _ => None,
    };

    println!(
        "cube: {} ({} bands, {} pixels)",
        r.cube.display(),
        file.cube.bands(),
        file.cube.pixels()
    );
    match conservation {
        Some(err) => println!("conservation: max deviation {err:e}"),
        None => println!("conservation: not applicable"),
    }
    for p in &problems {
        println!("violation: {p}");
    }
    if problems.is_empty() {
        println!("ok");
    }

    if let Some(out) = &r.out {
        ensure_dir(out)?;
        let report = json!({
            "cube": r.cube,
            "violations": problems,
            "conservation_max_deviation": conservation,
        });
        let path = out.join("report.json");
        write_json(&path, &report)?;
        run.output(&path);
        run.finish(out, None, recipe.echo(), Some(report))?;
    }

    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{} violation(s) found", problems.len())).into())
    }
}
