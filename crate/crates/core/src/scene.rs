//! Synthetic hyperspectral scenes: per-pixel geometry, per-pixel endmember
//! variants, linear mixing and additive white Gaussian noise.
//!
//! Every pixel draws from its own counter-based random stream, so the output
//! for a given seed is the same whether pixels are simulated serially or in
//! parallel.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hapke::{endmember_variant, scaling_factor, ReflectanceModel};
use crate::spectra::{
    AlbedoSpectrum, EndmemberMatrix, Geometry, GroundTruth, HyperCube, PhotometricParams, WavelengthAxis,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AbundanceSampler {
    /// Uniform on the probability simplex.
    UniformSimplex,
    /// Symmetric Dirichlet; `alpha < 1` concentrates mass on few materials.
    SparseDirichlet { alpha: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeometrySampler {
    Fixed {
        theta0: f64,
        theta: f64,
        #[serde(default)]
        phi: f64,
    },
    /// Independent uniform draws of each angle (degrees) from the given ranges.
    Uniform {
        theta0: (f64, f64),
        theta: (f64, f64),
        #[serde(default)]
        phi: (f64, f64),
    },
}

/// Draws one scaling factor per pixel (shared by all materials unless
/// `per_material` is set) and mixes scaled reference endmembers directly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingSampler {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub per_material: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub materials: usize,
    pub pixels: usize,
    #[serde(default = "default_abundance_sampler")]
    pub abundance_sampler: AbundanceSampler,
    #[serde(default = "default_geometry_sampler")]
    pub geometry_sampler: GeometrySampler,
    pub model: ReflectanceModel,
    /// Geometry at which the reference endmembers are evaluated.
    #[serde(default = "Geometry::nadir")]
    pub reference_geometry: Geometry,
    /// When set, pixels are mixed from scaled reference endmembers instead
    /// of per-pixel geometric variants.
    #[serde(default)]
    pub scaling: Option<ScalingSampler>,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_abundance_sampler() -> AbundanceSampler {
    AbundanceSampler::UniformSimplex
}

fn default_geometry_sampler() -> GeometrySampler {
    GeometrySampler::Fixed {
        theta0: 0.0,
        theta: 0.0,
        phi: 0.0,
    }
}

impl SceneConfig {
    pub fn new(materials: usize, pixels: usize, model: ReflectanceModel, seed: u64) -> Self {
        Self {
            materials,
            pixels,
            abundance_sampler: default_abundance_sampler(),
            geometry_sampler: default_geometry_sampler(),
            model,
            reference_geometry: Geometry::nadir(),
            scaling: None,
            snr_db: None,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.materials == 0 {
            return Err(Error::invalid("scene needs at least one material"));
        }
        if self.pixels == 0 {
            return Err(Error::invalid("scene needs at least one pixel"));
        }
        if let Some(snr) = self.snr_db {
            if !(snr > 0.0) {
                return Err(Error::invalid(format!("snr_db = {snr} must be positive")));
            }
        }
        if let AbundanceSampler::SparseDirichlet { alpha } = self.abundance_sampler {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::invalid(format!(
                    "Dirichlet concentration {alpha} must be positive"
                )));
            }
        }
        match self.geometry_sampler {
            GeometrySampler::Fixed { theta0, theta, phi } => {
                Geometry::new(theta0, theta, phi)?;
            }
            GeometrySampler::Uniform { theta0, theta, phi } => {
                for (name, (lo, hi), max) in [("theta0", theta0, 90.0), ("theta", theta, 90.0), ("phi", phi, 180.0)] {
                    if !(0.0 <= lo && lo <= hi && hi <= max) {
                        return Err(Error::invalid(format!(
                            "{name} range [{lo}, {hi}] must lie within [0, {max}]"
                        )));
                    }
                }
            }
        }
        if let Some(s) = self.scaling {
            if !(s.min > 0.0 && s.min <= s.max && s.max.is_finite()) {
                return Err(Error::invalid(format!(
                    "scaling range [{}, {}] must satisfy 0 < min <= max",
                    s.min, s.max
                )));
            }
        }
        Ok(())
    }
}

const ABUNDANCE_STREAM: u64 = 1;
const GEOMETRY_STREAM: u64 = 2;
const SCALING_STREAM: u64 = 3;
const NOISE_STREAM: u64 = 4;

/// Independent random stream for one (purpose, pixel) pair.
fn pixel_rng(seed: u64, purpose: u64, pixel: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(pixel as u64);
    rng
}

fn draw_abundances(sampler: &AbundanceSampler, p: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let raw: Vec<f64> = match *sampler {
        // Normalized exponential spacings are uniform on the simplex.
        AbundanceSampler::UniformSimplex => (0..p).map(|_| Exp1.sample(rng)).collect(),
        AbundanceSampler::SparseDirichlet { alpha } => {
            let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
            let mut draw: Vec<f64> = (0..p).map(|_| gamma.sample(rng)).collect();
            // Tiny alpha can underflow every component.
            while draw.iter().sum::<f64>() <= 0.0 {
                draw = (0..p).map(|_| gamma.sample(rng)).collect();
            }
            draw
        }
    };
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / total).collect())
}

fn draw_geometry(sampler: &GeometrySampler, rng: &mut ChaCha8Rng) -> Result<Geometry> {
    match *sampler {
        GeometrySampler::Fixed { theta0, theta, phi } => Geometry::new(theta0, theta, phi),
        GeometrySampler::Uniform { theta0, theta, phi } => {
            let mut draw = |(lo, hi): (f64, f64)| if lo == hi { lo } else { rng.random_range(lo..=hi) };
            let t0 = draw(theta0);
            let t = draw(theta);
            let ph = draw(phi);
            Geometry::new(t0, t, ph)
        }
    }
}

/// P×N abundance matrix, each column on the probability simplex.
pub fn sample_abundances(config: &SceneConfig) -> Result<DMatrix<f64>> {
    config.validate()?;
    let p = config.materials;
    let cols: Vec<Vec<f64>> = (0..config.pixels)
        .into_par_iter()
        .map(|n| {
            draw_abundances(
                &config.abundance_sampler,
                p,
                &mut pixel_rng(config.seed, ABUNDANCE_STREAM, n),
            )
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(p, config.pixels, |i, j| cols[j][i]))
}

fn check_inputs(albedos: &[AlbedoSpectrum], photometry: &[PhotometricParams], p: usize) -> Result<usize> {
    if albedos.len() != p || photometry.len() != p {
        return Err(Error::dim(format!(
            "scene has {p} materials but {} albedo spectra and {} photometry records",
            albedos.len(),
            photometry.len()
        )));
    }
    let bands = albedos[0].len();
    if albedos.iter().any(|a| a.len() != bands) {
        return Err(Error::dim("albedo spectra have different band counts"));
    }
    Ok(bands)
}

/// Endmembers evaluated at `geometry` under `model`, one column per material.
pub fn reference_endmembers(
    albedos: &[AlbedoSpectrum],
    photometry: &[PhotometricParams],
    model: ReflectanceModel,
    geometry: &Geometry,
) -> Result<EndmemberMatrix> {
    check_inputs(albedos, photometry, albedos.len())?;
    let columns = albedos
        .iter()
        .zip(photometry)
        .map(|(a, p)| endmember_variant(a, geometry, p, model))
        .collect::<Result<Vec<_>>>()?;
    EndmemberMatrix::from_columns(&columns, albedos.iter().map(|a| a.material().to_string()).collect())
}

struct SimPixel {
    x: Vec<f64>,
    geometry: Option<Geometry>,
    psi: Option<Vec<f64>>,
}

/// Simulates a cube according to `config`.
///
/// Scaling-factor ground truth is recorded for the linear model (where it is
/// exact) and for direct scaled mixing; other models leave it unset.
pub fn simulate_cube(
    axis: &WavelengthAxis,
    albedos: &[AlbedoSpectrum],
    photometry: &[PhotometricParams],
    config: &SceneConfig,
) -> Result<HyperCube> {
    config.validate()?;
    let p = config.materials;
    let bands = check_inputs(albedos, photometry, p)?;
    if bands != axis.len() {
        return Err(Error::dim(format!(
            "albedo spectra have {bands} bands, wavelength axis has {}",
            axis.len()
        )));
    }
    let abundances = sample_abundances(config)?;
    let reference = reference_endmembers(albedos, photometry, config.model, &config.reference_geometry)?;
    let s0 = reference.matrix();

    let pixels: Vec<SimPixel> = (0..config.pixels)
        .into_par_iter()
        .map(|n| -> Result<SimPixel> {
            let a = abundances.column(n);
            if let Some(scaling) = config.scaling {
                let mut rng = pixel_rng(config.seed, SCALING_STREAM, n);
                let mut draw = || {
                    if scaling.min == scaling.max {
                        scaling.min
                    } else {
                        rng.random_range(scaling.min..=scaling.max)
                    }
                };
                let psi: Vec<f64> = if scaling.per_material {
                    (0..p).map(|_| draw()).collect()
                } else {
                    vec![draw(); p]
                };
                let z = DVector::from_fn(p, |k, _| psi[k] * a[k]);
                let x = (s0 * z).iter().copied().collect();
                return Ok(SimPixel {
                    x,
                    geometry: None,
                    psi: Some(psi),
                });
            }

            let geometry = draw_geometry(
                &config.geometry_sampler,
                &mut pixel_rng(config.seed, GEOMETRY_STREAM, n),
            )?;
            let mut x = vec![0.0; bands];
            for (k, (albedo, params)) in albedos.iter().zip(photometry).enumerate() {
                let variant = endmember_variant(albedo, &geometry, params, config.model)?;
                for (xl, v) in x.iter_mut().zip(variant) {
                    *xl += a[k] * v;
                }
            }
            let psi = (config.model == ReflectanceModel::Linear)
                .then(|| vec![scaling_factor(&geometry, &config.reference_geometry); p]);
            Ok(SimPixel {
                x,
                geometry: Some(geometry),
                psi,
            })
        })
        .collect::<Result<_>>()?;

    let x = DMatrix::from_fn(bands, config.pixels, |l, n| pixels[n].x[l]);
    let geometries: Option<Vec<Geometry>> = pixels.iter().map(|px| px.geometry).collect();
    let psi = pixels
        .iter()
        .all(|px| px.psi.is_some())
        .then(|| DMatrix::from_fn(p, config.pixels, |k, n| pixels[n].psi.as_ref().unwrap()[k]));

    let cube = HyperCube {
        x,
        axis: axis.clone(),
        geometries,
        ground_truth: Some(GroundTruth { abundances, psi }),
    };
    match config.snr_db {
        Some(snr) => inject_noise(&cube, snr, config.seed),
        None => Ok(cube),
    }
}

/// Adds white Gaussian noise at the requested signal-to-noise ratio,
/// `10 log10(‖X‖² / ‖E‖²)`. An infinite ratio leaves the cube unchanged.
///
/// Reflectances pushed below zero by the noise are set to zero.
pub fn inject_noise(cube: &HyperCube, snr_db: f64, seed: u64) -> Result<HyperCube> {
    if !(snr_db > 0.0) {
        return Err(Error::invalid(format!("snr_db = {snr_db} must be positive")));
    }
    if snr_db.is_infinite() {
        return Ok(cube.clone());
    }
    let (bands, pixels) = cube.x.shape();
    let mean_power = cube.x.norm_squared() / (bands * pixels) as f64;
    let sigma = (mean_power / 10f64.powf(snr_db / 10.0)).sqrt();

    let noisy_cols: Vec<Vec<f64>> = (0..pixels)
        .into_par_iter()
        .map(|n| {
            let mut rng = pixel_rng(seed, NOISE_STREAM, n);
            cube.x
                .column(n)
                .iter()
                .map(|&v| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    (v + sigma * e).max(0.0)
                })
                .collect()
        })
        .collect();

    let mut out = cube.clone();
    out.x = DMatrix::from_fn(bands, pixels, |l, n| noisy_cols[n][l]);
    Ok(out)
}

/// Largest absolute deviation between the cube and `S0 (Ψ ⊙ A)` built from
/// its ground truth, or `None` when no scaling ground truth is stored.
pub fn conservation_error(cube: &HyperCube, s0: &EndmemberMatrix) -> Result<Option<f64>> {
    let Some(gt) = &cube.ground_truth else {
        return Ok(None);
    };
    let Some(psi) = &gt.psi else {
        return Ok(None);
    };
    if s0.bands() != cube.bands() || s0.materials() != gt.abundances.nrows() || psi.shape() != gt.abundances.shape() {
        return Err(Error::dim("endmembers and ground truth do not match the cube"));
    }
    let recon = s0.matrix() * psi.component_mul(&gt.abundances);
    Ok(Some((recon - &cube.x).amax()))
}
