//! Closed-form reflectance models: the smooth-surface Hapke model and its
//! successive simplifications down to the geometry-only scaling factor.
//!
//! Angles enter as cosines (`mu` for emergence, `mu0` for incidence) or as a
//! [`Geometry`]; phase angles are in degrees.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{AlbedoSpectrum, Geometry, PhotometricParams};

/// Which reflectance model to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectanceModel {
    /// Full Hapke bidirectional reflectance, smooth surface.
    Full,
    /// Lambertian photometry without opposition surge.
    Lambertian,
    /// Lambertian reflectance normalized by its value at unit albedo.
    Relative,
    /// First-order expansion of the relative reflectance around zero albedo.
    Linear,
}

impl ReflectanceModel {
    pub const ALL: [ReflectanceModel; 4] = [
        ReflectanceModel::Full,
        ReflectanceModel::Lambertian,
        ReflectanceModel::Relative,
        ReflectanceModel::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ReflectanceModel::Full => "full",
            ReflectanceModel::Lambertian => "lambertian",
            ReflectanceModel::Relative => "relative",
            ReflectanceModel::Linear => "linear",
        }
    }

    /// Evaluates the model for one albedo value.
    pub fn reflectance(self, omega: f64, geom: &Geometry, params: &PhotometricParams) -> Result<f64> {
        match self {
            ReflectanceModel::Full => full_reflectance(omega, geom, params),
            ReflectanceModel::Lambertian => lambertian_reflectance(omega, geom.mu(), geom.mu0()),
            ReflectanceModel::Relative => relative_reflectance(omega, geom.mu(), geom.mu0()),
            ReflectanceModel::Linear => linear_reflectance(omega, geom.mu(), geom.mu0()),
        }
    }
}

impl fmt::Display for ReflectanceModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ReflectanceModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(ReflectanceModel::Full),
            "lambertian" => Ok(ReflectanceModel::Lambertian),
            "relative" => Ok(ReflectanceModel::Relative),
            "linear" => Ok(ReflectanceModel::Linear),
            other => Err(Error::invalid(format!(
                "unknown model '{other}' (expected full, lambertian, relative or linear)"
            ))),
        }
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if (0.0..=1.0).contains(&omega) {
        Ok(())
    } else {
        Err(Error::invalid(format!("albedo {omega} outside [0, 1]")))
    }
}

fn check_cosine(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} = {v} outside [0, 1]")))
    }
}

/// Two-lobe Henyey-Greenstein phase function at phase angle `g` (degrees).
///
/// A fully peaked lobe (`b = 1`) is singular at `g = 0°` and `g = 180°`.
pub fn phase_function(g: f64, params: &PhotometricParams) -> Result<f64> {
    if !(0.0..=180.0).contains(&g) {
        return Err(Error::invalid(format!("phase angle {g} outside [0, 180] degrees")));
    }
    let (b, c) = (params.b(), params.c());
    if b == 1.0 && (g == 0.0 || g == 180.0) {
        return Err(Error::domain(format!(
            "phase function is singular for b = 1 at g = {g} degrees"
        )));
    }
    let cos_g = g.to_radians().cos();
    let num = (1.0 - b) * (1.0 - b);
    let back = c * num / (1.0 - 2.0 * b * cos_g + b * b).powf(1.5);
    let fwd = (1.0 - c) * num / (1.0 + 2.0 * b * cos_g + b * b).powf(1.5);
    Ok(back + fwd)
}

/// Opposition-surge term `B0 / (1 + tan(g/2) / h)`, `g` in degrees.
pub fn opposition_effect(g: f64, params: &PhotometricParams) -> Result<f64> {
    if g == 180.0 {
        return Err(Error::domain("opposition effect is singular at g = 180 degrees"));
    }
    if !(0.0..180.0).contains(&g) {
        return Err(Error::invalid(format!("phase angle {g} outside [0, 180) degrees")));
    }
    Ok(params.b0() / (1.0 + (g.to_radians() / 2.0).tan() / params.h()))
}

/// Isotropic multiple-scattering approximation `H(ω, μ)`.
pub fn multiple_scattering(omega: f64, mu: f64) -> Result<f64> {
    check_omega(omega)?;
    check_cosine("mu", mu)?;
    Ok((1.0 + 2.0 * mu) / (1.0 + 2.0 * mu * (1.0 - omega).sqrt()))
}

/// Bidirectional reflectance of a smooth surface (no shadowing, unmodified
/// angles).
pub fn full_reflectance(omega: f64, geom: &Geometry, params: &PhotometricParams) -> Result<f64> {
    check_omega(omega)?;
    let (mu, mu0) = (geom.mu(), geom.mu0());
    if mu + mu0 <= 0.0 {
        return Err(Error::domain(
            "full reflectance requires mu + mu0 > 0 (incidence and emergence both at 90 degrees)",
        ));
    }
    let g = geom.phase_angle();
    let p = phase_function(g, params)?;
    let b = opposition_effect(g, params)?;
    let hh = multiple_scattering(omega, mu)? * multiple_scattering(omega, mu0)?;
    Ok(omega / (4.0 * (mu + mu0)) * ((1.0 + b) * p + hh - 1.0))
}

/// Reflectance under Lambertian photometry without opposition surge.
pub fn lambertian_reflectance(omega: f64, mu: f64, mu0: f64) -> Result<f64> {
    check_omega(omega)?;
    check_cosine("mu", mu)?;
    check_cosine("mu0", mu0)?;
    if mu + mu0 <= 0.0 {
        return Err(Error::domain(
            "lambertian reflectance requires mu + mu0 > 0 (incidence and emergence both at 90 degrees)",
        ));
    }
    let root = (1.0 - omega).sqrt();
    let num = (1.0 + 2.0 * mu) * (1.0 + 2.0 * mu0) * omega;
    let den = 4.0 * (mu + mu0) * (1.0 + 2.0 * mu * root) * (1.0 + 2.0 * mu0 * root);
    Ok(num / den)
}

/// Lambertian reflectance divided by its unit-albedo value. Defined at
/// doubly grazing geometry, where it equals the albedo.
pub fn relative_reflectance(omega: f64, mu: f64, mu0: f64) -> Result<f64> {
    check_omega(omega)?;
    check_cosine("mu", mu)?;
    check_cosine("mu0", mu0)?;
    let root = (1.0 - omega).sqrt();
    Ok(omega / ((1.0 + 2.0 * mu * root) * (1.0 + 2.0 * mu0 * root)))
}

/// Denominator of the first-order model, `4 μ μ0 + 2 μ + 2 μ0 + 1`, in `[1, 9]`.
pub fn linear_denominator(mu: f64, mu0: f64) -> f64 {
    4.0 * mu * mu0 + 2.0 * mu + 2.0 * mu0 + 1.0
}

/// First-order expansion of [`relative_reflectance`] around `ω = 0`.
pub fn linear_reflectance(omega: f64, mu: f64, mu0: f64) -> Result<f64> {
    check_omega(omega)?;
    check_cosine("mu", mu)?;
    check_cosine("mu0", mu0)?;
    Ok(omega / linear_denominator(mu, mu0))
}

/// Factor `ψ` by which a first-order reflectance spectrum observed at the
/// `reference` geometry rescales when observed at the `local` geometry:
/// `s_local = ψ · s_reference`.
pub fn scaling_factor(local: &Geometry, reference: &Geometry) -> f64 {
    linear_denominator(reference.mu(), reference.mu0()) / linear_denominator(local.mu(), local.mu0())
}

/// Applies `model` band by band to an albedo spectrum.
pub fn endmember_variant(
    albedo: &AlbedoSpectrum,
    geom: &Geometry,
    params: &PhotometricParams,
    model: ReflectanceModel,
) -> Result<Vec<f64>> {
    albedo
        .omega()
        .iter()
        .map(|&w| model.reflectance(w, geom, params))
        .collect()
}
