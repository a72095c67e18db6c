//! Spectral error metrics and the albedo-curve and angle-sweep experiments
//! comparing two reflectance models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hapke::{endmember_variant, ReflectanceModel};
use crate::spectra::{AlbedoSpectrum, Geometry, PhotometricParams};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Angle in radians between two spectra, in `[0, π]`.
///
/// Uses `2 atan2(‖û − v̂‖, ‖û + v̂‖)`, which stays accurate for nearly
/// parallel spectra where `acos` of the cosine loses half the digits.
pub fn spectral_angle(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::dim(format!("spectra have {} and {} bands", u.len(), v.len())));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::invalid("spectral angle is undefined for a zero spectrum"));
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    Ok(2.0 * diff.sqrt().atan2(sum.sqrt()))
}

pub fn rmse(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::dim(format!("spectra have {} and {} bands", u.len(), v.len())));
    }
    if u.is_empty() {
        return Err(Error::invalid("rmse of empty spectra"));
    }
    let sse: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sse / u.len() as f64).sqrt())
}

/// `(ω, ρ)` samples of one model at fixed geometry.
pub fn albedo_curve(
    geom: &Geometry,
    params: &PhotometricParams,
    model: ReflectanceModel,
    omega_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    omega_grid
        .iter()
        .map(|&w| Ok((w, model.reflectance(w, geom, params)?)))
        .collect()
}

/// `n` evenly spaced albedos covering `[0, 1]`.
pub fn omega_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

/// Pair of models compared by a sweep: a reference and its approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelPair {
    pub reference: ReflectanceModel,
    pub approximation: ReflectanceModel,
}

impl ModelPair {
    /// Relative reflectance against its first-order expansion.
    pub const RELATIVE_LINEAR: ModelPair = ModelPair {
        reference: ReflectanceModel::Relative,
        approximation: ReflectanceModel::Linear,
    };

    /// Absolute Lambertian reflectance against the first-order expansion of
    /// the relative one. The two differ by a geometry-dependent constant, so
    /// RMSE mixes normalization with approximation error.
    pub const AS_CAPTIONED: ModelPair = ModelPair {
        reference: ReflectanceModel::Lambertian,
        approximation: ReflectanceModel::Linear,
    };
}

impl Default for ModelPair {
    fn default() -> Self {
        Self::RELATIVE_LINEAR
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub theta0_values: Vec<f64>,
    pub theta_values: Vec<f64>,
    #[serde(default)]
    pub phi: f64,
    #[serde(default)]
    pub model_pair: ModelPair,
}

impl Default for SweepGrid {
    /// 91×91 integer-degree grid, relative vs. linear.
    fn default() -> Self {
        let deg: Vec<f64> = (0..=90).map(f64::from).collect();
        Self {
            theta0_values: deg.clone(),
            theta_values: deg,
            phi: 0.0,
            model_pair: ModelPair::default(),
        }
    }
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.theta0_values.is_empty() || self.theta_values.is_empty() {
            return Err(Error::invalid("sweep angle lists must be non-empty"));
        }
        for &t in self.theta0_values.iter().chain(&self.theta_values) {
            if !(0.0..=90.0).contains(&t) {
                return Err(Error::invalid(format!("sweep angle {t} outside [0, 90] degrees")));
            }
        }
        if !(0.0..=180.0).contains(&self.phi) {
            return Err(Error::invalid(format!(
                "sweep azimuth {} outside [0, 180] degrees",
                self.phi
            )));
        }
        Ok(())
    }
}

/// One grid cell. `sam` and `rmse` are NaN when `flag` is set.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub theta0: f64,
    pub theta: f64,
    pub sam: f64,
    pub rmse: f64,
    /// Why the cell was skipped, e.g. a model evaluated outside its domain.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub material: String,
    pub model_pair: ModelPair,
    /// Row-major over `(theta0, theta)`, in grid order.
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    fn valid(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(|c| c.flag.is_none())
    }

    pub fn mean_sam(&self) -> f64 {
        let (s, n) = self.valid().fold((0.0, 0usize), |(s, n), c| (s + c.sam, n + 1));
        s / n as f64
    }

    pub fn mean_rmse(&self) -> f64 {
        let (s, n) = self.valid().fold((0.0, 0usize), |(s, n), c| (s + c.rmse, n + 1));
        s / n as f64
    }

    pub fn flagged(&self) -> usize {
        self.cells.iter().filter(|c| c.flag.is_some()).count()
    }

    pub fn cell(&self, theta0: f64, theta: f64) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.theta0 == theta0 && c.theta == theta)
    }
}

/// Compares the two models of `grid.model_pair` on the albedo spectrum at
/// every `(θ0, θ)` cell. Cells where a model is undefined are flagged and
/// skipped rather than failing the sweep.
pub fn angle_sweep(albedo: &AlbedoSpectrum, params: &PhotometricParams, grid: &SweepGrid) -> Result<SweepResult> {
    grid.validate()?;
    if albedo.omega().iter().all(|&w| w == 0.0) {
        return Err(Error::invalid(format!(
            "albedo spectrum '{}' is identically zero",
            albedo.material()
        )));
    }
    let points: Vec<(f64, f64)> = grid
        .theta0_values
        .iter()
        .flat_map(|&t0| grid.theta_values.iter().map(move |&t| (t0, t)))
        .collect();
    let pair = grid.model_pair;

    let cells = points
        .into_par_iter()
        .map(|(theta0, theta)| -> Result<SweepCell> {
            let geom = Geometry::new(theta0, theta, grid.phi)?;
            let evaluated = endmember_variant(albedo, &geom, params, pair.reference)
                .and_then(|r| Ok((r, endmember_variant(albedo, &geom, params, pair.approximation)?)));
            match evaluated {
                Ok((r, a)) => Ok(SweepCell {
                    theta0,
                    theta,
                    sam: spectral_angle(&r, &a)?,
                    rmse: rmse(&r, &a)?,
                    flag: None,
                }),
                Err(e) if e.is_domain() => Ok(SweepCell {
                    theta0,
                    theta,
                    sam: f64::NAN,
                    rmse: f64::NAN,
                    flag: Some(e.to_string()),
                }),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SweepResult {
        material: albedo.material().to_string(),
        model_pair: pair,
        cells,
    })
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn spectral_angle_cases() {
        let v = [0.1, 0.4, 0.3];
        assert_eq!(spectral_angle(&v, &v).unwrap(), 0.0);
        assert_eq!(spectral_angle(&[0.2, 0.8, 0.6], &v).unwrap(), 0.0);
        assert!((spectral_angle(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - FRAC_PI_2).abs() < 1e-15);
        assert!((spectral_angle(&[1.0, 0.0], &[-1.0, 0.0]).unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!(spectral_angle(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(spectral_angle(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn rmse_cases() {
        let v = [0.1, 0.4, 0.3];
        assert_eq!(rmse(&v, &v).unwrap(), 0.0);
        let shifted: Vec<f64> = v.iter().map(|x| x + 0.25).collect();
        assert!((rmse(&shifted, &v).unwrap() - 0.25).abs() < 1e-15);
        assert!((rmse(&[0.0, 3.0], &[4.0, 3.0]).unwrap() - 8f64.sqrt()).abs() < 1e-15);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn curves() {
        let p = PhotometricParams::lambertian();
        let grid = omega_grid(11);
        let c = albedo_curve(
            &Geometry::new(90.0, 90.0, 0.0).unwrap(),
            &p,
            ReflectanceModel::Relative,
            &grid,
        )
        .unwrap();
        assert!(c.iter().all(|(w, r)| w == r));
        let c = albedo_curve(&Geometry::nadir(), &p, ReflectanceModel::Linear, &grid).unwrap();
        assert!(c.iter().all(|(w, r)| (r - w / 9.0).abs() < 1e-16));
        let c45 = Geometry::new(45.0, 45.0, 0.0).unwrap();
        let w: Vec<f64> = (1..10).map(|k| k as f64 / 10.0).collect();
        let c = albedo_curve(&c45, &p, ReflectanceModel::Relative, &w).unwrap();
        // 40-digit evaluations of the relative reflectance at 45°/45°.
        let expected = [
            0.018_237_254_218_789_431_92,
            0.038_987_706_591_831_408_00,
            0.062_940_162_675_287_968_07,
            0.091_097_699_793_355_461_72,
            0.125,
            0.167_184_270_002_523_643_1,
            0.222_279_144_137_020_450_9,
            0.300_197_635_405_885_038_2,
            0.429_711_762_656_368_295_8,
        ];
        for ((_, r), e) in c.iter().zip(expected) {
            assert!((r - e).abs() < 1e-15, "{r} vs {e}");
        }
    }

    #[test]
    fn sweep_cells_in_grid_order() {
        let a = AlbedoSpectrum::new("m", vec![0.2, 0.5, 0.7]).unwrap();
        let grid = SweepGrid {
            theta0_values: vec![10.0, 80.0],
            theta_values: vec![0.0, 90.0],
            ..SweepGrid::default()
        };
        let r = angle_sweep(&a, &PhotometricParams::lambertian(), &grid).unwrap();
        let order: Vec<(f64, f64)> = r.cells.iter().map(|c| (c.theta0, c.theta)).collect();
        assert_eq!(order, vec![(10.0, 0.0), (10.0, 90.0), (80.0, 0.0), (80.0, 90.0)]);
    }

    #[test]
    fn as_captioned_pair_flags_double_grazing() {
        let a = AlbedoSpectrum::new("m", vec![0.2, 0.5, 0.7]).unwrap();
        let grid = SweepGrid {
            theta0_values: vec![45.0, 90.0],
            theta_values: vec![90.0],
            model_pair: ModelPair::AS_CAPTIONED,
            ..SweepGrid::default()
        };
        let r = angle_sweep(&a, &PhotometricParams::lambertian(), &grid).unwrap();
        assert_eq!(r.flagged(), 1);
        assert!(r.cell(90.0, 90.0).unwrap().flag.is_some());
        assert!(r.cell(45.0, 90.0).unwrap().sam.is_finite());
    }

    #[test]
    fn zero_spectrum_rejected() {
        let a = AlbedoSpectrum::new("dark", vec![0.0, 0.0]).unwrap();
        assert!(angle_sweep(&a, &PhotometricParams::lambertian(), &SweepGrid::default()).is_err());
    }

    #[test]
    fn constant_spectrum_has_zero_angle_everywhere() {
        let a = AlbedoSpectrum::new("flat", vec![0.6; 5]).unwrap();
        let r = angle_sweep(&a, &PhotometricParams::lambertian(), &SweepGrid::default()).unwrap();
        assert!(r.cells.iter().all(|c| c.sam < 1e-15));
    }
}
