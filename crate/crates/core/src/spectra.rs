//! Domain types shared by the reflectance models, the simulator and the solvers.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing wavelength samples, in micrometers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WavelengthAxis(Vec<f64>);

impl WavelengthAxis {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("wavelength axis must have at least one band"));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("wavelength {i} is not finite")));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::invalid(format!(
                "wavelength axis not strictly increasing at band {}",
                i + 1
            )));
        }
        Ok(Self(values))
    }

    /// Evenly spaced axis from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, bands: usize) -> Result<Self> {
        if bands == 1 {
            return Self::new(vec![start]);
        }
        let step = (end - start) / (bands - 1) as f64;
        Self::new((0..bands).map(|i| start + step * i as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for WavelengthAxis {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<WavelengthAxis> for Vec<f64> {
    fn from(axis: WavelengthAxis) -> Self {
        axis.0
    }
}

/// Single-scattering albedo of one material, one value per band.
#[derive(Debug, Clone, PartialEq)]
pub struct AlbedoSpectrum {
    material: String,
    omega: Vec<f64>,
}

impl AlbedoSpectrum {
    /// Values outside `[0, 1]` are rejected rather than clamped.
    pub fn new(material: impl Into<String>, omega: Vec<f64>) -> Result<Self> {
        let material = material.into();
        if omega.is_empty() {
            return Err(Error::invalid(format!("albedo spectrum '{material}' is empty")));
        }
        for (band, &w) in omega.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::invalid(format!(
                    "albedo of '{material}' at band {band} is {w}, outside [0, 1]"
                )));
            }
        }
        Ok(Self { material, omega })
    }

    pub fn material(&self) -> &str {
        &self.material
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.omega.iter().sum::<f64>() / self.omega.len() as f64
    }
}

/// A set of albedo spectra sampled on a common wavelength axis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralLibrary {
    axis: WavelengthAxis,
    spectra: Vec<AlbedoSpectrum>,
}

impl SpectralLibrary {
    pub fn new(axis: WavelengthAxis, spectra: Vec<AlbedoSpectrum>) -> Result<Self> {
        for s in &spectra {
            if s.len() != axis.len() {
                return Err(Error::dim(format!(
                    "spectrum '{}' has {} bands, axis has {}",
                    s.material(),
                    s.len(),
                    axis.len()
                )));
            }
        }
        Ok(Self { axis, spectra })
    }

    pub fn axis(&self) -> &WavelengthAxis {
        &self.axis
    }

    pub fn spectra(&self) -> &[AlbedoSpectrum] {
        &self.spectra
    }

    pub fn get(&self, material: &str) -> Option<&AlbedoSpectrum> {
        self.spectra.iter().find(|s| s.material() == material)
    }
}

/// Scattering and opposition-effect parameters of one material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPhotometry", into = "RawPhotometry")]
pub struct PhotometricParams {
    b: f64,
    c: f64,
    b0: f64,
    h: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPhotometry {
    b: f64,
    c: f64,
    #[serde(rename = "B0")]
    b0: f64,
    h: f64,
}

impl PhotometricParams {
    /// `b` is the lobe asymmetry, `c` the backscatter fraction, `b0` and `h`
    /// the strength and angular width of the opposition surge.
    pub fn new(b: f64, c: f64, b0: f64, h: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::invalid(format!("asymmetry b = {b} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::invalid(format!("backscatter fraction c = {c} outside [0, 1]")));
        }
        if !(b0 >= 0.0 && b0.is_finite()) {
            return Err(Error::invalid(format!("opposition strength B0 = {b0} must be >= 0")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::invalid(format!("opposition width h = {h} must be > 0")));
        }
        Ok(Self { b, c, b0, h })
    }

    /// Isotropic scattering without opposition surge.
    pub fn lambertian() -> Self {
        Self {
            b: 0.0,
            c: 0.5,
            b0: 0.0,
            h: 1.0,
        }
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

impl TryFrom<RawPhotometry> for PhotometricParams {
    type Error = Error;

    fn try_from(raw: RawPhotometry) -> Result<Self> {
        Self::new(raw.b, raw.c, raw.b0, raw.h)
    }
}

impl From<PhotometricParams> for RawPhotometry {
    fn from(p: PhotometricParams) -> Self {
        Self {
            b: p.b,
            c: p.c,
            b0: p.b0,
            h: p.h,
        }
    }
}

/// Cosine of an angle given in degrees. Exact at 0 and 90.
pub fn cos_deg(deg: f64) -> f64 {
    if deg == 90.0 {
        0.0
    } else {
        deg.to_radians().cos()
    }
}

/// Acquisition geometry of one pixel. Angles are in degrees.
///
/// The phase angle is derived from the other three with
/// `cos g = cos θ0 cos θ + sin θ0 sin θ cos φ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeometry", into = "RawGeometry")]
pub struct Geometry {
    theta0: f64,
    theta: f64,
    phi: f64,
    g: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGeometry {
    theta0: f64,
    theta: f64,
    #[serde(default)]
    phi: f64,
    // Informational only; recomputed on read.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g: Option<f64>,
}

impl Geometry {
    pub fn new(theta0: f64, theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=90.0).contains(&theta0) {
            return Err(Error::invalid(format!(
                "incidence angle {theta0} outside [0, 90] degrees"
            )));
        }
        if !(0.0..=90.0).contains(&theta) {
            return Err(Error::invalid(format!(
                "emergence angle {theta} outside [0, 90] degrees"
            )));
        }
        if !(0.0..=180.0).contains(&phi) {
            return Err(Error::invalid(format!("azimuth {phi} outside [0, 180] degrees")));
        }
        let (t0, t, p) = (theta0.to_radians(), theta.to_radians(), phi.to_radians());
        let cos_g = cos_deg(theta0) * cos_deg(theta) + t0.sin() * t.sin() * p.cos();
        let g = cos_g.clamp(-1.0, 1.0).acos().to_degrees().clamp(0.0, 180.0);
        Ok(Self { theta0, theta, phi, g })
    }

    /// Sun and sensor both at the surface normal.
    pub fn nadir() -> Self {
        Self {
            theta0: 0.0,
            theta: 0.0,
            phi: 0.0,
            g: 0.0,
        }
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// Phase angle in degrees, in `[0, 180]`.
    pub fn phase_angle(&self) -> f64 {
        self.g
    }

    /// Cosine of the incidence angle.
    pub fn mu0(&self) -> f64 {
        cos_deg(self.theta0)
    }

    /// Cosine of the emergence angle.
    pub fn mu(&self) -> f64 {
        cos_deg(self.theta)
    }
}

impl TryFrom<RawGeometry> for Geometry {
    type Error = Error;

    fn try_from(raw: RawGeometry) -> Result<Self> {
        Self::new(raw.theta0, raw.theta, raw.phi)
    }
}

impl From<Geometry> for RawGeometry {
    fn from(g: Geometry) -> Self {
        Self {
            theta0: g.theta0,
            theta: g.theta,
            phi: g.phi,
            g: Some(g.g),
        }
    }
}

/// Reference reflectance endmembers, one column per material.
#[derive(Debug, Clone, PartialEq)]
pub struct EndmemberMatrix {
    s: DMatrix<f64>,
    labels: Vec<String>,
}

impl EndmemberMatrix {
    pub fn new(s: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != s.ncols() {
            return Err(Error::dim(format!(
                "{} labels for {} endmember columns",
                labels.len(),
                s.ncols()
            )));
        }
        if s.ncols() == 0 || s.nrows() == 0 {
            return Err(Error::invalid("endmember matrix is empty"));
        }
        for j in 0..s.ncols() {
            for i in 0..s.nrows() {
                let v = s[(i, j)];
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::invalid(format!(
                        "endmember '{}' band {i} has invalid reflectance {v}",
                        labels[j]
                    )));
                }
            }
        }
        Ok(Self { s, labels })
    }

    /// Builds the matrix from per-material spectra (each of length L).
    pub fn from_columns(columns: &[Vec<f64>], labels: Vec<String>) -> Result<Self> {
        let bands = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != bands) {
            return Err(Error::dim("endmember columns have different lengths"));
        }
        let s = DMatrix::from_fn(bands, columns.len(), |i, j| columns[j][i]);
        Self::new(s, labels)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn bands(&self) -> usize {
        self.s.nrows()
    }

    pub fn materials(&self) -> usize {
        self.s.ncols()
    }
}

/// Known generating parameters of a simulated cube.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    /// P×N abundances.
    pub abundances: DMatrix<f64>,
    /// P×N scaling factors; `None` when the generating model has no exact
    /// scaling-factor representation.
    pub psi: Option<DMatrix<f64>>,
}

/// L×N reflectance image with its wavelength axis.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    pub x: DMatrix<f64>,
    pub axis: WavelengthAxis,
    pub geometries: Option<Vec<Geometry>>,
    pub ground_truth: Option<GroundTruth>,
}

impl HyperCube {
    pub fn bands(&self) -> usize {
        self.x.nrows()
    }

    pub fn pixels(&self) -> usize {
        self.x.ncols()
    }
}

/// Output of the unmixing solvers for a whole cube.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmixResult {
    /// P×N abundances.
    pub abundances: DMatrix<f64>,
    /// P×N scaling factors (all ones for the plain LMM).
    pub psi: DMatrix<f64>,
    /// Per-pixel reconstruction RMSE.
    pub residual_rmse: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: Vec<bool>,
    /// Pixels whose global scaling collapsed to zero.
    pub degenerate: Vec<bool>,
    /// Per-pixel objective values, starting with the initial point.
    pub objective_traces: Vec<Vec<f64>>,
}

impl UnmixResult {
    pub fn mean_residual_rmse(&self) -> f64 {
        self.residual_rmse.iter().sum::<f64>() / self.residual_rmse.len().max(1) as f64
    }
}

/// A broken cube invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonFiniteReflectance {
        band: usize,
        pixel: usize,
    },
    NegativeReflectance {
        band: usize,
        pixel: usize,
        value: f64,
    },
    AxisLength {
        axis: usize,
        bands: usize,
    },
    GeometryCount {
        expected: usize,
        found: usize,
    },
    GroundTruthShape {
        what: &'static str,
        rows: usize,
        cols: usize,
        pixels: usize,
    },
    NegativeAbundance {
        material: usize,
        pixel: usize,
        value: f64,
    },
    AbundanceSum {
        pixel: usize,
        sum: f64,
    },
    NonPositivePsi {
        material: usize,
        pixel: usize,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFiniteReflectance { band, pixel } => {
                write!(f, "non-finite reflectance at band {band}, pixel {pixel}")
            }
            Violation::NegativeReflectance { band, pixel, value } => {
                write!(f, "negative reflectance {value} at band {band}, pixel {pixel}")
            }
            Violation::AxisLength { axis, bands } => {
                write!(f, "wavelength axis has {axis} entries but cube has {bands} bands")
            }
            Violation::GeometryCount { expected, found } => {
                write!(f, "{found} geometries for {expected} pixels")
            }
            Violation::GroundTruthShape {
                what,
                rows,
                cols,
                pixels,
            } => write!(f, "ground-truth {what} is {rows}x{cols}, expected {pixels} columns"),
            Violation::NegativeAbundance { material, pixel, value } => {
                write!(f, "negative abundance {value} for material {material}, pixel {pixel}")
            }
            Violation::AbundanceSum { pixel, sum } => {
                write!(f, "abundances of pixel {pixel} sum to {sum}")
            }
            Violation::NonPositivePsi { material, pixel, value } => write!(
                f,
                "scaling factor {value} for material {material}, pixel {pixel} is not positive"
            ),
        }
    }
}

/// Abundance columns must sum to one within this tolerance.
pub const SUM_TO_ONE_TOL: f64 = 1e-9;

/// Reports every broken cube invariant. An empty list means the cube is valid.
pub fn validate_cube(cube: &HyperCube) -> Vec<Violation> {
    let mut out = Vec::new();
    let (bands, pixels) = cube.x.shape();

    for n in 0..pixels {
        for l in 0..bands {
            let v = cube.x[(l, n)];
            if !v.is_finite() {
                out.push(Violation::NonFiniteReflectance { band: l, pixel: n });
            } else if v < 0.0 {
                out.push(Violation::NegativeReflectance {
                    band: l,
                    pixel: n,
                    value: v,
                });
            }
        }
    }

    if cube.axis.len() != bands {
        out.push(Violation::AxisLength {
            axis: cube.axis.len(),
            bands,
        });
    }

    if let Some(geoms) = &cube.geometries {
        if geoms.len() != pixels {
            out.push(Violation::GeometryCount {
                expected: pixels,
                found: geoms.len(),
            });
        }
    }

    if let Some(gt) = &cube.ground_truth {
        let a = &gt.abundances;
        if a.ncols() != pixels {
            out.push(Violation::GroundTruthShape {
                what: "abundance matrix",
                rows: a.nrows(),
                cols: a.ncols(),
                pixels,
            });
        }
        for n in 0..a.ncols() {
            for p in 0..a.nrows() {
                let v = a[(p, n)];
                if !(v >= 0.0) {
                    out.push(Violation::NegativeAbundance {
                        material: p,
                        pixel: n,
                        value: v,
                    });
                }
            }
            let sum = a.column(n).sum();
            if !((sum - 1.0).abs() <= SUM_TO_ONE_TOL) {
                out.push(Violation::AbundanceSum { pixel: n, sum });
            }
        }
        if let Some(psi) = &gt.psi {
            if psi.shape() != a.shape() {
                out.push(Violation::GroundTruthShape {
                    what: "scaling matrix",
                    rows: psi.nrows(),
                    cols: psi.ncols(),
                    pixels,
                });
            }
            for n in 0..psi.ncols() {
                for p in 0..psi.nrows() {
                    let v = psi[(p, n)];
                    if !(v > 0.0) {
                        out.push(Violation::NonPositivePsi {
                            material: p,
                            pixel: n,
                            value: v,
                        });
                    }
                }
            }
        }
    }

    out
}
