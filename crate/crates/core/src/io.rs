//! File formats: spectra CSV, photometry JSON, and the flat-binary cube with
//! its JSON sidecar.
//!
//! Reals are written in the shortest decimal form that reads back to the same
//! 64-bit value. Binary matrices are little-endian `f64`, column-major.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hapke::ReflectanceModel;
use crate::metrics::SweepResult;
use crate::spectra::{
    AlbedoSpectrum, EndmemberMatrix, Geometry, GroundTruth, HyperCube, PhotometricParams, SpectralLibrary,
    WavelengthAxis,
};

/// Shortest round-trip decimal representation.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

/// Wavelength column plus one named column per spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraTable {
    pub axis: WavelengthAxis,
    pub columns: Vec<(String, Vec<f64>)>,
}

impl SpectraTable {
    pub fn into_library(self) -> Result<SpectralLibrary> {
        let spectra = self
            .columns
            .into_iter()
            .map(|(name, values)| AlbedoSpectrum::new(name, values))
            .collect::<Result<Vec<_>>>()?;
        SpectralLibrary::new(self.axis, spectra)
    }

    pub fn into_endmembers(self) -> Result<(WavelengthAxis, EndmemberMatrix)> {
        let labels = self.columns.iter().map(|(n, _)| n.clone()).collect();
        let cols: Vec<Vec<f64>> = self.columns.into_iter().map(|(_, v)| v).collect();
        Ok((self.axis, EndmemberMatrix::from_columns(&cols, labels)?))
    }
}

/// Reads a `wavelength,<name>...` table with one row per band.
pub fn read_spectra_csv(path: &Path) -> Result<SpectraTable> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    if headers.len() < 2 || !headers[0].eq_ignore_ascii_case("wavelength") {
        return Err(Error::invalid(format!(
            "{}: header must start with 'wavelength' followed by at least one material",
            path.display()
        )));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut wavelengths = Vec::new();
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let parse = |field: &str| -> Result<f64> {
            field.parse::<f64>().map_err(|_| {
                Error::invalid(format!(
                    "{}: row {} has non-numeric value '{field}'",
                    path.display(),
                    row + 1
                ))
            })
        };
        wavelengths.push(parse(&record[0])?);
        for (k, col) in values.iter_mut().enumerate() {
            col.push(parse(&record[k + 1])?);
        }
    }
    Ok(SpectraTable {
        axis: WavelengthAxis::new(wavelengths)?,
        columns: names.into_iter().zip(values).collect(),
    })
}

pub fn read_albedo_csv(path: &Path) -> Result<SpectralLibrary> {
    read_spectra_csv(path)?.into_library()
}

pub fn write_spectra_csv(path: &Path, axis: &WavelengthAxis, columns: &[(&str, &[f64])]) -> Result<()> {
    for (name, col) in columns {
        if col.len() != axis.len() {
            return Err(Error::dim(format!(
                "column '{name}' has {} values, axis {}",
                col.len(),
                axis.len()
            )));
        }
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["wavelength".to_string()];
    header.extend(columns.iter().map(|(n, _)| n.to_string()));
    w.write_record(&header)?;
    for (l, wl) in axis.values().iter().enumerate() {
        let mut row = vec![fmt_real(*wl)];
        row.extend(columns.iter().map(|(_, c)| fmt_real(c[l])));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_endmembers_csv(path: &Path, axis: &WavelengthAxis, s: &EndmemberMatrix) -> Result<()> {
    let cols: Vec<Vec<f64>> = s.matrix().column_iter().map(|c| c.iter().copied().collect()).collect();
    let named: Vec<(&str, &[f64])> = s
        .labels()
        .iter()
        .zip(&cols)
        .map(|(n, c)| (n.as_str(), c.as_slice()))
        .collect();
    write_spectra_csv(path, axis, &named)
}

/// Photometry file: either one `{b, c, B0, h}` object applying to every
/// material, or an object keyed by material name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Photometry {
    Shared(PhotometricParams),
    PerMaterial(BTreeMap<String, PhotometricParams>),
}

impl Photometry {
    pub fn for_material(&self, material: &str) -> Result<PhotometricParams> {
        match self {
            Photometry::Shared(p) => Ok(*p),
            Photometry::PerMaterial(map) => map
                .get(material)
                .copied()
                .ok_or_else(|| Error::invalid(format!("no photometric parameters for material '{material}'"))),
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_photometry(path: &Path) -> Result<Photometry> {
    read_json(path)
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut bytes = Vec::with_capacity(m.len() * 8);
    for v in m.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: &Path, rows: usize, cols: usize) -> Result<DMatrix<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() != rows * cols * 8 {
        return Err(Error::invalid(format!(
            "{}: expected {} bytes for a {rows}x{cols} matrix, found {}",
            path.display(),
            rows * cols * 8,
            bytes.len()
        )));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok(DMatrix::from_vec(rows, cols, values))
}

/// How a simulated cube was generated; absent for external cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationInfo {
    pub model: ReflectanceModel,
    pub snr_db: Option<f64>,
    pub seed: u64,
    pub reference_geometry: Geometry,
    #[serde(default)]
    pub scaled_mixing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRef {
    pub materials: Vec<String>,
    pub abundances: String,
    pub psi: Option<String>,
}

/// JSON sidecar of a cube. File names are relative to the sidecar's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeSidecar {
    pub format: String,
    pub bands: usize,
    pub pixels: usize,
    pub dtype: String,
    pub layout: String,
    pub data: String,
    pub wavelengths: WavelengthAxis,
    pub geometries: Option<Vec<Geometry>>,
    pub ground_truth: Option<GroundTruthRef>,
    /// Reference endmember CSV for the cube, when known.
    #[serde(default)]
    pub endmembers: Option<String>,
    #[serde(default)]
    pub generation: Option<GenerationInfo>,
}

pub const CUBE_FORMAT: &str = "hapke-elmm-cube/1";

#[derive(Debug, Clone, PartialEq)]
pub struct CubeFile {
    pub cube: HyperCube,
    pub sidecar: CubeSidecar,
    pub dir: PathBuf,
}

impl CubeFile {
    pub fn endmembers_path(&self) -> Option<PathBuf> {
        self.sidecar.endmembers.as_ref().map(|p| self.dir.join(p))
    }
}

/// Extra sidecar fields for [`write_cube`].
#[derive(Debug, Clone, Default)]
pub struct CubeExtras {
    pub materials: Vec<String>,
    pub endmembers: Option<String>,
    pub generation: Option<GenerationInfo>,
}

fn stem_of(path: &Path) -> Result<String> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .map(str::to_string)
        .ok_or_else(|| Error::invalid(format!("{}: cannot derive a file stem", path.display())))
}

/// Writes `<stem>.json` (the given path) next to `<stem>.bin` and, when the
/// cube carries ground truth, `<stem>.abundances.bin` and `<stem>.psi.bin`.
pub fn write_cube(sidecar_path: &Path, cube: &HyperCube, extras: &CubeExtras) -> Result<CubeSidecar> {
    let dir = sidecar_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let stem = stem_of(sidecar_path)?;
    let data = format!("{stem}.bin");
    write_matrix(&dir.join(&data), &cube.x)?;

    let ground_truth = match &cube.ground_truth {
        Some(gt) => {
            let abundances = format!("{stem}.abundances.bin");
            write_matrix(&dir.join(&abundances), &gt.abundances)?;
            let psi = match &gt.psi {
                Some(psi) => {
                    let name = format!("{stem}.psi.bin");
                    write_matrix(&dir.join(&name), psi)?;
                    Some(name)
                }
                None => None,
            };
            let materials = if extras.materials.len() == gt.abundances.nrows() {
                extras.materials.clone()
            } else {
                (0..gt.abundances.nrows()).map(|k| format!("m{k}")).collect()
            };
            Some(GroundTruthRef {
                materials,
                abundances,
                psi,
            })
        }
        None => None,
    };

    let sidecar = CubeSidecar {
        format: CUBE_FORMAT.to_string(),
        bands: cube.bands(),
        pixels: cube.pixels(),
        dtype: "f64le".to_string(),
        layout: "column-major".to_string(),
        data,
        wavelengths: cube.axis.clone(),
        geometries: cube.geometries.clone(),
        ground_truth,
        endmembers: extras.endmembers.clone(),
        generation: extras.generation.clone(),
    };
    write_json(sidecar_path, &sidecar)?;
    Ok(sidecar)
}

pub fn read_cube(sidecar_path: &Path) -> Result<CubeFile> {
    let sidecar: CubeSidecar = read_json(sidecar_path)?;
    if sidecar.format != CUBE_FORMAT {
        return Err(Error::invalid(format!(
            "{}: unsupported cube format '{}'",
            sidecar_path.display(),
            sidecar.format
        )));
    }
    if sidecar.dtype != "f64le" || sidecar.layout != "column-major" {
        return Err(Error::invalid(format!(
            "{}: only f64le column-major cubes are supported",
            sidecar_path.display()
        )));
    }
    let dir = sidecar_path.parent().unwrap_or(Path::new(".")).to_path_buf();
    let x = read_matrix(&dir.join(&sidecar.data), sidecar.bands, sidecar.pixels)?;
    let ground_truth = match &sidecar.ground_truth {
        Some(gt) => {
            let p = gt.materials.len();
            let abundances = read_matrix(&dir.join(&gt.abundances), p, sidecar.pixels)?;
            let psi = match &gt.psi {
                Some(name) => Some(read_matrix(&dir.join(name), p, sidecar.pixels)?),
                None => None,
            };
            Some(GroundTruth { abundances, psi })
        }
        None => None,
    };
    let cube = HyperCube {
        x,
        axis: sidecar.wavelengths.clone(),
        geometries: sidecar.geometries.clone(),
        ground_truth,
    };
    Ok(CubeFile { cube, sidecar, dir })
}

/// Long-form `theta0,theta,sam_rad,rmse` table in grid order. Skipped
/// cells are written with `NaN` values.
pub fn write_sweep_csv(path: &Path, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["theta0", "theta", "sam_rad", "rmse"])?;
    for c in &sweep.cells {
        w.write_record([fmt_real(c.theta0), fmt_real(c.theta), fmt_real(c.sam), fmt_real(c.rmse)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_curve_csv(path: &Path, samples: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["omega", "reflectance"])?;
    for (omega, rho) in samples {
        w.write_record([fmt_real(*omega), fmt_real(*rho)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
