//! Hapke bidirectional reflectance, its reduction to the extended linear
//! mixing model (ELMM), synthetic scene generation and ELMM unmixing.
//!
//! * [`hapke`]: reflectance models from the smooth-surface Hapke model down to
//!   the first-order (linear-in-albedo) model and its scaling factor.
//! * [`scene`]: synthetic cubes built from per-pixel endmember variants.
//! * [`solver`]: FCLS, global-scaling ELMM and per-material ELMM unmixing.
//! * [`metrics`]: spectral angle, RMSE, albedo curves and angle sweeps.
//! * [`io`]: CSV, JSON and flat-binary file formats.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hapke;
pub mod io;
pub mod metrics;
pub mod scene;
pub mod solver;
pub mod spectra;

pub use error::{Error, Result};
pub use hapke::ReflectanceModel;
pub use spectra::{
    validate_cube, AlbedoSpectrum, EndmemberMatrix, Geometry, GroundTruth, HyperCube, PhotometricParams,
    SpectralLibrary, UnmixResult, Violation, WavelengthAxis,
};
