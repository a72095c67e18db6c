//! Abundance estimation with a fixed reference endmember matrix `S0`:
//!
//! * `lmm`: fully constrained least squares, `x ≈ S0 a`;
//! * `elmm-global`: one scaling factor per pixel, `x ≈ ψ S0 a`;
//! * `elmm-full`: one scaling factor per pixel and material,
//!   `x ≈ S0 (ψ ⊙ a)`, estimated by block-coordinate descent.
//!
//! Pixels are solved independently (in parallel); results do not depend on
//! the thread count.

pub mod active_set;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{EndmemberMatrix, UnmixResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverModel {
    #[serde(rename = "lmm")]
    Lmm,
    #[serde(rename = "elmm-global")]
    ElmmGlobal,
    #[serde(rename = "elmm-full")]
    ElmmFull,
}

impl SolverModel {
    pub fn name(self) -> &'static str {
        match self {
            SolverModel::Lmm => "lmm",
            SolverModel::ElmmGlobal => "elmm-global",
            SolverModel::ElmmFull => "elmm-full",
        }
    }
}

impl fmt::Display for SolverModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolverModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lmm" | "fcls" => Ok(SolverModel::Lmm),
            "elmm-global" => Ok(SolverModel::ElmmGlobal),
            "elmm-full" | "elmm" => Ok(SolverModel::ElmmFull),
            other => Err(Error::invalid(format!(
                "unknown solver model '{other}' (expected lmm, elmm-global or elmm-full)"
            ))),
        }
    }
}

/// Starting point of the block-coordinate descent in `elmm-full`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Initialization {
    /// Abundances from FCLS, all scaling factors equal to one.
    Lmm,
    /// The `elmm-global` solution, its scaling factor copied to every material.
    GlobalScaling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub model: SolverModel,
    pub sum_to_one: bool,
    pub max_iters: usize,
    /// Stop when the relative objective decrease falls below this.
    pub tol: f64,
    pub psi_bounds: (f64, f64),
    pub init: Initialization,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            model: SolverModel::ElmmFull,
            sum_to_one: true,
            max_iters: 500,
            tol: 1e-8,
            psi_bounds: (1e-2, 1e2),
            init: Initialization::GlobalScaling,
        }
    }
}

impl SolverConfig {
    pub fn with_model(model: SolverModel) -> Self {
        Self {
            model,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.psi_bounds;
        if !(lo > 0.0 && lo <= 1.0 && hi >= 1.0 && hi.is_finite()) {
            return Err(Error::invalid(format!(
                "psi bounds [{lo}, {hi}] must satisfy 0 < min <= 1 <= max"
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tolerance {} must be positive", self.tol)));
        }
        if self.max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        Ok(())
    }
}

/// Reference endmembers with their precomputed Gram matrix. Construction
/// fails unless the matrix has full column rank.
#[derive(Debug, Clone)]
pub struct EndmemberSystem {
    s: DMatrix<f64>,
    gram: DMatrix<f64>,
}

impl EndmemberSystem {
    pub fn new(endmembers: &EndmemberMatrix) -> Result<Self> {
        let s = endmembers.matrix().clone();
        let (l, p) = s.shape();
        if l < p {
            return Err(Error::dim(format!("{l} bands cannot resolve {p} endmembers")));
        }
        let sv = s.clone().svd(false, false).singular_values;
        let smax = sv.max();
        let cutoff = smax * l.max(p) as f64 * f64::EPSILON;
        let rank = sv.iter().filter(|&&v| v > cutoff).count();
        if rank < p || smax == 0.0 {
            return Err(Error::RankDeficient { rank, cols: p });
        }
        let gram = s.transpose() * &s;
        Ok(Self { s, gram })
    }

    pub fn bands(&self) -> usize {
        self.s.nrows()
    }

    pub fn materials(&self) -> usize {
        self.s.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    fn check_pixel(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.bands() {
            return Err(Error::dim(format!(
                "pixel has {} bands, endmembers have {}",
                x.len(),
                self.bands()
            )));
        }
        Ok(())
    }

    fn correlations(&self, x: &[f64]) -> DVector<f64> {
        self.s.tr_mul(&DVector::from_column_slice(x))
    }

    /// Squared residual `‖x − S z‖²`.
    pub fn objective(&self, x: &[f64], z: &DVector<f64>) -> f64 {
        let recon = &self.s * z;
        x.iter().zip(recon.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Constrained least squares against `S0`.
    pub fn fcls(&self, x: &[f64], sum_to_one: bool) -> Result<DVector<f64>> {
        self.check_pixel(x)?;
        Ok(active_set::solve(&self.gram, &self.correlations(x), sum_to_one)?.a)
    }

    pub fn elmm_global(&self, x: &[f64], config: &SolverConfig) -> Result<GlobalFit> {
        self.check_pixel(x)?;
        self.global_from_correlations(&self.correlations(x), config)
    }

    fn global_from_correlations(&self, c: &DVector<f64>, config: &SolverConfig) -> Result<GlobalFit> {
        let p = self.materials();
        let z = active_set::solve(&self.gram, c, false)?.a;
        if !config.sum_to_one {
            return Ok(GlobalFit {
                a: z,
                psi: 1.0,
                degenerate: false,
            });
        }
        let total = z.sum();
        if total <= 0.0 {
            return Ok(GlobalFit {
                a: DVector::from_element(p, 1.0 / p as f64),
                psi: config.psi_bounds.0,
                degenerate: true,
            });
        }
        let (lo, hi) = config.psi_bounds;
        if (lo..=hi).contains(&total) {
            return Ok(GlobalFit {
                a: z / total,
                psi: total,
                degenerate: false,
            });
        }
        // The feasible set {ψ a} is convex, so the bound on Σz is active.
        let psi = total.clamp(lo, hi);
        let a = active_set::solve(&self.gram, &(c / psi), true)?.a;
        Ok(GlobalFit {
            a,
            psi,
            degenerate: false,
        })
    }

    /// Block-coordinate descent for per-material scaling factors.
    pub fn elmm_full(&self, x: &[f64], config: &SolverConfig) -> Result<PixelFit> {
        self.check_pixel(x)?;
        let p = self.materials();
        let (lo, hi) = config.psi_bounds;
        let c = self.correlations(x);

        let (mut a, mut psi, degenerate) = match config.init {
            Initialization::Lmm => (
                active_set::solve(&self.gram, &c, config.sum_to_one)?.a,
                DVector::from_element(p, 1.0),
                false,
            ),
            Initialization::GlobalScaling => {
                let g = self.global_from_correlations(&c, config)?;
                (g.a, DVector::from_element(p, g.psi), g.degenerate)
            }
        };

        let mut f = self.objective(x, &psi.component_mul(&a));
        let mut trace = vec![f];
        let mut iterations = 0;
        let mut converged = f == 0.0;

        while !converged && iterations < config.max_iters {
            iterations += 1;

            // (i) abundances for fixed scaling: columns of S0 scaled by ψ.
            let d = DMatrix::from_diagonal(&psi);
            let gram_psi = &d * &self.gram * &d;
            let c_psi = c.component_mul(&psi);
            let new_a = active_set::solve(&gram_psi, &c_psi, config.sum_to_one)?.a;

            // (ii) each ψ_p in turn: 1-D least squares, projected onto the bounds.
            let mut new_psi = psi.clone();
            let mut z = new_psi.component_mul(&new_a);
            for k in 0..p {
                if new_a[k] <= 0.0 {
                    new_psi[k] = 1.0;
                    z[k] = 0.0;
                    continue;
                }
                let residual_corr = c[k] - (self.gram.row(k) * &z)[0];
                let step = residual_corr / (new_a[k] * self.gram[(k, k)]);
                new_psi[k] = (new_psi[k] + step).clamp(lo, hi);
                z[k] = new_psi[k] * new_a[k];
            }

            let f_new = self.objective(x, &z);
            trace.push(f_new);
            if f_new > f {
                // Rounding-level increase: keep the previous iterate.
                converged = true;
                break;
            }
            let decrease = f - f_new;
            a = new_a;
            psi = new_psi;
            converged = f_new == 0.0 || decrease < config.tol * f;
            f = f_new;
        }

        for k in 0..p {
            if a[k] <= 0.0 {
                psi[k] = 1.0;
            }
        }
        let rmse = (f / x.len() as f64).sqrt();
        Ok(PixelFit {
            a,
            psi,
            residual_rmse: rmse,
            iterations,
            converged,
            degenerate,
            objective_trace: trace,
        })
    }

    fn fit_pixel(&self, x: &[f64], config: &SolverConfig) -> Result<PixelFit> {
        match config.model {
            SolverModel::Lmm => {
                let a = self.fcls(x, config.sum_to_one)?;
                let f = self.objective(x, &a);
                Ok(PixelFit {
                    psi: DVector::from_element(a.len(), 1.0),
                    a,
                    residual_rmse: (f / x.len() as f64).sqrt(),
                    iterations: 1,
                    converged: true,
                    degenerate: false,
                    objective_trace: vec![f],
                })
            }
            SolverModel::ElmmGlobal => {
                let g = self.elmm_global(x, config)?;
                let z = &g.a * g.psi;
                let f = self.objective(x, &z);
                Ok(PixelFit {
                    psi: DVector::from_element(g.a.len(), g.psi),
                    a: g.a,
                    residual_rmse: (f / x.len() as f64).sqrt(),
                    iterations: 1,
                    converged: true,
                    degenerate: g.degenerate,
                    objective_trace: vec![f],
                })
            }
            SolverModel::ElmmFull => self.elmm_full(x, config),
        }
    }

    /// Unmixes every column of the L×N matrix `x` with the configured model.
    pub fn unmix(&self, x: &DMatrix<f64>, config: &SolverConfig) -> Result<UnmixResult> {
        config.validate()?;
        if x.nrows() != self.bands() {
            return Err(Error::dim(format!(
                "cube has {} bands, endmembers have {}",
                x.nrows(),
                self.bands()
            )));
        }
        let fits: Vec<PixelFit> = (0..x.ncols())
            .into_par_iter()
            .map(|n| self.fit_pixel(x.column(n).as_slice(), config))
            .collect::<Result<_>>()?;

        let (p, n) = (self.materials(), x.ncols());
        let mut out = UnmixResult {
            abundances: DMatrix::zeros(p, n),
            psi: DMatrix::zeros(p, n),
            residual_rmse: Vec::with_capacity(n),
            iterations: Vec::with_capacity(n),
            converged: Vec::with_capacity(n),
            degenerate: Vec::with_capacity(n),
            objective_traces: Vec::with_capacity(n),
        };
        for (j, fit) in fits.into_iter().enumerate() {
            out.abundances.set_column(j, &fit.a);
            out.psi.set_column(j, &fit.psi);
            out.residual_rmse.push(fit.residual_rmse);
            out.iterations.push(fit.iterations);
            out.converged.push(fit.converged);
            out.degenerate.push(fit.degenerate);
            out.objective_traces.push(fit.objective_trace);
        }
        Ok(out)
    }
}

/// Result of the one-scale-per-pixel model.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFit {
    pub a: DVector<f64>,
    pub psi: f64,
    /// Set when the pixel carries no signal in the cone of `S0`.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PixelFit {
    pub a: DVector<f64>,
    pub psi: DVector<f64>,
    pub residual_rmse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
    /// Squared residual at the start and after each iteration.
    pub objective_trace: Vec<f64>,
}

/// Fully constrained least-squares abundances of one pixel.
pub fn fcls(x: &[f64], s0: &EndmemberMatrix, sum_to_one: bool) -> Result<DVector<f64>> {
    EndmemberSystem::new(s0)?.fcls(x, sum_to_one)
}

/// Abundances and the single scaling factor of one pixel.
pub fn unmix_elmm_global(x: &[f64], s0: &EndmemberMatrix, config: &SolverConfig) -> Result<GlobalFit> {
    config.validate()?;
    EndmemberSystem::new(s0)?.elmm_global(x, config)
}

/// Per-pixel, per-material scaling factors for a whole cube.
pub fn unmix_elmm_full(x: &DMatrix<f64>, s0: &EndmemberMatrix, config: &SolverConfig) -> Result<UnmixResult> {
    let config = SolverConfig {
        model: SolverModel::ElmmFull,
        ..*config
    };
    EndmemberSystem::new(s0)?.unmix(x, &config)
}

/// Unmixes a cube with whichever model `config` selects.
pub fn unmix(x: &DMatrix<f64>, s0: &EndmemberMatrix, config: &SolverConfig) -> Result<UnmixResult> {
    EndmemberSystem::new(s0)?.unmix(x, config)
}
