//! Shared fixtures and brute-force oracles for the integration tests. The
//! oracles deliberately avoid the library's solvers.

#![allow(dead_code)]

use std::path::PathBuf;

use hapke_elmm::io::{read_albedo_csv, read_photometry};
use hapke_elmm::{PhotometricParams, SpectralLibrary};
use nalgebra::{DMatrix, DVector};

pub fn experiments_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../experiments")
}

/// Three synthetic albedo spectra with mean albedos 0.15, 0.45 and 0.75.
pub fn albedo_ordered_library() -> SpectralLibrary {
    read_albedo_csv(&experiments_dir().join("data/albedos.csv")).unwrap()
}

/// Three well-separated synthetic materials used for unmixing experiments.
pub fn mixture_library() -> SpectralLibrary {
    read_albedo_csv(&experiments_dir().join("data/mixture_albedos.csv")).unwrap()
}

pub fn photometry_for(lib: &SpectralLibrary) -> Vec<PhotometricParams> {
    let phot = read_photometry(&experiments_dir().join("data/photometry.json")).unwrap();
    lib.spectra()
        .iter()
        .map(|s| phot.for_material(s.material()).unwrap())
        .collect()
}

pub fn sq_residual(x: &[f64], s: &DMatrix<f64>, z: &[f64]) -> f64 {
    (0..x.len())
        .map(|l| {
            let r = x[l] - (0..z.len()).map(|k| s[(l, k)] * z[k]).sum::<f64>();
            r * r
        })
        .sum()
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub fn golden(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    let t = (lo + hi) / 2.0;
    (t, f(t))
}

/// Minimum of `‖x − (t s1 + (1 − t) s2)‖²` over `t ∈ [0, 1]`: grid search
/// at resolution 1e-4, then golden-section refinement around the best cell.
pub fn fcls_two_oracle(x: &[f64], s: &DMatrix<f64>) -> f64 {
    let f = |t: f64| sq_residual(x, s, &[t, 1.0 - t]);
    let steps = 10_000;
    let (mut best_t, mut best) = (0.0, f64::INFINITY);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let v = f(t);
        if v < best {
            best = v;
            best_t = t;
        }
    }
    let h = 1.0 / steps as f64;
    let (_, refined) = golden((best_t - h).max(0.0), (best_t + h).min(1.0), f);
    best.min(refined)
}

/// Exact minimum of `‖x − u1 y1 − u2 y2‖²` over the box `[lo, hi]²`, by
/// enumerating the interior stationary point, the four edges and the corners.
pub fn box_ls_two(x: &[f64], u1: &[f64], u2: &[f64], lo: f64, hi: f64) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let obj = |y1: f64, y2: f64| {
        x.iter()
            .zip(u1.iter().zip(u2))
            .map(|(xv, (a, b))| {
                let r = xv - a * y1 - b * y2;
                r * r
            })
            .sum::<f64>()
    };
    let (g11, g12, g22) = (dot(u1, u1), dot(u1, u2), dot(u2, u2));
    let (c1, c2) = (dot(u1, x), dot(u2, x));
    let clamp = |v: f64| v.clamp(lo, hi);
    let mut best = f64::INFINITY;
    let det = g11 * g22 - g12 * g12;
    if det > 0.0 {
        let y1 = (c1 * g22 - c2 * g12) / det;
        let y2 = (g11 * c2 - g12 * c1) / det;
        if (lo..=hi).contains(&y1) && (lo..=hi).contains(&y2) {
            best = best.min(obj(y1, y2));
        }
    }
    for edge in [lo, hi] {
        if g22 > 0.0 {
            best = best.min(obj(edge, clamp((c2 - g12 * edge) / g22)));
        }
        if g11 > 0.0 {
            best = best.min(obj(clamp((c1 - g12 * edge) / g11), edge));
        }
        for other in [lo, hi] {
            best = best.min(obj(edge, other));
        }
    }
    best
}

/// Minimum of `‖x − a1 ψ1 s1 − (1 − a1) ψ2 s2‖²` over `a1 ∈ [0, 1]` and
/// `ψ ∈ [lo, hi]²`: grid over `a1` at resolution 1e-3 with the scaling pair
/// solved exactly per cell, then golden-section refinement in `a1`.
pub fn elmm_two_oracle(x: &[f64], s: &DMatrix<f64>, lo: f64, hi: f64) -> f64 {
    let s1: Vec<f64> = s.column(0).iter().copied().collect();
    let s2: Vec<f64> = s.column(1).iter().copied().collect();
    let inner = |a1: f64| {
        let u1: Vec<f64> = s1.iter().map(|v| v * a1).collect();
        let u2: Vec<f64> = s2.iter().map(|v| v * (1.0 - a1)).collect();
        box_ls_two(x, &u1, &u2, lo, hi)
    };
    let steps = 1000;
    let (mut best_a, mut best) = (0.0, f64::INFINITY);
    for i in 0..=steps {
        let a1 = i as f64 / steps as f64;
        let v = inner(a1);
        if v < best {
            best = v;
            best_a = a1;
        }
    }
    let h = 1.0 / steps as f64;
    let (_, refined) = golden((best_a - h).max(0.0), (best_a + h).min(1.0), inner);
    best.min(refined)
}

pub fn column(m: &DMatrix<f64>, n: usize) -> Vec<f64> {
    m.column(n).iter().copied().collect()
}

pub fn vec_of(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// RMSE over all entries of two equally shaped matrices.
pub fn matrix_rmse(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    ((a - b).norm_squared() / a.len() as f64).sqrt()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}
