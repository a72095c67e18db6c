mod common;

use common::{column, elmm_two_oracle, fcls_two_oracle, matrix_rmse, mixture_library, photometry_for, sq_residual};
use hapke_elmm::scene::{simulate_cube, GeometrySampler, ScalingSampler, SceneConfig};
use hapke_elmm::solver::active_set::bound_multipliers;
use hapke_elmm::solver::{fcls, unmix, unmix_elmm_global, EndmemberSystem, Initialization, SolverConfig, SolverModel};
use hapke_elmm::{EndmemberMatrix, ReflectanceModel};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_endmembers(rng: &mut ChaCha8Rng, bands: usize, materials: usize) -> EndmemberMatrix {
    let s = DMatrix::from_fn(bands, materials, |_, _| rng.random_range(0.05..1.0));
    EndmemberMatrix::new(s, (0..materials).map(|k| format!("m{k}")).collect()).unwrap()
}

fn random_simplex(rng: &mut ChaCha8Rng, p: usize) -> DVector<f64> {
    let v = DVector::from_fn(p, |_, _| -rng.random::<f64>().max(1e-300).ln());
    let s = v.sum();
    v / s
}

/// A pixel near, but generally off, the scaled model: scaled mixture plus
/// bounded perturbations.
fn random_pixel(rng: &mut ChaCha8Rng, s0: &EndmemberMatrix) -> Vec<f64> {
    let p = s0.materials();
    let a = random_simplex(rng, p);
    let psi = DVector::from_fn(p, |_, _| rng.random_range(0.3..3.0));
    let clean = s0.matrix() * psi.component_mul(&a);
    clean
        .iter()
        .map(|v| (v + rng.random_range(-0.1..0.1)).max(0.0))
        .collect()
}

#[test]
fn fcls_matches_brute_force_on_two_materials() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..25 {
        let s0 = random_endmembers(&mut rng, 4, 2);
        let x = random_pixel(&mut rng, &s0);
        let a = fcls(&x, &s0, true).unwrap();
        let f = sq_residual(&x, s0.matrix(), a.as_slice());
        let oracle = fcls_two_oracle(&x, s0.matrix());
        assert!((f - oracle).abs() <= 1e-6, "solver {f}, oracle {oracle}");
    }
}

#[test]
fn elmm_full_matches_brute_force_on_two_materials() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for init in [Initialization::GlobalScaling, Initialization::Lmm] {
        let config = SolverConfig {
            init,
            max_iters: 5000,
            tol: 1e-12,
            ..SolverConfig::default()
        };
        for _ in 0..10 {
            let s0 = random_endmembers(&mut rng, 4, 2);
            let x = random_pixel(&mut rng, &s0);
            let res = unmix(&DMatrix::from_column_slice(4, 1, &x), &s0, &config).unwrap();
            let z = res.psi.column(0).component_mul(&res.abundances.column(0));
            let f = sq_residual(&x, s0.matrix(), z.as_slice());
            let (lo, hi) = config.psi_bounds;
            let oracle = elmm_two_oracle(&x, s0.matrix(), lo, hi);
            assert!(f <= oracle + 1e-6, "{init:?}: solver {f}, oracle {oracle}");
        }
    }
}

#[test]
fn fcls_satisfies_kkt_conditions() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let p = rng.random_range(2..=6);
        let s0 = random_endmembers(&mut rng, 12, p);
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.5)).collect();
        let system = EndmemberSystem::new(&s0).unwrap();
        for sum_to_one in [true, false] {
            let a = system.fcls(&x, sum_to_one).unwrap();
            assert!(a.iter().all(|&v| v >= 0.0));
            if sum_to_one {
                assert!((a.sum() - 1.0).abs() <= 1e-12);
            }
            let c = s0.matrix().tr_mul(&DVector::from_column_slice(&x));
            let g = system.gram();
            // Recover the equality multiplier from any free coordinate.
            let raw = g * &a - &c;
            let nu = match (0..p).find(|&k| a[k] > 0.0) {
                Some(k) if sum_to_one => -raw[k],
                _ => 0.0,
            };
            let mu = bound_multipliers(g, &c, &a, nu);
            for k in 0..p {
                assert!(mu[k] >= -1e-8, "multiplier {} at {k}", mu[k]);
                if a[k] > 0.0 {
                    assert!(mu[k].abs() <= 1e-8);
                }
            }
        }
    }
}

#[test]
fn global_scaling_is_recovered_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..20 {
        let s0 = random_endmembers(&mut rng, 50, 3);
        let a = random_simplex(&mut rng, 3);
        let x: Vec<f64> = (s0.matrix() * &a * 0.7).iter().copied().collect();
        let fit = unmix_elmm_global(&x, &s0, &SolverConfig::default()).unwrap();
        assert!((fit.psi - 0.7).abs() <= 1e-6, "psi {}", fit.psi);
        assert!((fit.a - &a).amax() <= 1e-6);
    }
}

proptest! {
    #[test]
    fn global_scaling_is_scale_equivariant(seed in 0u64..1000, lambda in 0.2..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s0 = random_endmembers(&mut rng, 20, 3);
        let x = random_pixel(&mut rng, &s0);
        let config = SolverConfig::default();
        let base = unmix_elmm_global(&x, &s0, &config).unwrap();
        let scaled_x: Vec<f64> = x.iter().map(|v| v * lambda).collect();
        let scaled = unmix_elmm_global(&scaled_x, &s0, &config).unwrap();
        prop_assume!(base.psi * lambda > config.psi_bounds.0 && base.psi * lambda < config.psi_bounds.1);
        prop_assert!((&scaled.a - &base.a).amax() <= 1e-8);
        prop_assert!((scaled.psi - lambda * base.psi).abs() <= 1e-8 * scaled.psi);
    }

    #[test]
    fn unit_bounds_reduce_to_fcls(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = rng.random_range(2..=5);
        let s0 = random_endmembers(&mut rng, 15, p);
        let x = random_pixel(&mut rng, &s0);
        let config = SolverConfig { psi_bounds: (1.0, 1.0), ..SolverConfig::default() };
        let res = unmix(&DMatrix::from_column_slice(15, 1, &x), &s0, &config).unwrap();
        let a = fcls(&x, &s0, true).unwrap();
        prop_assert!((res.abundances.column(0) - a).amax() <= 1e-8);
    }

    #[test]
    fn elmm_full_outputs_are_feasible(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s0 = random_endmembers(&mut rng, 10, 3);
        let x = DMatrix::from_fn(10, 4, |_, _| rng.random_range(0.0..2.0));
        let config = SolverConfig { init: Initialization::Lmm, ..SolverConfig::default() };
        let res = unmix(&x, &s0, &config).unwrap();
        for n in 0..4 {
            let a = res.abundances.column(n);
            prop_assert!(a.iter().all(|&v| v >= 0.0));
            prop_assert!((a.sum() - 1.0).abs() <= 1e-9);
            for k in 0..3 {
                let psi = res.psi[(k, n)];
                prop_assert!((1e-2..=1e2).contains(&psi));
                if a[k] == 0.0 {
                    prop_assert_eq!(psi, 1.0);
                }
            }
        }
    }
}

fn relative_cube(seed: u64, pixels: usize) -> (hapke_elmm::HyperCube, EndmemberMatrix) {
    let lib = mixture_library();
    let phot = photometry_for(&lib);
    let mut config = SceneConfig::new(3, pixels, ReflectanceModel::Relative, seed);
    config.geometry_sampler = GeometrySampler::Uniform {
        theta0: (0.0, 90.0),
        theta: (0.0, 60.0),
        phi: (0.0, 180.0),
    };
    let cube = simulate_cube(lib.axis(), lib.spectra(), &phot, &config).unwrap();
    let s0 = hapke_elmm::scene::reference_endmembers(lib.spectra(), &phot, config.model, &config.reference_geometry)
        .unwrap();
    (cube, s0)
}

#[test]
fn elmm_full_descends_monotonically_from_lmm_start() {
    let (cube, s0) = relative_cube(21, 300);
    let config = SolverConfig {
        init: Initialization::Lmm,
        ..SolverConfig::default()
    };
    let res = unmix(&cube.x, &s0, &config).unwrap();
    let mut moved = 0;
    for trace in &res.objective_traces {
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "trace rises from {} to {}", w[0], w[1]);
        }
        if trace.len() > 2 {
            moved += 1;
        }
    }
    assert!(moved > 0, "no pixel needed more than one iteration");
}

#[test]
fn elmm_full_fits_relative_model_data_better_than_fcls() {
    for seed in [1, 2, 3] {
        let (cube, s0) = relative_cube(seed, 500);
        let lmm = unmix(&cube.x, &s0, &SolverConfig::with_model(SolverModel::Lmm)).unwrap();
        let elmm = unmix(&cube.x, &s0, &SolverConfig::default()).unwrap();
        for (e, l) in elmm.residual_rmse.iter().zip(&lmm.residual_rmse) {
            assert!(*e <= l + 1e-12);
        }
        assert!(elmm.mean_residual_rmse() < lmm.mean_residual_rmse());
    }
}

#[test]
fn per_material_scaling_is_identifiable_only_through_products() {
    let lib = mixture_library();
    let phot = photometry_for(&lib);
    let mut config = SceneConfig::new(3, 200, ReflectanceModel::Relative, 5);
    config.scaling = Some(ScalingSampler {
        min: 0.5,
        max: 2.0,
        per_material: true,
    });
    let cube = simulate_cube(lib.axis(), lib.spectra(), &phot, &config).unwrap();
    let s0 = hapke_elmm::scene::reference_endmembers(lib.spectra(), &phot, config.model, &config.reference_geometry)
        .unwrap();
    let gt = cube.ground_truth.as_ref().unwrap();
    let true_products = gt.psi.as_ref().unwrap().component_mul(&gt.abundances);

    let res = unmix(&cube.x, &s0, &SolverConfig::default()).unwrap();
    let products = res.psi.component_mul(&res.abundances);
    assert!(res.residual_rmse.iter().all(|&r| r < 1e-8));
    assert!((products - &true_products).amax() < 1e-8);
    // The split of each product into abundance and scale is not recovered.
    assert!(matrix_rmse(&res.abundances, &gt.abundances) > 1e-3);
}

#[test]
fn rank_deficient_endmembers_are_rejected() {
    let c = vec![0.1, 0.2, 0.3, 0.4];
    let s0 = EndmemberMatrix::from_columns(
        &[c.clone(), c.iter().map(|v| 2.0 * v).collect()],
        vec!["a".into(), "b".into()],
    )
    .unwrap();
    assert!(EndmemberSystem::new(&s0).is_err());
    let x = column(&DMatrix::from_column_slice(4, 1, &c), 0);
    assert!(fcls(&x, &s0, true).is_err());
}
