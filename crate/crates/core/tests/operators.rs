mod common;

use std::sync::Arc;

use homog_core::discretize::{
    apply_viscosity, assemble_dirichlet, assemble_drift, AssemblyOptions, KernelTable,
};
use homog_core::environment::sample_environment;
use homog_core::grid::{dot, Grid};
use proptest::prelude::*;

const N2: usize = 16 * 16;

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn grid_2d() -> Grid {
    Grid::new(2, 1.0, 16).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn drift_is_antisymmetric(
        seed in 0u64..1000,
        k in prop_oneof![Just(0.3), Just(1.0), Just(f64::INFINITY)],
        g in prop::collection::vec(-1.0f64..1.0, N2),
        u in prop::collection::vec(-1.0f64..1.0, N2),
    ) {
        for spec in [common::drift_2d(), common::multi_mode_2d()] {
            let env = sample_environment(&spec, seed).unwrap();
            let dk = assemble_drift(&env, 0.25, &grid_2d(), k).unwrap().unwrap();
            let dg = dk.apply_vec(&g);
            prop_assert!(dot(&dg, &g).abs() <= 1e-12 * norm(&dg) * norm(&g));
            let a = dk.form(&u, &g);
            let b = dk.form(&g, &u);
            prop_assert!((a + b).abs() <= 1e-12 * (a.abs() + 1.0));
        }
    }

    #[test]
    fn dirichlet_is_symmetric_semidefinite_and_kills_constants(
        seed in 0u64..1000,
        c in -5.0f64..5.0,
        g in prop::collection::vec(-1.0f64..1.0, N2),
        u in prop::collection::vec(-1.0f64..1.0, N2),
    ) {
        let grid = grid_2d();
        let spec = common::multi_mode_2d();
        let kernel = Arc::new(KernelTable::new(grid, spec.alpha, 4).unwrap());
        let env = sample_environment(&spec, seed).unwrap();
        let a0 = assemble_dirichlet(&env, 0.25, kernel, &AssemblyOptions::default()).unwrap();
        let ag = a0.apply_vec(&g);
        let au = a0.apply_vec(&u);
        let scale = norm(&ag) * norm(&u) + norm(&au) * norm(&g);
        prop_assert!((dot(&ag, &u) - dot(&g, &au)).abs() <= 1e-12 * scale);
        prop_assert!(a0.energy(&g, &g) >= -1e-12 * norm(&ag) * norm(&g));
        let constant = vec![c; N2];
        prop_assert!(a0.apply_vec(&constant).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn viscosity_is_symmetric_semidefinite(
        g in prop::collection::vec(-1.0f64..1.0, 64),
        u in prop::collection::vec(-1.0f64..1.0, 64),
    ) {
        let grid = Grid::new(1, 2.0, 64).unwrap();
        let mut gg = vec![0.0; 64];
        let mut gu = vec![0.0; 64];
        apply_viscosity(&grid, &g, &mut gg);
        apply_viscosity(&grid, &u, &mut gu);
        prop_assert!((dot(&gg, &u) - dot(&g, &gu)).abs() <= 1e-10 * (1.0 + norm(&gg) * norm(&u)));
        prop_assert!(dot(&gg, &g) >= -1e-10);
    }
}

#[test]
fn checkerboard_dirichlet_matrix_is_exactly_symmetric() {
    let grid = Grid::new(1, 4.0, 64).unwrap();
    let spec = common::smoothed_checkerboard_1d();
    let kernel = Arc::new(KernelTable::new(grid, spec.alpha, 8).unwrap());
    let env = sample_environment(&spec, 3).unwrap();
    let a0 = assemble_dirichlet(&env, 0.25, kernel, &AssemblyOptions::default()).unwrap();
    let m = a0.to_dense();
    for i in 0..64 {
        for j in 0..64 {
            assert_eq!(m[i * 64 + j], m[j * 64 + i]);
        }
    }
}
