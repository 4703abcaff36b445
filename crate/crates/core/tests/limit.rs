mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use homog_core::discretize::KernelTable;
use homog_core::grid::{Bump, Grid};
use homog_core::limit::{c1_constant, c1_constant_with, solve_limit_fourier, solve_limit_matched, EffectiveModel};
use statrs::function::gamma::gamma;

/// Closed form `2π^{d/2} Γ(1−α/2) / (α 2^{α−1} Γ((d+α)/2))`.
fn c1_closed_form(d: usize, alpha: f64) -> f64 {
    let d = d as f64;
    2.0 * PI.powf(d / 2.0) * gamma(1.0 - alpha / 2.0) / (alpha * 2f64.powf(alpha - 1.0) * gamma((d + alpha) / 2.0))
}

const GRID: [(usize, f64); 8] = [
    (1, 1.0),
    (1, 1.25),
    (1, 1.5),
    (1, 1.75),
    (2, 1.0),
    (2, 1.25),
    (2, 1.5),
    (2, 1.75),
];

#[test]
fn c1_matches_the_gamma_closed_form() {
    for &(d, alpha) in &GRID {
        let q = c1_constant(d, alpha).unwrap();
        let exact = c1_closed_form(d, alpha);
        assert!((q - exact).abs() <= 1e-9 * exact, "d={d} alpha={alpha}: {q} vs {exact}");
    }
    for &alpha in &[0.3, 0.7, 1.9] {
        let q = c1_constant(1, alpha).unwrap();
        assert!((q - c1_closed_form(1, alpha)).abs() <= 1e-8 * q);
    }
}

#[test]
fn c1_is_stable_under_refinement() {
    for &(d, alpha) in &GRID {
        let coarse = c1_constant_with(d, alpha, 0.0, 1e-10).unwrap();
        let fine = c1_constant_with(d, alpha, 0.0, 1e-13).unwrap();
        assert!((coarse - fine).abs() <= 1e-8 * fine, "d={d} alpha={alpha}");
    }
}

#[test]
fn c1_in_two_dimensions_does_not_depend_on_direction() {
    let base = c1_constant(2, 1.5).unwrap();
    for &psi in &[0.3, 1.0, 2.2] {
        let c = c1_constant_with(2, 1.5, psi, 1e-11).unwrap();
        assert!((c - base).abs() <= 1e-9 * base);
    }
}

#[test]
fn c1_grows_at_the_ends_of_the_range() {
    let small = c1_constant(1, 0.001).unwrap();
    let large = c1_constant(1, 1.999).unwrap();
    let mid = c1_constant(1, 1.0).unwrap();
    assert!(small > 100.0 * mid && large > 100.0 * mid, "{small} {large}");
}

fn route_gap(n: usize) -> f64 {
    let spec = common::trig_1d();
    let grid = Grid::new(1, 4.0, n).unwrap();
    let model = EffectiveModel::new(&spec, grid).unwrap();
    let f = Bump {
        center: vec![2.0],
        radius: 0.5,
        amplitude: 1.0,
    }
    .sample(grid);
    let kernel = Arc::new(KernelTable::new(grid, spec.alpha, 8).unwrap());
    let env = model.matched_environment(&spec).unwrap();
    let matched = solve_limit_matched(&model, &env, 1.0, &f, kernel, 1e-10).unwrap();
    let fourier = solve_limit_fourier(&model, 1.0, &f).unwrap();
    fourier.sub(&matched).norm() / matched.norm()
}

#[test]
fn limit_routes_agree_better_on_finer_grids() {
    let gaps: Vec<f64> = [64, 128, 256].iter().map(|&n| route_gap(n)).collect();
    assert!(gaps[1] <= 0.03, "{gaps:?}");
    assert!(gaps[2] < gaps[1] && gaps[1] < gaps[0], "{gaps:?}");
}
