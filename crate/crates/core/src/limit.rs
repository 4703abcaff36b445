//! The effective equation `λū − L̄ū = f`, where `L̄` has jump kernel
//! `𝔼[μ̃]² |z|^{-d-α}`, solved spectrally and through the nonlocal
//! discretization with a constant medium.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::discretize::{AssemblyOptions, KernelTable};
use crate::environment::{EnvironmentSpec, SampledEnvironment};
use crate::error::{invalid, Error, Result};
use crate::fft::Spectral;
use crate::grid::{Grid, GridFunction};
use crate::quadrature::{integrate, integrate_with_breaks, QuadOptions};
use crate::solver::{Resolvent, ResolventProblem};

/// `∫_Z^∞ cos(z) z^{-β} dz` and `∫_Z^∞ sin(z) z^{-β} dz` by the asymptotic
/// integration-by-parts series (accurate for `Z ≫ β`).
fn oscillatory_tails(z: f64, beta: f64) -> (f64, f64) {
    let (s, c) = z.sin_cos();
    // I_c(β) = −sin Z Z^{-β} + β I_s(β+1),  I_s(β) = cos Z Z^{-β} − β I_c(β+1)
    let mut ic = 0.0;
    let mut is = 0.0;
    let terms = 12;
    for t in (0..terms).rev() {
        let b = beta + t as f64;
        let (nc, ns) = (-s * z.powf(-b) + b * is, c * z.powf(-b) - b * ic);
        ic = nc;
        is = ns;
    }
    (ic, is)
}

/// `2∫_0^∞ (1 − cos s) s^{-1-α} ds`, i.e. half of the one-dimensional constant.
fn radial_integral(alpha: f64, rel_tol: f64) -> Result<f64> {
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol,
        max_intervals: 20_000,
    };
    // [0, 1]: peel off the leading term s^{1-α}/2 of 2 sin²(s/2) s^{-1-α}
    let singular = 1.0 / (2.0 * (2.0 - alpha));
    let regular = integrate(
        |s: f64| {
            if s == 0.0 {
                return 0.0;
            }
            let h = (0.5 * s).sin();
            (2.0 * h * h - 0.5 * s * s) * s.powf(-1.0 - alpha)
        },
        0.0,
        1.0,
        opts,
    )?;
    let z = 400.0 * PI;
    let breaks: Vec<f64> = (1..400).map(|k| k as f64 * PI).collect();
    let middle = integrate_with_breaks(|s: f64| s.cos() * s.powf(-1.0 - alpha), 1.0, z, &breaks, opts)?;
    let (tail_cos, _) = oscillatory_tails(z, 1.0 + alpha);
    // ∫_1^∞ s^{-1-α} ds = 1/α
    let outer = 1.0 / alpha - middle.value - tail_cos;
    Ok(2.0 * (singular + regular.value + outer))
}

/// Angular factor `∫_{S^{d−1}} |⟨θ, ξ̂⟩|^α dθ` for a unit direction `ξ̂ = (cos ψ, sin ψ)`.
fn angular_factor(d: usize, alpha: f64, psi: f64, rel_tol: f64) -> Result<f64> {
    if d == 1 {
        return Ok(2.0);
    }
    let zeros: Vec<f64> = (-2..=6)
        .map(|k| psi + PI / 2.0 + k as f64 * PI)
        .filter(|&p| p > 0.0 && p < 2.0 * PI)
        .collect();
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol,
        max_intervals: 4000,
    };
    Ok(integrate_with_breaks(|phi: f64| (phi - psi).cos().abs().powf(alpha), 0.0, 2.0 * PI, &zeros, opts)?.value)
}

/// `C₁(d, α)` with `−2∫(cos⟨ξ,z⟩ − 1)|z|^{-d-α} dz = C₁|ξ|^α`, at the direction `ψ`.
pub fn c1_constant_with(d: usize, alpha: f64, psi: f64, rel_tol: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::Domain(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    if !(d == 1 || d == 2) {
        return Err(Error::Domain(format!("dimension must be 1 or 2, got {d}")));
    }
    // polar coordinates split the integral into a radial and an angular factor
    Ok(radial_integral(alpha, rel_tol)? * angular_factor(d, alpha, psi, rel_tol)?)
}

pub fn c1_constant(d: usize, alpha: f64) -> Result<f64> {
    c1_constant_with(d, alpha, 0.0, 1e-11)
}

/// Effective model on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    pub d: usize,
    pub alpha: f64,
    /// `𝔼[μ̃]²`, the square of the mean.
    pub coefficient: f64,
    pub c1: f64,
    /// Normalization of the fractional Laplacian, `2 / C₁`. Kept for
    /// reference only; no operator uses it.
    pub c0: f64,
    pub grid: Grid,
}

impl EffectiveModel {
    pub fn new(spec: &EnvironmentSpec, grid: Grid) -> Result<Self> {
        spec.validate()?;
        if grid.d != spec.dimension {
            return Err(invalid("grid and environment dimensions differ"));
        }
        let mean = spec.cell_average(1)?;
        let c1 = c1_constant(spec.dimension, spec.alpha)?;
        Ok(Self {
            d: spec.dimension,
            alpha: spec.alpha,
            coefficient: mean * mean,
            c1,
            c0: 2.0 / c1,
            grid,
        })
    }

    /// Symbol of `−L̄` at the continuous torus frequency `|ξ|`.
    pub fn symbol(&self, xi: f64) -> f64 {
        0.5 * self.c1 * self.coefficient * xi.powf(self.alpha)
    }

    /// Constant-medium counterpart of `spec` with `μ ≡ 𝔼[μ̃]`.
    pub fn matched_environment(&self, spec: &EnvironmentSpec) -> Result<SampledEnvironment> {
        let c = self.coefficient.sqrt();
        SampledEnvironment::with_shift(&spec.constant_counterpart(c), &vec![0.0; spec.dimension])
    }
}

/// `ū = IDFT[ DFT[f] / (λ + (C₁/2)·𝔼[μ̃]²·|2πm/L|^α) ]`.
pub fn solve_limit_fourier(model: &EffectiveModel, lambda: f64, f: &GridFunction) -> Result<GridFunction> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    if f.grid != model.grid {
        return Err(invalid("right-hand side lives on a different grid"));
    }
    let spectral = Spectral::new(model.grid);
    let symbol: Vec<f64> = (0..model.grid.len())
        .map(|i| 1.0 / (lambda + model.symbol(spectral.frequency(i))))
        .collect();
    Ok(GridFunction {
        grid: model.grid,
        values: spectral.apply_symbol(&f.values, &symbol),
    })
}

/// Same equation through the nonlocal discretization with `κ ≡ 𝔼[μ̃]`,
/// no drift and no viscosity.
pub fn solve_limit_matched(
    model: &EffectiveModel,
    env_constant: &SampledEnvironment,
    lambda: f64,
    f: &GridFunction,
    kernel: Arc<KernelTable>,
    linear_tol: f64,
) -> Result<GridFunction> {
    if env_constant.spec.has_drift() {
        return Err(invalid("matched route needs a drift-free medium"));
    }
    if kernel.grid != model.grid {
        return Err(invalid("kernel table was built for a different grid"));
    }
    let problem = ResolventProblem::new(lambda, f.clone(), 1.0, env_constant.clone())?;
    let r = Resolvent::new(problem, kernel, &AssemblyOptions::default())?;
    Ok(r.solve_stage(0.0, f64::INFINITY, None, linear_tol)?.u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{sample_environment, Phase, Profile, TrigTerm};
    use crate::grid::Bump;

    #[test]
    fn c1_one_one_is_two_pi() {
        let c = c1_constant(1, 1.0).unwrap();
        assert!((c - 2.0 * PI).abs() < 1e-8, "{c}");
    }

    #[test]
    fn tails_match_direct_quadrature() {
        let z = 30.0 * PI;
        let beta = 2.5;
        let direct = integrate_with_breaks(
            |s: f64| s.cos() * s.powf(-beta),
            z,
            4000.0 * PI,
            &(31..4000).map(|k| k as f64 * PI).collect::<Vec<_>>(),
            QuadOptions {
                abs_tol: 1e-16,
                rel_tol: 1e-12,
                max_intervals: 20_000,
            },
        )
        .unwrap()
        .value;
        let (far, _) = oscillatory_tails(4000.0 * PI, beta);
        let (ic, _) = oscillatory_tails(z, beta);
        assert!((ic - (direct + far)).abs() < 1e-12, "{ic} vs {}", direct + far);
    }

    #[test]
    fn c1_rejects_out_of_range_alpha() {
        assert!(matches!(c1_constant(1, 0.0), Err(Error::Domain(_))));
        assert!(matches!(c1_constant(2, 2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn fourier_route_basic_examples() {
        let spec = EnvironmentSpec::new_1d(
            1.5,
            Profile::Trig {
                mean: 1.5,
                terms: vec![TrigTerm::new(0.5, &[(1, Phase::Cos)])],
            },
            1.0,
        );
        let grid = Grid::new(1, 4.0, 64).unwrap();
        let model = EffectiveModel::new(&spec, grid).unwrap();
        assert_eq!(model.coefficient, 2.25);

        let c = GridFunction::constant(grid, 3.0);
        let u = solve_limit_fourier(&model, 2.0, &c).unwrap();
        assert!(u.values.iter().all(|v| (v - 1.5).abs() < 1e-14));

        let xi = 2.0 * PI / 4.0;
        let f = GridFunction::from_fn(grid, |x| (xi * x[0]).cos());
        let u = solve_limit_fourier(&model, 1.0, &f).unwrap();
        let factor = 1.0 / (1.0 + 0.5 * model.c1 * 2.25 * xi.powf(1.5));
        for (a, b) in u.values.iter().zip(&f.values) {
            assert!((a - factor * b).abs() < 1e-13);
        }
        assert!(u.norm() <= f.norm());
    }

    #[test]
    fn matched_route_handles_zero_data() {
        let spec = EnvironmentSpec::new_1d(1.5, Profile::constant(2.0), 1.0);
        let _ = sample_environment(&spec, 0).unwrap();
        let grid = Grid::new(1, 4.0, 64).unwrap();
        let model = EffectiveModel::new(&spec, grid).unwrap();
        let env = model.matched_environment(&spec).unwrap();
        let kernel = Arc::new(KernelTable::new(grid, 1.5, 8).unwrap());
        let zero = GridFunction::zeros(grid);
        let u = solve_limit_matched(&model, &env, 1.0, &zero, kernel.clone(), 1e-10).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
        let f = Bump {
            center: vec![2.0],
            radius: 0.5,
            amplitude: 1.0,
        }
        .sample(grid);
        let u = solve_limit_matched(&model, &env, 1.0, &f, kernel, 1e-10).unwrap();
        assert!(u.norm() <= f.norm());
    }
}
