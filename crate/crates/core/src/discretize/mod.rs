//! Discrete bilinear forms on a uniform periodic grid: the nonlocal part
//! `A0`, the drift part `Dk`, the viscosity Laplacian `G` and the mass pairing.

mod dirichlet;
mod drift;
pub mod kernel;

use std::io::Write;
use std::sync::Arc;

use crate::environment::SampledEnvironment;
use crate::error::{invalid, Error, Result};
use crate::fft::Spectral;
use crate::grid::{Grid, GridFunction};

pub use dirichlet::{pair_sum_energy, AssemblyOptions, Dirichlet, Storage};
pub use drift::{centered, eta, eta_slope, Drift};
pub use kernel::KernelTable;

/// Checks that the torus holds a whole number of ε-periods of the medium.
pub fn check_commensurate(env: &SampledEnvironment, eps: f64, grid: &Grid) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1], got {eps}")));
    }
    if grid.d != env.dimension() {
        return Err(invalid("grid and environment dimensions differ"));
    }
    // a homogeneous medium is periodic at every scale
    if matches!(env.spec.mu, crate::environment::Profile::Constant { .. }) && !env.spec.has_drift() {
        return Ok(());
    }
    let periods = grid.side / (eps * env.spec.period);
    if (periods - periods.round()).abs() > 1e-9 * periods.max(1.0) {
        return Err(invalid(format!(
            "torus side {} must be a whole number of medium periods (eps·P = {})",
            grid.side,
            eps * env.spec.period
        )));
    }
    Ok(())
}

/// `κ(x) = μ(x/ε)` sampled on the grid.
pub fn sample_conductance(env: &SampledEnvironment, eps: f64, grid: &Grid) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let y = [x[0] / eps, x[1] / eps];
            env.mu_at(&y[..grid.d])
        })
        .collect()
}

/// Assembles `A0` for the medium seen at scale `eps`.
pub fn assemble_dirichlet(
    env: &SampledEnvironment,
    eps: f64,
    kernel: Arc<KernelTable>,
    opts: &AssemblyOptions,
) -> Result<Dirichlet> {
    let grid = kernel.grid;
    check_commensurate(env, eps, &grid)?;
    if (kernel.alpha - env.spec.alpha).abs() > 0.0 {
        return Err(invalid("kernel table was built for a different alpha"));
    }
    Dirichlet::new(sample_conductance(env, eps, &grid), kernel, opts)
}

/// Assembles `Dk`; `None` when the medium carries no drift.
pub fn assemble_drift(env: &SampledEnvironment, eps: f64, grid: &Grid, k: f64) -> Result<Option<Drift>> {
    if !env.spec.has_drift() {
        return Ok(None);
    }
    let alpha = env.spec.alpha;
    if alpha < 1.0 {
        return Err(Error::Regime(format!(
            "drift requires alpha in [1, 2) for a unique resolvent solution, got alpha = {alpha}"
        )));
    }
    if grid.d != 2 {
        return Err(invalid("drift experiments need dimension 2"));
    }
    if !(k > 0.0) {
        return Err(invalid("truncation level must be positive"));
    }
    check_commensurate(env, eps, grid)?;
    let scale = eps.powf(2.0 - alpha);
    let coefficient = (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let h = env.stream_at(&[x[0] / eps, x[1] / eps]);
            scale * eta(k, h[0][1])
        })
        .collect();
    Ok(Some(Drift::new(*grid, coefficient)))
}

/// Largest `|H_{jl}|` at the grid points, at scale `eps`.
pub fn stream_max_on_grid(env: &SampledEnvironment, eps: f64, grid: &Grid) -> f64 {
    if !env.spec.has_drift() {
        return 0.0;
    }
    (0..grid.len())
        .map(|i| {
            let x = grid.point(i);
            let y = [x[0] / eps, x[1] / eps];
            let h = env.stream_at(&y[..grid.d]);
            h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
        })
        .fold(0.0, f64::max)
}

/// `out = G u` with `G = −Δ_h` (the `2d+1`-point periodic Laplacian), so
/// that `⟨Gg, g⟩ = h^d Σ_x Σ_j |D_j⁺ g(x)|²`.
pub fn apply_viscosity(grid: &Grid, u: &[f64], out: &mut [f64]) {
    let inv = 1.0 / (grid.h * grid.h);
    for (idx, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for axis in 0..grid.d {
            s += 2.0 * u[idx] - u[grid.neighbour(idx, axis, true)] - u[grid.neighbour(idx, axis, false)];
        }
        *o = s * inv;
    }
}

/// Fourier multiplier of `G`: `Σ_j (2/h²)(1 − cos(2π m_j / n))`.
pub fn viscosity_symbol(spectral: &Spectral) -> Vec<f64> {
    let grid = *spectral.grid();
    let inv = 2.0 / (grid.h * grid.h);
    (0..grid.len())
        .map(|idx| {
            let m = spectral.wave_vector(idx);
            (0..grid.d)
                .map(|j| inv * (1.0 - (2.0 * std::f64::consts::PI * m[j] as f64 / grid.n as f64).cos()))
                .sum()
        })
        .collect()
}

/// `h^d Σ_x Σ_j |D_j⁺ g(x)|²` evaluated directly from forward differences.
pub fn gradient_energy(grid: &Grid, g: &[f64]) -> f64 {
    let mut s = 0.0;
    for idx in 0..grid.len() {
        for axis in 0..grid.d {
            let dp = (g[grid.neighbour(idx, axis, true)] - g[idx]) / grid.h;
            s += dp * dp;
        }
    }
    grid.cell_volume() * s
}

/// `h^d Σ g·h`.
pub fn mass_pairing(g: &GridFunction, h: &GridFunction) -> f64 {
    g.dot(h)
}

/// Everything the stage solves need at one `(ε, k)`.
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    pub a0: Dirichlet,
    pub dk: Option<Drift>,
    pub eps: f64,
    pub k: f64,
    pub images: usize,
    pub near_cells: i64,
}

impl DiscreteForm {
    pub fn grid(&self) -> &Grid {
        &self.a0.grid
    }
}

/// The partial forms over the jump ranges `|z| ≤ δ`, `δ < |z| < 1/δ` and
/// `|z| ≥ 1/δ`.
pub fn kernel_split_energies(
    kappa: &[f64],
    grid: Grid,
    alpha: f64,
    images: usize,
    u: &[f64],
    g: &[f64],
    delta: f64,
) -> Result<[f64; 3]> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if 1.0 / delta >= 0.5 * grid.side {
        return Err(Error::Domain(format!(
            "1/delta = {} must stay below half the torus side {}",
            1.0 / delta,
            0.5 * grid.side
        )));
    }
    let tables = KernelTable::split(grid, alpha, images, delta)?;
    let mut out = [0.0; 3];
    for (o, t) in out.iter_mut().zip(tables) {
        let op = Dirichlet::with_storage(kappa.to_vec(), Arc::new(t), Storage::MatrixFree)?;
        *o = op.energy(u, g);
    }
    Ok(out)
}

/// Writes the nonzero entries of a dense row-major matrix as `row,col,value`.
pub fn write_coo<W: Write>(matrix: &[f64], n: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "col", "value"])?;
    for r in 0..n {
        for c in 0..n {
            let v = matrix[r * n + c];
            if v != 0.0 {
                w.write_record(&[r.to_string(), c.to_string(), format!("{v:.17e}")])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
