//! The symmetric nonlocal part `A0`, applied as
//! `(A0 g)(x) = κ(x) Σ_{y≠x} W(x−y) κ(y) (g(y) − g(x))`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fft::Spectral;
use crate::grid::Grid;

use super::kernel::KernelTable;

/// How `A0` is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    /// Explicit off-diagonal matrix with precomputed row sums.
    Dense,
    /// Two FFT convolutions with the weight table per application.
    MatrixFree,
}

/// Storage policy for the nonlocal operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyOptions {
    pub images: usize,
    /// Largest point count that is assembled densely.
    pub dense_limit: usize,
    pub memory_cap_bytes: u64,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self {
            images: super::kernel::DEFAULT_IMAGES,
            dense_limit: 4096,
            memory_cap_bytes: 2 << 30,
        }
    }
}

impl AssemblyOptions {
    pub fn storage_for(&self, grid: &Grid) -> Storage {
        if grid.len() <= self.dense_limit {
            Storage::Dense
        } else {
            Storage::MatrixFree
        }
    }

    /// Bytes needed to hold `A0` on `grid` with the chosen storage.
    pub fn memory_estimate(&self, grid: &Grid) -> u64 {
        let n = grid.len() as u64;
        match self.storage_for(grid) {
            Storage::Dense => 8 * n * n + 16 * n,
            Storage::MatrixFree => 8 * 6 * n,
        }
    }

    pub fn check_memory(&self, grid: &Grid) -> Result<()> {
        let need = self.memory_estimate(grid);
        if need > self.memory_cap_bytes {
            return Err(Error::Resource {
                what: format!("nonlocal operator on {} points", grid.len()),
                required_bytes: need,
                cap_bytes: self.memory_cap_bytes,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Dense {
        /// Row-major `κ(x)κ(y)W(x−y)`, zero diagonal.
        matrix: Vec<f64>,
        row_sums: Vec<f64>,
    },
    MatrixFree {
        spectral: Spectral,
        symbol: Vec<f64>,
        /// `(W * κ)(x)`, computed along the same path as `W * (κg)`.
        smoothed_kappa: Vec<f64>,
    },
}

/// Assembled `A0` (the generator; `−A0` is positive semidefinite).
#[derive(Debug, Clone)]
pub struct Dirichlet {
    pub grid: Grid,
    pub kappa: Vec<f64>,
    pub kernel: Arc<KernelTable>,
    repr: Repr,
}

impl Dirichlet {
    pub fn new(kappa: Vec<f64>, kernel: Arc<KernelTable>, opts: &AssemblyOptions) -> Result<Self> {
        let grid = kernel.grid;
        opts.check_memory(&grid)?;
        let storage = opts.storage_for(&grid);
        Self::with_storage(kappa, kernel, storage)
    }

    pub fn with_storage(kappa: Vec<f64>, kernel: Arc<KernelTable>, storage: Storage) -> Result<Self> {
        let grid = kernel.grid;
        let n = grid.len();
        if kappa.len() != n {
            return Err(crate::error::invalid("conductance samples must match the grid"));
        }
        let repr = match storage {
            Storage::Dense => {
                let mut matrix = vec![0.0; n * n];
                for x in 0..n {
                    let mx = grid.multi(x);
                    let row = &mut matrix[x * n..(x + 1) * n];
                    for (y, entry) in row.iter_mut().enumerate() {
                        if y == x {
                            continue;
                        }
                        let my = grid.multi(y);
                        let off = grid.linear([
                            (mx[0] + grid.n - my[0]) % grid.n,
                            (mx[1] + grid.n - my[1]) % grid.n,
                        ]);
                        let off = if grid.d == 1 { off % grid.n } else { off };
                        // κ(x)κ(y) formed in a fixed order so the matrix is exactly symmetric
                        let (a, b) = if x < y { (kappa[x], kappa[y]) } else { (kappa[y], kappa[x]) };
                        *entry = a * b * kernel.weights[off];
                    }
                }
                let row_sums = (0..n).map(|x| matrix[x * n..(x + 1) * n].iter().sum()).collect();
                Repr::Dense { matrix, row_sums }
            }
            Storage::MatrixFree => {
                let spectral = Spectral::new(grid);
                let symbol = kernel.symbol(&spectral);
                let smoothed_kappa = spectral.apply_symbol(&kappa, &symbol);
                Repr::MatrixFree {
                    spectral,
                    symbol,
                    smoothed_kappa,
                }
            }
        };
        Ok(Self {
            grid,
            kappa,
            kernel,
            repr,
        })
    }

    pub fn storage(&self) -> Storage {
        match self.repr {
            Repr::Dense { .. } => Storage::Dense,
            Repr::MatrixFree { .. } => Storage::MatrixFree,
        }
    }

    /// `out = A0 g`. The operator sees `g − g(0)`, so every constant is
    /// annihilated exactly.
    pub fn apply(&self, g: &[f64], out: &mut [f64]) {
        let g0 = g[0];
        match &self.repr {
            Repr::Dense { matrix, .. } => {
                let n = g.len();
                for (x, o) in out.iter_mut().enumerate() {
                    let row = &matrix[x * n..(x + 1) * n];
                    let gx = g[x] - g0;
                    *o = row.iter().zip(g).map(|(a, b)| a * ((b - g0) - gx)).sum();
                }
            }
            Repr::MatrixFree {
                spectral,
                symbol,
                smoothed_kappa,
            } => {
                let kg: Vec<f64> = self.kappa.iter().zip(g).map(|(k, v)| k * (v - g0)).collect();
                let conv = spectral.apply_symbol(&kg, symbol);
                for x in 0..g.len() {
                    out[x] = self.kappa[x] * (conv[x] - (g[x] - g0) * smoothed_kappa[x]);
                }
            }
        }
    }

    pub fn apply_vec(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; g.len()];
        self.apply(g, &mut out);
        out
    }

    /// Form value `ℰ0[u, g] = ⟨−A0 u, g⟩` with the mass weight `h^d`.
    pub fn energy(&self, u: &[f64], g: &[f64]) -> f64 {
        let au = self.apply_vec(u);
        -self.grid.cell_volume() * crate::grid::dot(&au, g)
    }

    /// Dense matrix of `A0` (row-major), diagonal included.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.grid.len();
        match &self.repr {
            Repr::Dense { matrix, row_sums } => {
                let mut m = matrix.clone();
                for x in 0..n {
                    m[x * n + x] = -row_sums[x];
                }
                m
            }
            Repr::MatrixFree { .. } => {
                let mut m = vec![0.0; n * n];
                let mut e = vec![0.0; n];
                let mut col = vec![0.0; n];
                for y in 0..n {
                    e[y] = 1.0;
                    self.apply(&e, &mut col);
                    e[y] = 0.0;
                    for x in 0..n {
                        m[x * n + y] = col[x];
                    }
                }
                m
            }
        }
    }

    /// Typical diagonal scale `mean κ²` for the Fourier preconditioner.
    pub fn mean_kappa_sq(&self) -> f64 {
        self.kappa.iter().map(|k| k * k).sum::<f64>() / self.kappa.len() as f64
    }
}

/// Direct double-sum evaluation of `½ h^d Σ_x Σ_{y≠x} κκW (u(x)−u(y))(g(x)−g(y))`.
/// `O(N²)`; used as an independent check of the operator form.
pub fn pair_sum_energy(kappa: &[f64], kernel: &KernelTable, u: &[f64], g: &[f64]) -> f64 {
    let grid = kernel.grid;
    let n = grid.len();
    let mut total = 0.0;
    for x in 0..n {
        let mx = grid.multi(x);
        let mut row = 0.0;
        for y in 0..n {
            if x == y {
                continue;
            }
            let my = grid.multi(y);
            let off = grid.linear([(mx[0] + grid.n - my[0]) % grid.n, (mx[1] + grid.n - my[1]) % grid.n]);
            let off = if grid.d == 1 { off % grid.n } else { off };
            row += kappa[x] * kappa[y] * kernel.weights[off] * (u[x] - u[y]) * (g[x] - g[y]);
        }
        total += row;
    }
    0.5 * grid.cell_volume() * total
}
