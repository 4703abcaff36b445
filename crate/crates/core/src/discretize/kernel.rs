//! Translation-invariant weight table of the periodized jump kernel.
//!
//! Entry `W(i)` is the integral of `|z|^{-d-α}` over all image cells of grid
//! offset `i`. In lattice units a cell integral scales as `h^{-α}` times an
//! `h`-free number, so the table is computed once on the unit lattice.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::fft::Spectral;
use crate::grid::Grid;
use crate::quadrature::{integrate, integrate_rect, QuadOptions, GL4};

/// Offsets with `|j|_∞` at most this use adaptive cell integrals in 2d.
pub const NEAR_CELLS: i64 = 3;

/// Default number of periodic images per axis.
pub const DEFAULT_IMAGES: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub grid: Grid,
    pub alpha: f64,
    pub images: usize,
    /// Per-offset weights (absolute units), indexed like grid points. `W(0) = 0`.
    pub weights: Vec<f64>,
    /// Analytic remainder of the images beyond `images`, already spread into `weights`.
    pub tail_per_offset: f64,
}

/// `∫ |w|^{-1-α}` over `[j − ½, j + ½]` for an integer `j ≠ 0`.
fn cell_1d(j: i64, alpha: f64) -> f64 {
    let a = (j.unsigned_abs() as f64) - 0.5;
    let b = a + 1.0;
    (a.powf(-alpha) - b.powf(-alpha)) / alpha
}

/// `∫ |w|^{-2-α}` over the unit cell centred at `(p, q) ≠ 0`.
fn cell_2d(p: i64, q: i64, alpha: f64, near: &[f64]) -> f64 {
    let (p, q) = (p.abs(), q.abs());
    let (p, q) = if p <= q { (p, q) } else { (q, p) };
    if q <= NEAR_CELLS {
        return near[(p * (NEAR_CELLS + 1) + q) as usize];
    }
    let e = -(2.0 + alpha) / 2.0;
    let (pc, qc) = (p as f64, q as f64);
    let mut s = 0.0;
    for (x, wx) in GL4 {
        for (y, wy) in GL4 {
            let u = pc + 0.5 * x;
            let v = qc + 0.5 * y;
            s += wx * wy * (u * u + v * v).powf(e);
        }
    }
    0.25 * s
}

/// Adaptive cell integrals for the cells adjacent to the singular one.
fn near_table_2d(alpha: f64) -> Result<Vec<f64>> {
    let w = (NEAR_CELLS + 1) as usize;
    let mut table = vec![0.0; w * w];
    let e = -(2.0 + alpha) / 2.0;
    let opts = QuadOptions::rel(1e-11);
    for p in 0..=NEAR_CELLS {
        for q in p..=NEAR_CELLS {
            if p == 0 && q == 0 {
                continue;
            }
            let (pc, qc) = (p as f64, q as f64);
            let v = integrate_rect(
                |u, v| (u * u + v * v).powf(e),
                (pc - 0.5, pc + 0.5),
                (qc - 0.5, qc + 0.5),
                &[],
                &[],
                opts,
            )?
            .value;
            table[(p * (NEAR_CELLS + 1) + q) as usize] = v;
            table[(q * (NEAR_CELLS + 1) + p) as usize] = v;
        }
    }
    Ok(table)
}

/// `∫_{|w|_∞ > R} |w|^{-d-α} dw`.
pub fn outer_box_integral(d: usize, alpha: f64, radius: f64) -> Result<f64> {
    if d == 1 {
        return Ok(2.0 * radius.powf(-alpha) / alpha);
    }
    // polar form: (1/α) R^{-α} ∫_0^{2π} max(|cos φ|, |sin φ|)^α dφ
    let angular = integrate(|phi: f64| phi.cos().powf(alpha), 0.0, FRAC_PI_4, QuadOptions::rel(1e-13))?;
    Ok(8.0 * angular.value * radius.powf(-alpha) / alpha)
}

fn fold(i: usize, n: usize) -> i64 {
    let i = i as i64;
    let n = n as i64;
    if i >= n / 2 {
        n - i
    } else {
        i
    }
}

impl KernelTable {
    pub fn new(grid: Grid, alpha: f64, images: usize) -> Result<Self> {
        let [full] = Self::build::<1>(grid, alpha, images, None)?;
        Ok(full)
    }

    /// Splits the table into the bands `|z| ≤ δ`, `δ < |z| < 1/δ`, `|z| ≥ 1/δ`,
    /// classifying each image cell by the distance of its centre. The
    /// analytic remainder goes to the far band.
    pub fn split(grid: Grid, alpha: f64, images: usize, delta: f64) -> Result<[KernelTable; 3]> {
        Self::build::<3>(grid, alpha, images, Some(delta))
    }

    fn build<const B: usize>(
        grid: Grid,
        alpha: f64,
        images: usize,
        delta: Option<f64>,
    ) -> Result<[Self; B]> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Domain(format!("alpha must lie in (0, 2), got {alpha}")));
        }
        let n = grid.n;
        let d = grid.d;
        let m = images as i64;
        let ni = n as i64;
        let scale = grid.h.powf(-alpha);
        let radius = (m as f64 + 0.5) * n as f64;
        let tail = outer_box_integral(d, alpha, radius)? / grid.len() as f64;
        let near = if d == 2 { near_table_2d(alpha)? } else { Vec::new() };
        let bands = B;
        // lattice distance thresholds of the bands
        let (lo, hi) = match delta {
            Some(dl) => (dl / grid.h, 1.0 / (dl * grid.h)),
            None => (f64::INFINITY, f64::INFINITY),
        };
        let band = |r: f64| -> usize {
            if bands == 1 || r <= lo {
                0
            } else if r < hi {
                1
            } else {
                2
            }
        };

        let mut out = vec![vec![0.0; grid.len()]; bands];
        let half = n / 2;
        match d {
            1 => {
                for a in 0..=half {
                    let mut acc = vec![0.0; bands];
                    for k in -m..=m {
                        let j = a as i64 + k * ni;
                        if j != 0 {
                            acc[band(j.abs() as f64)] += cell_1d(j, alpha);
                        }
                    }
                    for (b, v) in acc.iter().enumerate() {
                        let t = if b == bands - 1 { tail } else { 0.0 };
                        let w = (v + t) * scale;
                        out[b][a] = w;
                        out[b][(n - a) % n] = w;
                    }
                }
            }
            _ => {
                // the table is symmetric under sign flips and the axis swap
                let mut canon = vec![vec![0.0; (half + 1) * (half + 1)]; bands];
                for p in 0..=half {
                    for q in p..=half {
                        let mut acc = vec![0.0; bands];
                        for k0 in -m..=m {
                            let jp = p as i64 + k0 * ni;
                            for k1 in -m..=m {
                                let jq = q as i64 + k1 * ni;
                                if jp == 0 && jq == 0 {
                                    continue;
                                }
                                let r = ((jp * jp + jq * jq) as f64).sqrt();
                                acc[band(r)] += cell_2d(jp, jq, alpha, &near);
                            }
                        }
                        for b in 0..bands {
                            let t = if b == bands - 1 { tail } else { 0.0 };
                            let w = (acc[b] + t) * scale;
                            canon[b][p * (half + 1) + q] = w;
                            canon[b][q * (half + 1) + p] = w;
                        }
                    }
                }
                for b in 0..bands {
                    for idx in 0..grid.len() {
                        let [i0, i1] = grid.multi(idx);
                        let (p, q) = (fold(i0, n) as usize, fold(i1, n) as usize);
                        out[b][idx] = canon[b][p * (half + 1) + q];
                    }
                }
            }
        }
        for w in out.iter_mut() {
            w[0] = 0.0;
        }
        let mut out = out.into_iter();
        Ok(std::array::from_fn(|_| KernelTable {
            grid,
            alpha,
            images,
            weights: out.next().unwrap_or_default(),
            tail_per_offset: tail * scale,
        }))
    }

    /// Cosine symbol `Ŵ(ξ) = Σ_z W(z) cos(ξ·z)` on the frequency slots of the grid.
    pub fn symbol(&self, spectral: &Spectral) -> Vec<f64> {
        spectral.even_symbol(&self.weights)
    }

    /// Multiplier of `−A0` for `κ ≡ 1`: `Ŵ(0) − Ŵ(ξ)`.
    pub fn generator_symbol(&self, spectral: &Spectral) -> Vec<f64> {
        let s = self.symbol(spectral);
        let s0 = self.weights.iter().sum::<f64>();
        s.iter().map(|v| (s0 - v).max(0.0)).collect()
    }

    /// Writes `offset_0[,offset_1],weight` rows.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.grid.d == 1 {
            w.write_record(["offset_0", "weight"])?;
        } else {
            w.write_record(["offset_0", "offset_1", "weight"])?;
        }
        for (idx, v) in self.weights.iter().enumerate() {
            let m = self.grid.multi(idx);
            let mut rec = vec![m[0].to_string()];
            if self.grid.d == 2 {
                rec.push(m[1].to_string());
            }
            rec.push(format!("{v:.17e}"));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_cells_match_quadrature() {
        for &alpha in &[0.5, 1.0, 1.5, 1.9] {
            for j in 1..5 {
                let q = integrate(
                    |w: f64| w.powf(-1.0 - alpha),
                    j as f64 - 0.5,
                    j as f64 + 0.5,
                    QuadOptions::rel(1e-13),
                )
                .unwrap();
                assert!((cell_1d(j, alpha) - q.value).abs() < 1e-12 * q.value);
                assert_eq!(cell_1d(-j, alpha), cell_1d(j, alpha));
            }
        }
    }

    #[test]
    fn far_rule_agrees_with_adaptive_cells() {
        let alpha = 1.5;
        let near = near_table_2d(alpha).unwrap();
        let e = -(2.0 + alpha) / 2.0;
        for &(p, q) in &[(0i64, 4i64), (3, 4), (5, 7)] {
            let exact = integrate_rect(
                |u, v| (u * u + v * v).powf(e),
                (p as f64 - 0.5, p as f64 + 0.5),
                (q as f64 - 0.5, q as f64 + 0.5),
                &[],
                &[],
                QuadOptions::rel(1e-12),
            )
            .unwrap()
            .value;
            let rule = cell_2d(p, q, alpha, &near);
            assert!((rule - exact).abs() < 1e-5 * exact, "{p},{q}: {rule} vs {exact}");
        }
    }

    #[test]
    fn outer_box_integral_2d_matches_direct_quadrature() {
        let alpha = 1.25;
        let r: f64 = 3.0;
        // ring between the box and a large disk, plus the analytic disk exterior
        let big: f64 = 400.0;
        let ring = integrate(
            |phi: f64| {
                let rho = r / phi.cos().abs().max(phi.sin().abs());
                (rho.powf(-alpha) - big.powf(-alpha)) / alpha
            },
            0.0,
            2.0 * std::f64::consts::PI,
            QuadOptions::rel(1e-10),
        )
        .unwrap()
        .value;
        let beyond = 2.0 * std::f64::consts::PI * big.powf(-alpha) / alpha;
        let t = outer_box_integral(2, alpha, r).unwrap();
        assert!((t - (ring + beyond)).abs() < 1e-8 * t);
    }

    #[test]
    fn table_is_even_and_positive() {
        for d in 1..=2 {
            let g = Grid::new(d, 1.0, 16).unwrap();
            let t = KernelTable::new(g, 1.5, 4).unwrap();
            assert_eq!(t.weights[0], 0.0);
            for idx in 1..g.len() {
                let [a, b] = g.multi(idx);
                let mirror = g.linear([(16 - a) % 16, (16 - b) % 16]);
                let mirror = if d == 1 { mirror % 16 } else { mirror };
                assert!(t.weights[idx] > 0.0);
                assert_eq!(t.weights[idx], t.weights[mirror]);
            }
        }
    }

    #[test]
    fn split_bands_sum_to_full_table() {
        let g = Grid::new(2, 4.0, 32).unwrap();
        let full = KernelTable::new(g, 1.5, 4).unwrap();
        let [a, b, c] = KernelTable::split(g, 1.5, 4, 0.5).unwrap();
        for i in 0..g.len() {
            let s = a.weights[i] + b.weights[i] + c.weights[i];
            assert!((s - full.weights[i]).abs() <= 1e-13 * full.weights[i].max(1e-300));
        }
    }

    #[test]
    fn tail_is_small_for_eight_images() {
        for &alpha in &[1.0, 1.5, 1.9] {
            let g = Grid::new(1, 4.0, 64).unwrap();
            let t = KernelTable::new(g, alpha, DEFAULT_IMAGES).unwrap();
            let total: f64 = t.weights.iter().sum();
            let tail_total = t.tail_per_offset * (g.len() - 1) as f64;
            assert!(tail_total / total < 1e-3, "alpha {alpha}: {}", tail_total / total);
        }
    }
}
