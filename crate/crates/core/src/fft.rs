//! Discrete Fourier transforms on periodic grids and diagonal multipliers.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

/// Forward and inverse plans for one grid. Shared between threads; every
/// call allocates its own work buffers.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.n),
            inverse: planner.plan_fft_inverse(grid.n),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.grid.n;
        // contiguous first axis
        plan.process(data);
        if self.grid.d == 2 {
            let mut column = vec![Complex64::new(0.0, 0.0); n];
            for i in 0..n {
                for (j, c) in column.iter_mut().enumerate() {
                    *c = data[i + n * j];
                }
                plan.process(&mut column);
                for (j, c) in column.iter().enumerate() {
                    data[i + n * j] = *c;
                }
            }
        }
    }

    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.forward);
        data
    }

    /// Inverse transform, normalized, keeping the real part.
    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut data, &self.inverse);
        let scale = 1.0 / self.grid.len() as f64;
        data.iter().map(|c| c.re * scale).collect()
    }

    /// Applies a real diagonal multiplier in frequency space.
    pub fn apply_symbol(&self, values: &[f64], symbol: &[f64]) -> Vec<f64> {
        let mut hat = self.forward(values);
        for (c, s) in hat.iter_mut().zip(symbol) {
            *c *= *s;
        }
        self.inverse_real(hat)
    }

    /// Real part of the transform of an even sequence, i.e. its cosine symbol.
    pub fn even_symbol(&self, values: &[f64]) -> Vec<f64> {
        self.forward(values).iter().map(|c| c.re).collect()
    }

    /// Integer wave vector of frequency slot `idx`, folded to `[-n/2, n/2)`.
    pub fn wave_vector(&self, idx: usize) -> [i64; 2] {
        let n = self.grid.n as i64;
        let fold = |m: usize| {
            let m = m as i64;
            if m >= n / 2 {
                m - n
            } else {
                m
            }
        };
        let m = self.grid.multi(idx);
        [fold(m[0]), if self.grid.d == 2 { fold(m[1]) } else { 0 }]
    }

    /// Euclidean length of the continuous torus frequency `2π m / L`.
    pub fn frequency(&self, idx: usize) -> f64 {
        let m = self.wave_vector(idx);
        let scale = 2.0 * std::f64::consts::PI / self.grid.side;
        scale * ((m[0] * m[0] + m[1] * m[1]) as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_2d() {
        let g = Grid::new(2, 1.0, 12).unwrap();
        let s = Spectral::new(g);
        let v: Vec<f64> = (0..g.len()).map(|i| ((i * 7919) % 31) as f64 - 15.0).collect();
        let back = s.inverse_real(s.forward(&v));
        for (a, b) in v.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_in_its_slot() {
        let g = Grid::new(1, 2.0, 16).unwrap();
        let s = Spectral::new(g);
        let v: Vec<f64> = (0..16).map(|i| (2.0 * std::f64::consts::PI * 3.0 * i as f64 / 16.0).cos()).collect();
        let hat = s.forward(&v);
        assert!((hat[3].re - 8.0).abs() < 1e-12 && (hat[13].re - 8.0).abs() < 1e-12);
        assert_eq!(s.wave_vector(13), [-3, 0]);
        assert!((s.frequency(3) - 3.0 * std::f64::consts::PI).abs() < 1e-14);
    }
}
