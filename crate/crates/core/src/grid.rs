//! Uniform periodic grids on the torus `[0, L)^d` and functions sampled on them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform periodic grid. Points are `x_i = i·h` componentwise; the linear
/// index runs fastest along the first axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub d: usize,
    pub side: f64,
    pub n: usize,
    pub h: f64,
}

impl Grid {
    pub fn new(d: usize, side: f64, n: usize) -> Result<Self> {
        if !(d == 1 || d == 2) {
            return Err(invalid(format!("grid dimension must be 1 or 2, got {d}")));
        }
        if n < 8 || n % 2 == 1 {
            return Err(invalid(format!("points per axis must be even and at least 8, got {n}")));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid("torus side must be positive"));
        }
        let h = side / n as f64;
        if h >= 1.0 {
            return Err(invalid(format!("grid spacing {h} must be below 1")));
        }
        Ok(Self { d, side, n, h })
    }

    /// Total number of points `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    /// Multi-index of a linear index.
    #[inline]
    pub fn multi(&self, idx: usize) -> [usize; 2] {
        [idx % self.n, idx / self.n]
    }

    #[inline]
    pub fn linear(&self, i: [usize; 2]) -> usize {
        i[0] + self.n * i[1]
    }

    /// Coordinates of grid point `idx` (unused axes are zero).
    #[inline]
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let m = self.multi(idx);
        let y = if self.d == 2 { m[1] as f64 * self.h } else { 0.0 };
        [m[0] as f64 * self.h, y]
    }

    /// Linear index of the neighbour displaced by `step` (±1) along `axis`.
    #[inline]
    pub fn neighbour(&self, idx: usize, axis: usize, forward: bool) -> usize {
        let mut m = self.multi(idx);
        m[axis] = if forward {
            (m[axis] + 1) % self.n
        } else {
            (m[axis] + self.n - 1) % self.n
        };
        self.linear(m)
    }
}

/// Values on every point of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i)[..grid.d])).collect();
        Self { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(format!(
                "grid function needs {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid function entries must be finite"));
        }
        Ok(Self { grid, values })
    }

    /// Mass pairing `h^d Σ g·h`.
    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.grid.cell_volume() * dot(&self.values, &other.values)
    }

    /// Discrete `L²` norm `(h^d Σ v²)^{1/2}`.
    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `L²` norm restricted to the points inside `window`.
    pub fn norm_on(&self, window: &Window) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| window.contains(&self.grid.point(*i)[..self.grid.d]))
            .map(|(_, v)| v * v)
            .sum();
        (self.grid.cell_volume() * s).sqrt()
    }

    pub fn sub(&self, other: &GridFunction) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        GridFunction {
            grid: self.grid,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Plain Euclidean dot product with a fixed left-to-right reduction order.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Axis-aligned box `Π_i [center_i − half_width_i, center_i + half_width_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
}

impl Window {
    /// The central box of the torus covering `fraction` of each axis.
    pub fn central(grid: &Grid, fraction: f64) -> Self {
        Self {
            center: vec![0.5 * grid.side; grid.d],
            half_width: vec![0.5 * fraction * grid.side; grid.d],
        }
    }

    pub fn volume(&self) -> f64 {
        self.half_width.iter().map(|w| 2.0 * w).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.center.iter().zip(&self.half_width))
            .all(|(xi, (c, w))| (xi - c).abs() <= *w)
    }

    /// True when the box lies strictly inside `[0, side)^d`.
    pub fn inside_torus(&self, side: f64) -> bool {
        self.center
            .iter()
            .zip(&self.half_width)
            .all(|(c, w)| *w > 0.0 && c - w > 0.0 && c + w < side)
    }
}

/// Smooth compactly supported bump `amplitude·(1 − (|x−c|/r)²)³₊`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec<f64>,
    pub radius: f64,
    #[serde(default = "unit")]
    pub amplitude: f64,
}

fn unit() -> f64 {
    1.0
}

impl Bump {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        let s = 1.0 - r2 / (self.radius * self.radius);
        if s <= 0.0 {
            0.0
        } else {
            self.amplitude * s * s * s
        }
    }

    pub fn sample(&self, grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }

    /// Bounding box of the support.
    pub fn support(&self) -> Window {
        Window {
            center: self.center.clone(),
            half_width: vec![self.radius; self.center.len()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_invariants() {
        assert!(Grid::new(1, 1.0, 7).is_err());
        assert!(Grid::new(1, 1.0, 6).is_err());
        assert!(Grid::new(3, 1.0, 8).is_err());
        assert!(Grid::new(1, 16.0, 8).is_err());
        let g = Grid::new(2, 2.0, 16).unwrap();
        assert_eq!(g.len(), 256);
        assert_eq!(g.h, 0.125);
        assert_eq!(g.point(17), [0.125, 0.125]);
        assert_eq!(g.neighbour(0, 0, false), 15);
        assert_eq!(g.neighbour(0, 1, false), 240);
    }

    #[test]
    fn mass_pairing_of_ones_is_volume() {
        for &(d, side) in &[(1, 3.0), (2, 1.5)] {
            let g = Grid::new(d, side, 32).unwrap();
            let one = GridFunction::constant(g, 1.0);
            assert!((one.dot(&one) - side.powi(d as i32)).abs() < 1e-12);
        }
    }

    #[test]
    fn bump_is_compact_and_peaks_at_center() {
        let b = Bump {
            center: vec![0.5, 0.5],
            radius: 0.2,
            amplitude: 2.0,
        };
        assert_eq!(b.eval(&[0.5, 0.5]), 2.0);
        assert_eq!(b.eval(&[0.71, 0.5]), 0.0);
        assert!(b.support().inside_torus(1.0));
    }
}
