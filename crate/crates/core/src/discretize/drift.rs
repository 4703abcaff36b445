//! The antisymmetric drift part, written through the stream matrix:
//! `Dk u = ε^{2−α} Σ_{j,l} D_j(η_k(H_{jl}) D_l u)` with centered differences.

use crate::grid::Grid;

/// Odd clamp: identity on `[−k, k]`, cubic Hermite decay to zero on
/// `k < |s| < 2k` (slope bounded by 16/9, peak about `1.054 k`), zero beyond `2k`.
/// `k = ∞` gives the identity.
pub fn eta(k: f64, s: f64) -> f64 {
    let a = s.abs();
    let v = if a <= k {
        a
    } else if a >= 2.0 * k {
        0.0
    } else {
        // t ∈ (0, 1); values k → 0, slopes 1 → 0
        let t = (a - k) / k;
        k * (((3.0 * t - 5.0) * t + 1.0) * t + 1.0)
    };
    if s < 0.0 {
        -v
    } else {
        v
    }
}

/// Derivative of [`eta`] in `s`.
pub fn eta_slope(k: f64, s: f64) -> f64 {
    let a = s.abs();
    if a <= k {
        1.0
    } else if a >= 2.0 * k {
        0.0
    } else {
        let t = (a - k) / k;
        (9.0 * t - 10.0) * t + 1.0
    }
}

/// Centered difference `(u(x+h e_j) − u(x−h e_j)) / 2h`.
pub fn centered(grid: &Grid, u: &[f64], axis: usize, out: &mut [f64]) {
    let inv = 0.5 / grid.h;
    for (idx, o) in out.iter_mut().enumerate() {
        let f = grid.neighbour(idx, axis, true);
        let b = grid.neighbour(idx, axis, false);
        *o = (u[f] - u[b]) * inv;
    }
}

/// Assembled drift operator. Only the strictly upper stream entries are
/// stored; the lower ones are their exact negatives.
#[derive(Debug, Clone)]
pub struct Drift {
    pub grid: Grid,
    /// `ε^{2−α} η_k(H_{01}(x/ε))` per point (2d only).
    pub coefficient: Vec<f64>,
}

impl Drift {
    pub fn new(grid: Grid, coefficient: Vec<f64>) -> Self {
        Self { grid, coefficient }
    }

    /// `out = Dk u`.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        let mut d0 = vec![0.0; n];
        let mut d1 = vec![0.0; n];
        centered(&self.grid, u, 0, &mut d0);
        centered(&self.grid, u, 1, &mut d1);
        // flux_j = Σ_l a_{jl} D_l u with a_{01} = a, a_{10} = −a
        let f0: Vec<f64> = self.coefficient.iter().zip(&d1).map(|(a, v)| a * v).collect();
        let f1: Vec<f64> = self.coefficient.iter().zip(&d0).map(|(a, v)| -(a * v)).collect();
        centered(&self.grid, &f0, 0, &mut d0);
        centered(&self.grid, &f1, 1, &mut d1);
        for i in 0..n {
            out[i] = d0[i] + d1[i];
        }
    }

    pub fn apply_vec(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply(u, &mut out);
        out
    }

    /// Bilinear form `B_k[u, g] = −h^d Σ_x Σ_{j,l} a_{jl} (D_l u)(D_j g)`.
    pub fn form(&self, u: &[f64], g: &[f64]) -> f64 {
        let n = u.len();
        let mut du = [vec![0.0; n], vec![0.0; n]];
        let mut dg = [vec![0.0; n], vec![0.0; n]];
        for axis in 0..2 {
            centered(&self.grid, u, axis, &mut du[axis]);
            centered(&self.grid, g, axis, &mut dg[axis]);
        }
        let s: f64 = (0..n)
            .map(|i| self.coefficient[i] * (du[1][i] * dg[0][i] - du[0][i] * dg[1][i]))
            .sum();
        -self.grid.cell_volume() * s
    }

    /// Dense matrix (row-major) built column by column.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.grid.len();
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_is_odd_bounded_and_continuous() {
        let k = 1.5;
        for i in -400..=400 {
            let s = i as f64 * 0.01;
            assert_eq!(eta(k, -s), -eta(k, s));
            assert!(eta_slope(k, s).abs() <= 2.0);
            assert!(eta(k, s).abs() <= 1.06 * k);
        }
        assert_eq!(eta(k, 1.0), 1.0);
        assert_eq!(eta(k, 3.5), 0.0);
        assert!((eta(k, k + 1e-9) - k).abs() < 1e-8);
        assert!(eta(k, 2.0 * k - 1e-9).abs() < 1e-8);
        assert_eq!(eta(f64::INFINITY, 123.0), 123.0);
    }

    #[test]
    fn eta_slope_matches_finite_differences() {
        let k = 2.0;
        for &s in &[2.3, 2.9, 3.5, 3.9] {
            let fd = (eta(k, s + 1e-6) - eta(k, s - 1e-6)) / 2e-6;
            assert!((fd - eta_slope(k, s)).abs() < 1e-6);
        }
    }
}
