//! Right-preconditioned GMRES without restarts, and a dense LU fallback.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Target for `‖b − Ax‖ / ‖b‖`.
    pub tol: f64,
    /// Krylov dimension cap (vectors are kept, so memory is `max_iter · N`).
    pub max_iter: usize,
    /// Extra cycles started from the current iterate when the true
    /// residual disagrees with the recurrence.
    pub max_cycles: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 400,
            max_cycles: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Relative residual after each iteration, in order.
    pub residual_history: Vec<f64>,
    /// True relative residual of the returned iterate.
    pub residual: f64,
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Solves `A x = b` from the initial guess `x0`, with `M⁻¹` applied on the right.
pub fn gmres<A, M>(apply: A, precond: M, b: &[f64], x0: Option<&[f64]>, opts: GmresOptions) -> Result<GmresOutcome>
where
    A: Fn(&[f64], &mut [f64]),
    M: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = x0.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
    if bnorm == 0.0 {
        return Ok(GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual_history: vec![0.0],
            residual: 0.0,
        });
    }
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut work = vec![0.0; n];
    let residual_of = |x: &[f64], work: &mut [f64]| -> Vec<f64> {
        apply(x, work);
        b.iter().zip(work.iter()).map(|(bi, ai)| bi - ai).collect()
    };

    for _cycle in 0..opts.max_cycles.max(1) {
        let r = residual_of(&x, &mut work);
        let beta = norm(&r);
        if !beta.is_finite() {
            return Err(Error::NotFinite("GMRES residual".into()));
        }
        if beta <= opts.tol * bnorm {
            history.push(beta / bnorm);
            return Ok(GmresOutcome {
                x,
                iterations,
                residual_history: history,
                residual: beta / bnorm,
            });
        }
        let m = opts.max_iter;
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns kept after Givens rotation
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut rhs = vec![beta];
        let mut z = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut steps = 0;
        for j in 0..m {
            precond(&basis[j], &mut z);
            apply(&z, &mut w);
            let mut col = vec![0.0; j + 2];
            // modified Gram–Schmidt, one reorthogonalization pass
            for _ in 0..2 {
                for (i, v) in basis.iter().enumerate() {
                    let c = dot(&w, v);
                    col[i] += c;
                    for (wk, vk) in w.iter_mut().zip(v) {
                        *wk -= c * vk;
                    }
                }
            }
            let hnext = norm(&w);
            col[j + 1] = hnext;
            if !hnext.is_finite() {
                return Err(Error::NotFinite("GMRES Arnoldi step".into()));
            }
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[j].hypot(col[j + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[j] / denom, col[j + 1] / denom) };
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            let g = rhs[j];
            rhs[j] = c * g;
            rhs.push(-s * g);
            hess.push(col);
            steps = j + 1;
            iterations += 1;
            let rel = rhs[j + 1].abs() / bnorm;
            history.push(rel);
            if rel <= opts.tol || hnext == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hnext).collect());
        }
        // back substitution on the triangular system
        let mut y = vec![0.0; steps];
        for i in (0..steps).rev() {
            let mut s = rhs[i];
            for k in (i + 1)..steps {
                s -= hess[k][i] * y[k];
            }
            y[i] = s / hess[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (u, vk) in update.iter_mut().zip(v) {
                *u += yi * vk;
            }
        }
        precond(&update, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
    }
    let r = residual_of(&x, &mut work);
    let rel = norm(&r) / bnorm;
    if rel <= opts.tol {
        return Ok(GmresOutcome {
            x,
            iterations,
            residual_history: history,
            residual: rel,
        });
    }
    history.push(rel);
    Err(Error::NonConvergence {
        iterations,
        residual_history: history,
    })
}

/// Dense LU solve of the row-major `n × n` system.
pub fn lu_solve(matrix: &[f64], n: usize, b: &[f64]) -> Result<Vec<f64>> {
    let a = DMatrix::from_row_slice(n, n, matrix);
    let rhs = DVector::from_column_slice(b);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Domain("dense system is singular".into()))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotFinite("dense LU solve".into()));
    }
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn system(n: usize) -> Vec<f64> {
        // tridiagonal SPD part plus an antisymmetric coupling
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 3.0;
            if i + 1 < n {
                m[i * n + i + 1] = -1.0 + 0.7;
                m[(i + 1) * n + i] = -1.0 - 0.7;
            }
        }
        m
    }

    fn matvec(m: &[f64], x: &[f64], out: &mut [f64]) {
        let n = x.len();
        for i in 0..n {
            out[i] = dot(&m[i * n..(i + 1) * n], x);
        }
    }

    #[test]
    fn gmres_matches_lu_on_nonsymmetric_system() {
        let n = 60;
        let m = system(n);
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let out = gmres(|x, o| matvec(&m, x, o), |x, o| o.copy_from_slice(x), &b, None, GmresOptions::default()).unwrap();
        let direct = lu_solve(&m, n, &b).unwrap();
        assert!(out.residual <= 1e-10);
        for (a, c) in out.x.iter().zip(&direct) {
            assert!((a - c).abs() < 1e-9);
        }
    }

    #[test]
    fn diagonal_preconditioner_reduces_iterations() {
        let n = 80;
        let mut m = system(n);
        for i in 0..n {
            m[i * n + i] = 3.0 + i as f64;
        }
        let b = vec![1.0; n];
        let plain = gmres(|x, o| matvec(&m, x, o), |x, o| o.copy_from_slice(x), &b, None, GmresOptions::default()).unwrap();
        let pre = gmres(
            |x, o| matvec(&m, x, o),
            |x, o| {
                for i in 0..x.len() {
                    o[i] = x[i] / (3.0 + i as f64);
                }
            },
            &b,
            None,
            GmresOptions::default(),
        )
        .unwrap();
        assert!(pre.iterations < plain.iterations);
        assert!(pre.residual <= 1e-10);
    }

    #[test]
    fn zero_rhs_returns_zero_and_cap_reports_history() {
        let m = system(10);
        let r = gmres(|x, o| matvec(&m, x, o), |x, o| o.copy_from_slice(x), &[0.0; 10], None, GmresOptions::default()).unwrap();
        assert!(r.x.iter().all(|&v| v == 0.0));

        let opts = GmresOptions {
            tol: 1e-14,
            max_iter: 2,
            max_cycles: 1,
        };
        let b: Vec<f64> = (0..10).map(|i| i as f64).collect();
        match gmres(|x, o| matvec(&m, x, o), |x, o| o.copy_from_slice(x), &b, None, opts) {
            Err(Error::NonConvergence { residual_history, .. }) => assert!(!residual_history.is_empty()),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }
}
