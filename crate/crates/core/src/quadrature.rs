//! Globally adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.
//!
//! Used for cell integrals of the jump kernel, the constant of the
//! fractional symbol, cell averages of non-polynomial profiles and the drift
//! seminorm. The error estimate is the plain Kronrod–Gauss difference, which
//! is pessimistic for smooth integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights belong to the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: usize,
}

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

impl QuadOptions {
    pub fn rel(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// One 15-point Kronrod rule with its embedded 7-point Gauss estimate.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (i, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Integrates `f` over `[a, b]`, splitting first at the sorted `breaks`
/// that lie strictly inside the interval.
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    opts: QuadOptions,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            abs_error: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut points = vec![lo];
    let mut inner: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi)
        .collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    points.extend(inner);
    points.push(hi);

    let mut heap = BinaryHeap::new();
    let mut value = 0.0;
    let mut error = 0.0;
    let mut evaluations = 0;
    for w in points.windows(2) {
        let (v, e) = gauss_kronrod(&f, w[0], w[1]);
        evaluations += 15;
        value += v;
        error += e;
        heap.push(Piece {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }

    while error > opts.target(value) {
        if heap.len() >= opts.max_intervals {
            return Err(Error::Quadrature {
                achieved: error,
                requested: opts.target(value),
            });
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval collapsed to machine resolution
            return Err(Error::Quadrature {
                achieved: error,
                requested: opts.target(value),
            });
        }
        let (v1, e1) = gauss_kronrod(&f, worst.a, mid);
        let (v2, e2) = gauss_kronrod(&f, mid, worst.b);
        evaluations += 30;
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        heap.push(Piece {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Piece {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    if !value.is_finite() {
        return Err(Error::NotFinite("adaptive quadrature".into()));
    }
    // re-sum to shed the drift of the running totals
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(Integral {
        value: sign * value,
        abs_error: error,
        evaluations,
    })
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<Integral> {
    integrate_with_breaks(f, a, b, &[], opts)
}

/// Iterated integral over the rectangle `[ax, bx] × [ay, by]`.
///
/// The inner integral is computed to a tighter tolerance than the outer one
/// so that its error does not masquerade as roughness of the outer integrand.
pub fn integrate_rect<F: Fn(f64, f64) -> f64>(
    f: F,
    (ax, bx): (f64, f64),
    (ay, by): (f64, f64),
    breaks_x: &[f64],
    breaks_y: &[f64],
    opts: QuadOptions,
) -> Result<Integral> {
    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol * 1e-2,
        rel_tol: opts.rel_tol * 1e-2,
        max_intervals: opts.max_intervals,
    };
    let failure = std::cell::Cell::new(None::<Error>);
    let evals = std::cell::Cell::new(0usize);
    let outer = integrate_with_breaks(
        |x| match integrate_with_breaks(|y| f(x, y), ay, by, breaks_y, inner_opts) {
            Ok(r) => {
                evals.set(evals.get() + r.evaluations);
                r.value
            }
            Err(e) => {
                failure.set(Some(e));
                0.0
            }
        },
        ax,
        bx,
        breaks_x,
        opts,
    )?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    Ok(Integral {
        evaluations: evals.get(),
        ..outer
    })
}

/// Tensor Gauss–Legendre nodes on [-1, 1] (4 points), for smooth cell integrals
/// away from the kernel singularity.
pub(crate) const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_85),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| x.powi(5) - 3.0 * x * x, 0.0, 2.0, QuadOptions::default()).unwrap();
        assert!((r.value - (64.0 / 6.0 - 8.0)).abs() < 1e-13);
    }

    #[test]
    fn endpoint_singularity_converges() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate(|x| x.powf(-0.5), 0.0, 1.0, QuadOptions::rel(1e-10)).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{}", r.value);
    }

    #[test]
    fn breakpoints_handle_kinks() {
        let r = integrate_with_breaks(|x: f64| x.abs(), -1.0, 2.0, &[0.0], QuadOptions::default())
            .unwrap();
        assert!((r.value - 2.5).abs() < 1e-14);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let r = integrate(|x: f64| x.exp(), 1.0, 0.0, QuadOptions::default()).unwrap();
        assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-13);
    }

    #[test]
    fn rectangle_integral() {
        let r = integrate_rect(
            |x, y| (x * y).cos(),
            (0.0, 1.0),
            (0.0, 2.0),
            &[],
            &[],
            QuadOptions::rel(1e-11),
        )
        .unwrap();
        // ∫_0^1 sin(2x)/x dx = Si(2)
        let si2 = 1.605_412_976_802_694_8;
        assert!((r.value - si2).abs() < 1e-10);
    }

    #[test]
    fn impossible_tolerance_reports_failure() {
        let opts = QuadOptions {
            abs_tol: 0.0,
            rel_tol: 1e-30,
            max_intervals: 50,
        };
        let err = integrate(|x: f64| x.sqrt(), 0.0, 1.0, opts).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }
}
