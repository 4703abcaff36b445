//! Periodic profile families for the conductance and the stream functions.
//!
//! Every profile is a function on the cell torus `[0, P)^d` extended
//! periodically. Arguments are raw coordinates; reduction modulo the period
//! happens inside the trigonometric evaluation or the cell lookup.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_rect, integrate_with_breaks, QuadOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Cos,
    Sin,
}

impl Phase {
    fn eval(self, t: f64) -> f64 {
        match self {
            Phase::Cos => t.cos(),
            Phase::Sin => t.sin(),
        }
    }

    fn deriv(self, t: f64) -> f64 {
        match self {
            Phase::Cos => -t.sin(),
            Phase::Sin => t.cos(),
        }
    }
}

/// `amplitude · Π_i phase_i(2π k_i y_i / P)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: f64,
    pub k: Vec<i32>,
    pub phase: Vec<Phase>,
}

impl TrigTerm {
    pub fn new(amplitude: f64, modes: &[(i32, Phase)]) -> Self {
        Self {
            amplitude,
            k: modes.iter().map(|m| m.0).collect(),
            phase: modes.iter().map(|m| m.1).collect(),
        }
    }

    fn factor(&self, axis: usize, y: f64, period: f64) -> f64 {
        self.phase[axis].eval(2.0 * PI * f64::from(self.k[axis]) * y / period)
    }
}

/// Profile descriptor: family tag plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    Constant {
        value: f64,
    },
    /// Trigonometric polynomial `mean + Σ terms`.
    Trig {
        mean: f64,
        #[serde(default)]
        terms: Vec<TrigTerm>,
    },
    /// Two-valued checkerboard with `cells` subcells per axis; the subcell
    /// containing the cell origin carries `low`.
    Checkerboard {
        low: f64,
        high: f64,
        cells: u32,
    },
    /// Checkerboard mollified by a raised-cosine kernel of physical `width`
    /// in every axis.
    SmoothedCheckerboard {
        low: f64,
        high: f64,
        cells: u32,
        width: f64,
    },
}

/// CDF of the raised-cosine density `1 + cos(2πu)` on `[-1/2, 1/2]`.
fn raised_cosine_cdf(u: f64) -> f64 {
    if u <= -0.5 {
        0.0
    } else if u >= 0.5 {
        1.0
    } else {
        u + 0.5 + (2.0 * PI * u).sin() / (2.0 * PI)
    }
}

fn raised_cosine_density(u: f64) -> f64 {
    if u.abs() >= 0.5 {
        0.0
    } else {
        1.0 + (2.0 * PI * u).cos()
    }
}

fn odd_cell(t: f64) -> f64 {
    if t.floor().rem_euclid(2.0) == 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Mollified indicator of the odd subcells along one axis, and its
/// derivative with respect to the subcell coordinate `t`.
fn smoothed_stripe(t: f64, width_cells: f64) -> (f64, f64) {
    let j = t.round();
    let u = (t - j) / width_cells;
    if u.abs() >= 0.5 {
        return (odd_cell(t), 0.0);
    }
    let before = odd_cell(j - 0.5);
    let after = odd_cell(j + 0.5);
    let jump = after - before;
    (
        before + jump * raised_cosine_cdf(u),
        jump * raised_cosine_density(u) / width_cells,
    )
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    /// Validates parameters that do not depend on the role of the profile.
    pub fn validate(&self, dimension: usize, period: f64) -> Result<()> {
        match self {
            Profile::Zero => Ok(()),
            Profile::Constant { value } => finite(*value, "constant profile value"),
            Profile::Trig { mean, terms } => {
                finite(*mean, "trig mean")?;
                for t in terms {
                    finite(t.amplitude, "trig amplitude")?;
                    if t.k.len() != dimension || t.phase.len() != dimension {
                        return Err(invalid(format!(
                            "trig term must list one wavenumber and phase per axis (dimension {dimension})"
                        )));
                    }
                }
                Ok(())
            }
            Profile::Checkerboard { low, high, cells } => {
                finite(*low, "checkerboard low")?;
                finite(*high, "checkerboard high")?;
                if *cells == 0 || cells % 2 == 1 {
                    return Err(invalid(
                        "checkerboard needs an even, positive number of subcells per axis",
                    ));
                }
                Ok(())
            }
            Profile::SmoothedCheckerboard {
                low,
                high,
                cells,
                width,
            } => {
                finite(*low, "checkerboard low")?;
                finite(*high, "checkerboard high")?;
                if *cells == 0 || cells % 2 == 1 {
                    return Err(invalid(
                        "checkerboard needs an even, positive number of subcells per axis",
                    ));
                }
                let sub = period / f64::from(*cells);
                if !(*width > 0.0 && *width < sub) {
                    return Err(invalid(format!(
                        "mollifier width must lie in (0, {sub}) so transitions do not overlap"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(self, Profile::Checkerboard { .. })
    }

    /// Structurally zero (no evaluation needed).
    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Constant { value } => *value == 0.0,
            Profile::Trig { mean, terms } => {
                *mean == 0.0 && terms.iter().all(|t| t.amplitude == 0.0)
            }
            Profile::Checkerboard { low, high, .. }
            | Profile::SmoothedCheckerboard { low, high, .. } => *low == 0.0 && *high == 0.0,
        }
    }

    /// Pointwise negation as a descriptor.
    pub fn negated(&self) -> Profile {
        match self {
            Profile::Zero => Profile::Zero,
            Profile::Constant { value } => Profile::Constant { value: -value },
            Profile::Trig { mean, terms } => Profile::Trig {
                mean: -mean,
                terms: terms
                    .iter()
                    .map(|t| TrigTerm {
                        amplitude: -t.amplitude,
                        ..t.clone()
                    })
                    .collect(),
            },
            Profile::Checkerboard { low, high, cells } => Profile::Checkerboard {
                low: -low,
                high: -high,
                cells: *cells,
            },
            Profile::SmoothedCheckerboard {
                low,
                high,
                cells,
                width,
            } => Profile::SmoothedCheckerboard {
                low: -low,
                high: -high,
                cells: *cells,
                width: *width,
            },
        }
    }

    pub fn eval(&self, y: &[f64], period: f64) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Constant { value } => *value,
            Profile::Trig { mean, terms } => {
                let mut acc = *mean;
                for t in terms {
                    let mut prod = t.amplitude;
                    for (axis, &yi) in y.iter().enumerate() {
                        prod *= t.factor(axis, yi, period);
                    }
                    acc += prod;
                }
                acc
            }
            Profile::Checkerboard { low, high, cells } => {
                let c = f64::from(*cells);
                let parity: f64 = y
                    .iter()
                    .map(|&yi| (yi / period * c).floor().rem_euclid(2.0))
                    .sum::<f64>()
                    .rem_euclid(2.0);
                if parity == 0.0 {
                    *low
                } else {
                    *high
                }
            }
            Profile::SmoothedCheckerboard {
                low,
                high,
                cells,
                width,
            } => {
                let c = f64::from(*cells);
                let w = width / period * c;
                let mut parity = 0.0;
                for &yi in y {
                    let (s, _) = smoothed_stripe(yi / period * c, w);
                    // smoothed XOR of stripe indicators
                    parity = parity + s - 2.0 * parity * s;
                }
                low + (high - low) * parity
            }
        }
    }

    /// Gradient with respect to `y`, written into `out` (length `d`).
    pub fn grad(&self, y: &[f64], period: f64, out: &mut [f64]) -> Result<()> {
        out.iter_mut().for_each(|o| *o = 0.0);
        match self {
            Profile::Zero | Profile::Constant { .. } => Ok(()),
            Profile::Trig { terms, .. } => {
                for t in terms {
                    for (m, o) in out.iter_mut().enumerate() {
                        let km = f64::from(t.k[m]);
                        if km == 0.0 {
                            continue;
                        }
                        let omega = 2.0 * PI * km / period;
                        let mut prod = t.amplitude * omega * t.phase[m].deriv(omega * y[m]);
                        for (axis, &yi) in y.iter().enumerate() {
                            if axis != m {
                                prod *= t.factor(axis, yi, period);
                            }
                        }
                        *o += prod;
                    }
                }
                Ok(())
            }
            Profile::Checkerboard { .. } => Err(Error::UnsupportedProfile(
                "sharp checkerboard has no derivative; use smoothed_checkerboard".into(),
            )),
            Profile::SmoothedCheckerboard {
                low,
                high,
                cells,
                width,
            } => {
                let c = f64::from(*cells);
                let w = width / period * c;
                let stripes: Vec<(f64, f64)> = y
                    .iter()
                    .map(|&yi| {
                        let (s, ds) = smoothed_stripe(yi / period * c, w);
                        (s, ds * c / period)
                    })
                    .collect();
                match stripes.as_slice() {
                    [(_, d0)] => out[0] = (high - low) * d0,
                    [(s0, d0), (s1, d1)] => {
                        out[0] = (high - low) * d0 * (1.0 - 2.0 * s1);
                        out[1] = (high - low) * d1 * (1.0 - 2.0 * s0);
                    }
                    _ => unreachable!("dimension is validated to be 1 or 2"),
                }
                Ok(())
            }
        }
    }

    /// Rigorous lower and upper bounds of the profile over the cell.
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            Profile::Zero => (0.0, 0.0),
            Profile::Constant { value } => (*value, *value),
            Profile::Trig { mean, terms } => {
                let spread: f64 = terms.iter().map(|t| t.amplitude.abs()).sum();
                (mean - spread, mean + spread)
            }
            Profile::Checkerboard { low, high, .. }
            | Profile::SmoothedCheckerboard { low, high, .. } => (low.min(*high), low.max(*high)),
        }
    }

    /// Exact cell average of `profile^moment` for `moment ∈ {1, 2}`.
    ///
    /// Closed forms for constant, trigonometric and sharp checkerboard
    /// profiles; adaptive quadrature (relative error 1e-10) otherwise.
    pub fn cell_average(&self, moment: u32, dimension: usize, period: f64) -> Result<f64> {
        if !(1..=2).contains(&moment) {
            return Err(Error::Domain(format!("moment must be 1 or 2, got {moment}")));
        }
        match self {
            Profile::Zero => Ok(0.0),
            Profile::Constant { value } => Ok(value.powi(moment as i32)),
            Profile::Trig { mean, terms } => {
                let first: f64 = mean
                    + terms
                        .iter()
                        .map(|t| t.amplitude * term_mean(t, None))
                        .sum::<f64>();
                if moment == 1 {
                    return Ok(first);
                }
                let mut second = mean * mean;
                for t in terms {
                    second += 2.0 * mean * t.amplitude * term_mean(t, None);
                }
                for a in terms {
                    for b in terms {
                        second += a.amplitude * b.amplitude * term_mean(a, Some(b));
                    }
                }
                Ok(second)
            }
            Profile::Checkerboard { low, high, cells } => {
                let c = u64::from(*cells);
                let total = c.pow(dimension as u32);
                // cells with even index parity
                let even = match dimension {
                    1 => c.div_ceil(2),
                    _ => {
                        let e = c.div_ceil(2);
                        let o = c / 2;
                        e * e + o * o
                    }
                };
                let odd = total - even;
                let p = moment as i32;
                Ok((even as f64 * low.powi(p) + odd as f64 * high.powi(p)) / total as f64)
            }
            Profile::SmoothedCheckerboard { cells, width, .. } => {
                let sub = period / f64::from(*cells);
                let mut breaks = Vec::new();
                for i in 0..=*cells {
                    let edge = f64::from(i) * sub;
                    breaks.extend([edge - 0.5 * width, edge + 0.5 * width]);
                }
                let opts = QuadOptions::rel(1e-10);
                let p = moment as i32;
                let integral = match dimension {
                    1 => {
                        integrate_with_breaks(
                            |y| self.eval(&[y], period).powi(p),
                            0.0,
                            period,
                            &breaks,
                            opts,
                        )?
                        .value
                    }
                    _ => {
                        integrate_rect(
                            |a, b| self.eval(&[a, b], period).powi(p),
                            (0.0, period),
                            (0.0, period),
                            &breaks,
                            &breaks,
                            opts,
                        )?
                        .value
                    }
                };
                Ok(integral / period.powi(dimension as i32))
            }
        }
    }
}

/// Cell mean of one trig term (amplitude excluded), or of the product of two
/// terms when `other` is given.
fn term_mean(a: &TrigTerm, other: Option<&TrigTerm>) -> f64 {
    let mut prod = 1.0;
    for axis in 0..a.k.len() {
        let factor = match other {
            None => single_mean(a.k[axis], a.phase[axis]),
            Some(b) => product_mean(a.k[axis], a.phase[axis], b.k[axis], b.phase[axis]),
        };
        prod *= factor;
        if prod == 0.0 {
            break;
        }
    }
    prod
}

fn single_mean(k: i32, phase: Phase) -> f64 {
    match (k, phase) {
        (0, Phase::Cos) => 1.0,
        _ => 0.0,
    }
}

/// Mean over one period of `phase_a(2π k_a t) · phase_b(2π k_b t)`.
fn product_mean(ka: i32, pa: Phase, kb: i32, pb: Phase) -> f64 {
    // product-to-sum: the mean of cos(2π m t) is [m == 0], of sin it is 0
    let cos_mean = |m: i32| if m == 0 { 1.0 } else { 0.0 };
    match (pa, pb) {
        (Phase::Cos, Phase::Cos) => 0.5 * (cos_mean(ka - kb) + cos_mean(ka + kb)),
        (Phase::Sin, Phase::Sin) => 0.5 * (cos_mean(ka - kb) - cos_mean(ka + kb)),
        _ => 0.0,
    }
}

fn finite(v: f64, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{what} must be finite")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trig_1d() -> Profile {
        Profile::Trig {
            mean: 1.5,
            terms: vec![TrigTerm::new(0.5, &[(1, Phase::Cos)])],
        }
    }

    #[test]
    fn trig_evaluates_analytically() {
        assert!((trig_1d().eval(&[0.0], 1.0) - 2.0).abs() < 1e-15);
        assert!((trig_1d().eval(&[0.5], 1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn trig_moments_closed_form() {
        let p = trig_1d();
        assert!((p.cell_average(1, 1, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((p.cell_average(2, 1, 1.0).unwrap() - 2.375).abs() < 1e-15);
    }

    #[test]
    fn sin_sin_second_moment_is_one_quarter() {
        let h = Profile::Trig {
            mean: 0.0,
            terms: vec![TrigTerm::new(1.0, &[(1, Phase::Sin), (1, Phase::Sin)])],
        };
        assert_eq!(h.cell_average(1, 2, 1.0).unwrap(), 0.0);
        assert!((h.cell_average(2, 2, 1.0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn checkerboard_layout_and_moments() {
        let p = Profile::Checkerboard {
            low: 1.0,
            high: 2.0,
            cells: 2,
        };
        assert_eq!(p.eval(&[0.25], 1.0), 1.0);
        assert_eq!(p.eval(&[0.75], 1.0), 2.0);
        assert_eq!(p.eval(&[0.25, 0.75], 1.0), 2.0);
        assert!((p.cell_average(1, 1, 1.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((p.cell_average(2, 1, 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert!((p.cell_average(2, 2, 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert!(p.grad(&[0.1], 1.0, &mut [0.0]).is_err());
    }

    #[test]
    fn smoothed_checkerboard_matches_sharp_away_from_edges() {
        let s = Profile::SmoothedCheckerboard {
            low: 1.0,
            high: 2.0,
            cells: 2,
            width: 0.1,
        };
        assert_eq!(s.eval(&[0.25], 1.0), 1.0);
        assert_eq!(s.eval(&[0.75, 0.25], 1.0), 2.0);
        // halfway through a transition the mollified value is the midpoint
        assert!((s.eval(&[0.5], 1.0) - 1.5).abs() < 1e-15);
        // symmetric transitions preserve the mean
        assert!((s.cell_average(1, 1, 1.0).unwrap() - 1.5).abs() < 1e-10);
        assert!((s.cell_average(1, 2, 1.0).unwrap() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn smoothed_checkerboard_gradient_matches_finite_difference() {
        let s = Profile::SmoothedCheckerboard {
            low: -0.5,
            high: 0.5,
            cells: 2,
            width: 0.2,
        };
        let mut g = [0.0; 2];
        for &(a, b) in &[(0.49, 0.3), (0.02, 0.97), (0.55, 0.51)] {
            s.grad(&[a, b], 1.0, &mut g).unwrap();
            let step = 1e-6;
            let fd0 = (s.eval(&[a + step, b], 1.0) - s.eval(&[a - step, b], 1.0)) / (2.0 * step);
            let fd1 = (s.eval(&[a, b + step], 1.0) - s.eval(&[a, b - step], 1.0)) / (2.0 * step);
            assert!((g[0] - fd0).abs() < 1e-6 * (1.0 + fd0.abs()), "{} vs {}", g[0], fd0);
            assert!((g[1] - fd1).abs() < 1e-6 * (1.0 + fd1.abs()), "{} vs {}", g[1], fd1);
        }
    }

    #[test]
    fn trig_gradient_matches_finite_difference() {
        let p = Profile::Trig {
            mean: 0.3,
            terms: vec![
                TrigTerm::new(1.0, &[(1, Phase::Sin), (2, Phase::Cos)]),
                TrigTerm::new(-0.4, &[(3, Phase::Cos), (0, Phase::Cos)]),
            ],
        };
        let mut g = [0.0; 2];
        p.grad(&[0.17, 0.61], 1.3, &mut g).unwrap();
        let step = 1e-6;
        let fd0 = (p.eval(&[0.17 + step, 0.61], 1.3) - p.eval(&[0.17 - step, 0.61], 1.3)) / (2.0 * step);
        assert!((g[0] - fd0).abs() < 1e-7);
    }

    #[test]
    fn negation_is_pointwise() {
        let p = trig_1d();
        let n = p.negated();
        for i in 0..50 {
            let y = f64::from(i) * 0.037;
            assert_eq!(n.eval(&[y], 1.0), -p.eval(&[y], 1.0));
        }
    }

    #[test]
    fn descriptors_parse_from_toml() {
        let src = r#"
            family = "trig"
            mean = 1.5
            terms = [{ amplitude = 0.5, k = [1], phase = ["cos"] }]
        "#;
        let p: Profile = toml::from_str(src).unwrap();
        assert_eq!(p, trig_1d());
    }
}
