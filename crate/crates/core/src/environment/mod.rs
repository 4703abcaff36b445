//! Stationary ergodic environments realized as periodic profiles composed
//! with a uniformly distributed shift of the cell torus.
//!
//! The probability space is the cell `[0, P)^d` with normalized Lebesgue
//! measure and the translation group acts by adding to the shift. Ensemble
//! expectations are therefore exact cell averages.

mod profile;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
pub use crate::grid::Window;
use crate::quadrature::{integrate, integrate_rect, integrate_with_breaks, QuadOptions};

pub use profile::{Phase, Profile, TrigTerm};

/// Description of a random medium: conductance profile, antisymmetric
/// stream-function matrix and the scalars tying them together.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    pub dimension: usize,
    pub alpha: f64,
    #[serde(default = "unit_period")]
    pub period: f64,
    pub mu: Profile,
    /// Full `d × d` matrix of stream-function profiles; must be antisymmetric.
    #[serde(default)]
    pub streams: Vec<Vec<Profile>>,
    pub theta0: f64,
    #[serde(default)]
    pub drift_amplitude: f64,
}

fn unit_period() -> f64 {
    1.0
}

impl EnvironmentSpec {
    /// One-dimensional medium without drift.
    pub fn new_1d(alpha: f64, mu: Profile, theta0: f64) -> Self {
        Self {
            dimension: 1,
            alpha,
            period: 1.0,
            mu,
            streams: vec![vec![Profile::Zero]],
            theta0,
            drift_amplitude: 0.0,
        }
    }

    /// Two-dimensional medium whose single independent stream entry is `h12`.
    pub fn new_2d(alpha: f64, mu: Profile, h12: Profile, theta0: f64, drift_amplitude: f64) -> Self {
        let h21 = h12.negated();
        Self {
            dimension: 2,
            alpha,
            period: 1.0,
            mu,
            streams: vec![vec![Profile::Zero, h12], vec![h21, Profile::Zero]],
            theta0,
            drift_amplitude,
        }
    }

    /// Stream matrix with the zero default filled in when none was given.
    fn stream_matrix(&self) -> Vec<Vec<Profile>> {
        if self.streams.is_empty() {
            vec![vec![Profile::Zero; self.dimension]; self.dimension]
        } else {
            self.streams.clone()
        }
    }

    /// Checks every invariant of the description, naming the first one violated.
    pub fn validate(&self) -> Result<()> {
        let d = self.dimension;
        if !(d == 1 || d == 2) {
            return Err(invalid(format!("dimension must be 1 or 2, got {d}")));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return Err(invalid(format!("alpha must lie in (0, 2), got {}", self.alpha)));
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(invalid("cell period must be positive"));
        }
        if !(self.theta0 > 0.0) {
            return Err(invalid(format!("theta0 must be positive, got {}", self.theta0)));
        }
        if !(self.drift_amplitude >= 0.0 && self.drift_amplitude.is_finite()) {
            return Err(invalid("drift amplitude must be a nonnegative finite number"));
        }
        self.mu.validate(d, self.period)?;
        let min_mu = self.mu_lower_bound();
        if min_mu < self.theta0 {
            return Err(invalid(format!(
                "mu must stay above theta0 = {} on the cell; observed minimum {min_mu}",
                self.theta0
            )));
        }
        let streams = self.stream_matrix();
        if streams.len() != d || streams.iter().any(|row| row.len() != d) {
            return Err(invalid(format!("stream matrix must be {d} x {d}")));
        }
        for (j, row) in streams.iter().enumerate() {
            for (l, p) in row.iter().enumerate() {
                p.validate(d, self.period)?;
                if j == l && !p.is_zero() {
                    return Err(invalid(format!("stream diagonal entry ({j},{j}) must vanish")));
                }
            }
        }
        for j in 0..d {
            for l in (j + 1)..d {
                if !self.is_negation(&streams[j][l], &streams[l][j]) {
                    return Err(invalid(format!(
                        "stream matrix must be antisymmetric: entry ({l},{j}) is not minus entry ({j},{l})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Lower bound of μ: rigorous when available, else a dense-sample minimum.
    fn mu_lower_bound(&self) -> f64 {
        let (lo, _) = self.mu.bounds();
        if lo >= self.theta0 {
            return lo;
        }
        probe_points(self.dimension, self.period)
            .map(|y| self.mu.eval(&y[..self.dimension], self.period))
            .fold(f64::INFINITY, f64::min)
    }

    fn is_negation(&self, a: &Profile, b: &Profile) -> bool {
        if *b == a.negated() {
            return true;
        }
        probe_points(self.dimension, self.period).all(|y| {
            let y = &y[..self.dimension];
            let (va, vb) = (a.eval(y, self.period), b.eval(y, self.period));
            (va + vb).abs() <= 1e-12 * (1.0 + va.abs())
        })
    }

    pub fn has_drift(&self) -> bool {
        self.drift_amplitude > 0.0 && self.stream_matrix().iter().flatten().any(|p| !p.is_zero())
    }

    /// `𝔼[μ̃^moment]` as the exact cell average of the profile.
    pub fn cell_average(&self, moment: u32) -> Result<f64> {
        self.mu.cell_average(moment, self.dimension, self.period)
    }

    /// A copy with `μ` replaced by the constant `value` and the drift removed.
    pub fn constant_counterpart(&self, value: f64) -> Self {
        Self {
            mu: Profile::constant(value),
            streams: vec![vec![Profile::Zero; self.dimension]; self.dimension],
            drift_amplitude: 0.0,
            theta0: self.theta0.min(value),
            ..self.clone()
        }
    }
}

/// Deterministic quasi-uniform probe points on the cell (4096 per dimension
/// count), used for sampling-based invariant checks.
fn probe_points(d: usize, period: f64) -> impl Iterator<Item = [f64; 2]> {
    let per_axis: usize = if d == 1 { 4096 } else { 64 };
    let total = per_axis.pow(d as u32);
    (0..total).map(move |i| {
        let a = i % per_axis;
        let b = i / per_axis;
        // irrational offsets keep probes off subcell boundaries
        [
            (a as f64 + 0.318_309_886) / per_axis as f64 * period,
            (b as f64 + 0.577_215_664) / per_axis as f64 * period,
        ]
    })
}

/// Draws the realization `ω` (a shift of the cell torus) from the seeded generator.
pub fn sample_environment(spec: &EnvironmentSpec, seed: u64) -> Result<SampledEnvironment> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift = (0..spec.dimension)
        .map(|_| {
            let s = rng.gen::<f64>() * spec.period;
            if s >= spec.period {
                0.0
            } else {
                s
            }
        })
        .collect();
    Ok(SampledEnvironment {
        spec: spec.clone(),
        streams: spec.stream_matrix(),
        shift,
        seed,
    })
}

/// One realization of the environment. Fields are evaluated analytically.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledEnvironment {
    pub spec: EnvironmentSpec,
    streams: Vec<Vec<Profile>>,
    pub shift: Vec<f64>,
    pub seed: u64,
}

impl SampledEnvironment {
    /// Realization with an explicit shift (validated spec required).
    pub fn with_shift(spec: &EnvironmentSpec, shift: &[f64]) -> Result<Self> {
        spec.validate()?;
        if shift.len() != spec.dimension {
            return Err(invalid("shift must have one coordinate per axis"));
        }
        Ok(Self {
            spec: spec.clone(),
            streams: spec.stream_matrix(),
            shift: shift.to_vec(),
            seed: 0,
        })
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    /// The environment seen from `x`: `τ_y ω` with the shift advanced by `y` mod P.
    pub fn advanced(&self, y: &[f64]) -> Self {
        let p = self.spec.period;
        let shift = self
            .shift
            .iter()
            .zip(y)
            .map(|(s, yi)| (s + yi).rem_euclid(p))
            .collect();
        Self {
            shift,
            ..self.clone()
        }
    }

    #[inline]
    fn shifted(&self, x: &[f64]) -> [f64; 2] {
        let mut y = [0.0; 2];
        for (i, (xi, si)) in x.iter().zip(&self.shift).enumerate() {
            y[i] = xi + si;
        }
        y
    }

    /// `μ(x; ω) = μ̃(τ_x ω)`.
    pub fn mu_at(&self, x: &[f64]) -> f64 {
        let y = self.shifted(x);
        self.spec.mu.eval(&y[..self.dimension()], self.spec.period)
    }

    /// Stream-function matrix `H(x; ω)` scaled by the drift amplitude.
    pub fn stream_at(&self, x: &[f64]) -> [[f64; 2]; 2] {
        let d = self.dimension();
        let mut out = [[0.0; 2]; 2];
        if self.spec.drift_amplitude == 0.0 {
            return out;
        }
        let y = self.shifted(x);
        for j in 0..d {
            for l in 0..d {
                out[j][l] =
                    self.spec.drift_amplitude * self.streams[j][l].eval(&y[..d], self.spec.period);
            }
        }
        out
    }

    /// `b_j(x) = Σ_l ∂_l H_{jl}(x)`, from the analytic profile derivatives.
    pub fn drift_at(&self, x: &[f64]) -> Result<[f64; 2]> {
        let d = self.dimension();
        let mut b = [0.0; 2];
        if self.spec.drift_amplitude == 0.0 {
            return Ok(b);
        }
        let y = self.shifted(x);
        let mut grad = [0.0; 2];
        for (j, bj) in b.iter_mut().enumerate().take(d) {
            for l in 0..d {
                let p = &self.streams[j][l];
                if p.is_zero() {
                    continue;
                }
                p.grad(&y[..d], self.spec.period, &mut grad[..d])?;
                *bj += grad[l];
            }
            *bj *= self.spec.drift_amplitude;
        }
        Ok(b)
    }

    /// Maximum of `|H_{jl}|` over a fine sampling of one cell.
    pub fn stream_sup(&self) -> f64 {
        if !self.spec.has_drift() {
            return 0.0;
        }
        let d = self.dimension();
        probe_points(d, self.spec.period)
            .map(|y| {
                let h = self.stream_at(&y[..d]);
                h.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
            })
            .fold(0.0, f64::max)
    }
}

/// Outcome of the discrete divergence check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceReport {
    pub max_divergence: f64,
    pub spacing: f64,
    pub passed: bool,
}

/// Centered-difference divergence of the analytic drift on an `n^d` lattice
/// of one cell. Passes iff the maximum is at most `tol`.
pub fn check_divergence_free(env: &SampledEnvironment, n: usize, tol: f64) -> Result<DivergenceReport> {
    let d = env.dimension();
    let p = env.spec.period;
    let h = p / n as f64;
    let mut max_div = 0.0f64;
    let total = n.pow(d as u32);
    for idx in 0..total {
        let x = [(idx % n) as f64 * h, (idx / n) as f64 * h];
        let mut div = 0.0;
        for j in 0..d {
            let mut fwd = x;
            let mut bwd = x;
            fwd[j] += h;
            bwd[j] -= h;
            div += (env.drift_at(&fwd[..d])?[j] - env.drift_at(&bwd[..d])?[j]) / (2.0 * h);
        }
        max_div = max_div.max(div.abs());
    }
    Ok(DivergenceReport {
        max_divergence: max_div,
        spacing: h,
        passed: max_div <= tol,
    })
}

/// Drift regularity required for uniqueness when `α ∈ [1, 2)`:
/// `sup|b̃|` and `sup_ω ∫ |b(τ_z ω) − b(ω)|² / |z|^{d+2−α} dz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftRegularity {
    pub sup_drift: f64,
    pub seminorm: f64,
    pub finite: bool,
}

/// Estimates the drift seminorm by quadrature over the disk of radius P/2
/// (polar coordinates) plus the analytic tail `4 sup|b|² ∫_{|z|>P/2} |z|^{-d-2+α}`,
/// maximized over a handful of base points.
pub fn check_drift_regularity(env: &SampledEnvironment) -> Result<DriftRegularity> {
    let d = env.dimension();
    if !env.spec.has_drift() {
        return Ok(DriftRegularity {
            sup_drift: 0.0,
            seminorm: 0.0,
            finite: true,
        });
    }
    let p = env.spec.period;
    let alpha = env.spec.alpha;
    let mut sup_drift = 0.0f64;
    for y in probe_points(d, p).step_by(7) {
        let b = env.drift_at(&y[..d])?;
        sup_drift = sup_drift.max((b[0] * b[0] + b[1] * b[1]).sqrt());
    }
    let radius = 0.5 * p;
    let exponent = d as f64 + 2.0 - alpha;
    let surface = if d == 1 { 2.0 } else { 2.0 * PI };
    let tail = 4.0 * sup_drift * sup_drift * surface * radius.powf(alpha - 2.0) / (2.0 - alpha);
    let opts = QuadOptions::rel(1e-6);
    let mut worst = 0.0f64;
    for base in 0..4 {
        let x0 = [base as f64 * 0.23 * p, base as f64 * 0.37 * p];
        let b0 = env.drift_at(&x0[..d])?;
        let diff2 = |z: [f64; 2]| -> f64 {
            let x = [x0[0] + z[0], x0[1] + z[1]];
            match env.drift_at(&x[..d]) {
                Ok(b) => (b[0] - b0[0]).powi(2) + (b[1] - b0[1]).powi(2),
                Err(_) => f64::NAN,
            }
        };
        let near = if d == 1 {
            integrate(
                |r| (diff2([r, 0.0]) + diff2([-r, 0.0])) / r.powf(exponent),
                0.0,
                radius,
                opts,
            )?
            .value
        } else {
            integrate_rect(
                |r, phi| r * diff2([r * phi.cos(), r * phi.sin()]) / r.powf(exponent),
                (0.0, radius),
                (0.0, 2.0 * PI),
                &[],
                &[],
                opts,
            )?
            .value
        };
        worst = worst.max(near + tail);
    }
    Ok(DriftRegularity {
        sup_drift,
        seminorm: worst,
        finite: worst.is_finite() && sup_drift.is_finite(),
    })
}

/// Spatial average `|O|⁻¹ ∫_O μ(x/ε)^moment dx` by adaptive quadrature.
pub fn spatial_average(env: &SampledEnvironment, eps: f64, window: &Window, moment: u32) -> Result<f64> {
    let d = env.dimension();
    if window.center.len() != d || window.half_width.len() != d {
        return Err(invalid("window must have one center and half-width per axis"));
    }
    let p = moment as i32;
    let opts = QuadOptions::rel(1e-12);
    let range = |i: usize| (window.center[i] - window.half_width[i], window.center[i] + window.half_width[i]);
    // breakpoints at every period boundary keep each panel smooth-ish
    let breaks = |i: usize| -> Vec<f64> {
        let (a, b) = range(i);
        let step = eps * env.spec.period / 4.0;
        let first = (a / step).ceil() as i64;
        let last = (b / step).floor() as i64;
        (first..=last).map(|k| k as f64 * step).collect()
    };
    let integral = match d {
        1 => {
            let (a, b) = range(0);
            integrate_with_breaks(|x| env.mu_at(&[x / eps]).powi(p), a, b, &breaks(0), opts)?.value
        }
        _ => {
            integrate_rect(
                |x, y| env.mu_at(&[x / eps, y / eps]).powi(p),
                range(0),
                range(1),
                &breaks(0),
                &breaks(1),
                opts,
            )?
            .value
        }
    };
    Ok(integral / window.volume())
}
