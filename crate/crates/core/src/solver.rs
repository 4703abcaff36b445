//! The discrete resolvent equation `(−A0 + θG + Dk + λ) u = f`, solved over
//! a viscosity/truncation schedule `θ_m ↓ 0`, `k_m ↑ ∞`, with the a-priori
//! estimates checked on the result.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::discretize::{
    apply_viscosity, assemble_dirichlet, assemble_drift, kernel::DEFAULT_IMAGES, stream_max_on_grid,
    viscosity_symbol, AssemblyOptions, Dirichlet, Drift, KernelTable,
};
use crate::environment::{check_drift_regularity, SampledEnvironment};
use crate::error::{invalid, Error, Result};
use crate::fft::Spectral;
use crate::grid::{dot, Grid, GridFunction, Window};
use crate::linalg::{gmres, lu_solve, GmresOptions};

/// Data of one resolvent equation at scale `eps`.
#[derive(Debug, Clone)]
pub struct ResolventProblem {
    pub lambda: f64,
    pub f: GridFunction,
    pub eps: f64,
    pub env: SampledEnvironment,
    pub grid: Grid,
}

impl ResolventProblem {
    pub fn new(lambda: f64, f: GridFunction, eps: f64, env: SampledEnvironment) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if f.values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("right-hand side must be finite"));
        }
        let grid = f.grid;
        let central = Window::central(&grid, 0.5);
        let outside = (0..grid.len()).any(|i| f.values[i] != 0.0 && !central.contains(&grid.point(i)[..grid.d]));
        if outside {
            return Err(invalid("support of f must lie in the central half of the torus"));
        }
        Ok(Self {
            lambda,
            f,
            eps,
            env,
            grid,
        })
    }
}

/// Viscosity and truncation schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Schedule {
    pub theta_0: f64,
    pub theta_factor: f64,
    pub k_0: f64,
    pub k_factor: f64,
    pub max_stages: usize,
    pub stage_tol: f64,
    pub linear_tol: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            theta_0: 1e-2,
            theta_factor: 0.1,
            k_0: 0.5,
            k_factor: 2.0,
            max_stages: 16,
            stage_tol: 1e-6,
            linear_tol: 1e-10,
        }
    }
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_factor > 0.0 && self.theta_factor < 1.0) {
            return Err(invalid("theta_factor must lie in (0, 1)"));
        }
        if !(self.k_factor > 1.0) {
            return Err(invalid("k_factor must exceed 1"));
        }
        if !(self.theta_0 > 0.0 && self.k_0 > 0.0) {
            return Err(invalid("theta_0 and k_0 must be positive"));
        }
        if !(self.stage_tol > 0.0 && self.linear_tol > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if self.max_stages == 0 {
            return Err(invalid("max_stages must be at least 1"));
        }
        Ok(())
    }

    pub fn theta(&self, m: usize) -> f64 {
        self.theta_0 * self.theta_factor.powi(m as i32)
    }

    pub fn k(&self, m: usize) -> f64 {
        self.k_0 * self.k_factor.powi(m as i32)
    }
}

/// Per-stage record, including the energy-identity defect.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    pub theta: f64,
    pub k: f64,
    pub iterations: usize,
    pub residual: f64,
    pub identity_defect: f64,
    /// `10 · linear_tol · ‖f‖ ‖u‖`.
    pub identity_allowance: f64,
}

/// Whether the returned iterate is the unique resolvent solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Final `θ = 0`, untruncated solve in the uniqueness regime.
    Unique,
    /// Smallest-viscosity iterate outside the uniqueness regime.
    SmallestViscosity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub energy: f64,
    pub viscosity_energy: f64,
    pub l2_norm: f64,
    pub linear_residual: f64,
    pub stages_used: usize,
    pub increments: Vec<f64>,
    pub theta: f64,
    pub k: f64,
    pub regime: Regime,
    pub stages: Vec<StageRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: GridFunction,
    pub diagnostics: Diagnostics,
}

/// Result of a single stage solve.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub u: GridFunction,
    pub record: StageRecord,
    pub energy: f64,
    pub viscosity_energy: f64,
}

/// Operators assembled once per problem; stage solves reuse them.
#[derive(Debug, Clone)]
pub struct Resolvent {
    pub problem: ResolventProblem,
    pub a0: Dirichlet,
    spectral: Spectral,
    base_symbol: Vec<f64>,
    viscosity_symbol: Vec<f64>,
    pub stream_max: f64,
}

impl Resolvent {
    pub fn new(problem: ResolventProblem, kernel: Arc<KernelTable>, opts: &AssemblyOptions) -> Result<Self> {
        if kernel.grid != problem.grid {
            return Err(invalid("kernel table was built for a different grid"));
        }
        let a0 = assemble_dirichlet(&problem.env, problem.eps, kernel.clone(), opts)?;
        let spectral = Spectral::new(problem.grid);
        let c2 = a0.mean_kappa_sq();
        let base_symbol = kernel.generator_symbol(&spectral).iter().map(|s| c2 * s).collect();
        let viscosity_symbol = viscosity_symbol(&spectral);
        let stream_max = stream_max_on_grid(&problem.env, problem.eps, &problem.grid);
        Ok(Self {
            problem,
            a0,
            spectral,
            base_symbol,
            viscosity_symbol,
            stream_max,
        })
    }

    /// Builds the kernel table with the default image count.
    pub fn with_default_kernel(problem: ResolventProblem) -> Result<Self> {
        let kernel = Arc::new(KernelTable::new(problem.grid, problem.env.spec.alpha, DEFAULT_IMAGES)?);
        Self::new(problem, kernel, &AssemblyOptions::default())
    }

    pub fn drift(&self, k: f64) -> Result<Option<Drift>> {
        assemble_drift(&self.problem.env, self.problem.eps, &self.problem.grid, k)
    }

    /// `out = (−A0 + θG + Dk + λ) u`.
    pub fn apply(&self, dk: Option<&Drift>, theta: f64, u: &[f64], out: &mut [f64]) {
        let n = u.len();
        self.a0.apply(u, out);
        let lambda = self.problem.lambda;
        for i in 0..n {
            out[i] = lambda * u[i] - out[i];
        }
        if theta > 0.0 {
            let mut g = vec![0.0; n];
            apply_viscosity(&self.problem.grid, u, &mut g);
            for i in 0..n {
                out[i] += theta * g[i];
            }
        }
        if let Some(d) = dk {
            let mut g = vec![0.0; n];
            d.apply(u, &mut g);
            for i in 0..n {
                out[i] += g[i];
            }
        }
    }

    fn precondition(&self, theta: f64, v: &[f64], out: &mut [f64]) {
        let lambda = self.problem.lambda;
        let symbol: Vec<f64> = self
            .base_symbol
            .iter()
            .zip(&self.viscosity_symbol)
            .map(|(b, g)| 1.0 / (b + theta * g + lambda))
            .collect();
        out.copy_from_slice(&self.spectral.apply_symbol(v, &symbol));
    }

    fn dense_system(&self, dk: Option<&Drift>, theta: f64) -> Vec<f64> {
        let n = self.problem.grid.len();
        let mut m = vec![0.0; n * n];
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for y in 0..n {
            e[y] = 1.0;
            self.apply(dk, theta, &e, &mut col);
            e[y] = 0.0;
            for x in 0..n {
                m[x * n + y] = col[x];
            }
        }
        m
    }

    /// One stage solve at viscosity `theta` and truncation `k` (`k = ∞` disables the clamp).
    pub fn solve_stage(&self, theta: f64, k: f64, x0: Option<&[f64]>, linear_tol: f64) -> Result<StageOutcome> {
        if theta < 0.0 {
            return Err(invalid("viscosity must be nonnegative"));
        }
        let dk = self.drift(k)?;
        let f = &self.problem.f.values;
        let grid = self.problem.grid;
        let opts = GmresOptions {
            tol: linear_tol,
            ..GmresOptions::default()
        };
        let solved = gmres(
            |x, o| self.apply(dk.as_ref(), theta, x, o),
            |x, o| self.precondition(theta, x, o),
            f,
            x0,
            opts,
        );
        let (values, iterations) = match solved {
            Ok(out) => (out.x, out.iterations),
            Err(Error::NonConvergence { .. }) if grid.len() <= 4096 => {
                let m = self.dense_system(dk.as_ref(), theta);
                (lu_solve(&m, grid.len(), f)?, 0)
            }
            Err(e) => return Err(e),
        };
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NotFinite("stage solution".into()));
        }
        let mut ku = vec![0.0; values.len()];
        self.apply(dk.as_ref(), theta, &values, &mut ku);
        let r: f64 = ku.iter().zip(f).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let fnorm = dot(f, f).sqrt();
        let residual = if fnorm == 0.0 { r } else { r / fnorm };
        if residual > linear_tol {
            return Err(Error::NonConvergence {
                iterations,
                residual_history: vec![residual],
            });
        }

        let u = GridFunction {
            grid,
            values,
        };
        let energy = self.a0.energy(&u.values, &u.values);
        let viscosity_energy = if theta > 0.0 {
            let mut g = vec![0.0; grid.len()];
            apply_viscosity(&grid, &u.values, &mut g);
            theta * grid.cell_volume() * dot(&g, &u.values)
        } else {
            0.0
        };
        let unorm = u.norm();
        let fu = self.problem.f.dot(&u);
        let defect = (energy + viscosity_energy + self.problem.lambda * unorm * unorm - fu).abs();
        Ok(StageOutcome {
            record: StageRecord {
                theta,
                k,
                iterations,
                residual,
                identity_defect: defect,
                identity_allowance: 10.0 * linear_tol * self.problem.f.norm() * unorm,
            },
            u,
            energy,
            viscosity_energy,
        })
    }

    /// True when the final `θ = 0` solve is justified by uniqueness.
    pub fn uniqueness_regime(&self) -> Result<bool> {
        let env = &self.problem.env;
        if !env.spec.has_drift() {
            return Ok(true);
        }
        if env.spec.alpha < 1.0 {
            return Ok(false);
        }
        Ok(check_drift_regularity(env)?.finite)
    }

    /// Runs the schedule until the iterates stabilize, then (in the
    /// uniqueness regime) one final untruncated `θ = 0` solve.
    pub fn solve(&self, schedule: &Schedule) -> Result<Solution> {
        schedule.validate()?;
        let mut stages = Vec::new();
        let mut increments = Vec::new();
        let mut prev: Option<StageOutcome> = None;
        let mut stabilized = false;
        for m in 0..schedule.max_stages {
            let theta = schedule.theta(m);
            let k = schedule.k(m);
            let x0 = prev.as_ref().map(|p| p.u.values.clone());
            let out = self.solve_stage(theta, k, x0.as_deref(), schedule.linear_tol)?;
            stages.push(out.record.clone());
            if let Some(p) = &prev {
                let base = p.u.norm();
                let inc = out.u.sub(&p.u).norm();
                let rel = if base == 0.0 { inc } else { inc / base };
                increments.push(rel);
                let clamp_off = k > self.stream_max;
                if rel <= schedule.stage_tol || (clamp_off && theta <= schedule.stage_tol) {
                    stabilized = true;
                    prev = Some(out);
                    break;
                }
            }
            prev = Some(out);
        }
        if !stabilized {
            return Err(Error::ScheduleFailure {
                stages: schedule.max_stages,
                increments,
            });
        }
        let last = prev.unwrap_or_else(|| unreachable!("at least one stage ran"));
        let used = stages.len();
        let (out, regime) = if self.uniqueness_regime()? {
            let fin = self.solve_stage(0.0, f64::INFINITY, Some(&last.u.values), schedule.linear_tol)?;
            stages.push(fin.record.clone());
            (fin, Regime::Unique)
        } else {
            (last, Regime::SmallestViscosity)
        };
        let l2 = out.u.norm();
        Ok(Solution {
            diagnostics: Diagnostics {
                energy: out.energy,
                viscosity_energy: out.viscosity_energy,
                l2_norm: l2,
                linear_residual: out.record.residual,
                stages_used: used,
                increments,
                theta: out.record.theta,
                k: out.record.k,
                regime,
                stages,
            },
            u: out.u,
        })
    }
}

/// Stage solve through a freshly assembled operator set.
pub fn solve_stage(problem: &ResolventProblem, theta: f64, k: f64, linear_tol: f64) -> Result<GridFunction> {
    let r = Resolvent::with_default_kernel(problem.clone())?;
    Ok(r.solve_stage(theta, k, None, linear_tol)?.u)
}

pub fn solve_resolvent(problem: &ResolventProblem, schedule: &Schedule) -> Result<Solution> {
    Resolvent::with_default_kernel(problem.clone())?.solve(schedule)
}

/// One a-priori inequality with both sides.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AprioriReport {
    pub checks: Vec<Check>,
}

impl AprioriReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The first failing check as a structured error.
    pub fn into_result(self) -> Result<Self> {
        if let Some(c) = self.checks.iter().find(|c| !c.passed) {
            return Err(Error::AprioriViolation {
                estimate: c.name,
                lhs: c.lhs,
                rhs: c.rhs,
            });
        }
        Ok(self)
    }
}

/// Relative slack on the inequalities beyond the residual allowance.
pub const APRIORI_RTOL: f64 = 1e-8;

/// Checks the resolvent contraction, the energy identity and the energy bound.
pub fn verify_apriori(solution: &Solution, problem: &ResolventProblem, linear_tol: f64) -> AprioriReport {
    let d = &solution.diagnostics;
    let lambda = problem.lambda;
    let fnorm = problem.f.norm();
    let unorm = solution.u.norm();
    let rnorm = d.linear_residual * fnorm;
    let fu = problem.f.dot(&solution.u);

    let contraction = Check {
        name: "resolvent contraction",
        lhs: unorm,
        rhs: (fnorm * (1.0 + APRIORI_RTOL) + rnorm) / lambda,
        passed: false,
    };
    let identity_lhs = (d.energy + d.viscosity_energy + lambda * unorm * unorm - fu).abs();
    let identity = Check {
        name: "energy identity",
        lhs: identity_lhs,
        rhs: 10.0 * linear_tol * fnorm * unorm,
        passed: false,
    };
    let bound = Check {
        name: "energy bound",
        lhs: d.energy,
        rhs: (fnorm * fnorm / (2.0 * lambda) + 0.5 * lambda * unorm * unorm) * (1.0 + APRIORI_RTOL) + rnorm * unorm,
        passed: false,
    };
    let checks = [contraction, identity, bound]
        .into_iter()
        .map(|mut c| {
            c.passed = c.lhs.is_finite() && c.lhs <= c.rhs;
            c
        })
        .collect();
    AprioriReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{sample_environment, EnvironmentSpec, Phase, Profile, TrigTerm};
    use crate::grid::Bump;

    fn trig_1d() -> Profile {
        Profile::Trig {
            mean: 1.5,
            terms: vec![TrigTerm::new(0.5, &[(1, Phase::Cos)])],
        }
    }

    fn problem_1d(lambda: f64, mu: Profile) -> ResolventProblem {
        let spec = EnvironmentSpec::new_1d(1.5, mu, 1.0);
        let env = sample_environment(&spec, 11).unwrap();
        let grid = Grid::new(1, 4.0, 128).unwrap();
        let f = Bump {
            center: vec![2.0],
            radius: 0.6,
            amplitude: 1.0,
        }
        .sample(grid);
        ResolventProblem::new(lambda, f, 0.25, env).unwrap()
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let mut p = problem_1d(1.0, trig_1d());
        p.f = GridFunction::zeros(p.grid);
        let sol = solve_resolvent(&p, &Schedule::default()).unwrap();
        assert!(sol.u.values.iter().all(|&v| v == 0.0));
        assert!(verify_apriori(&sol, &p, 1e-10).passed());
    }

    #[test]
    fn large_lambda_approaches_identity_over_lambda() {
        let mut p = problem_1d(1e6, trig_1d());
        let n = p.f.norm();
        p.f = p.f.scaled(1.0 / n);
        let u = solve_stage(&p, 0.0, f64::INFINITY, 1e-12).unwrap();
        let err = u.scaled(p.lambda).sub(&p.f).norm();
        assert!(err <= 1e-3, "{err}");
    }

    #[test]
    fn schedule_stabilizes_and_estimates_hold() {
        let p = problem_1d(1.0, trig_1d());
        let sol = solve_resolvent(&p, &Schedule::default()).unwrap();
        assert_eq!(sol.diagnostics.regime, Regime::Unique);
        assert_eq!(sol.diagnostics.theta, 0.0);
        assert!(sol.diagnostics.linear_residual <= 1e-10);
        for s in &sol.diagnostics.stages {
            assert!(s.identity_defect <= s.identity_allowance, "{s:?}");
        }
        let report = verify_apriori(&sol, &p, 1e-10);
        assert!(report.passed(), "{report:?}");
        // ‖f‖ = 1, λ = 1 ⇒ ‖u‖ ≤ 1
        let mut q = p.clone();
        let n = q.f.norm();
        q.f = q.f.scaled(1.0 / n);
        let sol = solve_resolvent(&q, &Schedule::default()).unwrap();
        assert!(sol.u.norm() <= 1.0);
    }

    #[test]
    fn nonnegative_data_gives_nonnegative_solution() {
        let p = problem_1d(0.1, trig_1d());
        let sol = solve_resolvent(&p, &Schedule::default()).unwrap();
        let floor = -1e-8 * p.f.norm();
        assert!(sol.u.values.iter().all(|&v| v >= floor));
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let p = problem_1d(1.0, trig_1d());
        let a = solve_resolvent(&p, &Schedule::default()).unwrap();
        let b = solve_resolvent(&p, &Schedule::default()).unwrap();
        assert_eq!(a.u.values, b.u.values);
    }

    #[test]
    fn violated_estimate_is_reported_by_name() {
        let p = problem_1d(1.0, trig_1d());
        let mut sol = solve_resolvent(&p, &Schedule::default()).unwrap();
        sol.u = sol.u.scaled(10.0);
        match verify_apriori(&sol, &p, 1e-10).into_result() {
            Err(Error::AprioriViolation { estimate, lhs, rhs }) => {
                assert_eq!(estimate, "resolvent contraction");
                assert!(lhs > rhs);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schedule_validation() {
        let bad = Schedule {
            theta_factor: 1.0,
            ..Schedule::default()
        };
        assert!(bad.validate().is_err());
        let p = problem_1d(1.0, trig_1d());
        let tight = Schedule {
            max_stages: 2,
            stage_tol: 1e-15,
            ..Schedule::default()
        };
        assert!(matches!(solve_resolvent(&p, &tight), Err(Error::ScheduleFailure { .. })));
    }

    #[test]
    fn support_must_stay_central() {
        let spec = EnvironmentSpec::new_1d(1.5, trig_1d(), 1.0);
        let env = sample_environment(&spec, 0).unwrap();
        let grid = Grid::new(1, 4.0, 64).unwrap();
        let f = Bump {
            center: vec![0.5],
            radius: 0.4,
            amplitude: 1.0,
        }
        .sample(grid);
        assert!(ResolventProblem::new(1.0, f, 0.25, env).is_err());
    }
}
