//! Experiments: ε-ladder convergence studies, spatial averaging, drift
//! pairing decay and the full check suite.

pub mod config;
pub mod output;

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::discretize::{centered, check_commensurate, AssemblyOptions, KernelTable};
use crate::environment::{
    check_divergence_free, check_drift_regularity, sample_environment, spatial_average, EnvironmentSpec,
    SampledEnvironment,
};
use crate::error::{invalid, Error, Result};
use crate::grid::{dot, Grid, GridFunction, Window};
use crate::limit::{solve_limit_fourier, solve_limit_matched, EffectiveModel};
use crate::solver::{verify_apriori, Resolvent, ResolventProblem};

pub use config::{parse_seed_list, ExperimentConfig};

/// Least-squares slope of `ln y` against `ln x`, over the points with `y > 0`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0 && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Median of the finite entries (NaN when there are none).
pub fn median(values: &[f64]) -> f64 {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite()) && values.windows(2).all(|w| w[1] < w[0])
}

/// Everything shared by the rows of one study.
#[derive(Debug, Clone)]
pub struct Study {
    pub config: ExperimentConfig,
    pub spec: EnvironmentSpec,
    pub grid: Grid,
    pub window: Window,
    pub kernel: Arc<KernelTable>,
    pub model: EffectiveModel,
    pub forcing: GridFunction,
    /// Matched-route limit solution.
    pub ubar: GridFunction,
}

impl Study {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let spec = config.environment_spec()?;
        if config.forcing.center.len() != spec.dimension {
            return Err(invalid("forcing dimension differs from the environment"));
        }
        let grid = config.grid(spec.dimension)?;
        let window = config.window(&grid);
        let kernel = Arc::new(KernelTable::new(grid, spec.alpha, config.images)?);
        let model = EffectiveModel::new(&spec, grid)?;
        let forcing = config.forcing.sample(grid);
        let matched = model.matched_environment(&spec)?;
        let ubar = solve_limit_matched(
            &model,
            &matched,
            config.lambda,
            &forcing,
            kernel.clone(),
            config.schedule.linear_tol,
        )?;
        Ok(Self {
            config,
            spec,
            grid,
            window,
            kernel,
            model,
            forcing,
            ubar,
        })
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.config.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))
    }

    /// Assembled resolvent for one `(ε, seed)`.
    pub fn resolvent(&self, eps: f64, seed: u64) -> Result<Resolvent> {
        let env = sample_environment(&self.spec, seed)?;
        let problem = ResolventProblem::new(self.config.lambda, self.forcing.clone(), eps, env)?;
        Resolvent::new(problem, self.kernel.clone(), &AssemblyOptions::default())
    }
}

/// One `(ε, seed)` solve of a convergence study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub eps: f64,
    pub seed: u64,
    pub abs_error: f64,
    pub rel_error: f64,
    pub energy: f64,
    pub l2_norm: f64,
    pub linear_residual: f64,
    pub stages: usize,
    /// Largest `defect / allowance` of the energy identity over all stage solves.
    pub identity_ratio: f64,
    pub apriori_passed: bool,
    /// Drift pairing `P(ε)` against the test function, when drift is active.
    pub drift_pairing: Option<f64>,
    /// `None` on success, otherwise the failure message.
    pub failure: Option<String>,
}

impl ConvergenceRow {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MedianRow {
    pub eps: f64,
    pub median_rel_error: f64,
    pub median_abs_error: f64,
    pub min_rel_error: f64,
    pub max_rel_error: f64,
    pub ok_rows: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub window: Window,
    pub medians: Vec<MedianRow>,
    /// Slope of the median relative error against `ε` in log-log scale.
    pub slope: f64,
    pub failed_fraction: f64,
    /// False when more than 20% of the rows failed.
    pub valid: bool,
}

impl ConvergenceReport {
    fn from_rows(rows: Vec<ConvergenceRow>, window: Window, ladder: &[f64]) -> Self {
        let medians: Vec<MedianRow> = ladder
            .iter()
            .map(|&eps| {
                let ok: Vec<&ConvergenceRow> = rows.iter().filter(|r| r.eps == eps && r.ok()).collect();
                let rel: Vec<f64> = ok.iter().map(|r| r.rel_error).collect();
                let abs: Vec<f64> = ok.iter().map(|r| r.abs_error).collect();
                MedianRow {
                    eps,
                    median_rel_error: median(&rel),
                    median_abs_error: median(&abs),
                    min_rel_error: rel.iter().copied().fold(f64::NAN, f64::min),
                    max_rel_error: rel.iter().copied().fold(f64::NAN, f64::max),
                    ok_rows: ok.len(),
                }
            })
            .collect();
        let eps: Vec<f64> = medians.iter().map(|m| m.eps).collect();
        let med: Vec<f64> = medians.iter().map(|m| m.median_rel_error).collect();
        let failed = rows.iter().filter(|r| !r.ok()).count();
        let failed_fraction = failed as f64 / rows.len().max(1) as f64;
        Self {
            slope: loglog_slope(&eps, &med),
            rows,
            window,
            medians,
            failed_fraction,
            valid: failed_fraction <= 0.2,
        }
    }

    pub fn median_errors(&self) -> Vec<f64> {
        self.medians.iter().map(|m| m.median_rel_error).collect()
    }

    pub fn strictly_decreasing(&self) -> bool {
        strictly_decreasing(&self.median_errors())
    }

    pub fn final_median(&self) -> f64 {
        self.medians.last().map_or(f64::NAN, |m| m.median_rel_error)
    }
}

/// `|ε^{1−α} Σ_j h^d Σ_x b_j(x/ε) (D_j g)(x) u(x)|`.
pub fn drift_pairing(env: &SampledEnvironment, eps: f64, g: &GridFunction, u: &GridFunction) -> Result<f64> {
    let grid = g.grid;
    let d = grid.d;
    let n = grid.len();
    let mut dg = vec![vec![0.0; n]; d];
    for (axis, out) in dg.iter_mut().enumerate() {
        centered(&grid, &g.values, axis, out);
    }
    let mut s = 0.0;
    for i in 0..n {
        let x = grid.point(i);
        let y = [x[0] / eps, x[1] / eps];
        let b = env.drift_at(&y[..d])?;
        let mut t = 0.0;
        for (j, dgj) in dg.iter().enumerate() {
            t += b[j] * dgj[i];
        }
        s += t * u.values[i];
    }
    Ok((eps.powf(1.0 - env.spec.alpha) * grid.cell_volume() * s).abs())
}

fn solve_row(study: &Study, eps: f64, seed: u64, test_function: Option<&GridFunction>) -> ConvergenceRow {
    let mut row = ConvergenceRow {
        eps,
        seed,
        abs_error: f64::NAN,
        rel_error: f64::NAN,
        energy: f64::NAN,
        l2_norm: f64::NAN,
        linear_residual: f64::NAN,
        stages: 0,
        identity_ratio: f64::NAN,
        apriori_passed: false,
        drift_pairing: None,
        failure: None,
    };
    let mut attempt = || -> Result<()> {
        let r = study.resolvent(eps, seed)?;
        let sol = r.solve(&study.config.schedule)?;
        let report = verify_apriori(&sol, &r.problem, study.config.schedule.linear_tol);
        row.energy = sol.diagnostics.energy;
        row.l2_norm = sol.diagnostics.l2_norm;
        row.linear_residual = sol.diagnostics.linear_residual;
        row.stages = sol.diagnostics.stages.len();
        row.identity_ratio = sol
            .diagnostics
            .stages
            .iter()
            .map(|s| if s.identity_allowance > 0.0 { s.identity_defect / s.identity_allowance } else { 0.0 })
            .fold(0.0, f64::max);
        let identity_ok = sol.diagnostics.stages.iter().all(|s| s.identity_defect <= s.identity_allowance);
        row.apriori_passed = report.passed() && identity_ok;
        report.into_result()?;
        if !identity_ok {
            return Err(Error::AprioriViolation {
                estimate: "energy identity (stage)",
                lhs: row.identity_ratio,
                rhs: 1.0,
            });
        }
        let diff = sol.u.sub(&study.ubar);
        row.abs_error = diff.norm_on(&study.window);
        let base = study.ubar.norm_on(&study.window);
        row.rel_error = if base > 0.0 { row.abs_error / base } else { row.abs_error };
        if let Some(g) = test_function {
            if r.problem.env.spec.has_drift() {
                row.drift_pairing = Some(drift_pairing(&r.problem.env, eps, g, &sol.u)?);
            }
        }
        Ok(())
    };
    if let Err(e) = attempt() {
        row.failure = Some(e.to_string());
    }
    row
}

fn run_rows(study: &Study, ladder: &[f64], seeds: &[u64], pairing: bool) -> Result<Vec<ConvergenceRow>> {
    let test = pairing.then(|| study.config.test_function().sample(study.grid));
    let jobs: Vec<(f64, u64)> = ladder.iter().flat_map(|&e| seeds.iter().map(move |&s| (e, s))).collect();
    let pool = study.pool()?;
    // collect keeps the job order, so output never depends on scheduling
    Ok(pool.install(|| jobs.par_iter().map(|&(e, s)| solve_row(study, e, s, test.as_ref())).collect()))
}

pub fn run_convergence_study(study: &Study) -> Result<ConvergenceReport> {
    let rows = run_rows(study, &study.config.eps, &study.config.seeds, false)?;
    Ok(ConvergenceReport::from_rows(rows, study.window.clone(), &study.config.eps))
}

pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceReport> {
    run_convergence_study(&Study::new(config.clone())?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirkhoffRow {
    pub eps: f64,
    pub seed: u64,
    pub average: f64,
    pub target: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirkhoffReport {
    pub rows: Vec<BirkhoffRow>,
    /// `(ε, median relative error)` per rung.
    pub medians: Vec<(f64, f64)>,
    /// Slope of the median error against `1/ε` in log-log scale.
    pub slope: f64,
    pub max_final_error: f64,
    pub passed: bool,
}

/// Spatial averages `|O|⁻¹∫_O μ(x/ε)² dx` against `𝔼[μ̃²]`.
pub fn run_birkhoff(
    spec: &EnvironmentSpec,
    ladder: &[f64],
    window: &Window,
    seeds: &[u64],
    max_final_error: f64,
) -> Result<BirkhoffReport> {
    if ladder.is_empty() || seeds.is_empty() {
        return Err(invalid("Birkhoff study needs at least one eps and one seed"));
    }
    let target = spec.cell_average(2)?;
    let mut rows = Vec::new();
    for &eps in ladder {
        for &seed in seeds {
            let env = sample_environment(spec, seed)?;
            let average = spatial_average(&env, eps, window, 2)?;
            rows.push(BirkhoffRow {
                eps,
                seed,
                average,
                target,
                rel_error: (average - target).abs() / target.abs(),
            });
        }
    }
    let medians: Vec<(f64, f64)> = ladder
        .iter()
        .map(|&e| {
            let v: Vec<f64> = rows.iter().filter(|r| r.eps == e).map(|r| r.rel_error).collect();
            (e, median(&v))
        })
        .collect();
    let inv: Vec<f64> = medians.iter().map(|m| 1.0 / m.0).collect();
    let errs: Vec<f64> = medians.iter().map(|m| m.1).collect();
    let slope = loglog_slope(&inv, &errs);
    let last = *errs.last().unwrap_or(&f64::NAN);
    let negligible = errs.iter().all(|&e| e <= 1e-12);
    let trend = negligible || (slope < 0.0 && last <= errs[0]);
    Ok(BirkhoffReport {
        passed: last <= max_final_error && trend,
        rows,
        medians,
        slope,
        max_final_error,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftDecayReport {
    pub rows: Vec<ConvergenceRow>,
    /// `(ε, median P(ε))` per rung.
    pub medians: Vec<(f64, f64)>,
    /// Slope of the median pairing against `ε` in log-log scale.
    pub slope: f64,
    pub strictly_decreasing: bool,
    pub passed: bool,
}

impl DriftDecayReport {
    fn from_rows(rows: Vec<ConvergenceRow>, ladder: &[f64]) -> Self {
        let medians: Vec<(f64, f64)> = ladder
            .iter()
            .map(|&e| {
                let v: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.eps == e && r.ok())
                    .map(|r| r.drift_pairing.unwrap_or(0.0))
                    .collect();
                (e, median(&v))
            })
            .collect();
        let eps: Vec<f64> = medians.iter().map(|m| m.0).collect();
        let p: Vec<f64> = medians.iter().map(|m| m.1).collect();
        let zero = p.iter().all(|&v| v == 0.0);
        let dec = strictly_decreasing(&p);
        Self {
            slope: loglog_slope(&eps, &p),
            strictly_decreasing: dec,
            passed: zero || dec,
            rows,
            medians,
        }
    }
}

pub fn run_drift_decay_study(study: &Study) -> Result<DriftDecayReport> {
    if study.spec.has_drift() && study.spec.alpha < 1.0 {
        return Err(Error::Regime("drift decay needs alpha in [1, 2)".into()));
    }
    let rows = run_rows(study, &study.config.eps, &study.config.seeds, true)?;
    Ok(DriftDecayReport::from_rows(rows, &study.config.eps))
}

pub fn run_drift_decay(config: &ExperimentConfig) -> Result<DriftDecayReport> {
    run_drift_decay_study(&Study::new(config.clone())?)
}

/// One line of the suite summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteCheck {
    pub name: String,
    pub mandatory: bool,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteSummary {
    pub checks: Vec<SuiteCheck>,
    pub values: Vec<(String, String)>,
    pub convergence: Option<ConvergenceReport>,
    pub birkhoff: Option<BirkhoffReport>,
    pub drift_decay: Option<DriftDecayReport>,
    pub operators: Vec<OperatorCheck>,
}

impl SuiteSummary {
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.mandatory).all(|c| c.passed)
    }
}

/// Measured value of an operator invariant against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

/// Symmetry, semidefiniteness, constant annihilation of `A0`, antisymmetry
/// of `Dk`, and `G·1 = 0`, on random functions from a fixed seed.
pub fn operator_checks(study: &Study, eps: f64, seed: u64) -> Result<Vec<OperatorCheck>> {
    let r = study.resolvent(eps, seed)?;
    let grid = study.grid;
    let n = grid.len();
    let count = study.config.checks.random_functions.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut random = || -> Vec<f64> { (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let norm = |v: &[f64]| dot(v, v).sqrt();
    let a0 = &r.a0;

    let ones = vec![1.0; n];
    let a1 = a0.apply_vec(&ones);
    let constant_defect = a1.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    // operator norm estimate for the symmetry scale
    let mut v = random();
    let mut op_norm = 0.0;
    for _ in 0..20 {
        let w = a0.apply_vec(&v);
        op_norm = norm(&w) / norm(&v);
        let s = 1.0 / norm(&w);
        v = w.iter().map(|x| x * s).collect();
    }
    let mut sym = 0.0f64;
    let mut psd = f64::INFINITY;
    let mut anti = 0.0f64;
    let dk = r.drift(f64::INFINITY)?;
    for _ in 0..count {
        let g = random();
        let h = random();
        let ag = a0.apply_vec(&g);
        let ah = a0.apply_vec(&h);
        let defect = (dot(&ag, &h) - dot(&g, &ah)).abs() / (op_norm * norm(&g) * norm(&h));
        sym = sym.max(defect);
        psd = psd.min(-dot(&ag, &g));
        if let Some(d) = &dk {
            let dg = d.apply_vec(&g);
            let denom = norm(&dg) * norm(&g);
            if denom > 0.0 {
                anti = anti.max(dot(&dg, &g).abs() / denom);
            }
        }
    }
    let mut g1 = vec![0.0; n];
    crate::discretize::apply_viscosity(&grid, &ones, &mut g1);
    let visc = g1.iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let mut out = vec![
        OperatorCheck {
            name: "a0_constants",
            value: constant_defect,
            bound: 0.0,
            passed: constant_defect == 0.0,
        },
        OperatorCheck {
            name: "a0_symmetry",
            value: sym,
            bound: 1e-12,
            passed: sym <= 1e-12,
        },
        OperatorCheck {
            name: "a0_semidefinite",
            value: psd,
            bound: 0.0,
            passed: psd >= 0.0,
        },
        OperatorCheck {
            name: "viscosity_constants",
            value: visc,
            bound: 0.0,
            passed: visc == 0.0,
        },
    ];
    if dk.is_some() {
        out.push(OperatorCheck {
            name: "drift_antisymmetry",
            value: anti,
            bound: 1e-12,
            passed: anti <= 1e-12,
        });
    }
    Ok(out)
}

/// Relative `L²` gap between the Fourier and matched limit solutions.
pub fn route_agreement(study: &Study) -> Result<f64> {
    let fourier = solve_limit_fourier(&study.model, study.config.lambda, &study.forcing)?;
    Ok(fourier.sub(&study.ubar).norm() / study.ubar.norm())
}

/// Divergence check on one cell: passes when the discrete divergence is at
/// roundoff level or decays at second order under refinement.
pub fn divergence_check(env: &SampledEnvironment) -> Result<(f64, f64, bool)> {
    let coarse = check_divergence_free(env, 64, f64::INFINITY)?;
    let fine = check_divergence_free(env, 128, f64::INFINITY)?;
    let sup = env.stream_sup().max(1.0);
    let roundoff = fine.max_divergence <= 1e-9 * sup;
    let ratio = coarse.max_divergence / fine.max_divergence;
    Ok((fine.max_divergence, ratio, roundoff || ratio >= 3.5))
}

fn check(name: &str, mandatory: bool, passed: bool, detail: String) -> SuiteCheck {
    SuiteCheck {
        name: name.to_string(),
        mandatory,
        passed,
        detail,
    }
}

/// Runs every check of a configuration and writes the per-check files to `out`.
pub fn run_full_suite(config: &ExperimentConfig, out: Option<&Path>) -> Result<SuiteSummary> {
    let mut checks = Vec::new();
    let mut values: Vec<(String, String)> = Vec::new();
    let spec = config.environment_spec()?;

    // environment
    let first_seed = config.seeds[0];
    let env = sample_environment(&spec, first_seed)?;
    checks.push(check("environment_valid", true, true, format!("seed {first_seed} sampled")));
    let drift = spec.has_drift();
    if drift {
        let (maxdiv, ratio, ok) = divergence_check(&env)?;
        values.push(("divergence.max".into(), output::fmt(maxdiv)));
        values.push(("divergence.refinement_ratio".into(), output::fmt(ratio)));
        checks.push(check("divergence_free", true, ok, format!("max {maxdiv:e}, ratio {ratio:.3}")));
        let reg = check_drift_regularity(&env)?;
        values.push(("drift.sup".into(), output::fmt(reg.sup_drift)));
        values.push(("drift.seminorm".into(), output::fmt(reg.seminorm)));
        checks.push(check(
            "drift_regularity",
            spec.alpha >= 1.0,
            reg.finite && spec.alpha >= 1.0,
            format!("sup |b| {:e}, seminorm {:e}", reg.sup_drift, reg.seminorm),
        ));
    }
    let grid = config.grid(spec.dimension)?;
    for &eps in &config.eps {
        check_commensurate(&env, eps, &grid)?;
    }

    let study = Study::new(config.clone())?;

    // operators
    let operators = operator_checks(&study, config.eps[0], first_seed)?;
    for c in &operators {
        values.push((format!("operator.{}", c.name), output::fmt(c.value)));
        checks.push(check(c.name, true, c.passed, format!("{:e} against {:e}", c.value, c.bound)));
    }

    // limit routes
    let gap = route_agreement(&study)?;
    values.push(("limit.c1".into(), output::fmt(study.model.c1)));
    values.push(("limit.coefficient".into(), output::fmt(study.model.coefficient)));
    values.push(("limit.route_gap".into(), output::fmt(gap)));
    match config.checks.route_agreement_max {
        Some(max) => checks.push(check("route_agreement", true, gap <= max, format!("{gap:e} <= {max:e}"))),
        None => checks.push(check("route_agreement", false, gap.is_finite(), format!("{gap:e}"))),
    }

    // convergence (and drift pairing from the same solves)
    let rows = run_rows(&study, &config.eps, &config.seeds, drift)?;
    let convergence = ConvergenceReport::from_rows(rows.clone(), study.window.clone(), &config.eps);
    let apriori_ok = convergence.rows.iter().all(|r| r.apriori_passed);
    let worst_identity = convergence.rows.iter().map(|r| r.identity_ratio).fold(0.0, f64::max);
    checks.push(check(
        "apriori_estimates",
        true,
        apriori_ok,
        format!("{} of {} rows verified", convergence.rows.iter().filter(|r| r.apriori_passed).count(), convergence.rows.len()),
    ));
    checks.push(check(
        "energy_identity",
        true,
        apriori_ok && worst_identity <= 1.0,
        format!("worst defect/allowance {worst_identity:.3e}"),
    ));
    let dec = convergence.strictly_decreasing();
    let fin = convergence.final_median();
    values.push(("convergence.final_median".into(), output::fmt(fin)));
    values.push(("convergence.slope".into(), output::fmt(convergence.slope)));
    values.push(("convergence.failed_fraction".into(), output::fmt(convergence.failed_fraction)));
    let mut ok = convergence.valid && dec;
    let mut detail = format!("medians {:?}", convergence.median_errors());
    if let Some(max) = config.checks.final_error_max {
        ok = ok && fin <= max;
        detail.push_str(&format!(", final {fin:e} <= {max:e}"));
    }
    checks.push(check("convergence", true, ok, detail));

    // spatial averaging
    let bw = config.birkhoff.window.clone().unwrap_or_else(|| study.window.clone());
    let bmax = config.birkhoff.max_final_error.unwrap_or(config.checks.birkhoff_final_max);
    let birkhoff = run_birkhoff(&spec, &config.birkhoff_eps(), &bw, &config.seeds, bmax)?;
    values.push(("birkhoff.slope".into(), output::fmt(birkhoff.slope)));
    values.push((
        "birkhoff.final_error".into(),
        output::fmt(birkhoff.medians.last().map_or(f64::NAN, |m| m.1)),
    ));
    checks.push(check("birkhoff", true, birkhoff.passed, format!("slope {:.3}", birkhoff.slope)));

    let drift_decay = if drift {
        let report = DriftDecayReport::from_rows(rows, &config.eps);
        values.push(("drift_decay.slope".into(), output::fmt(report.slope)));
        checks.push(check(
            "drift_decay",
            true,
            report.passed,
            format!("P {:?}", report.medians.iter().map(|m| m.1).collect::<Vec<_>>()),
        ));
        Some(report)
    } else {
        None
    };

    let summary = SuiteSummary {
        checks,
        values,
        convergence: Some(convergence),
        birkhoff: Some(birkhoff),
        drift_decay,
        operators,
    };
    if let Some(dir) = out {
        output::write_suite(&summary, dir)?;
    }
    Ok(summary)
}
