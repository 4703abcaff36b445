use std::fs;
use std::path::Path;
use std::sync::Arc;

use homog_core::discretize::{AssemblyOptions, KernelTable};
use homog_core::environment::{sample_environment, EnvironmentSpec};
use homog_core::grid::Grid;
use homog_core::harness::output::{
    emit_plotdata, fmt, summary_entries, write_birkhoff, write_convergence, write_convergence_summary,
    write_drift_decay, write_key_values, write_plot,
};
use homog_core::harness::{
    parse_seed_list, route_agreement, run_birkhoff, run_convergence, run_drift_decay, run_full_suite,
    ExperimentConfig, Study,
};
use homog_core::limit::solve_limit_fourier;
use homog_core::solver::{verify_apriori, Resolvent, ResolventProblem};
use homog_core::{Error, Result};

use crate::{out_dir, Common, SolveArgs};

type Entries = Vec<(String, String)>;

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(w) = common.workers {
        cfg.workers = w;
    }
    if let Some(s) = &common.seed_list {
        cfg = cfg.with_seeds(parse_seed_list(s)?)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn prepare(common: &Common, cfg: &ExperimentConfig) -> Result<std::path::PathBuf> {
    let dir = out_dir(common, cfg.out.as_deref());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn report(path: &Path, entries: &Entries) -> Result<()> {
    for (k, v) in entries {
        println!("{k} = {v}");
    }
    write_key_values(path, entries)
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn coordinate_header(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("x{i}")).collect()
}

pub fn dump_env(common: &Common, seed: Option<u64>, n: usize) -> Result<bool> {
    let (spec, cfg_seed, out) = match ExperimentConfig::load(&common.config) {
        Ok(cfg) => (cfg.environment_spec()?, cfg.seeds[0], cfg.out.clone()),
        Err(first) => {
            let text = fs::read_to_string(&common.config)?;
            let spec: EnvironmentSpec = toml::from_str(&text).map_err(|_| first)?;
            spec.validate()?;
            (spec, 0, None)
        }
    };
    let seed = match (&common.seed_list, seed) {
        (_, Some(s)) => s,
        (Some(list), None) => *parse_seed_list(list)?.first().ok_or_else(|| Error::Config("empty seed list".into()))?,
        (None, None) => cfg_seed,
    };
    let dir = out_dir(common, out.as_deref());
    fs::create_dir_all(&dir)?;
    let env = sample_environment(&spec, seed)?;
    let d = spec.dimension;
    let grid = Grid::new(d, spec.period, n).map_err(|_| Error::Config("n must be even and at least 8".into()))?;

    let mut w = csv::Writer::from_path(dir.join("env.csv"))?;
    let mut header = coordinate_header(d);
    header.push("mu".into());
    for j in 0..d {
        for l in 0..d {
            header.push(format!("h{j}{l}"));
        }
    }
    for j in 0..d {
        header.push(format!("b{j}"));
    }
    w.write_record(&header)?;
    for i in 0..grid.len() {
        let x = grid.point(i);
        let x = &x[..d];
        let mut rec: Vec<String> = x.iter().map(|v| fmt(*v)).collect();
        rec.push(fmt(env.mu_at(x)));
        let h = env.stream_at(x);
        for row in h.iter().take(d) {
            rec.extend(row.iter().take(d).map(|v| fmt(*v)));
        }
        let b = env.drift_at(x)?;
        rec.extend(b.iter().take(d).map(|v| fmt(*v)));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let mut entries = vec![kv("seed", seed), kv("dimension", d), kv("alpha", fmt(spec.alpha))];
    for (i, s) in env.shift.iter().enumerate() {
        entries.push(kv(&format!("shift.{i}"), fmt(*s)));
    }
    entries.push(kv("mean_mu", fmt(spec.cell_average(1)?)));
    entries.push(kv("mean_mu_sq", fmt(spec.cell_average(2)?)));
    entries.push(kv("stream_sup", fmt(env.stream_sup())));
    report(&dir.join("env.txt"), &entries)?;
    Ok(true)
}

pub fn solve(common: &Common, args: &SolveArgs) -> Result<bool> {
    let mut cfg = load(common)?;
    if let Some(n) = args.n {
        cfg.grid.n = n;
    }
    if let Some(l) = args.lambda {
        cfg.lambda = l;
    }
    let s = &mut cfg.schedule;
    if let Some(v) = args.theta0 {
        s.theta_0 = v;
    }
    if let Some(v) = args.k0 {
        s.k_0 = v;
    }
    if let Some(v) = args.max_stages {
        s.max_stages = v;
    }
    if let Some(v) = args.stage_tol {
        s.stage_tol = v;
    }
    if let Some(v) = args.linear_tol {
        s.linear_tol = v;
    }
    cfg.validate()?;
    let dir = prepare(common, &cfg)?;
    let spec = cfg.environment_spec()?;
    let grid = cfg.grid(spec.dimension)?;
    let eps = args.eps.unwrap_or(*cfg.eps.last().expect("validated ladder"));
    let seed = args.seed.unwrap_or(cfg.seeds[0]);
    let env = sample_environment(&spec, seed)?;
    let problem = ResolventProblem::new(cfg.lambda, cfg.forcing.sample(grid), eps, env)?;
    let kernel = Arc::new(KernelTable::new(grid, spec.alpha, cfg.images)?);
    let r = Resolvent::new(problem, kernel, &AssemblyOptions::default())?;
    let sol = r.solve(&cfg.schedule)?;
    let checks = verify_apriori(&sol, &r.problem, cfg.schedule.linear_tol);

    let mut w = csv::Writer::from_path(dir.join("u.csv"))?;
    let mut header = coordinate_header(grid.d);
    header.push("u".into());
    w.write_record(&header)?;
    for (i, v) in sol.u.values.iter().enumerate() {
        let x = grid.point(i);
        let mut rec: Vec<String> = x[..grid.d].iter().map(|c| fmt(*c)).collect();
        rec.push(fmt(*v));
        w.write_record(&rec)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("stages.csv"))?;
    w.write_record(["stage", "theta", "k", "iterations", "residual", "identity_defect", "identity_allowance"])?;
    for (m, st) in sol.diagnostics.stages.iter().enumerate() {
        w.write_record([
            m.to_string(),
            fmt(st.theta),
            fmt(st.k),
            st.iterations.to_string(),
            fmt(st.residual),
            fmt(st.identity_defect),
            fmt(st.identity_allowance),
        ])?;
    }
    w.flush()?;

    let identity_ok = sol.diagnostics.stages.iter().all(|s| s.identity_defect <= s.identity_allowance);
    let d = &sol.diagnostics;
    let mut entries = vec![
        kv("eps", fmt(eps)),
        kv("seed", seed),
        kv("lambda", fmt(cfg.lambda)),
        kv("n", grid.n),
        kv("regime", format!("{:?}", d.regime)),
        kv("stages_used", d.stages_used),
        kv("theta", fmt(d.theta)),
        kv("k", fmt(d.k)),
        kv("energy", fmt(d.energy)),
        kv("viscosity_energy", fmt(d.viscosity_energy)),
        kv("l2_norm", fmt(d.l2_norm)),
        kv("linear_residual", fmt(d.linear_residual)),
    ];
    for c in &checks.checks {
        entries.push(kv(&format!("check.{}", c.name.replace(' ', "_")), if c.passed { "pass" } else { "fail" }));
    }
    entries.push(kv("check.stage_identities", if identity_ok { "pass" } else { "fail" }));
    report(&dir.join("solve.txt"), &entries)?;
    Ok(checks.passed() && identity_ok)
}

pub fn limit(common: &Common, lambda: Option<f64>, n: Option<usize>) -> Result<bool> {
    let mut cfg = load(common)?;
    if let Some(l) = lambda {
        cfg.lambda = l;
    }
    if let Some(n) = n {
        cfg.grid.n = n;
    }
    cfg.validate()?;
    let dir = prepare(common, &cfg)?;
    let study = Study::new(cfg.clone())?;
    let fourier = solve_limit_fourier(&study.model, cfg.lambda, &study.forcing)?;
    let mut w = csv::Writer::from_path(dir.join("limit.csv"))?;
    let d = study.grid.d;
    let mut header = coordinate_header(d);
    header.extend(["fourier".to_string(), "matched".to_string()]);
    w.write_record(&header)?;
    for i in 0..study.grid.len() {
        let x = study.grid.point(i);
        let mut rec: Vec<String> = x[..d].iter().map(|c| fmt(*c)).collect();
        rec.push(fmt(fourier.values[i]));
        rec.push(fmt(study.ubar.values[i]));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let gap = route_agreement(&study)?;
    let passed = cfg.checks.route_agreement_max.is_none_or(|m| gap <= m);
    let entries = vec![
        kv("c1", fmt(study.model.c1)),
        kv("c0", fmt(study.model.c0)),
        kv("coefficient", fmt(study.model.coefficient)),
        kv("lambda", fmt(cfg.lambda)),
        kv("route_gap", fmt(gap)),
        kv("check.route_agreement", if passed { "pass" } else { "fail" }),
    ];
    report(&dir.join("limit.txt"), &entries)?;
    Ok(passed)
}

pub fn converge(common: &Common) -> Result<bool> {
    let cfg = load(common)?;
    let dir = prepare(common, &cfg)?;
    let rep = run_convergence(&cfg)?;
    write_convergence(&rep, &dir.join("convergence.csv"))?;
    write_convergence_summary(&rep, &dir.join("convergence_summary.csv"))?;
    let pts: Vec<(f64, f64)> = rep.medians.iter().map(|m| (m.eps, m.median_rel_error)).collect();
    write_plot(&dir.join("convergence.dat"), "eps median_rel_error", &pts)?;
    let dec = rep.strictly_decreasing();
    let fin = rep.final_median();
    let bound_ok = cfg.checks.final_error_max.is_none_or(|m| fin <= m);
    let passed = rep.valid && dec && bound_ok;
    let entries = vec![
        kv("rows", rep.rows.len()),
        kv("failed_fraction", fmt(rep.failed_fraction)),
        kv("valid", rep.valid),
        kv("strictly_decreasing", dec),
        kv("slope", fmt(rep.slope)),
        kv("final_median", fmt(fin)),
        kv("check.convergence", if passed { "pass" } else { "fail" }),
    ];
    report(&dir.join("converge.txt"), &entries)?;
    Ok(passed)
}

pub fn birkhoff(common: &Common) -> Result<bool> {
    let cfg = load(common)?;
    let dir = prepare(common, &cfg)?;
    let spec = cfg.environment_spec()?;
    let grid = cfg.grid(spec.dimension)?;
    let window = cfg.birkhoff.window.clone().unwrap_or_else(|| cfg.window(&grid));
    let max = cfg.birkhoff.max_final_error.unwrap_or(cfg.checks.birkhoff_final_max);
    let rep = run_birkhoff(&spec, &cfg.birkhoff_eps(), &window, &cfg.seeds, max)?;
    write_birkhoff(&rep, &dir.join("birkhoff.csv"))?;
    write_plot(&dir.join("birkhoff.dat"), "eps median_rel_error", &rep.medians)?;
    let entries = vec![
        kv("target", fmt(spec.cell_average(2)?)),
        kv("slope", fmt(rep.slope)),
        kv("final_error", fmt(rep.medians.last().map_or(f64::NAN, |m| m.1))),
        kv("check.birkhoff", if rep.passed { "pass" } else { "fail" }),
    ];
    report(&dir.join("birkhoff.txt"), &entries)?;
    Ok(rep.passed)
}

pub fn drift_decay(common: &Common) -> Result<bool> {
    let cfg = load(common)?;
    let dir = prepare(common, &cfg)?;
    let rep = run_drift_decay(&cfg)?;
    write_drift_decay(&rep, &dir.join("drift_decay.csv"))?;
    write_plot(&dir.join("drift_decay.dat"), "eps median_pairing", &rep.medians)?;
    let entries = vec![
        kv("slope", fmt(rep.slope)),
        kv("strictly_decreasing", rep.strictly_decreasing),
        kv("check.drift_decay", if rep.passed { "pass" } else { "fail" }),
    ];
    report(&dir.join("drift_decay.txt"), &entries)?;
    Ok(rep.passed)
}

pub fn suite(common: &Common) -> Result<bool> {
    let cfg = load(common)?;
    let dir = prepare(common, &cfg)?;
    let summary = run_full_suite(&cfg, Some(&dir))?;
    emit_plotdata(&summary, &dir)?;
    for (k, v) in summary_entries(&summary) {
        println!("{k} = {v}");
    }
    for c in summary.checks.iter().filter(|c| !c.passed) {
        eprintln!("{}: {}", c.name, c.detail);
    }
    Ok(summary.passed())
}
