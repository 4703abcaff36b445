mod common;

use homog_core::discretize::AssemblyOptions;
use homog_core::environment::{sample_environment, EnvironmentSpec, Profile};
use homog_core::grid::Window;
use homog_core::harness::{
    run_birkhoff, run_convergence, run_convergence_study, run_drift_decay, ExperimentConfig, Study,
};
use homog_core::solver::{Resolvent, ResolventProblem};

fn config(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&common::configs_dir().join(name)).unwrap()
}

#[test]
fn doubling_the_window_changes_errors_by_less_than_two() {
    let mut cfg = config("converge-1d.cfg");
    cfg.grid.n = 128;
    cfg.seeds = vec![1, 2];
    let small = run_convergence(&cfg).unwrap();
    cfg.window = Some(Window {
        center: vec![2.0],
        half_width: vec![1.0],
    });
    let large = run_convergence(&cfg).unwrap();
    for (a, b) in small.rows.iter().zip(&large.rows) {
        let ratio = a.abs_error / b.abs_error;
        assert!((0.5..2.0).contains(&ratio), "eps {} seed {}: {ratio}", a.eps, a.seed);
    }
}

#[test]
fn stage_increments_are_nonincreasing_after_stage_two() {
    for name in ["smoke-1d.cfg", "converge-1d.cfg", "converge-2d.cfg", "drift-decay-2d.cfg"] {
        let cfg = config(name);
        let study = Study::new(cfg.clone()).unwrap();
        for &eps in &cfg.eps {
            let r = study.resolvent(eps, cfg.seeds[0]).unwrap();
            let sol = r.solve(&cfg.schedule).unwrap();
            let inc = &sol.diagnostics.increments;
            for w in inc.windows(2).skip(2) {
                assert!(w[1] <= w[0], "{name} eps {eps}: {inc:?}");
            }
        }
    }
}

fn constant_config() -> ExperimentConfig {
    let mut cfg = config("smoke-1d.cfg");
    cfg.environment = homog_core::harness::config::EnvironmentSource::Inline(EnvironmentSpec::new_1d(
        1.5,
        Profile::constant(2.0),
        1.0,
    ));
    cfg.eps = vec![1.0, 0.3, 0.07];
    cfg
}

#[test]
fn constant_medium_errors_vanish_at_every_scale() {
    let report = run_convergence(&constant_config()).unwrap();
    assert!(report.valid);
    for r in &report.rows {
        assert!(r.rel_error <= 1e-8, "eps {}: {}", r.eps, r.rel_error);
    }
    let spec = constant_config().environment_spec().unwrap();
    let w = Window {
        center: vec![2.0],
        half_width: vec![0.5],
    };
    let b = run_birkhoff(&spec, &[0.5, 0.25], &w, &[1, 2], 0.02).unwrap();
    assert!(b.passed && b.rows.iter().all(|r| r.rel_error < 1e-14));
}

#[test]
fn zero_drift_amplitude_gives_zero_pairing() {
    let mut cfg = config("converge-2d.cfg");
    let mut spec = cfg.environment_spec().unwrap();
    spec.drift_amplitude = 0.0;
    cfg.environment = homog_core::harness::config::EnvironmentSource::Inline(spec);
    cfg.grid.n = 48;
    cfg.eps = vec![0.25, 0.125];
    cfg.seeds = vec![1];
    let rep = run_drift_decay(&cfg).unwrap();
    assert!(rep.passed);
    assert!(rep.medians.iter().all(|m| m.1 == 0.0));
}

#[test]
fn rows_do_not_depend_on_the_worker_count() {
    let mut cfg = config("smoke-1d.cfg");
    cfg.seeds = vec![1, 2, 3];
    let one = run_convergence_study(&Study::new(cfg.clone()).unwrap()).unwrap();
    cfg.workers = 3;
    let three = run_convergence_study(&Study::new(cfg).unwrap()).unwrap();
    assert_eq!(one, three);
}

#[test]
fn empty_ladder_is_a_config_error() {
    let path = common::configs_dir().join("smoke-1d.cfg");
    let text = std::fs::read_to_string(path).unwrap().replace("eps = [0.25, 0.125]", "eps = []");
    assert!(ExperimentConfig::from_toml(&text, &common::configs_dir()).is_err());
}

#[test]
fn solver_matches_fourier_resolvent_for_unit_medium_without_drift() {
    let spec = EnvironmentSpec::new_1d(1.0, Profile::constant(1.0), 1.0);
    let mut cfg = config("smoke-1d.cfg");
    cfg.environment = homog_core::harness::config::EnvironmentSource::Inline(spec.clone());
    cfg.grid.n = 256;
    let study = Study::new(cfg.clone()).unwrap();
    let env = sample_environment(&spec, 5).unwrap();
    let problem = ResolventProblem::new(cfg.lambda, study.forcing.clone(), 0.5, env).unwrap();
    let r = Resolvent::new(problem, study.kernel.clone(), &AssemblyOptions::default()).unwrap();
    let u = r.solve(&cfg.schedule).unwrap().u;
    let fourier = homog_core::limit::solve_limit_fourier(&study.model, cfg.lambda, &study.forcing).unwrap();
    let gap = u.sub(&fourier).norm() / fourier.norm();
    assert!(gap < 0.01, "{gap}");
}
