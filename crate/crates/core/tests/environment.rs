mod common;

use homog_core::environment::{sample_environment, spatial_average, Window};

fn ks_uniform(mut u: Vec<f64>) -> f64 {
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| (x - i as f64 / n).abs().max(((i + 1) as f64 / n - x).abs()))
        .fold(0.0, f64::max)
}

fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn shifts_are_uniform_on_the_cell() {
    let n = 10_000;
    for spec in [common::trig_1d(), common::drift_2d()] {
        let shifts: Vec<Vec<f64>> = (0..n).map(|s| sample_environment(&spec, s as u64).unwrap().shift).collect();
        for axis in 0..spec.dimension {
            let u: Vec<f64> = shifts.iter().map(|s| s[axis] / spec.period).collect();
            assert!(u.iter().all(|&x| (0.0..1.0).contains(&x)));
            let d = ks_uniform(u);
            assert!(d < 1.628 / (n as f64).sqrt(), "KS statistic {d}");
        }
    }
}

#[test]
fn translated_environment_is_the_shifted_field() {
    let spec = common::drift_2d();
    let env = sample_environment(&spec, 11).unwrap();
    let y = [0.37, -1.21];
    let moved = env.advanced(&y);
    for &x in &[[0.1, 0.2], [0.9, 0.45], [2.5, -0.3]] {
        let xy = [x[0] + y[0], x[1] + y[1]];
        assert!((moved.mu_at(&x) - env.mu_at(&xy)).abs() < 1e-12);
        let (a, b) = (moved.stream_at(&x), env.stream_at(&xy));
        assert!((a[0][1] - b[0][1]).abs() < 1e-12);
    }
}

#[test]
fn law_of_the_field_is_translation_invariant() {
    let spec = common::trig_1d();
    let a: Vec<f64> = (0..4000u64).map(|s| sample_environment(&spec, s).unwrap().mu_at(&[0.1])).collect();
    let b: Vec<f64> = (4000..8000u64).map(|s| sample_environment(&spec, s).unwrap().mu_at(&[0.1 + 0.29])).collect();
    let d = ks_two_sample(a, b);
    // 1% critical value for two samples of 4000
    assert!(d < 1.628 * (2.0f64 / 4000.0).sqrt(), "two-sample KS statistic {d}");
}

#[test]
fn constant_medium_averages_exactly() {
    let spec = homog_core::environment::EnvironmentSpec::new_1d(
        1.5,
        homog_core::environment::Profile::constant(1.7),
        1.0,
    );
    let env = sample_environment(&spec, 0).unwrap();
    let w = Window {
        center: vec![2.0],
        half_width: vec![0.37],
    };
    for eps in [0.5, 0.1, 0.013] {
        let avg = spatial_average(&env, eps, &w, 2).unwrap();
        assert!((avg - 1.7f64 * 1.7).abs() < 1e-13);
    }
}
