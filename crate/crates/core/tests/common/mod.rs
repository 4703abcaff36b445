#![allow(dead_code)]

use std::path::PathBuf;

use homog_core::environment::{EnvironmentSpec, Phase, Profile, TrigTerm};

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn trig_1d() -> EnvironmentSpec {
    EnvironmentSpec::new_1d(
        1.5,
        Profile::Trig {
            mean: 1.5,
            terms: vec![TrigTerm::new(0.5, &[(1, Phase::Cos)])],
        },
        1.0,
    )
}

pub fn sin_sin_stream(amplitude: f64) -> Profile {
    Profile::Trig {
        mean: 0.0,
        terms: vec![TrigTerm::new(amplitude, &[(1, Phase::Sin), (1, Phase::Sin)])],
    }
}

pub fn trig_2d_mu() -> Profile {
    Profile::Trig {
        mean: 1.5,
        terms: vec![TrigTerm::new(0.5, &[(1, Phase::Cos), (0, Phase::Cos)])],
    }
}

/// d = 2, α = 1.5, trig μ and a sin·sin stream.
pub fn drift_2d() -> EnvironmentSpec {
    EnvironmentSpec::new_2d(1.5, trig_2d_mu(), sin_sin_stream(1.0), 1.0, 1.0)
}

/// A rougher stream with several modes.
pub fn multi_mode_2d() -> EnvironmentSpec {
    let h = Profile::Trig {
        mean: 0.3,
        terms: vec![
            TrigTerm::new(0.8, &[(1, Phase::Cos), (2, Phase::Sin)]),
            TrigTerm::new(-0.4, &[(3, Phase::Sin), (1, Phase::Cos)]),
        ],
    };
    EnvironmentSpec::new_2d(1.25, trig_2d_mu(), h, 1.0, 2.0)
}

pub fn smoothed_checkerboard_1d() -> EnvironmentSpec {
    EnvironmentSpec::new_1d(
        1.75,
        Profile::SmoothedCheckerboard {
            low: 1.0,
            high: 2.0,
            cells: 2,
            width: 0.1,
        },
        1.0,
    )
}
