#![allow(dead_code)]

use std::path::PathBuf;

use num_complex::Complex64 as C64;
use pap::config::{Run, RunConfig};
use pap::model::{LevelSystem, TargetSuperposition};

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// The shipped demo run: anharmonic 10-level model, six target levels.
pub fn demo() -> Run {
    RunConfig::load(&configs_dir().join("demo_run.json")).expect("demo config loads")
}

pub fn harmonic_model() -> LevelSystem {
    let text = std::fs::read_to_string(configs_dir().join("demo_model_harmonic.json")).unwrap();
    LevelSystem::from_json(&text).unwrap()
}

/// The demo target on another model with the same level labels.
pub fn demo_target_on(sys: &LevelSystem) -> TargetSuperposition {
    let run = demo();
    TargetSuperposition::normalized(sys, run.target.coeffs().to_vec()).unwrap()
}

/// Small hand-built system: ground plus `n` equally weighted targets.
pub fn toy_system(n: usize) -> LevelSystem {
    use pap::model::{Level, LevelKind};
    let excited = (0..n)
        .map(|k| Level {
            label: format!("e{k}"),
            energy: 2.9 + 0.04 * k as f64,
            dipole: 1.0,
            kind: LevelKind::Target,
        })
        .collect();
    LevelSystem::new(0.0, excited).unwrap()
}

pub fn uniform_target(sys: &LevelSystem) -> TargetSuperposition {
    let coeffs = sys.target_indices().iter().map(|&k| (sys.excited()[k].label.clone(), C64::new(1.0, 0.0))).collect();
    TargetSuperposition::normalized(sys, coeffs).unwrap()
}

/// Property-test settings with a fixed seed so every run checks the same cases.
pub fn cases(n: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases: n,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..Default::default()
    }
}
