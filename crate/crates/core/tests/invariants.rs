use std::path::Path;

use proptest::prelude::*;
use reqbandit::harness::config::{EnvironmentConfig, ExperimentConfig, PolicyConfig, PolicyKind};
use reqbandit::harness::regret::{regret_curve, time_grid, RegretCurve};
use reqbandit::harness::{emit_report, run_experiment};
use reqbandit::{run_coaf, run_oaf, Environment, EventKind, RidgeState, Trace};

fn check_trace(trace: &Trace, env: &Environment) {
    let spec = env.spec();
    let mut last_time = 0.0;
    let mut set_end = 0.0;
    let mut current = None;
    for e in &trace.events {
        assert!(e.time >= last_time, "times must be non-decreasing");
        assert!(e.time <= trace.horizon);
        match e.kind {
            EventKind::RequestDone { delay, .. } => {
                // a request starts where the previous set's last event ended
                assert!((e.time - (set_end + delay)).abs() < 1e-9);
                current = Some(e.set);
            }
            EventKind::Selection { .. } => {
                assert_eq!(current, Some(e.set));
                assert!(
                    (e.time - (last_time + 1.0)).abs() < 1e-9,
                    "selections are one unit apart"
                );
            }
        }
        last_time = e.time;
        set_end = e.time;
    }
    for record in &trace.sets {
        assert!(record.rate.abs() <= spec.eta());
        assert!(spec.constraint.contains(record.selected.len()));
    }
    let gap = trace.horizon - trace.consumed_time();
    assert!(gap > -1e-9 && gap < spec.clock_slack(), "clock gap {gap}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn oaf_traces_are_consistent(seed in 0u64..10_000, catalog_seed in 0u64..50, horizon in 1.0f64..3000.0) {
        let env = Environment::linear_preset(200, 4, catalog_seed).unwrap();
        check_trace(&run_oaf(&env, horizon, seed).unwrap(), &env);
    }

    #[test]
    fn coaf_traces_are_consistent(seed in 0u64..10_000, xi in 0.05f64..=1.0, horizon in 1.0f64..2000.0) {
        let env = Environment::linear_preset(200, 4, 1).unwrap();
        let trace = run_coaf(&env, RidgeState::new(4, 1.0, 0.05), horizon, xi, seed).unwrap();
        check_trace(&trace, &env);
    }

    #[test]
    fn mortal_traces_are_consistent(seed in 0u64..10_000, lifetime in 1.0f64..8.0) {
        let env = Environment::mortal(lifetime, vec![0.2, 0.5, 0.9]).unwrap();
        check_trace(&run_oaf(&env, 500.0, seed).unwrap(), &env);
    }

    #[test]
    fn replication_order_does_not_change_aggregates(perm_seed in 0u64..1000) {
        let env = Environment::linear_preset(100, 3, 2).unwrap();
        let traces: Vec<Trace> = (0..9).map(|s| run_oaf(&env, 300.0, s).unwrap()).collect();
        let grid = time_grid(300.0, 10);
        let base = regret_curve(&traces, 0.1, &grid).unwrap();
        let mut shuffled = traces.clone();
        let k = (perm_seed % 9) as usize;
        shuffled.rotate_left(k);
        shuffled.swap(0, (perm_seed as usize / 9) % 9);
        let other = regret_curve(&shuffled, 0.1, &grid).unwrap();
        prop_assert_eq!(&base.q05, &other.q05);
        prop_assert_eq!(&base.q95, &other.q95);
        for (a, b) in base.mean.iter().zip(&other.mean) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn preset_report_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        seed: 42,
        horizon: 4000.0,
        replications: 40,
        grid_points: 40,
        output: dir.path().to_path_buf(),
        gamma_star_iterations: 200_000,
        gamma_star: None,
        record_wall_time: false,
        environment: EnvironmentConfig::LinearPreset {
            catalog_size: 3000,
            dim: 5,
            catalog_seed: 0,
        },
        policy: PolicyConfig {
            kind: PolicyKind::CoafLinear,
            ..PolicyConfig::default()
        },
    };
    let env = config.build_environment(Path::new(".")).unwrap();
    let outcome = run_experiment(&config, Path::new(".")).unwrap();
    emit_report(&outcome, &config, &env, dir.path()).unwrap();
    let curve: &RegretCurve = &outcome.curve;
    // learning cost accumulates: the mean curve rises overall and its
    // second half grows less than its first
    let mean = &curve.mean;
    let n = mean.len();
    assert!(mean[n - 1] > mean[n / 4]);
    assert!(mean[n - 1] - mean[n / 2 - 1] < mean[n / 2 - 1] - mean[0]);
    for ((lo, m), hi) in curve.q05.iter().zip(mean).zip(&curve.q95) {
        assert!(lo <= m && m <= hi);
    }
    let text = std::fs::read_to_string(dir.path().join("regret.csv")).unwrap();
    assert_eq!(text.lines().count(), n + 1);
}
