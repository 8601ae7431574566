use rnsplab_core::experiments::{phase_diagram, ExperimentConfig};

fn config(grid_m: &[usize], grid_s: &[usize], trials: usize) -> ExperimentConfig {
    let text = serde_json::json!({
        "kind": "phase",
        "ensemble": {
            "m": 20, "n": 40,
            "seed": {"kind": "zero"},
            "noise": {"default": {"kind": "gaussian", "params": {"mean": 0.0, "sd": 1.0}}}
        },
        "params": {"s": 2, "rho": 0.5, "tau": 1.0},
        "grids": {"m": grid_m, "s": grid_s},
        "trials": trials,
        "seed": 7
    });
    ExperimentConfig::from_json(&text.to_string()).unwrap()
}

#[test]
fn one_row_per_grid_point_in_grid_order() {
    let d = phase_diagram(&config(&[8, 16, 24], &[1, 3], 5)).unwrap();
    let keys: Vec<(usize, usize)> = d.rows.iter().map(|r| (r.m, r.s)).collect();
    assert_eq!(keys, vec![(8, 1), (8, 3), (16, 1), (16, 3), (24, 1), (24, 3)]);
    for r in &d.rows {
        assert_eq!(r.trials, 5);
        assert!((0.0..=1.0).contains(&r.recovery_rate));
        assert_eq!(r.recovery_rate, r.successes as f64 / r.trials as f64);
    }
}

#[test]
fn more_measurements_do_not_hurt_gaussian_recovery() {
    let d = phase_diagram(&config(&[6, 20], &[3], 200)).unwrap();
    assert!(d.rows[1].recovery_rate >= d.rows[0].recovery_rate, "{:?}", d.rows);
    assert!(d.rows[1].recovery_rate >= 0.9);
}
