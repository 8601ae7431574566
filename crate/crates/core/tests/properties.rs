use proptest::prelude::*;

use rnsplab_core::bounds::{failure_probability, m_main, BoundInputs};
use rnsplab_core::certify::support_ratio;
use rnsplab_core::distributions::{DistributionSpec, MomentProfile};
use rnsplab_core::ensembles::EnsembleSpec;
use rnsplab_core::experiments::{render_plot, ExperimentConfig, PlotKind};
use rnsplab_core::matrix::{norm1, DenseMatrix};
use rnsplab_core::mendelson::soft_indicator;
use rnsplab_core::solvers::{basis_pursuit_exact, solve_lp, BpStatus, LpProblem, LpStatus};
use rnsplab_core::RngStream;

fn gaussian(m: usize, n: usize, seed: u64) -> DenseMatrix {
    EnsembleSpec::gaussian(m, n).sample(&RngStream::new(seed, 0)).unwrap()
}

fn profile() -> MomentProfile {
    MomentProfile::new(1.0, 0.0, 3.0, 1.2, 0.5, 8).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feasible_bounded_lps_close_the_duality_gap(
        seed in any::<u64>(),
        m in 1usize..5,
        extra in 1usize..6,
        x0 in prop::collection::vec(0.0f64..2.0, 10),
        c in prop::collection::vec(0.0f64..3.0, 10),
    ) {
        let n = m + extra;
        let a = gaussian(m, n, seed);
        let mut lp = LpProblem::new(c[..n].to_vec());
        let b = a.matvec(&x0[..n]);
        for i in 0..m {
            lp.add_row(a.row(i).to_vec(), b[i]);
        }
        let sol = solve_lp(&lp).unwrap();
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let feasible_value: f64 = c[..n].iter().zip(&x0[..n]).map(|(u, v)| u * v).sum();
        prop_assert!(sol.objective <= feasible_value + 1e-8);
        prop_assert!(sol.x.iter().all(|v| *v >= -1e-9));
        let ax = a.matvec(&sol.x);
        for (u, v) in ax.iter().zip(&b) {
            prop_assert!((u - v).abs() <= 1e-8 * (1.0 + v.abs()));
        }
        let gap = lp.duality_gap(&sol, 1e-7).expect("dual feasible");
        prop_assert!(gap <= 1e-7 * (1.0 + sol.objective.abs()));
    }

    #[test]
    fn basis_pursuit_never_beats_the_truth_in_l1(
        seed in any::<u64>(),
        x in prop::collection::vec(-3.0f64..3.0, 8),
    ) {
        let a = gaussian(4, 8, seed);
        let r = basis_pursuit_exact(&a, &a.matvec(&x)).unwrap();
        prop_assert_eq!(r.status, BpStatus::Optimal);
        prop_assert!(r.l1() <= norm1(&x) + 1e-9);
        prop_assert!(r.residual <= 1e-8 * (1.0 + norm1(&x)));
    }

    #[test]
    fn support_ratio_is_sign_symmetric(seed in any::<u64>(), j in 0usize..7, k in 0usize..7) {
        prop_assume!(j != k);
        let a = gaussian(3, 7, seed);
        let sup = if j < k { vec![j, k] } else { vec![k, j] };
        let r1 = support_ratio(&a, &sup, &[1, -1]).unwrap();
        let r2 = support_ratio(&a, &sup, &[-1, 1]).unwrap();
        prop_assert!((r1 - r2).abs() <= 1e-9 * (1.0 + r1));
        let both = support_ratio(&a, &sup, &[1, 1]).unwrap();
        prop_assert!(both >= 0.0);
    }

    #[test]
    fn main_bound_is_monotone(s in 1usize..50, n in 100usize..5000, rho in 0.05f64..0.95) {
        let base = m_main(&BoundInputs::new(s, n, rho, 1.0, profile())).unwrap().m_required;
        let more_n = m_main(&BoundInputs::new(s, n + 1, rho, 1.0, profile())).unwrap().m_required;
        let more_s = m_main(&BoundInputs::new(s + 1, n, rho, 1.0, profile())).unwrap().m_required;
        let less_rho = m_main(&BoundInputs::new(s, n, rho * 0.9, 1.0, profile())).unwrap().m_required;
        prop_assert!(more_n >= base);
        prop_assert!(more_s >= base);
        prop_assert!(less_rho >= base);
    }

    #[test]
    fn failure_probability_decays(m in 0usize..10_000, c in 0.01f64..10.0) {
        let p = failure_probability(&profile(), m, c);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(failure_probability(&profile(), m + 1, c) <= p);
    }

    #[test]
    fn soft_indicator_sandwich_and_contraction(x in -100.0f64..100.0, y in -100.0f64..100.0, eps in 0.01f64..20.0) {
        let (px, py) = (soft_indicator(x, eps).unwrap(), soft_indicator(y, eps).unwrap());
        let ind = |v: f64, level: f64| if v.abs() >= level { 1.0 } else { 0.0 };
        prop_assert!(ind(x, 2.0 * eps) <= px && px <= ind(x, eps));
        prop_assert!((px - py).abs() <= (x - y).abs() / eps * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn heatmap_draws_every_grid_point(ms in prop::collection::btree_set(1usize..200, 1..6),
                                      ss in prop::collection::btree_set(1usize..20, 1..5)) {
        let mut csv = String::from("m,s,rate,trials\n");
        for m in &ms {
            for s in &ss {
                csv.push_str(&format!("{m},{s},{},10\n", (m * s % 11) as f64 / 10.0));
            }
        }
        let svg = render_plot(&csv, PlotKind::Heatmap).unwrap();
        prop_assert_eq!(svg.matches("<rect").count(), ms.len() * ss.len());
    }

    #[test]
    fn configs_round_trip(seed in any::<u64>(), trials in 1usize..1000, sd in 0.1f64..5.0) {
        let text = format!(r#"{{
            "kind": "recover",
            "ensemble": {{"m": 4, "n": 9, "seed": {{"kind": "constant", "params": {{"c": 0.5}}}},
                         "noise": {{"default": {{"kind": "gaussian", "params": {{"mean": 0.0, "sd": {sd}}}}}}}}},
            "params": {{"s": 2, "rho": 0.3, "tau": 2.0}},
            "grids": {{"m": [2, 4], "s": [1, 3]}},
            "trials": {trials},
            "seed": {seed}
        }}"#);
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        let again = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(&cfg, &again);
        match cfg.ensemble.noise.default {
            DistributionSpec::Gaussian { mean, sd: parsed } => {
                prop_assert_eq!(mean, 0.0);
                prop_assert!((parsed - sd).abs() <= 1e-15 * sd);
            }
            other => prop_assert!(false, "unexpected law {:?}", other),
        }
    }
}
