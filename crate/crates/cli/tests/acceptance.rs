//! Acceptance suite: runs every criterion and prints one PASS/FAIL line each.
//!
//! Built with `harness = false`, so the lines show up in plain `cargo test`
//! output; the process exits nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rnsplab_core::bounds::{m_main, optimal_m_reference, BoundInputs};
use rnsplab_core::certify::{combinations, sign_patterns, support_ratio_lp, verify_nsp, NspMode};
use rnsplab_core::distributions::{DistributionSpec, MomentProfile};
use rnsplab_core::ensembles::{ensemble_profile, EnsembleSpec, SeedMatrixSpec};
use rnsplab_core::experiments::{phase_diagram, ExperimentConfig};
use rnsplab_core::matrix::{norm1, norm2, DenseMatrix};
use rnsplab_core::mendelson::{
    check_moment_identities, check_scaling_laws, check_soft_indicator, default_eps, estimate_q, mendelson_sweep,
};
use rnsplab_core::solvers::{
    basis_pursuit_denoise, basis_pursuit_exact, basis_pursuit_lp, exact_recovery, solve_lp, BpStatus, LpProblem,
    LpStatus,
};
use rnsplab_core::sparse::{sample_sparse_signal, RnspParams, SparseVector};
use rnsplab_core::RngStream;

type Outcome = (bool, String);

fn gaussian_matrix(m: usize, n: usize, stream: &RngStream) -> DenseMatrix {
    EnsembleSpec::gaussian(m, n).sample(stream).expect("gaussian ensemble samples")
}

fn uniform(rng: &mut RngStream) -> f64 {
    DistributionSpec::Uniform { lo: 0.0, hi: 1.0 }.sample(rng)
}

fn c1_nsp_oracle() -> Outcome {
    let root = RngStream::new(101, 0);
    let (mut agree, mut disagree, mut excluded) = (0usize, 0usize, 0usize);
    for k in 0..100u64 {
        let a = gaussian_matrix(6, 12, &root.split(k));
        for s in [1, 2] {
            let cert = verify_nsp(&a, s, NspMode::Nsp).unwrap();
            if (cert.max_ratio - 1.0).abs() <= 1e-6 {
                excluded += 1;
                continue;
            }
            let mut all_recovered = true;
            for support in combinations(12, s) {
                for sign in sign_patterns(s) {
                    let entries = support.iter().zip(&sign).map(|(&j, &g)| (j, g as f64)).collect();
                    let x = SparseVector::new(12, entries).unwrap();
                    all_recovered &= exact_recovery(&a, &x, 1e-6).unwrap();
                }
            }
            if all_recovered == cert.holds {
                agree += 1;
            } else {
                disagree += 1;
            }
        }
    }
    (
        disagree == 0,
        format!("{agree} agreements, {disagree} disagreements, {excluded} boundary instances excluded"),
    )
}

fn c2_smoothed_headline() -> Outcome {
    let (m, n) = (40, 120);
    let seed = DenseMatrix::filled(m, n, 1.0);
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    v[1] = -1.0;
    let in_kernel = norm2(&seed.matvec(&v)) == 0.0;
    // S = {0}: ‖v_S‖1 = 1 is not below ‖v_{S^c}‖1 = 1
    let witness_fails = in_kernel && v[0].abs() >= norm1(&v[1..]);
    let cert = verify_nsp(&seed, 1, NspMode::Nsp).unwrap();

    let text = r#"{
        "kind": "phase",
        "ensemble": {"m": 40, "n": 120, "seed": {"kind": "constant", "params": {"c": 1.0}},
                     "noise": {"default": {"kind": "gaussian", "params": {"mean": 0.0, "sd": 1.0}}}},
        "params": {"s": 3, "rho": 0.5, "tau": 1.0},
        "grids": {"m": [40], "s": [3]},
        "trials": 200,
        "seed": 2
    }"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    let row = &phase_diagram(&cfg).unwrap().rows[0];
    let ok = witness_fails && !cert.holds && row.recovery_rate >= 0.95;
    (
        ok,
        format!(
            "seed alone: kernel witness fails = {witness_fails}, certificate ratio {}; perturbed: {}/{} recovered ({:.3})",
            cert.max_ratio, row.successes, row.trials, row.recovery_rate
        ),
    )
}

fn c3_small_ball() -> Outcome {
    let laws = [
        ("gaussian", DistributionSpec::standard_gaussian(), 3.0 / 32.0),
        ("rademacher", DistributionSpec::Rademacher { scale: 1.0 }, 9.0 / 64.0),
        (
            "laplace",
            DistributionSpec::Laplace {
                mean: 0.0,
                scale: std::f64::consts::FRAC_1_SQRT_2,
            },
            1.0 / 16.0,
        ),
        (
            "weibull(1.5)",
            DistributionSpec::SymmetricWeibull {
                shape: 2.0 / 3.0,
                scale: 1.0 / 6f64.sqrt(),
            },
            9.0 / (16.0 * 23.0),
        ),
    ];
    let params = RnspParams::new(2, 0.5, 1.0).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, (name, law, oracle)) in laws.iter().enumerate() {
        let ens = EnsembleSpec::iid(5, 20, SeedMatrixSpec::Zero, *law);
        let profile = ensemble_profile(&ens).unwrap();
        let eps = default_eps(&profile);
        let r = estimate_q(&ens, &params, eps, 50, 10_000, &RngStream::new(303, k as u64)).unwrap();
        let lb = r.analytic_lb.unwrap();
        let pass = (profile.mu2 - 1.0).abs() < 1e-12
            && (lb - oracle).abs() < 1e-12
            && r.empirical_q + r.ci_halfwidth >= *oracle;
        ok &= pass;
        parts.push(format!("{name}: Q={:.4}+{:.4} vs {:.4}", r.empirical_q, r.ci_halfwidth, oracle));
    }
    (ok, parts.join("; "))
}

/// A centered law of the given family with variance `var`.
fn centered_law(family: usize, var: f64) -> DistributionSpec {
    let sd = var.sqrt();
    match family {
        0 => DistributionSpec::Gaussian { mean: 0.0, sd },
        1 => DistributionSpec::Rademacher { scale: sd },
        2 => DistributionSpec::Uniform {
            lo: -(3.0 * var).sqrt(),
            hi: (3.0 * var).sqrt(),
        },
        3 => DistributionSpec::Laplace {
            mean: 0.0,
            scale: (var / 2.0).sqrt(),
        },
        // shape 2/3: E|X|^2 = scale^2 Gamma(4) = 6 scale^2
        4 => DistributionSpec::SymmetricWeibull {
            shape: 2.0 / 3.0,
            scale: (var / 6.0).sqrt(),
        },
        // shape 1: E|X|^2 = 2 scale^2
        _ => DistributionSpec::SymmetricWeibull {
            shape: 1.0,
            scale: (var / 2.0).sqrt(),
        },
    }
}

fn c4_moment_identities() -> Outcome {
    let root = RngStream::new(404, 0);
    let thetas = [0.1, 0.25, 0.5, 0.75, 0.9];
    let mut violations = 0;
    let mut checks = 0;
    for k in 0..20u64 {
        let mut rng = root.split(k);
        let dim = 2 + (uniform(&mut rng) * 9.0) as usize;
        let use_bernoulli = k % 3 == 0;
        let p = 0.1 + 0.8 * uniform(&mut rng);
        let var = if use_bernoulli { p * (1.0 - p) } else { 0.5 + 1.5 * uniform(&mut rng) };
        let laws: Vec<DistributionSpec> = (0..dim)
            .map(|j| {
                if use_bernoulli && j % 2 == 0 {
                    DistributionSpec::Bernoulli { p, centered: true }
                } else {
                    centered_law((uniform(&mut rng) * 6.0) as usize, var)
                }
            })
            .collect();
        let gauss = DistributionSpec::standard_gaussian();
        let mut z: Vec<f64> = (0..dim).map(|_| gauss.sample(&mut rng)).collect();
        let len = norm2(&z);
        z.iter_mut().for_each(|v| *v /= len);
        let r = check_moment_identities(&laws, &z, &thetas, 20_000, &root.split(1000 + k)).unwrap();
        checks += 2 + r.paley_zygmund.len();
        violations += [r.second_moment.ok, r.fourth_moment.ok]
            .iter()
            .chain(r.paley_zygmund.iter().map(|c| &c.ok))
            .filter(|ok| !**ok)
            .count();
    }
    (violations == 0, format!("{checks} checks over 20 configurations, {violations} violations"))
}

fn c5_rearranged_scaling() -> Outcome {
    let s_grid = [1, 2, 4, 8, 16, 32, 64];
    let r = check_scaling_laws(
        &DistributionSpec::standard_gaussian(),
        4096,
        &s_grid,
        1,
        &[],
        2000,
        &RngStream::new(505, 0),
    )
    .unwrap();
    let ratios: Vec<String> = r.rearranged.iter().map(|row| format!("{:.3}", row.ratio)).collect();
    (
        r.rearranged_spread <= 1.6,
        format!("max/min = {:.4}; ratios [{}]", r.rearranged_spread, ratios.join(", ")),
    )
}

fn c6_mendelson_envelope() -> Outcome {
    let ens = EnsembleSpec::gaussian(100, 200);
    let params = RnspParams::new(4, 0.5, 1.0).unwrap();
    let eps = default_eps(&ensemble_profile(&ens).unwrap());
    let reports = mendelson_sweep(&ens, &params, eps, &[1.0, 2.0, 3.0], 500, 50, &RngStream::new(606, 0)).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for r in &reports {
        let envelope = (-r.t * r.t / 2.0).exp();
        ok &= r.violation_freq <= envelope + 0.02;
        parts.push(format!(
            "t={}: violations {:.3} <= {:.3} (rhs {:.3}), deviation exceedance {:.3}",
            r.t,
            r.violation_freq,
            envelope + 0.02,
            r.rhs,
            r.mcdiarmid_exceed_freq
        ));
    }
    (ok, parts.join("; "))
}

fn c7_soft_indicator() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for eps in [0.1, 1.0, 10.0] {
        let r = check_soft_indicator(eps, 100_000).unwrap();
        ok &= r.points == 100_000 && r.sandwich_violations == 0 && r.contraction_violations == 0;
        parts.push(format!(
            "eps={eps}: {} sandwich / {} contraction violations",
            r.sandwich_violations, r.contraction_violations
        ));
    }
    (ok, parts.join("; "))
}

fn c8_bound_regression() -> Outcome {
    // (2 (1 + 2 e sqrt(4 ln(256 e))))^2, evaluated at 40 digits
    const ORACLE: f64 = 3321.750240526869146158315528809740629527;
    // Rademacher-like moments: K = mu2^2 + mu4 = 2
    let profile = MomentProfile::new(1.0, 0.0, 1.0, 1.0, 0.5, 8).unwrap();
    assert_eq!(profile.k, 2.0);
    let got = m_main(&BoundInputs::new(4, 1024, 0.5, 1.0, profile.clone())).unwrap().m_required;
    let rel = (got - ORACLE).abs() / ORACLE;
    let mut ok = rel <= 1e-10;
    let mut tails = Vec::new();
    for alpha in [0.5, 1.0] {
        let mut p = profile.clone();
        p.alpha = alpha;
        // limit of m_main / (s ln(n/s)) as n grows with s = sqrt(n)
        let limit = p.k * p.k / p.mu2.powi(5) / 0.25 * (4.0 * alpha).exp() * p.kappa * p.kappa;
        let ratios: Vec<f64> = (8..=16)
            .map(|e| {
                let n = 1usize << e;
                let s = (n as f64).sqrt().floor() as usize;
                let m = m_main(&BoundInputs::new(s, n, 0.5, 1.0, p.clone())).unwrap().m_required;
                m / optimal_m_reference(s, n as f64).unwrap()
            })
            .collect();
        let bounded = ratios.iter().all(|r| *r <= 1.5 * limit);
        let nonincreasing = ratios.windows(2).all(|w| w[1] <= w[0]);
        ok &= bounded && nonincreasing;
        tails.push(format!(
            "alpha={alpha}: ratio {:.1} -> {:.1}, limit {:.1}",
            ratios[0],
            ratios[ratios.len() - 1],
            limit
        ));
    }
    (ok, format!("m_main = {got} (rel err {rel:.1e}); {}", tails.join("; ")))
}

fn lp_gap(lp: &LpProblem) -> Option<f64> {
    let sol = solve_lp(lp).ok()?;
    if sol.status != LpStatus::Optimal {
        return None;
    }
    lp.duality_gap(&sol, 1e-7)
}

fn c9_solver_soundness() -> Outcome {
    let root = RngStream::new(909, 0);
    let mut worst_gap: f64 = 0.0;
    let mut lps = 0;
    let mut bad = 0;
    for k in 0..20u64 {
        let a = gaussian_matrix(6, 12, &root.split(k));
        for s in [1, 2] {
            for support in combinations(12, s) {
                for sign in sign_patterns(s) {
                    lps += 1;
                    match lp_gap(&support_ratio_lp(&a, &support, &sign)) {
                        Some(g) => worst_gap = worst_gap.max(g),
                        None => bad += 1,
                    }
                }
            }
        }
    }
    let mut worst_diff: f64 = 0.0;
    let mut mismatches = 0;
    for k in 0..50u64 {
        let stream = root.split(100 + k);
        let a = gaussian_matrix(6, 12, &stream.split(0));
        let x = sample_sparse_signal(12, 2, &DistributionSpec::standard_gaussian(), &mut stream.split(1)).unwrap();
        let y = a.matvec(&x.to_dense());
        match lp_gap(&basis_pursuit_lp(&a, &y)) {
            Some(g) => worst_gap = worst_gap.max(g),
            None => bad += 1,
        }
        lps += 1;
        let exact = basis_pursuit_exact(&a, &y).unwrap();
        let denoised = basis_pursuit_denoise(&a, &y, 0.0);
        match denoised {
            Ok(d) if d.status == BpStatus::Optimal && exact.status == BpStatus::Optimal => {
                let diff = d.xhat.iter().zip(&exact.xhat).fold(0.0_f64, |acc, (u, v)| acc.max((u - v).abs()));
                worst_diff = worst_diff.max(diff);
                if diff > 1e-6 {
                    mismatches += 1;
                }
            }
            other => {
                eprintln!("instance {k}: exact {:?}, denoise {:?}", exact.status, other.map(|d| (d.status, d.iterations)));
                mismatches += 1
            }
        }
    }
    let ok = bad == 0 && worst_gap <= 1e-6 && mismatches == 0;
    (
        ok,
        format!(
            "{lps} LPs, {bad} without certified optimum, worst gap {worst_gap:.2e}; denoise vs exact worst {worst_diff:.2e}, {mismatches} mismatches"
        ),
    )
}

fn c10_determinism() -> Outcome {
    let kinds = ["phase", "certify", "recover", "smallball", "width", "mendelson", "lemmas", "bounds"];
    let tmp = std::env::temp_dir().join(format!("rnsplab-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&tmp);
    std::fs::create_dir_all(&tmp).unwrap();
    let mut differing = Vec::new();
    let mut files = 0;
    for kind in kinds {
        let (m, n, trials) = if kind == "mendelson" { (20, 40, 100) } else { (10, 20, 20) };
        let cfg = serde_json::json!({
            "kind": kind,
            "ensemble": {
                "m": m, "n": n,
                "seed": {"kind": "constant", "params": {"c": 1.0}},
                "noise": {"default": {"kind": "laplace", "params": {"mean": 0.0, "scale": 0.5}}}
            },
            "params": {"s": 2, "rho": 0.5, "tau": 1.0},
            "grids": {"m": [m / 2, m], "s": [1, 2, 3], "n": [n, 2 * n]},
            "trials": trials,
            "seed": 1010,
            "options": {"n_u": 10, "samples": 1000, "falsify_inits": 6, "falsify_iters": 50,
                        "rnsp_samples": 50, "noise_level": if kind == "recover" { 0.05 } else { 0.0 }}
        });
        let config = tmp.join(format!("{kind}.json"));
        std::fs::write(&config, cfg.to_string()).unwrap();
        let mut outputs = Vec::new();
        for (run, threads) in [("a", "1"), ("b", "2")] {
            let out = tmp.join(kind).join(run);
            let status = Command::new(env!("CARGO_BIN_EXE_rnsplab"))
                .args([kind, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
                .args(["--threads", threads])
                .output()
                .unwrap()
                .status;
            if !status.success() {
                differing.push(format!("{kind} exited with {status}"));
            }
            outputs.push(read_artifacts(&out));
        }
        files += outputs[0].len();
        if outputs[0].is_empty() || outputs[0] != outputs[1] {
            differing.push(kind.to_string());
        }
    }
    let _ = std::fs::remove_dir_all(&tmp);
    (
        differing.is_empty(),
        format!("8 kinds, {files} CSV/SVG files compared; differing: [{}]", differing.join(", ")),
    )
}

fn read_artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let Ok(entries) = std::fs::read_dir(dir) else {
        return Vec::new();
    };
    let mut files: Vec<(String, Vec<u8>)> = entries
        .map(|e| e.unwrap().path())
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("csv" | "svg")))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("NSP oracle equivalence", c1_nsp_oracle),
        ("smoothed-analysis headline", c2_smoothed_headline),
        ("small-ball certificate", c3_small_ball),
        ("moment-identity suite", c4_moment_identities),
        ("rearranged-norm scaling", c5_rearranged_scaling),
        ("small-ball method envelope", c6_mendelson_envelope),
        ("soft-indicator exactness", c7_soft_indicator),
        ("bound-formula regression", c8_bound_regression),
        ("solver soundness", c9_solver_soundness),
        ("determinism", c10_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (ok, detail) = check();
        if !ok {
            failed += 1;
        }
        println!(
            "C{:<2} {} {name} ({:.1}s): {detail}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
