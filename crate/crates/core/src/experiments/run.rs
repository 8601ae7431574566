//! Experiment driver: one runner per kind, each writing `<kind>.csv` and
//! `<kind>.json` (plus SVG plots for recovery studies) under the output path.
//!
//! Trials fan out over rayon with one stream per `(grid point, trial)` and
//! are reduced in key order, so outputs do not depend on the thread count.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use super::plot::{render_plot, PlotKind};
use crate::bounds::{failure_probability, m_classical, m_main, optimal_m_reference, BoundInputs, ClassicalVariant};
use crate::certify::{estimate_rnsp_inf, falsify_rnsp, verify_nsp, NspCertificate, NspMode, RnspProbe};
use crate::distributions::{DistributionSpec, MomentProfile};
use crate::ensembles::{ensemble_profile, f_functional, moment_range, EnsembleSpec};
use crate::error::{Error, Result};
use crate::matrix::{norm2, norm_inf, DenseMatrix};
use crate::mendelson::{
    check_max_growth, check_moment_identities, check_scaling_laws, check_soft_indicator,
    check_symmetrization, default_eps, default_t, estimate_q_with_theta, estimate_w,
    mendelson_sweep, width_bound, MaxRow, MendelsonReport,
    MomentIdentityReport, ScalingReport, SmallBallReport, SoftIndicatorReport,
    SymmetrizationReport, WidthReport,
};
use crate::rng::RngStream;
use crate::solvers::{basis_pursuit_denoise, basis_pursuit_exact, BpStatus};
use crate::sparse::{sample_sparse_signal, RnspParams};

/// Files written by one run, in writing order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunSummary {
    pub kind: ExperimentKind,
    pub files: Vec<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub m: usize,
    pub s: usize,
    /// `successes / trials`.
    pub recovery_rate: f64,
    pub trials: usize,
    pub successes: usize,
    /// Trials whose solver returned an error; counted as failures.
    pub solver_failures: usize,
    /// Mean simplex pivots over trials that produced a solve.
    pub mean_iterations: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub seed: u64,
    pub rows: Vec<PhaseRow>,
}

/// Runs `cfg`, writing its reports under `cfg.output`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let kind = cfg.kind()?;
    check_ready(cfg, kind)?;
    std::fs::create_dir_all(&cfg.output)?;
    let files = match kind {
        ExperimentKind::Phase => run_phase(cfg)?,
        ExperimentKind::Recover => run_recover(cfg)?,
        ExperimentKind::Certify => run_certify(cfg)?,
        ExperimentKind::Smallball => run_smallball(cfg)?,
        ExperimentKind::Width => run_width(cfg)?,
        ExperimentKind::Mendelson => run_mendelson(cfg)?,
        ExperimentKind::Lemmas => run_lemmas(cfg)?,
        ExperimentKind::Bounds => run_bounds(cfg)?,
    };
    Ok(RunSummary { kind, files })
}

/// Configuration checks that depend on the kind; failures are schema errors.
fn check_ready(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<()> {
    for (k, &m) in cfg.grids.m.iter().enumerate() {
        cfg.ensemble
            .with_rows(m)
            .validate()
            .map_err(|e| Error::schema(format!("grids.m[{k}]"), e.to_string()))?;
    }
    let degenerate = ensemble_profile(&cfg.ensemble).is_err();
    match kind {
        ExperimentKind::Mendelson if cfg.trials < 100 => {
            Err(Error::schema("trials", "mendelson needs at least 100 trials"))
        }
        ExperimentKind::Lemmas if cfg.trials < 2 => {
            Err(Error::schema("trials", "lemmas needs at least two trials"))
        }
        ExperimentKind::Smallball | ExperimentKind::Mendelson if degenerate && cfg.options.eps.is_none() => {
            Err(Error::schema("options.eps", "required when the noise has zero variance"))
        }
        ExperimentKind::Mendelson if degenerate && cfg.options.t.is_empty() => {
            Err(Error::schema("options.t", "required when the noise has zero variance"))
        }
        ExperimentKind::Bounds | ExperimentKind::Lemmas if degenerate => {
            Err(Error::schema("ensemble.noise", "needs noise with positive variance"))
        }
        _ => Ok(()),
    }
}

fn root(cfg: &ExperimentConfig) -> RngStream {
    RngStream::new(cfg.seed, 0)
}

fn params_for(cfg: &ExperimentConfig, s: usize) -> RnspParams {
    RnspParams { s, ..cfg.params }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, num)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_io)?;
    w.write_record(header).map_err(csv_io)?;
    for r in rows {
        w.write_record(r).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes `<kind>.csv` and `<kind>.json` and returns both paths.
fn write_reports<T: Serialize>(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    header: &[&str],
    rows: &[Vec<String>],
    json: &T,
) -> Result<Vec<PathBuf>> {
    let csv_path = cfg.output.join(format!("{}.csv", kind.name()));
    let json_path = cfg.output.join(format!("{}.json", kind.name()));
    write_csv(&csv_path, header, rows)?;
    write_json(&json_path, json)?;
    Ok(vec![csv_path, json_path])
}

fn write_plot(csv_path: &Path, kind: PlotKind, name: &str) -> Result<PathBuf> {
    let svg = render_plot(&std::fs::read_to_string(csv_path)?, kind)?;
    let path = csv_path.with_file_name(name);
    std::fs::write(&path, svg)?;
    Ok(path)
}

#[derive(Clone, Copy, Debug)]
struct Trial {
    recovered: bool,
    solver_failed: bool,
    iterations: Option<usize>,
    error: f64,
}

/// One recovery trial: `A` from `split(0)`, the signal from `split(1)` and,
/// when `noise > 0`, a noise vector of norm `noise` from `split(2)`.
fn recovery_trial(
    ens: &EnsembleSpec,
    s: usize,
    signal: &DistributionSpec,
    tol: f64,
    noise: f64,
    slack: f64,
    stream: &RngStream,
) -> Result<Trial> {
    let a = ens.sample(&stream.split(0))?;
    let x = sample_sparse_signal(ens.n, s, signal, &mut stream.split(1))?.to_dense();
    let mut y = a.matvec(&x);
    let solved = if noise > 0.0 {
        let mut rng = stream.split(2);
        let dir = DistributionSpec::standard_gaussian();
        let mut e: Vec<f64> = (0..ens.m).map(|_| dir.sample(&mut rng)).collect();
        let len = norm2(&e);
        e.iter_mut().for_each(|v| *v *= noise / len);
        y.iter_mut().zip(&e).for_each(|(u, v)| *u += v);
        basis_pursuit_denoise(&a, &y, noise)
    } else {
        basis_pursuit_exact(&a, &y)
    };
    Ok(match solved {
        Ok(r) if r.status == BpStatus::Optimal => {
            let diff: Vec<f64> = r.xhat.iter().zip(&x).map(|(u, v)| u - v).collect();
            let threshold = tol * (1.0 + norm_inf(&x)) + slack * noise;
            let err = if noise > 0.0 { norm2(&diff) } else { norm_inf(&diff) };
            Trial {
                recovered: err <= threshold,
                solver_failed: false,
                iterations: Some(r.iterations),
                error: norm2(&diff),
            }
        }
        Ok(r) => Trial {
            recovered: false,
            solver_failed: false,
            iterations: Some(r.iterations),
            error: f64::INFINITY,
        },
        Err(_) => Trial {
            recovered: false,
            solver_failed: true,
            iterations: None,
            error: f64::INFINITY,
        },
    })
}

fn grid_trials(cfg: &ExperimentConfig, m: usize, s: usize, noise: f64, slack: f64) -> Result<Vec<Trial>> {
    let ens = cfg.ensemble.with_rows(m);
    let o = &cfg.options;
    let base = root(cfg);
    (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let stream = base.split_many(&[m as u64, s as u64, t as u64]);
            recovery_trial(&ens, s, &o.signal, o.tol, noise, slack, &stream)
        })
        .collect()
}

fn mean_iterations(trials: &[Trial]) -> f64 {
    let its: Vec<usize> = trials.iter().filter_map(|t| t.iterations).collect();
    if its.is_empty() {
        0.0
    } else {
        its.iter().sum::<usize>() as f64 / its.len() as f64
    }
}

/// Exact-recovery phase diagram over the `(m, s)` grid, `m` outer.
pub fn phase_diagram(cfg: &ExperimentConfig) -> Result<PhaseDiagram> {
    let mut rows = Vec::new();
    for &m in &cfg.grids.m {
        for &s in &cfg.grids.s {
            let trials = grid_trials(cfg, m, s, 0.0, 0.0)?;
            let successes = trials.iter().filter(|t| t.recovered).count();
            rows.push(PhaseRow {
                m,
                s,
                recovery_rate: successes as f64 / cfg.trials as f64,
                trials: cfg.trials,
                successes,
                solver_failures: trials.iter().filter(|t| t.solver_failed).count(),
                mean_iterations: mean_iterations(&trials),
            });
        }
    }
    Ok(PhaseDiagram { seed: cfg.seed, rows })
}

fn run_phase(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let diagram = phase_diagram(cfg)?;
    let rows: Vec<Vec<String>> = diagram
        .rows
        .iter()
        .map(|r| vec![r.m.to_string(), r.s.to_string(), num(r.recovery_rate), r.trials.to_string()])
        .collect();
    let mut files = write_reports(cfg, ExperimentKind::Phase, &["m", "s", "rate", "trials"], &rows, &diagram)?;
    files.push(write_plot(&files[0], PlotKind::Heatmap, "phase.svg")?);
    files.push(write_plot(&files[0], PlotKind::Lines, "phase_lines.svg")?);
    Ok(files)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverRow {
    pub m: usize,
    pub s: usize,
    pub rate: f64,
    pub trials: usize,
    pub noise_level: f64,
    /// Mean and max of `‖xhat - x‖2` over trials with a solution.
    pub mean_error: f64,
    pub max_error: f64,
    pub solver_failures: usize,
}

/// Stability envelope `2 (3 + rho) tau / (1 - rho)` applied to the noise level
/// when deciding success of a noisy recovery.
fn stability_factor(params: &RnspParams) -> f64 {
    2.0 * (3.0 + params.rho) * params.tau / (1.0 - params.rho)
}

fn run_recover(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let noise = cfg.options.noise_level;
    let slack = stability_factor(&cfg.params);
    let mut table = Vec::new();
    for &m in &cfg.grids.m {
        for &s in &cfg.grids.s {
            let trials = grid_trials(cfg, m, s, noise, slack)?;
            let errs: Vec<f64> = trials.iter().map(|t| t.error).filter(|e| e.is_finite()).collect();
            let successes = trials.iter().filter(|t| t.recovered).count();
            table.push(RecoverRow {
                m,
                s,
                rate: successes as f64 / cfg.trials as f64,
                trials: cfg.trials,
                noise_level: noise,
                mean_error: if errs.is_empty() { f64::NAN } else { errs.iter().sum::<f64>() / errs.len() as f64 },
                max_error: errs.iter().copied().fold(f64::NAN, f64::max),
                solver_failures: trials.iter().filter(|t| t.solver_failed).count(),
            });
        }
    }
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                r.m.to_string(),
                r.s.to_string(),
                num(r.rate),
                r.trials.to_string(),
                num(r.noise_level),
                num(r.mean_error),
                num(r.max_error),
                r.solver_failures.to_string(),
            ]
        })
        .collect();
    let header = ["m", "s", "rate", "trials", "noise_level", "mean_error", "max_error", "solver_failures"];
    let mut files = write_reports(cfg, ExperimentKind::Recover, &header, &rows, &table)?;
    files.push(write_plot(&files[0], PlotKind::Lines, "recover.svg")?);
    Ok(files)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyEntry {
    pub m: usize,
    pub n: usize,
    pub s: usize,
    /// Absent when the exhaustive search exceeds the desk-scale limit.
    pub nsp: Option<NspCertificate>,
    pub snsp: Option<NspCertificate>,
    pub rnsp_search: RnspProbe,
    pub rnsp_sampled: RnspProbe,
}

fn desk_scale(r: Result<NspCertificate>) -> Result<Option<NspCertificate>> {
    match r {
        Ok(c) => Ok(Some(c)),
        Err(Error::TooLarge(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn run_certify(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let base = root(cfg);
    let matrices: Vec<DenseMatrix> = match &cfg.options.matrix {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::schema("options.matrix", format!("cannot read {}: {e}", path.display())))?;
            vec![DenseMatrix::from_csv(&text)?]
        }
        None => cfg
            .grids
            .m
            .iter()
            .map(|&m| cfg.ensemble.with_rows(m).sample(&base.split_many(&[m as u64, 0])))
            .collect::<Result<_>>()?,
    };
    let o = &cfg.options;
    let mut entries = Vec::new();
    for a in &matrices {
        let (m, n) = (a.rows(), a.cols());
        for &s in &cfg.grids.s {
            if s > n {
                return Err(Error::schema("grids.s", format!("s = {s} exceeds the matrix width {n}")));
            }
            let params = params_for(cfg, s);
            let keys = [m as u64, s as u64];
            entries.push(CertifyEntry {
                m,
                n,
                s,
                nsp: desk_scale(verify_nsp(a, s, NspMode::Nsp))?,
                snsp: desk_scale(verify_nsp(a, s, NspMode::Snsp { rho: params.rho }))?,
                rnsp_search: falsify_rnsp(a, &params, o.falsify_inits, o.falsify_iters, &base.split_many(&[keys[0], keys[1], 1]))?,
                rnsp_sampled: estimate_rnsp_inf(a, &params, o.rnsp_samples, &base.split_many(&[keys[0], keys[1], 2]))?,
            });
        }
    }
    let cert = |c: &Option<NspCertificate>| match c {
        Some(c) => (c.holds.to_string(), num(c.max_ratio)),
        None => (String::new(), String::new()),
    };
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let (nh, nr) = cert(&e.nsp);
            let (sh, sr) = cert(&e.snsp);
            vec![
                e.m.to_string(),
                e.n.to_string(),
                e.s.to_string(),
                nh,
                nr,
                sh,
                sr,
                num(e.rnsp_search.margin),
                format!("{:?}", e.rnsp_search.certified_side),
                opt(e.rnsp_sampled.estimate),
            ]
        })
        .collect();
    let header = [
        "m",
        "n",
        "s",
        "nsp_holds",
        "nsp_max_ratio",
        "snsp_holds",
        "snsp_max_ratio",
        "rnsp_margin",
        "rnsp_side",
        "inf_estimate",
    ];
    write_reports(cfg, ExperimentKind::Certify, &header, &rows, &entries)
}

/// Small-ball level: the configured `eps`, else `sqrt(mu2) / 4`.
fn resolve_eps(cfg: &ExperimentConfig, profile: Option<&MomentProfile>) -> f64 {
    cfg.options
        .eps
        .unwrap_or_else(|| default_eps(profile.expect("checked before the run")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallBallEntry {
    pub m: usize,
    pub s: usize,
    pub report: SmallBallReport,
    /// `empirical_q + ci_halfwidth >= analytic_lb`.
    pub certified: Option<bool>,
}

fn run_smallball(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let base = root(cfg);
    let o = &cfg.options;
    let mut entries = Vec::new();
    for &m in &cfg.grids.m {
        let ens = cfg.ensemble.with_rows(m);
        let profile = ensemble_profile(&ens).ok();
        let eps = resolve_eps(cfg, profile.as_ref());
        for &s in &cfg.grids.s {
            let stream = base.split_many(&[m as u64, s as u64]);
            let report = estimate_q_with_theta(&ens, &params_for(cfg, s), eps, o.theta, o.n_u, o.samples, &stream)?;
            let certified = report.analytic_lb.map(|lb| report.empirical_q + report.ci_halfwidth >= lb);
            entries.push(SmallBallEntry { m, s, report, certified });
        }
    }
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let r = &e.report;
            vec![
                e.m.to_string(),
                e.s.to_string(),
                num(r.eps),
                num(r.threshold),
                num(r.empirical_q),
                num(r.ci_halfwidth),
                opt(r.analytic_lb),
                e.certified.map_or_else(String::new, |c| c.to_string()),
            ]
        })
        .collect();
    let header = ["m", "s", "eps", "threshold", "q_hat", "ci_halfwidth", "analytic_lb", "certified"];
    write_reports(cfg, ExperimentKind::Smallball, &header, &rows, &entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthEntry {
    pub m: usize,
    pub s: usize,
    pub report: WidthReport,
    /// Closed-form bound with constant `cw`; absent for degenerate noise.
    pub analytic_bound: Option<f64>,
}

fn run_width(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let base = root(cfg);
    let o = &cfg.options;
    let mut entries = Vec::new();
    for &m in &cfg.grids.m {
        let ens = cfg.ensemble.with_rows(m);
        let profile = ensemble_profile(&ens).ok();
        for &s in &cfg.grids.s {
            let params = params_for(cfg, s);
            let report = estimate_w(&ens, &params, cfg.trials, o.n_u, &base.split_many(&[m as u64, s as u64]))?;
            let analytic_bound = profile
                .as_ref()
                .map(|p| width_bound(p, &params, ens.n, report.f_value, o.cw));
            entries.push(WidthEntry { m, s, report, analytic_bound });
        }
    }
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let r = &e.report;
            vec![
                e.m.to_string(),
                e.s.to_string(),
                num(r.upper_proxy_mean),
                num(r.sampled_lower_mean),
                num(r.ci_halfwidth),
                num(r.upper_ci_halfwidth),
                r.pointwise_ordered.to_string(),
                num(r.x_part_mean),
                num(r.z_part_mean),
                num(r.f_value),
                opt(e.analytic_bound),
            ]
        })
        .collect();
    let header = [
        "m",
        "s",
        "upper_proxy",
        "sampled_lower",
        "ci_halfwidth",
        "upper_ci_halfwidth",
        "pointwise_ordered",
        "x_part",
        "z_part",
        "f_value",
        "analytic_bound",
    ];
    write_reports(cfg, ExperimentKind::Width, &header, &rows, &entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MendelsonEntry {
    pub m: usize,
    pub s: usize,
    pub report: MendelsonReport,
    /// `exp(-t^2 / 2)`.
    pub envelope: f64,
}

fn run_mendelson(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let base = root(cfg);
    let o = &cfg.options;
    let mut entries = Vec::new();
    for &m in &cfg.grids.m {
        let ens = cfg.ensemble.with_rows(m);
        let profile = ensemble_profile(&ens).ok();
        let eps = resolve_eps(cfg, profile.as_ref());
        let ts = if o.t.is_empty() {
            vec![default_t(profile.as_ref().expect("checked before the run"), m, o.t_factor)]
        } else {
            o.t.clone()
        };
        for &s in &cfg.grids.s {
            let stream = base.split_many(&[m as u64, s as u64]);
            for report in mendelson_sweep(&ens, &params_for(cfg, s), eps, &ts, cfg.trials, o.n_u, &stream)? {
                let envelope = (-report.t * report.t / 2.0).exp();
                entries.push(MendelsonEntry { m, s, report, envelope });
            }
        }
    }
    let rows: Vec<Vec<String>> = entries
        .iter()
        .map(|e| {
            let r = &e.report;
            vec![
                e.m.to_string(),
                e.s.to_string(),
                num(r.t),
                num(r.eps),
                num(r.lhs_quantile),
                num(r.rhs),
                num(r.violation_freq),
                num(e.envelope),
                num(r.mcdiarmid_exceed_freq),
                num(r.q_hat),
                num(r.w_hat),
            ]
        })
        .collect();
    let header = [
        "m",
        "s",
        "t",
        "eps",
        "lhs_quantile",
        "rhs",
        "violation_freq",
        "envelope",
        "mcdiarmid_exceed_freq",
        "q_hat",
        "w_hat",
    ];
    write_reports(cfg, ExperimentKind::Mendelson, &header, &rows, &entries)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub moments: MomentIdentityReport,
    pub scaling: ScalingReport,
    pub max_growth: Vec<MaxRow>,
    pub symmetrization: SymmetrizationReport,
    pub soft_indicator: Vec<SoftIndicatorReport>,
}

/// Grid size of the soft-indicator check.
pub const SOFT_GRID_POINTS: usize = 100_000;

fn run_lemmas(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let base = root(cfg);
    let o = &cfg.options;
    let ens = &cfg.ensemble;
    let n = ens.n;

    let laws: Vec<DistributionSpec> = (0..n).map(|j| ens.law_at(0, j).centered()).collect();
    let mut zr = base.split(0);
    let gauss = DistributionSpec::standard_gaussian();
    let mut z: Vec<f64> = (0..n).map(|_| gauss.sample(&mut zr)).collect();
    let len = norm2(&z);
    z.iter_mut().for_each(|v| *v /= len);
    let moments = check_moment_identities(&laws, &z, &[0.25, 0.5, 0.75], o.samples, &base.split(1))?;

    let law = ens.noise.default.centered();
    let alpha = law.natural_alpha();
    let need = (std::f64::consts::E * n as f64).ln().powf((2.0 * alpha - 1.0).max(1.0));
    let p_grid: Vec<f64> = (1..=moment_range(n)).map(f64::from).collect();
    let scaling = check_scaling_laws(&law, n, &cfg.grids.s, need.ceil() as usize, &p_grid, o.samples, &base.split(2))?;

    let n_grid = if cfg.grids.n.is_empty() { vec![n] } else { cfg.grids.n.clone() };
    let max_growth = check_max_growth(&law, &n_grid, o.samples, &base.split(3))?;
    let symmetrization = check_symmetrization(ens, &cfg.params, o.n_u, cfg.trials, &base.split(4))?;
    let eps_grid = o.eps.map_or_else(|| vec![0.1, 1.0, 10.0], |e| vec![e]);
    let soft_indicator = eps_grid
        .iter()
        .map(|&e| check_soft_indicator(e, SOFT_GRID_POINTS))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut row = |check: &str, param: String, emp: f64, reference: f64, ok: Option<bool>| {
        rows.push(vec![
            check.to_string(),
            param,
            num(emp),
            num(reference),
            ok.map_or_else(String::new, |b| b.to_string()),
        ]);
    };
    let sm = &moments.second_moment;
    row("second_moment", String::new(), sm.empirical, sm.expected, Some(sm.ok));
    let fm = &moments.fourth_moment;
    row("fourth_moment", String::new(), fm.empirical, fm.bound, Some(fm.ok));
    for pz in &moments.paley_zygmund {
        row("paley_zygmund", num(pz.theta), pz.empirical, pz.bound, Some(pz.ok));
    }
    for r in &scaling.rearranged {
        row("rearranged_norm", r.s.to_string(), r.mean_norm, r.scale, None);
    }
    for r in &scaling.sums {
        row("sum_norm", num(r.p), r.lp_norm, r.scale, None);
    }
    for r in &max_growth {
        row("max_growth", r.n.to_string(), r.mean_max, r.ratio, None);
    }
    let sy = &symmetrization;
    row("symmetrization", String::new(), sy.centered_mean, sy.symmetrized_mean, Some(sy.ok));
    for r in &soft_indicator {
        let bad = r.sandwich_violations + r.contraction_violations;
        row("soft_indicator", num(r.eps), bad as f64, 0.0, Some(bad == 0));
    }
    let report = LemmaReport {
        moments,
        scaling,
        max_growth,
        symmetrization,
        soft_indicator,
    };
    write_reports(
        cfg,
        ExperimentKind::Lemmas,
        &["check", "parameter", "empirical", "reference", "ok"],
        &rows,
        &report,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub n: usize,
    pub s: usize,
    pub m_required: f64,
    pub term1: f64,
    pub term2: f64,
    pub m_classical: f64,
    pub m_classical_perturbed: f64,
    pub optimal_m: f64,
    /// Failure probability at `m = ceil(m_required)`.
    pub failure_probability: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "C")]
    pub c_big: f64,
    #[serde(rename = "c")]
    pub c_small: f64,
}

fn run_bounds(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let o = &cfg.options;
    let n_grid = if cfg.grids.n.is_empty() { vec![cfg.ensemble.n] } else { cfg.grids.n.clone() };
    let mut table = Vec::new();
    for (k, &n) in n_grid.iter().enumerate() {
        let ens = EnsembleSpec { n, ..cfg.ensemble.clone() };
        let mean = ens
            .mean_matrix()
            .map_err(|e| Error::schema(format!("grids.n[{k}]"), e.to_string()))?;
        let profile = ensemble_profile(&ens)?;
        for &s in cfg.grids.s.iter().filter(|&&s| s <= n) {
            let mut inp = BoundInputs::new(s, n, cfg.params.rho, cfg.params.tau, profile.clone());
            inp.f = f_functional(&mean, s)?;
            inp.c_big = o.c_big;
            inp.c_small = o.c_small;
            inp.psi_surrogate = o.psi_surrogate;
            inp.m_inf = mean.max_abs();
            let main = m_main(&inp)?;
            table.push(BoundsRow {
                n,
                s,
                m_required: main.m_required,
                term1: main.term1,
                term2: main.term2,
                m_classical: m_classical(&inp, ClassicalVariant::Plain)?,
                m_classical_perturbed: m_classical(&inp, ClassicalVariant::Perturbed)?,
                optimal_m: optimal_m_reference(s, n as f64)?,
                failure_probability: failure_probability(&profile, main.m_required.ceil() as usize, o.c_small),
                f: inp.f,
                c_big: o.c_big,
                c_small: o.c_small,
            });
        }
    }
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                r.s.to_string(),
                num(r.m_required),
                num(r.term1),
                num(r.term2),
                num(r.m_classical),
                num(r.m_classical_perturbed),
                num(r.optimal_m),
                num(r.failure_probability),
                num(r.f),
                num(r.c_big),
                num(r.c_small),
            ]
        })
        .collect();
    let header = [
        "n",
        "s",
        "m_required",
        "term1",
        "term2",
        "m_classical",
        "m_classical_perturbed",
        "optimal_m",
        "failure_probability",
        "F",
        "C",
        "c",
    ];
    write_reports(cfg, ExperimentKind::Bounds, &header, &rows, &table)
}
