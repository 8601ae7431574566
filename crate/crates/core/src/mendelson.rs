//! Monte-Carlo checks of the small-ball method and its supporting lemmas.
//!
//! Every estimate over a cone is a supremum or infimum over finitely many
//! sampled directions, so it is one-sided: a sampled `Q` over-estimates the true
//! infimum and a sampled width under-estimates the true supremum. The analytic
//! bounds are the distribution-free certificates; these routines are sanity
//! envelopes around them.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{certify_reasonable, k_functionals, DistributionSpec, MomentProfile};
use crate::ensembles::{ensemble_profile, f_functional, moment_range, EnsembleSpec};
use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, DenseMatrix};
use crate::rng::RngStream;
use crate::sparse::{sample_t, top_s_norm, RnspParams};

/// Two-sided 99% normal quantile.
pub const Z99: f64 = 2.575_829_303_548_901;
/// The proof's choice of `theta` in the deviation lemma.
pub const DEFAULT_THETA: f64 = 0.25;
/// Default multiplier `c` in `t = c (mu2^2 / K) sqrt(m)`.
pub const DEFAULT_T_FACTOR: f64 = 0.1;

/// `psi_eps(x)`: 0 up to `eps`, a linear ramp to 1 at `2 eps`, then 1.
pub fn soft_indicator(x: f64, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::arg(format!("eps must be positive, got {eps}")));
    }
    let a = x.abs();
    Ok(if a <= eps {
        0.0
    } else if a <= 2.0 * eps {
        (a - eps) / eps
    } else {
        1.0
    })
}

/// `(1 - theta)^2 mu2^2 / K~`.
pub fn small_ball_lower_bound(profile: &MomentProfile, theta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::arg(format!("theta must lie in [0, 1], got {theta}")));
    }
    Ok((1.0 - theta).powi(2) * profile.mu2 * profile.mu2 / profile.ktilde)
}

/// `sqrt(mu2) / 4`.
pub fn default_eps(profile: &MomentProfile) -> f64 {
    profile.mu2.sqrt() / 4.0
}

/// `c (mu2^2 / K) sqrt(m)`.
pub fn default_t(profile: &MomentProfile, m: usize, c: f64) -> f64 {
    c * profile.mu2 * profile.mu2 / profile.k * (m as f64).sqrt()
}

/// `Cw (rho^-1 e^{2 alpha} kappa sqrt(s ln(en/s)) + rho^-1 F)`.
pub fn width_bound(profile: &MomentProfile, params: &RnspParams, n: usize, f: f64, cw: f64) -> f64 {
    let s = params.s as f64;
    let log_term = (std::f64::consts::E * n as f64 / s).ln();
    cw * ((2.0 * profile.alpha).exp() * profile.kappa * (s * log_term).sqrt() + f) / params.rho
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn binomial_ci(p: f64, n: usize) -> f64 {
    Z99 * (p * (1.0 - p) / n as f64).sqrt()
}

fn rademacher(rng: &mut RngStream) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

fn sample_directions(n: usize, params: &RnspParams, count: usize, stream: &RngStream) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream.clone();
    (0..count).map(|_| sample_t(n, params, &mut rng)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallBallReport {
    pub eps: f64,
    /// The estimated probability is `Pr{|<a_i, u>| >= threshold}` with `threshold = 2 eps`.
    pub threshold: f64,
    /// Minimum over sampled `(u, i)`; an upper bound on the infimum over the cone.
    pub empirical_q: f64,
    pub ci_halfwidth: f64,
    /// `(1 - theta)^2 mu2^2 / K~`, absent for degenerate noise.
    pub analytic_lb: Option<f64>,
    pub theta: f64,
    pub samples_u: usize,
    pub samples_row: usize,
}

/// Estimates `Q_{2 eps}(T; a_1..a_m)` from `n_u` directions in `T` and `n_trials`
/// fresh draws of every row per direction.
pub fn estimate_q(
    ens: &EnsembleSpec,
    params: &RnspParams,
    eps: f64,
    n_u: usize,
    n_trials: usize,
    stream: &RngStream,
) -> Result<SmallBallReport> {
    estimate_q_with_theta(ens, params, eps, DEFAULT_THETA, n_u, n_trials, stream)
}

pub fn estimate_q_with_theta(
    ens: &EnsembleSpec,
    params: &RnspParams,
    eps: f64,
    theta: f64,
    n_u: usize,
    n_trials: usize,
    stream: &RngStream,
) -> Result<SmallBallReport> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::arg(format!("eps must be positive, got {eps}")));
    }
    if n_u == 0 || n_trials == 0 {
        return Err(Error::arg("need at least one direction and one trial"));
    }
    ens.validate()?;
    params.validate_for(ens.n)?;
    let analytic_lb = match ensemble_profile(ens) {
        Ok(p) => Some(small_ball_lower_bound(&p, theta)?),
        Err(_) => None,
    };
    let seed = ens.seed_matrix()?;
    let dirs = sample_directions(ens.n, params, n_u, &stream.split(0))?;
    let threshold = 2.0 * eps;
    let counts: Vec<usize> = dirs
        .par_iter()
        .enumerate()
        .map(|(k, u)| {
            (0..ens.m)
                .map(|i| {
                    let mut rs = stream.split_many(&[1, k as u64, i as u64]);
                    (0..n_trials)
                        .filter(|_| {
                            let row = ens.sample_row_with(seed.row(i), i, &mut rs);
                            dot(&row, u).abs() >= threshold
                        })
                        .count()
                })
                .min()
                .unwrap()
        })
        .collect();
    let hits = *counts.iter().min().unwrap();
    let q = hits as f64 / n_trials as f64;
    Ok(SmallBallReport {
        eps,
        threshold,
        empirical_q: q,
        ci_halfwidth: binomial_ci(q, n_trials),
        analytic_lb,
        theta,
        samples_u: n_u,
        samples_row: n_trials,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthReport {
    /// Mean of `3 rho^-1 ‖h*‖_{2,s}`, an upper bound on the width of the cone.
    pub upper_proxy_mean: f64,
    /// Mean of the maximum of `|<h, u>|` over sampled cone directions.
    pub sampled_lower_mean: f64,
    pub trials: usize,
    /// 99% half-width for `sampled_lower_mean`.
    pub ci_halfwidth: f64,
    pub upper_ci_halfwidth: f64,
    /// The sampled lower value never exceeded the proxy within a trial.
    pub pointwise_ordered: bool,
    /// Diagnostic split of the proxy into the centered part and the mean part,
    /// both as `E ‖(.)*‖_{2,s}` without the `3 / rho` factor.
    pub x_part_mean: f64,
    pub z_part_mean: f64,
    /// `F` of the mean matrix, which bounds `z_part_mean`.
    pub f_value: f64,
}

/// Monte-Carlo empirical width of `T_{rho,s}` with `h = m^-1/2 sum xi_i a_i`.
pub fn estimate_w(
    ens: &EnsembleSpec,
    params: &RnspParams,
    trials: usize,
    n_u: usize,
    stream: &RngStream,
) -> Result<WidthReport> {
    if trials == 0 || n_u == 0 {
        return Err(Error::arg("need at least one trial and one direction"));
    }
    ens.validate()?;
    params.validate_for(ens.n)?;
    let mean = ens.mean_matrix()?;
    let (m, n, s) = (ens.m, ens.n, params.s);
    let scale = 1.0 / (m as f64).sqrt();
    let factor = 3.0 / params.rho;

    let rows: Vec<[f64; 4]> = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<[f64; 4]> {
            let ts = stream.split(t as u64);
            let a = ens.sample(&ts.split(0))?;
            let mut xi_rng = ts.split(1);
            let xi: Vec<f64> = (0..m).map(|_| rademacher(&mut xi_rng)).collect();
            let h: Vec<f64> = a.matvec_t(&xi).into_iter().map(|v| v * scale).collect();
            let hz: Vec<f64> = mean.matvec_t(&xi).into_iter().map(|v| v * scale).collect();
            let hx: Vec<f64> = h.iter().zip(&hz).map(|(a, b)| a - b).collect();
            let upper = factor * top_s_norm(&h, s)?;
            let dirs = sample_directions(n, params, n_u, &ts.split(2))?;
            let lower = dirs.iter().map(|u| dot(&h, u).abs()).fold(0.0, f64::max);
            Ok([upper, lower, top_s_norm(&hx, s)?, top_s_norm(&hz, s)?])
        })
        .collect::<Result<_>>()?;

    let col = |k: usize| rows.iter().map(|r| r[k]).collect::<Vec<_>>();
    let (up_mean, up_sd) = mean_sd(&col(0));
    let (lo_mean, lo_sd) = mean_sd(&col(1));
    let sq = (trials as f64).sqrt();
    Ok(WidthReport {
        upper_proxy_mean: up_mean,
        sampled_lower_mean: lo_mean,
        trials,
        ci_halfwidth: Z99 * lo_sd / sq,
        upper_ci_halfwidth: Z99 * up_sd / sq,
        pointwise_ordered: rows.iter().all(|r| r[1] <= r[0] * (1.0 + 1e-12)),
        x_part_mean: mean_sd(&col(2)).0,
        z_part_mean: mean_sd(&col(3)).0,
        f_value: f_functional(&mean, s)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MendelsonReport {
    pub eps: f64,
    pub t: f64,
    /// Empirical lower `exp(-t^2/2)` quantile of the left-hand side.
    pub lhs_quantile: f64,
    /// Plug-in right-hand side `eps sqrt(m) Q^_{2eps} - 2 W^ - eps t`.
    pub rhs: f64,
    pub violation_freq: f64,
    pub bound_freq: f64,
    pub trials: usize,
    pub q_hat: f64,
    pub w_hat: f64,
    pub n_u: usize,
    /// Bounded-differences check on `Z = sup_u sum_i (Q~_{2eps}(i,u) - 1{|<a_i,u>| >= eps})`.
    pub mcdiarmid_mean: f64,
    pub mcdiarmid_exceed_freq: f64,
    pub mcdiarmid_ci: f64,
}

/// [`mendelson_sweep`] for a single `t`.
pub fn mendelson_check(
    ens: &EnsembleSpec,
    params: &RnspParams,
    eps: f64,
    t: f64,
    trials: usize,
    n_u: usize,
    stream: &RngStream,
) -> Result<MendelsonReport> {
    Ok(mendelson_sweep(ens, params, eps, &[t], trials, n_u, stream)?.remove(0))
}

/// Plug-in check of the small-ball lower bound over a fixed finite set `E`
/// of `n_u` cone directions, shared by all trials and all `t`.
///
/// `Q^` is estimated per `(i, u)` from the trial matrices themselves and `W^`
/// is the trial mean of `max_{u in E} |<h, u>|`, so both refer to `E` exactly.
pub fn mendelson_sweep(
    ens: &EnsembleSpec,
    params: &RnspParams,
    eps: f64,
    ts: &[f64],
    trials: usize,
    n_u: usize,
    stream: &RngStream,
) -> Result<Vec<MendelsonReport>> {
    if trials < 100 {
        return Err(Error::arg(format!("need at least 100 trials, got {trials}")));
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::arg(format!("eps must be positive, got {eps}")));
    }
    if n_u == 0 {
        return Err(Error::arg("need at least one direction"));
    }
    if let Some(t) = ts.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::arg(format!("t must be nonnegative, got {t}")));
    }
    ens.validate()?;
    params.validate_for(ens.n)?;
    let m = ens.m;
    let dirs = sample_directions(ens.n, params, n_u, &stream.split(0))?;
    let scale = 1.0 / (m as f64).sqrt();

    struct Trial {
        lhs: f64,
        wsup: f64,
        hit_eps: Vec<bool>,
        hit_2eps: Vec<bool>,
    }
    let runs: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|k| -> Result<Trial> {
            let ts = stream.split(1).split(k as u64);
            let a = ens.sample(&ts.split(0))?;
            let mut xi_rng = ts.split(1);
            let xi: Vec<f64> = (0..m).map(|_| rademacher(&mut xi_rng)).collect();
            let h: Vec<f64> = a.matvec_t(&xi).into_iter().map(|v| v * scale).collect();
            let mut hit_eps = vec![false; m * n_u];
            let mut hit_2eps = vec![false; m * n_u];
            let mut lhs = f64::INFINITY;
            for (j, u) in dirs.iter().enumerate() {
                let au = a.matvec(u);
                lhs = lhs.min(norm2(&au));
                for (i, v) in au.iter().enumerate() {
                    hit_eps[i * n_u + j] = v.abs() >= eps;
                    hit_2eps[i * n_u + j] = v.abs() >= 2.0 * eps;
                }
            }
            let wsup = dirs.iter().map(|u| dot(&h, u).abs()).fold(0.0, f64::max);
            Ok(Trial {
                lhs,
                wsup,
                hit_eps,
                hit_2eps,
            })
        })
        .collect::<Result<_>>()?;

    let nt = trials as f64;
    let mut q_cell = vec![0.0; m * n_u];
    for r in &runs {
        for (q, &b) in q_cell.iter_mut().zip(&r.hit_2eps) {
            *q += b as u8 as f64;
        }
    }
    q_cell.iter_mut().for_each(|q| *q /= nt);
    let q_hat = q_cell.iter().cloned().fold(f64::INFINITY, f64::min);
    let w_hat = runs.iter().map(|r| r.wsup).sum::<f64>() / nt;

    let z: Vec<f64> = runs
        .iter()
        .map(|r| {
            (0..n_u)
                .map(|j| {
                    (0..m)
                        .map(|i| q_cell[i * n_u + j] - r.hit_eps[i * n_u + j] as u8 as f64)
                        .sum::<f64>()
                })
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    let z_mean = z.iter().sum::<f64>() / nt;

    let mut lhs_sorted: Vec<f64> = runs.iter().map(|r| r.lhs).collect();
    lhs_sorted.sort_by(f64::total_cmp);

    Ok(ts
        .iter()
        .map(|&t| {
            let rhs = eps * (m as f64).sqrt() * q_hat - 2.0 * w_hat - eps * t;
            let bound = (-t * t / 2.0).exp();
            let violations = runs.iter().filter(|r| r.lhs < rhs).count();
            let exceed = z.iter().filter(|&&v| v > z_mean + (m as f64).sqrt() * t).count();
            let qi = ((bound * nt).floor() as usize).min(trials - 1);
            MendelsonReport {
                eps,
                t,
                lhs_quantile: lhs_sorted[qi],
                rhs,
                violation_freq: violations as f64 / nt,
                bound_freq: bound,
                trials,
                q_hat,
                w_hat,
                n_u,
                mcdiarmid_mean: z_mean,
                mcdiarmid_exceed_freq: exceed as f64 / nt,
                mcdiarmid_ci: binomial_ci(bound, trials),
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentCheck {
    pub empirical: f64,
    /// `mu2 ‖z‖^2 + <E x, z>^2`.
    pub expected: f64,
    pub std_error: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentCheck {
    pub empirical: f64,
    /// `(K~ / mu2^2) (empirical second moment)^2`.
    pub bound: f64,
    pub rel_std_error: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaleyZygmundCheck {
    pub theta: f64,
    /// `Pr{Z >= theta E Z}`.
    pub empirical: f64,
    /// `(1 - theta)^2 (E Z)^2 / E Z^2`.
    pub bound: f64,
    pub slack: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentIdentityReport {
    pub samples: usize,
    pub second_moment: SecondMomentCheck,
    pub fourth_moment: FourthMomentCheck,
    pub paley_zygmund: Vec<PaleyZygmundCheck>,
    pub all_ok: bool,
}

/// Standard errors allowed before a moment check fails.
pub const MOMENT_SE_SLACK: f64 = 5.0;

/// Checks the inner-product second-moment identity, the fourth-moment bound
/// and Paley-Zygmund for `<x, z>` with `x_j ~ laws[j]` independent.
pub fn check_moment_identities(
    laws: &[DistributionSpec],
    z: &[f64],
    thetas: &[f64],
    samples: usize,
    stream: &RngStream,
) -> Result<MomentIdentityReport> {
    if laws.len() != z.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} laws for a direction of length {}",
            laws.len(),
            z.len()
        )));
    }
    if laws.is_empty() || samples < 2 {
        return Err(Error::arg("need a nonempty law grid and at least two samples"));
    }
    if (norm2(z) - 1.0).abs() > 1e-9 {
        return Err(Error::arg("z must be a unit vector"));
    }
    if let Some(th) = thetas.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::arg(format!("theta must lie in [0, 1], got {th}")));
    }
    let mu2 = laws[0].central_moment(2)?;
    let mut mu3: f64 = 0.0;
    let mut mu4: f64 = 0.0;
    for law in laws {
        law.validate()?;
        let v = law.central_moment(2)?;
        if (v - mu2).abs() > 1e-12 * mu2.max(1.0) {
            return Err(Error::arg("laws must share one variance"));
        }
        mu3 = mu3.max(law.central_moment(3)?.abs());
        mu4 = mu4.max(law.central_moment(4)?);
    }
    let mean_dot: f64 = laws.iter().zip(z).map(|(l, zi)| l.mean() * zi).sum();
    let expected = mu2 * dot(z, z) + mean_dot * mean_dot;

    let mut rng = stream.clone();
    let sq: Vec<f64> = (0..samples)
        .map(|_| {
            let ip: f64 = laws.iter().zip(z).map(|(l, zi)| l.sample(&mut rng) * zi).sum();
            ip * ip
        })
        .collect();
    let n = samples as f64;
    let (m2, sd2) = mean_sd(&sq);
    let quart: Vec<f64> = sq.iter().map(|v| v * v).collect();
    let (m4, sd4) = mean_sd(&quart);
    let se2 = sd2 / n.sqrt();
    let second = SecondMomentCheck {
        empirical: m2,
        expected,
        std_error: se2,
        ok: (m2 - expected).abs() <= MOMENT_SE_SLACK * se2.max(f64::EPSILON * expected),
    };

    let ktilde = if mu2 > 0.0 {
        k_functionals(mu2, mu3, mu4)?.1
    } else {
        0.0
    };
    let rel = if m4 > 0.0 { sd4 / n.sqrt() / m4 } else { 0.0 };
    // the bound's own sampling error enters through m2^2
    let rel_total = rel + 2.0 * if m2 > 0.0 { se2 / m2 } else { 0.0 };
    let bound = if mu2 > 0.0 { ktilde / (mu2 * mu2) * m2 * m2 } else { f64::INFINITY };
    let fourth = FourthMomentCheck {
        empirical: m4,
        bound,
        rel_std_error: rel_total,
        ok: m4 <= bound * (1.0 + MOMENT_SE_SLACK * rel_total) + f64::EPSILON,
    };

    let pz: Vec<PaleyZygmundCheck> = thetas
        .iter()
        .map(|&theta| {
            let hits = sq.iter().filter(|&&v| v >= theta * m2).count();
            let p = hits as f64 / n;
            let bound = if m4 > 0.0 { (1.0 - theta).powi(2) * m2 * m2 / m4 } else { (1.0 - theta).powi(2) };
            let slack = binomial_ci(bound.min(1.0), samples) + MOMENT_SE_SLACK * rel_total * bound;
            PaleyZygmundCheck {
                theta,
                empirical: p,
                bound,
                slack,
                ok: p >= bound - slack,
            }
        })
        .collect();
    let all_ok = second.ok && fourth.ok && pz.iter().all(|c| c.ok);
    Ok(MomentIdentityReport {
        samples,
        second_moment: second,
        fourth_moment: fourth,
        paley_zygmund: pz,
        all_ok,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RearrangedRow {
    pub s: usize,
    /// Empirical `E ‖y*‖_{2,s}`.
    pub mean_norm: f64,
    /// `kappa sqrt(s ln(en/s))`.
    pub scale: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumNormRow {
    pub p: f64,
    /// Empirical `‖ell^-1/2 sum y_i‖_p`.
    pub lp_norm: f64,
    /// `e^{2 alpha} kappa sqrt(p)`.
    pub scale: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub n: usize,
    pub samples: usize,
    /// Constant at `alpha = 1/2` used for the rearranged norms.
    pub kappa_half: f64,
    /// Growth exponent and constant used for the normalized sums.
    pub alpha: f64,
    pub kappa: f64,
    pub rearranged: Vec<RearrangedRow>,
    /// `max ratio / min ratio` over the `s` grid.
    pub rearranged_spread: f64,
    pub ell: usize,
    pub sums: Vec<SumNormRow>,
    pub max_sum_ratio: f64,
}

/// Scaling of rearranged norms `E ‖y*‖_{2,s}` across `s`, and of normalized
/// sums of `ell` draws across `p ≤ ln(en)`.
pub fn check_scaling_laws(
    spec: &DistributionSpec,
    n: usize,
    s_grid: &[usize],
    ell: usize,
    p_grid: &[f64],
    samples: usize,
    stream: &RngStream,
) -> Result<ScalingReport> {
    spec.validate()?;
    if spec.mean().abs() > 1e-12 {
        return Err(Error::arg("law must be centered"));
    }
    if s_grid.is_empty() || samples == 0 {
        return Err(Error::arg("need a nonempty s grid and at least one sample"));
    }
    if let Some(&s) = s_grid.iter().find(|&&s| s == 0 || s > n) {
        return Err(Error::arg(format!("s = {s} out of range 1..={n}")));
    }
    let r = moment_range(n);
    let alpha = spec.natural_alpha();
    let ln_en = (std::f64::consts::E * n as f64).ln();
    let need = ln_en.powf((2.0 * alpha - 1.0).max(1.0));
    if !p_grid.is_empty() && (ell as f64) < need {
        return Err(Error::arg(format!("ell = {ell} below the required {need:.3}")));
    }
    let kappa_half = certify_reasonable(spec, 0.5, r)?;
    let kappa = certify_reasonable(spec, alpha, r)?;

    let smax = *s_grid.iter().max().unwrap();
    let chunks = samples.div_ceil(64);
    let per_chunk: Vec<Vec<f64>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.split_many(&[0, c as u64]);
            let mut acc = vec![0.0; s_grid.len()];
            let count = (samples - c * 64).min(64);
            let mut sq = vec![0.0; n];
            for _ in 0..count {
                for v in sq.iter_mut() {
                    let x = spec.sample(&mut rng);
                    *v = x * x;
                }
                if smax < n {
                    sq.select_nth_unstable_by(smax - 1, |a, b| b.total_cmp(a));
                }
                let mut head = sq[..smax].to_vec();
                head.sort_by(|a, b| b.total_cmp(a));
                let mut cum = vec![0.0; smax + 1];
                for (i, v) in head.iter().enumerate() {
                    cum[i + 1] = cum[i] + v;
                }
                for (a, &s) in acc.iter_mut().zip(s_grid) {
                    *a += cum[s].sqrt();
                }
            }
            acc
        })
        .collect();
    let mut totals = vec![0.0; s_grid.len()];
    for c in &per_chunk {
        for (t, v) in totals.iter_mut().zip(c) {
            *t += v;
        }
    }
    let rearranged: Vec<RearrangedRow> = s_grid
        .iter()
        .zip(&totals)
        .map(|(&s, &tot)| {
            let mean_norm = tot / samples as f64;
            let scale = kappa_half * (s as f64 * (std::f64::consts::E * n as f64 / s as f64).ln()).sqrt();
            RearrangedRow {
                s,
                mean_norm,
                scale,
                ratio: mean_norm / scale,
            }
        })
        .collect();
    let rmax = rearranged.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let rmin = rearranged.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);

    let ps: Vec<f64> = p_grid.iter().copied().filter(|&p| p >= 1.0 && p <= ln_en).collect();
    let mut sums = Vec::new();
    if !ps.is_empty() {
        let mut rng = stream.split(1);
        let norm = 1.0 / (ell as f64).sqrt();
        let draws: Vec<f64> = (0..samples)
            .map(|_| (0..ell).map(|_| spec.sample(&mut rng)).sum::<f64>() * norm)
            .collect();
        for p in ps {
            let lp = (draws.iter().map(|x| x.abs().powf(p)).sum::<f64>() / samples as f64).powf(1.0 / p);
            let scale = (2.0 * alpha).exp() * kappa * p.sqrt();
            sums.push(SumNormRow {
                p,
                lp_norm: lp,
                scale,
                ratio: lp / scale,
            });
        }
    }
    let max_sum_ratio = sums.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(ScalingReport {
        n,
        samples,
        kappa_half,
        alpha,
        kappa,
        rearranged,
        rearranged_spread: rmax / rmin,
        ell,
        sums,
        max_sum_ratio,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxRow {
    pub n: usize,
    /// Empirical `E max_i |X_i|`.
    pub mean_max: f64,
    /// `mean_max / sqrt(ln n)`.
    pub ratio: f64,
}

/// `E max |X_i| / sqrt(ln n)` for `n` i.i.d. draws, across an `n` grid.
pub fn check_max_growth(
    spec: &DistributionSpec,
    n_grid: &[usize],
    samples: usize,
    stream: &RngStream,
) -> Result<Vec<MaxRow>> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::arg("need at least one sample"));
    }
    n_grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            if n < 2 {
                return Err(Error::arg("n must be at least 2"));
            }
            let mut rng = stream.split(k as u64);
            let total: f64 = (0..samples)
                .map(|_| (0..n).map(|_| spec.sample(&mut rng).abs()).fold(0.0, f64::max))
                .sum();
            let mean_max = total / samples as f64;
            Ok(MaxRow {
                n,
                mean_max,
                ratio: mean_max / (n as f64).ln().sqrt(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationReport {
    /// `E sup_u |sum_i (<a_i,u> - <E a_i,u>)|`.
    pub centered_mean: f64,
    /// `2 E sup_u |sum_i xi_i <a_i,u>|`.
    pub symmetrized_mean: f64,
    pub ci_halfwidth: f64,
    pub trials: usize,
    pub ok: bool,
}

/// Symmetrization inequality for the linear class `{<., u> : u in E}` over a
/// fixed sample `E` of cone directions.
pub fn check_symmetrization(
    ens: &EnsembleSpec,
    params: &RnspParams,
    n_u: usize,
    trials: usize,
    stream: &RngStream,
) -> Result<SymmetrizationReport> {
    if trials < 2 || n_u == 0 {
        return Err(Error::arg("need at least two trials and one direction"));
    }
    ens.validate()?;
    params.validate_for(ens.n)?;
    let mean = ens.mean_matrix()?;
    let dirs = sample_directions(ens.n, params, n_u, &stream.split(0))?;
    let col_sum = mean.matvec_t(&vec![1.0; ens.m]);
    let pairs: Vec<(f64, f64)> = (0..trials)
        .into_par_iter()
        .map(|k| -> Result<(f64, f64)> {
            let ts = stream.split(1).split(k as u64);
            let a: DenseMatrix = ens.sample(&ts.split(0))?;
            let mut xi_rng = ts.split(1);
            let xi: Vec<f64> = (0..ens.m).map(|_| rademacher(&mut xi_rng)).collect();
            let sum = a.matvec_t(&vec![1.0; ens.m]);
            let centered: Vec<f64> = sum.iter().zip(&col_sum).map(|(a, b)| a - b).collect();
            let signed = a.matvec_t(&xi);
            let c = dirs.iter().map(|u| dot(&centered, u).abs()).fold(0.0, f64::max);
            let s = dirs.iter().map(|u| dot(&signed, u).abs()).fold(0.0, f64::max);
            Ok((c, 2.0 * s))
        })
        .collect::<Result<_>>()?;
    let (cm, csd) = mean_sd(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let (sm, ssd) = mean_sd(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let ci = Z99 * (csd * csd + ssd * ssd).sqrt() / (trials as f64).sqrt();
    Ok(SymmetrizationReport {
        centered_mean: cm,
        symmetrized_mean: sm,
        ci_halfwidth: ci,
        trials,
        ok: cm <= sm + ci,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftIndicatorReport {
    pub eps: f64,
    pub points: usize,
    /// Grid points where `1{|x| >= 2 eps} <= psi_eps(x) <= 1{|x| >= eps}` fails.
    pub sandwich_violations: usize,
    /// Adjacent pairs where `|psi(x) - psi(y)| <= |x - y| / eps` fails beyond rounding.
    pub contraction_violations: usize,
}

/// Checks the indicator sandwich and the `1/eps` contraction of `psi_eps` on
/// `points` equispaced points of `[-5 eps, 5 eps]`.
pub fn check_soft_indicator(eps: f64, points: usize) -> Result<SoftIndicatorReport> {
    if points < 2 {
        return Err(Error::arg("need at least two grid points"));
    }
    let xs: Vec<f64> = (0..points)
        .map(|k| -5.0 * eps + 10.0 * eps * k as f64 / (points - 1) as f64)
        .collect();
    let vals: Vec<f64> = xs.iter().map(|&x| soft_indicator(x, eps)).collect::<Result<_>>()?;
    let ind = |x: f64, level: f64| if x.abs() >= level { 1.0 } else { 0.0 };
    let sandwich_violations = xs
        .iter()
        .zip(&vals)
        .filter(|(&x, &v)| !(ind(x, 2.0 * eps) <= v && v <= ind(x, eps)))
        .count();
    let contraction_violations = (1..points)
        .filter(|&k| {
            let lip = (xs[k] - xs[k - 1]).abs() / eps;
            (vals[k] - vals[k - 1]).abs() > lip * (1.0 + 8.0 * f64::EPSILON) + 4.0 * f64::EPSILON
        })
        .count();
    Ok(SoftIndicatorReport {
        eps,
        points,
        sandwich_violations,
        contraction_violations,
    })
}
