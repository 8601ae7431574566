//! Null space property certificates.
//!
//! NSP and SNSP are decided exactly by one LP per support and sign pattern.
//! The robust property has no tractable exact check, so it gets a local-search
//! falsifier (which can only prove failure) and a sampled estimate of the cone
//! infimum (which is an upper bound on the true infimum).

use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{norm1, norm2, DenseMatrix};
use crate::rng::RngStream;
use crate::solvers::{solve_lp, LowerBound, LpProblem, LpStatus};
use crate::sparse::{head_tail_norms, head_tail_split, sample_t, RnspParams};

/// Limit on `C(n, s) * 2^s` for exhaustive certification.
pub const DESK_SCALE_LIMIT: f64 = 1e6;
/// Width of the band around the NSP threshold that cannot be decided.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NspMode {
    Nsp,
    Snsp { rho: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NspCertificate {
    pub property: NspMode,
    pub s: usize,
    pub holds: bool,
    /// `max_ratio` lies within [`BOUNDARY_TOL`] of the NSP threshold 1.
    pub boundary: bool,
    pub worst_support: Vec<usize>,
    pub worst_sign: Vec<i8>,
    #[serde(with = "extended_real")]
    pub max_ratio: f64,
    pub lp_count: usize,
}

/// Serializes non-finite reals as the strings `"inf"`, `"-inf"` and `"nan"`.
mod extended_real {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else if x.is_nan() {
            s.serialize_str("nan")
        } else if *x > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a real: {other}"))),
            },
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut c: Vec<usize> = (0..k).collect();
    loop {
        out.push(c.clone());
        let Some(i) = (0..k).rev().find(|&i| c[i] != i + n - k) else {
            return out;
        };
        c[i] += 1;
        for j in i + 1..k {
            c[j] = c[j - 1] + 1;
        }
    }
}

/// All `2^s` sign vectors, `+1` first.
pub fn sign_patterns(s: usize) -> Vec<Vec<i8>> {
    (0..1usize << s)
        .map(|mask| (0..s).map(|b| if mask >> b & 1 == 1 { -1 } else { 1 }).collect())
        .collect()
}

/// The LP behind [`support_ratio`], in minimization form: variables `v_S`
/// (free), then `p` and `q` with `v_{S^c} = p - q`, then one budget slack.
pub fn support_ratio_lp(a: &DenseMatrix, support: &[usize], sign: &[i8]) -> LpProblem {
    let (m, n) = (a.rows(), a.cols());
    let s = support.len();
    let comp: Vec<usize> = (0..n).filter(|j| !support.contains(j)).collect();
    let k = comp.len();
    // variables: v_S (free), p, q (tail = p - q), slack
    let nv = s + 2 * k + 1;
    let mut c = vec![0.0; nv];
    for (t, &sg) in sign.iter().enumerate() {
        c[t] = -(sg as f64);
    }
    let mut lp = LpProblem::new(c);
    for t in 0..s {
        lp.lower[t] = LowerBound::Unbounded;
    }
    for i in 0..m {
        let mut row = vec![0.0; nv];
        for (t, &j) in support.iter().enumerate() {
            row[t] = a.get(i, j);
        }
        for (t, &j) in comp.iter().enumerate() {
            row[s + t] = a.get(i, j);
            row[s + k + t] = -a.get(i, j);
        }
        lp.add_row(row, 0.0);
    }
    let mut budget = vec![1.0; nv];
    budget[..s].iter_mut().for_each(|x| *x = 0.0);
    lp.add_row(budget, 1.0);
    lp
}

/// `max sigma^T v_S  s.t.  A v = 0, ‖v_{S^c}‖1 ≤ 1`, or infinity when unbounded.
pub fn support_ratio(a: &DenseMatrix, support: &[usize], sign: &[i8]) -> Result<f64> {
    if support.len() != sign.len() || support.iter().any(|&j| j >= a.cols()) {
        return Err(Error::arg("support and sign must match and lie within the columns"));
    }
    let sol = solve_lp(&support_ratio_lp(a, support, sign))?;
    match sol.status {
        LpStatus::Optimal => Ok((-sol.objective).max(0.0)),
        LpStatus::Unbounded => Ok(f64::INFINITY),
        LpStatus::Infeasible => unreachable!("v = 0 is always feasible"),
    }
}

/// Exhaustive NSP / SNSP certificate of order `s`.
pub fn verify_nsp(a: &DenseMatrix, s: usize, mode: NspMode) -> Result<NspCertificate> {
    let n = a.cols();
    if s == 0 || s > n {
        return Err(Error::arg(format!("s = {s} out of range 1..={n}")));
    }
    if let NspMode::Snsp { rho } = mode {
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::arg(format!("rho must be positive, got {rho}")));
        }
    }
    let work = binomial(n, s) * 2f64.powi(s as i32);
    if work > DESK_SCALE_LIMIT {
        return Err(Error::TooLarge(format!(
            "C({n},{s})*2^{s} = {work:.0} LPs exceeds {DESK_SCALE_LIMIT:.0}"
        )));
    }
    let decide = |r: f64| match mode {
        NspMode::Nsp => r < 1.0 - BOUNDARY_TOL,
        NspMode::Snsp { rho } => r <= rho + BOUNDARY_TOL,
    };

    if a.rank(1e-12) == n {
        return Ok(NspCertificate {
            property: mode,
            s,
            holds: true,
            boundary: false,
            worst_support: Vec::new(),
            worst_sign: Vec::new(),
            max_ratio: 0.0,
            lp_count: 0,
        });
    }

    let signs = sign_patterns(s);
    let jobs: Vec<(Vec<usize>, Vec<i8>)> = combinations(n, s)
        .into_iter()
        .flat_map(|sup| signs.iter().map(move |sg| (sup.clone(), sg.clone())))
        .collect();
    let lp_count = jobs.len();
    let ratios: Vec<f64> = jobs
        .par_iter()
        .map(|(sup, sg)| support_ratio(a, sup, sg))
        .collect::<Result<_>>()?;
    // first maximum in enumeration order
    let mut best = 0;
    for (i, &r) in ratios.iter().enumerate() {
        if r > ratios[best] {
            best = i;
        }
    }
    let max_ratio = ratios[best];
    let (worst_support, worst_sign) = jobs.into_iter().nth(best).unwrap();
    Ok(NspCertificate {
        property: mode,
        s,
        holds: decide(max_ratio),
        boundary: mode == NspMode::Nsp && (max_ratio - 1.0).abs() <= BOUNDARY_TOL,
        worst_support,
        worst_sign,
        max_ratio,
        lp_count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMethod {
    LocalSearch,
    SampledT,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifiedSide {
    ViolationFound,
    NoViolationFound,
    InfLowerEstimate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnspProbe {
    /// Local search: the smallest robust margin found. Sampling: estimate minus `1/tau`.
    pub margin: f64,
    pub witness: Vec<f64>,
    pub method: ProbeMethod,
    pub certified_side: CertifiedSide,
    /// Sampled minimum of `‖Av‖2` over the cone (sampling only).
    pub estimate: Option<f64>,
    /// Whether the sampled minimum exceeds `1/tau` (sampling only).
    pub criterion_met: Option<bool>,
}

/// Margin below which a local-search witness counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-8;

/// Robust margin `(rho/sqrt s)‖v_{S_min}‖1 + tau‖Av‖2 - ‖v_{S_max}‖2`.
pub fn rnsp_margin(a: &DenseMatrix, v: &[f64], params: &RnspParams) -> Result<f64> {
    let (head, tail) = head_tail_norms(v, params.s)?;
    let av = a.matvec(v);
    Ok(params.rho / (params.s as f64).sqrt() * tail + params.tau * norm2(&av) - head)
}

fn margin_subgradient(a: &DenseMatrix, v: &[f64], params: &RnspParams, in_s: &[bool]) -> Vec<f64> {
    let w = params.rho / (params.s as f64).sqrt();
    let head = v.iter().zip(in_s).filter(|(_, &b)| b).map(|(x, _)| x * x).sum::<f64>().sqrt();
    let av = a.matvec(v);
    let nav = norm2(&av);
    let mut g = if nav > 0.0 {
        a.matvec_t(&av).into_iter().map(|x| params.tau * x / nav).collect()
    } else {
        vec![0.0; v.len()]
    };
    for (i, gi) in g.iter_mut().enumerate() {
        if in_s[i] {
            if head > 0.0 {
                *gi -= v[i] / head;
            }
        } else {
            *gi += w * v[i].signum() * (v[i] != 0.0) as u8 as f64;
        }
    }
    g
}

fn indicator(n: usize, support: &[usize]) -> Vec<bool> {
    let mut b = vec![false; n];
    support.iter().for_each(|&i| b[i] = true);
    b
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let nrm = norm2(&v);
    if nrm > 0.0 {
        v.iter_mut().for_each(|x| *x /= nrm);
    }
    v
}

/// One descent run; even runs use the adaptive split `S_max(v)`, odd runs a
/// random fixed support. Returns the best point seen under the adaptive margin.
fn descend(
    a: &DenseMatrix,
    params: &RnspParams,
    iters: usize,
    fixed: bool,
    rng: &mut RngStream,
) -> Result<(f64, Vec<f64>)> {
    let n = a.cols();
    let fixed_s = if fixed {
        let mut sup = rand::seq::index::sample(rng, n, params.s).into_vec();
        sup.sort_unstable();
        Some(indicator(n, &sup))
    } else {
        None
    };
    let mut v = unit((0..n).map(|_| rng.sample(StandardNormal)).collect());
    while norm1(&v) == 0.0 {
        v = unit((0..n).map(|_| rng.sample(StandardNormal)).collect());
    }
    let mut best = (rnsp_margin(a, &v, params)?, v.clone());
    let consider = |cand: Vec<f64>, best: &mut (f64, Vec<f64>)| -> Result<()> {
        let g = rnsp_margin(a, &cand, params)?;
        if g < best.0 {
            *best = (g, cand);
        }
        Ok(())
    };
    for t in 0..iters {
        let in_s = match &fixed_s {
            Some(b) => b.clone(),
            None => indicator(n, &head_tail_split(&v, params.s)?.0),
        };
        let g = margin_subgradient(a, &v, params, &in_s);
        let step = 0.5 / ((t + 1) as f64).sqrt();
        let next: Vec<f64> = v.iter().zip(&g).map(|(x, d)| x - step * d).collect();
        if norm2(&next) == 0.0 {
            break;
        }
        v = unit(next);
        consider(v.clone(), &mut best)?;
        // hard-thresholded companion: the margin at the normalized head
        let head: Vec<f64> = v.iter().zip(&in_s).map(|(x, &b)| if b { *x } else { 0.0 }).collect();
        if norm2(&head) > 0.0 {
            consider(unit(head), &mut best)?;
        }
    }
    Ok(best)
}

/// Projected-subgradient search for a violation of the robust property.
///
/// A margin below `-VIOLATION_TOL` certifies failure; anything else certifies nothing.
pub fn falsify_rnsp(
    a: &DenseMatrix,
    params: &RnspParams,
    inits: usize,
    iters: usize,
    stream: &RngStream,
) -> Result<RnspProbe> {
    params.validate_for(a.cols())?;
    if inits == 0 {
        return Err(Error::arg("need at least one start"));
    }
    let runs: Vec<(f64, Vec<f64>)> = (0..inits)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream.split(k as u64);
            descend(a, params, iters, k % 2 == 1, &mut rng)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.0 < runs[best].0 {
            best = i;
        }
    }
    let (margin, witness) = runs.into_iter().nth(best).unwrap();
    Ok(RnspProbe {
        margin,
        witness,
        method: ProbeMethod::LocalSearch,
        certified_side: if margin < -VIOLATION_TOL {
            CertifiedSide::ViolationFound
        } else {
            CertifiedSide::NoViolationFound
        },
        estimate: None,
        criterion_met: None,
    })
}

/// Minimum of `‖Av‖2` over `samples` draws from `T_{rho,s}`; an upper bound on the infimum.
pub fn estimate_rnsp_inf(
    a: &DenseMatrix,
    params: &RnspParams,
    samples: usize,
    stream: &RngStream,
) -> Result<RnspProbe> {
    params.validate_for(a.cols())?;
    if samples == 0 {
        return Err(Error::arg("need at least one sample"));
    }
    let mut rng = stream.clone();
    let mut best = (f64::INFINITY, Vec::new());
    for _ in 0..samples {
        let v = sample_t(a.cols(), params, &mut rng)?;
        let val = norm2(&a.matvec(&v));
        if val < best.0 {
            best = (val, v);
        }
    }
    let (estimate, witness) = best;
    Ok(RnspProbe {
        margin: estimate - 1.0 / params.tau,
        witness,
        method: ProbeMethod::SampledT,
        certified_side: CertifiedSide::InfLowerEstimate,
        estimate: Some(estimate),
        criterion_met: Some(estimate > 1.0 / params.tau),
    })
}
