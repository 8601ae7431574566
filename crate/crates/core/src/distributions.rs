//! Scalar noise laws with sampling, exact central moments and L^p norms.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Weibull};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// One scalar law. Serialized as `{"kind": "...", "params": {...}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum DistributionSpec {
    Gaussian { mean: f64, sd: f64 },
    Rademacher { scale: f64 },
    /// Values in {0, 1}, or {-p, 1-p} when centered.
    Bernoulli { p: f64, centered: bool },
    Uniform { lo: f64, hi: f64 },
    Laplace { mean: f64, scale: f64 },
    /// `xi * Weibull(shape, scale)` with `xi` an independent fair sign.
    SymmetricWeibull { shape: f64, scale: f64 },
    /// Deterministic value. Has zero variance, so it is only usable as
    /// "no noise" and is rejected wherever a moment profile is required.
    PointMass { value: f64 },
}

impl DistributionSpec {
    pub fn standard_gaussian() -> Self {
        DistributionSpec::Gaussian { mean: 0.0, sd: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        use DistributionSpec::*;
        let ok = match *self {
            Gaussian { mean, sd } => mean.is_finite() && sd > 0.0 && sd.is_finite(),
            Rademacher { scale } => scale > 0.0 && scale.is_finite(),
            Bernoulli { p, .. } => p > 0.0 && p < 1.0,
            Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo < hi,
            Laplace { mean, scale } => mean.is_finite() && scale > 0.0 && scale.is_finite(),
            SymmetricWeibull { shape, scale } => {
                shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()
            }
            PointMass { value } => value.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::arg(format!("invalid distribution parameters: {self:?}")))
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, DistributionSpec::PointMass { .. })
    }

    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        use DistributionSpec::*;
        match *self {
            Gaussian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            Rademacher { scale } => {
                if rng.gen::<bool>() {
                    scale
                } else {
                    -scale
                }
            }
            Bernoulli { p, centered } => {
                let x = if rng.gen::<f64>() < p { 1.0 } else { 0.0 };
                if centered {
                    x - p
                } else {
                    x
                }
            }
            Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            Laplace { mean, scale } => {
                // inverse CDF on u in (-1/2, 1/2)
                let u: f64 = rng.gen::<f64>() - 0.5;
                mean - scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
            SymmetricWeibull { shape, scale } => {
                let w = Weibull::new(scale, shape).expect("validated weibull");
                let x: f64 = w.sample(rng);
                if rng.gen::<bool>() {
                    x
                } else {
                    -x
                }
            }
            PointMass { value } => value,
        }
    }

    pub fn mean(&self) -> f64 {
        use DistributionSpec::*;
        match *self {
            Gaussian { mean, .. } | Laplace { mean, .. } => mean,
            Rademacher { .. } | SymmetricWeibull { .. } => 0.0,
            Bernoulli { p, centered } => {
                if centered {
                    0.0
                } else {
                    p
                }
            }
            Uniform { lo, hi } => 0.5 * (lo + hi),
            PointMass { value } => value,
        }
    }

    /// The same law shifted to mean zero.
    pub fn centered(&self) -> Self {
        use DistributionSpec::*;
        match *self {
            Gaussian { sd, .. } => Gaussian { mean: 0.0, sd },
            Laplace { scale, .. } => Laplace { mean: 0.0, scale },
            Bernoulli { p, .. } => Bernoulli { p, centered: true },
            Uniform { lo, hi } => {
                let h = 0.5 * (hi - lo);
                Uniform { lo: -h, hi: h }
            }
            PointMass { .. } => PointMass { value: 0.0 },
            other => other,
        }
    }

    /// Exact central moment `E (X - EX)^k` for k in {2, 3, 4}. The third moment is signed.
    pub fn central_moment(&self, k: u32) -> Result<f64> {
        use DistributionSpec::*;
        if !(2..=4).contains(&k) {
            return Err(Error::arg(format!("central moment order {k} not in {{2,3,4}}")));
        }
        let v = match (*self, k) {
            (Gaussian { sd, .. }, 2) => sd * sd,
            (Gaussian { .. }, 3) => 0.0,
            (Gaussian { sd, .. }, _) => 3.0 * sd.powi(4),
            (Rademacher { .. }, 3) => 0.0,
            (Rademacher { scale }, k) => scale.powi(k as i32),
            (Bernoulli { p, .. }, k) => {
                let q = 1.0 - p;
                match k {
                    2 => p * q,
                    3 => p * q * (q - p),
                    _ => p * q * (q * q * q + p * p * p),
                }
            }
            (Uniform { lo, hi }, k) => {
                let w = hi - lo;
                match k {
                    2 => w * w / 12.0,
                    3 => 0.0,
                    _ => w.powi(4) / 80.0,
                }
            }
            (Laplace { scale, .. }, k) => match k {
                2 => 2.0 * scale * scale,
                3 => 0.0,
                _ => 24.0 * scale.powi(4),
            },
            (SymmetricWeibull { shape, scale }, k) => match k {
                3 => 0.0,
                k => scale.powi(k as i32) * gamma(1.0 + k as f64 / shape),
            },
            (PointMass { .. }, _) => 0.0,
        };
        Ok(v)
    }

    /// `(E|X|^p)^{1/p}` for `p >= 1`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        use DistributionSpec::*;
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::arg(format!("lp_norm needs finite p >= 1, got {p}")));
        }
        let v = match *self {
            Gaussian { mean, sd } if mean == 0.0 => sd * gaussian_abs_moment(p).powf(1.0 / p),
            Gaussian { mean, sd } => {
                let z0 = -mean / sd;
                let reach = 12.0 + 2.0 * p.sqrt() + z0.abs();
                let f = |z: f64| (mean + sd * z).abs().powf(p) * std_normal_pdf(z);
                let mut breaks = vec![-reach, z0, reach];
                breaks.sort_by(|a, b| a.total_cmp(b));
                integrate_pieces(&f, &breaks).powf(1.0 / p)
            }
            Rademacher { scale } => scale,
            Bernoulli { p: pr, centered } => {
                if centered {
                    (pr * (1.0 - pr).powf(p) + (1.0 - pr) * pr.powf(p)).powf(1.0 / p)
                } else {
                    pr.powf(1.0 / p)
                }
            }
            Uniform { lo, hi } => {
                let prim = |x: f64| x.signum() * x.abs().powf(p + 1.0) / (p + 1.0);
                ((prim(hi) - prim(lo)) / (hi - lo)).powf(1.0 / p)
            }
            Laplace { mean, scale } if mean == 0.0 => scale * (ln_gamma(p + 1.0) / p).exp(),
            Laplace { mean, scale } => {
                let reach = scale * (40.0 + 4.0 * p) + mean.abs();
                let f = |y: f64| (mean + y).abs().powf(p) * (-y.abs() / scale).exp() / (2.0 * scale);
                let mut breaks = vec![-reach, -mean, 0.0, reach];
                breaks.sort_by(|a, b| a.total_cmp(b));
                breaks.dedup();
                integrate_pieces(&f, &breaks).powf(1.0 / p)
            }
            SymmetricWeibull { shape, scale } => scale * (ln_gamma(1.0 + p / shape) / p).exp(),
            PointMass { value } => value.abs(),
        };
        Ok(v)
    }

    /// Growth exponent alpha for which the law is (kappa, alpha)-reasonable with finite kappa.
    pub fn natural_alpha(&self) -> f64 {
        match *self {
            DistributionSpec::Laplace { .. } => 1.0,
            DistributionSpec::SymmetricWeibull { shape, .. } => (1.0 / shape).max(0.5),
            _ => 0.5,
        }
    }
}

/// Smallest kappa with `||X - EX||_p <= kappa p^alpha` on integer p in `2..=r`.
pub fn certify_reasonable(spec: &DistributionSpec, alpha: f64, r: u32) -> Result<f64> {
    if !(alpha >= 0.5) {
        return Err(Error::arg(format!("alpha must be >= 1/2, got {alpha}")));
    }
    if r < 2 {
        return Err(Error::arg(format!("moment range r must be >= 2, got {r}")));
    }
    let c = spec.centered();
    let mut kappa: f64 = 0.0;
    for p in 2..=r {
        let p = f64::from(p);
        kappa = kappa.max(c.lp_norm(p)? / p.powf(alpha));
    }
    Ok(kappa)
}

/// Fourth-order functionals `(K, K~)` from `(mu2, |mu3|, mu4)`.
pub fn k_functionals(mu2: f64, mu3_abs: f64, mu4: f64) -> Result<(f64, f64)> {
    if !(mu2 > 0.0) || !(mu3_abs >= 0.0) || !(mu4 >= mu2 * mu2 * (1.0 - 1e-12)) {
        return Err(Error::arg(format!(
            "k_functionals needs mu2 > 0, mu3 >= 0, mu4 >= mu2^2; got ({mu2}, {mu3_abs}, {mu4})"
        )));
    }
    let k = mu2 * mu2 + mu3_abs + mu2 * mu3_abs + mu4;
    let kt = 3.0 * mu2 * mu2 + 4.0 * mu3_abs + 2.0 * mu2 * mu3_abs + mu4;
    Ok((k, kt))
}

/// Moment summary of a law or an ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentProfile {
    pub mu2: f64,
    pub mu3_abs: f64,
    pub mu4: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "Ktilde")]
    pub ktilde: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub r: u32,
}

impl MomentProfile {
    /// Builds a profile, deriving `K` and `K~` from the moments.
    pub fn new(mu2: f64, mu3_abs: f64, mu4: f64, kappa: f64, alpha: f64, r: u32) -> Result<Self> {
        let (k, ktilde) = k_functionals(mu2, mu3_abs, mu4)?;
        Ok(Self {
            mu2,
            mu3_abs,
            mu4,
            k,
            ktilde,
            kappa,
            alpha,
            r,
        })
    }

    /// Profile of a single law, with alpha its natural growth exponent.
    pub fn of_law(spec: &DistributionSpec, r: u32) -> Result<Self> {
        spec.validate()?;
        let alpha = spec.natural_alpha();
        Self::new(
            spec.central_moment(2)?,
            spec.central_moment(3)?.abs(),
            spec.central_moment(4)?,
            certify_reasonable(spec, alpha, r)?,
            alpha,
            r,
        )
    }
}

pub(crate) fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

fn gaussian_abs_moment(p: f64) -> f64 {
    // E|Z|^p = 2^{p/2} Gamma((p+1)/2) / sqrt(pi)
    (0.5 * p * std::f64::consts::LN_2 + ln_gamma(0.5 * (p + 1.0))
        - 0.5 * std::f64::consts::PI.ln())
    .exp()
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn integrate_pieces<F: Fn(f64) -> f64>(f: &F, breaks: &[f64]) -> f64 {
    breaks
        .windows(2)
        .map(|w| adaptive_simpson(f, w[0], w[1], 1e-13))
        .sum()
}

/// Adaptive Simpson with a relative tolerance, after a fixed 16-panel split.
fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let flm = f(0.5 * (a + m));
        let frm = f(0.5 * (m + b));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    let panels: Vec<(f64, f64, f64, f64, f64, f64)> = (0..pieces)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = lo + h;
            let (flo, fmid, fhi) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            (lo, hi, flo, fmid, fhi, h / 6.0 * (flo + 4.0 * fmid + fhi))
        })
        .collect();
    let rough: f64 = panels.iter().map(|p| p.5.abs()).sum();
    let tol = (rel_tol * rough).max(f64::MIN_POSITIVE) / pieces as f64;
    panels
        .into_iter()
        .map(|(lo, hi, flo, fmid, fhi, whole)| rec(f, lo, hi, flo, fmid, fhi, whole, tol, 30))
        .sum()
}
