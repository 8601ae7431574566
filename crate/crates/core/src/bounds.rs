//! Closed-form sample-complexity and failure-probability bounds.
//!
//! The absolute constants `C` and `c` are unspecified in the theory; they are
//! inputs here (default 1) and always reported alongside the outputs.

use serde::{Deserialize, Serialize};

use crate::distributions::MomentProfile;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub s: usize,
    pub n: usize,
    pub rho: f64,
    pub tau: f64,
    pub profile: MomentProfile,
    #[serde(rename = "F", default)]
    pub f: f64,
    #[serde(rename = "C", default = "one")]
    pub c_big: f64,
    #[serde(rename = "c", default = "one")]
    pub c_small: f64,
    /// Stand-in for the `psi_k` norm of the noise in the classical bounds.
    #[serde(default = "one")]
    pub psi_surrogate: f64,
    /// `‖M‖∞` of the seed, for the perturbed classical bound.
    #[serde(rename = "M_inf", default)]
    pub m_inf: f64,
}

fn one() -> f64 {
    1.0
}

impl BoundInputs {
    /// Inputs with `F = 0`, `C = c = 1`, `psi = 1` and `‖M‖∞ = 0`.
    pub fn new(s: usize, n: usize, rho: f64, tau: f64, profile: MomentProfile) -> Self {
        Self {
            s,
            n,
            rho,
            tau,
            profile,
            f: 0.0,
            c_big: 1.0,
            c_small: 1.0,
            psi_surrogate: 1.0,
            m_inf: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 || self.s > self.n {
            return Err(Error::arg(format!("need 1 <= s <= n, got s = {}, n = {}", self.s, self.n)));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::arg(format!("rho must lie in (0, 1), got {}", self.rho)));
        }
        let positive = [("tau", self.tau), ("C", self.c_big), ("c", self.c_small)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::arg(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [("F", self.f), ("psi_surrogate", self.psi_surrogate), ("M_inf", self.m_inf)];
        for (name, v) in nonneg {
            if !(v >= 0.0) {
                return Err(Error::arg(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if !(self.profile.mu2 > 0.0 && self.profile.k > 0.0) {
            return Err(Error::arg("profile needs mu2 > 0 and K > 0"));
        }
        Ok(())
    }

    /// `K / (mu2^{5/2} tau)`.
    fn prefactor(&self) -> f64 {
        self.profile.k / (self.profile.mu2.powf(2.5) * self.tau)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MainBound {
    pub m_required: f64,
    pub term1: f64,
    pub term2: f64,
}

/// Rows sufficient for the robust property of a perturbed matrix:
/// `term1 = C (K/(mu2^{5/2} tau) (1 + tau/rho (e^{2a} kappa sqrt(s ln(en/s)) + F)))^2`,
/// `term2 = ln(en)^{max(2a - 1, 1)}`.
pub fn m_main(inp: &BoundInputs) -> Result<MainBound> {
    inp.validate()?;
    let (s, n) = (inp.s as f64, inp.n as f64);
    let e = std::f64::consts::E;
    let p = &inp.profile;
    let width = (2.0 * p.alpha).exp() * p.kappa * (s * (e * n / s).ln()).sqrt() + inp.f;
    let term1 = inp.c_big * (inp.prefactor() * (1.0 + inp.tau / inp.rho * width)).powi(2);
    let term2 = (e * n).ln().powf((2.0 * p.alpha - 1.0).max(1.0));
    Ok(MainBound {
        m_required: term1.max(term2),
        term1,
        term2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassicalVariant {
    Plain,
    Perturbed,
}

/// `C (K/(mu2^{5/2} tau) (1 + tau/rho psi sqrt(s ln n)))^2`, with `psi` replaced
/// by `psi + ‖M‖∞` for the perturbed variant.
pub fn m_classical(inp: &BoundInputs, variant: ClassicalVariant) -> Result<f64> {
    inp.validate()?;
    let psi = match variant {
        ClassicalVariant::Plain => inp.psi_surrogate,
        ClassicalVariant::Perturbed => inp.psi_surrogate + inp.m_inf,
    };
    let root = (inp.s as f64 * (inp.n as f64).ln()).sqrt();
    Ok(inp.c_big * (inp.prefactor() * (1.0 + inp.tau / inp.rho * psi * root)).powi(2))
}

/// `exp(-c mu2^4 / K^2 m)`.
pub fn failure_probability(profile: &MomentProfile, m: usize, c: f64) -> f64 {
    (-c * profile.mu2.powi(4) / (profile.k * profile.k) * m as f64).exp()
}

/// `s ln(n / s)`, the information-theoretic order of the number of rows.
pub fn optimal_m_reference(s: usize, n: f64) -> Result<f64> {
    if s == 0 || s as f64 > n {
        return Err(Error::arg(format!("need 1 <= s <= n, got s = {s}, n = {n}")));
    }
    Ok(s as f64 * (n / s as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rademacher_like() -> MomentProfile {
        // Rademacher: K = mu2^2 + mu4 = 2
        MomentProfile::new(1.0, 0.0, 1.0, 1.0, 0.5, 8).unwrap()
    }

    #[test]
    fn main_bound_components() {
        let inp = BoundInputs::new(4, 1024, 0.5, 1.0, rademacher_like());
        let b = m_main(&inp).unwrap();
        assert!((b.term2 - (1024.0 * std::f64::consts::E).ln()).abs() < 1e-12);
        assert!((b.term1 - 3321.0).abs() < 5.0, "{}", b.term1);
        assert_eq!(b.m_required, b.term1);

        let mut a1 = inp.clone();
        a1.profile.alpha = 1.0;
        assert!((m_main(&a1).unwrap().term2 - (1024.0 * std::f64::consts::E).ln()).abs() < 1e-12);
        let mut a2 = inp.clone();
        a2.profile.alpha = 1.5;
        assert!((m_main(&a2).unwrap().term2 - (1024.0 * std::f64::consts::E).ln().powi(2)).abs() < 1e-9);
    }

    #[test]
    fn classical_collapse() {
        let inp = BoundInputs::new(4, 1024, 0.5, 1.0, rademacher_like());
        let plain = m_classical(&inp, ClassicalVariant::Plain).unwrap();
        assert_eq!(plain, m_classical(&inp, ClassicalVariant::Perturbed).unwrap());
        let expected = (2.0 * (1.0 + 2.0 * (4.0 * 1024f64.ln()).sqrt())).powi(2);
        assert!((plain - expected).abs() < 1e-9 * expected);
        let mut shifted = inp.clone();
        shifted.m_inf = 3.0;
        assert!(m_classical(&shifted, ClassicalVariant::Perturbed).unwrap() > plain);
    }

    #[test]
    fn failure_and_reference() {
        let p = rademacher_like();
        assert!((failure_probability(&p, 100, 1.0) - (-25.0f64).exp()).abs() < 1e-25);
        assert_eq!(failure_probability(&p, 0, 1.0), 1.0);
        let a = failure_probability(&p, 30, 1.0);
        assert!((failure_probability(&p, 60, 1.0) - a * a).abs() < 1e-15);
        assert!((optimal_m_reference(4, 1024.0).unwrap() - 4.0 * 256f64.ln()).abs() < 1e-12);
        assert_eq!(optimal_m_reference(7, 7.0).unwrap(), 0.0);
        assert!((optimal_m_reference(1, std::f64::consts::E).unwrap() - 1.0).abs() < 1e-15);
        assert!(optimal_m_reference(0, 5.0).is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut inp = BoundInputs::new(4, 1024, 0.5, 1.0, rademacher_like());
        inp.rho = 1.0;
        assert!(m_main(&inp).is_err());
        inp.rho = 0.5;
        inp.s = 2000;
        assert!(m_main(&inp).is_err());
    }
}
