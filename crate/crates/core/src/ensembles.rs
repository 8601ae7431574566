//! Seed matrices, noise grids and the perturbed ensemble `A = M + R`.

use serde::{Deserialize, Serialize};

use crate::distributions::{certify_reasonable, DistributionSpec, MomentProfile};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::RngStream;

/// Deterministic seed matrix `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SeedMatrixSpec {
    Zero,
    Constant { c: f64 },
    /// Column `column` filled with `value`, zeros elsewhere.
    Spike { column: usize, value: f64 },
    Explicit { rows: Vec<Vec<f64>> },
}

pub fn build_seed(spec: &SeedMatrixSpec, m: usize, n: usize) -> Result<DenseMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::DimensionMismatch(format!("seed dimensions {m}x{n}")));
    }
    match spec {
        SeedMatrixSpec::Zero => Ok(DenseMatrix::zeros(m, n)),
        SeedMatrixSpec::Constant { c } => Ok(DenseMatrix::filled(m, n, *c)),
        SeedMatrixSpec::Spike { column, value } => {
            if *column >= n {
                return Err(Error::DimensionMismatch(format!(
                    "spike column {column} out of range for n = {n}"
                )));
            }
            let mut a = DenseMatrix::zeros(m, n);
            for i in 0..m {
                a.set(i, *column, *value);
            }
            Ok(a)
        }
        SeedMatrixSpec::Explicit { rows } => {
            let a = DenseMatrix::from_rows(rows)?;
            if a.rows() != m || a.cols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "explicit seed is {}x{}, ensemble is {m}x{n}",
                    a.rows(),
                    a.cols()
                )));
            }
            Ok(a)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseOverride {
    pub row: usize,
    pub col: usize,
    pub law: DistributionSpec,
}

/// Per-entry noise laws: a default plus sparse overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseGrid {
    pub default: DistributionSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrides: Vec<NoiseOverride>,
}

impl NoiseGrid {
    pub fn iid(law: DistributionSpec) -> Self {
        Self {
            default: law,
            overrides: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub m: usize,
    pub n: usize,
    pub seed: SeedMatrixSpec,
    pub noise: NoiseGrid,
}

/// Tolerance for two entry variances to count as equal.
const CENTRALITY_TOL: f64 = 1e-12;

impl EnsembleSpec {
    pub fn iid(m: usize, n: usize, seed: SeedMatrixSpec, law: DistributionSpec) -> Self {
        Self {
            m,
            n,
            seed,
            noise: NoiseGrid::iid(law),
        }
    }

    /// Standard Gaussian entries, zero seed.
    pub fn gaussian(m: usize, n: usize) -> Self {
        Self::iid(m, n, SeedMatrixSpec::Zero, DistributionSpec::standard_gaussian())
    }

    /// Same ensemble with a different number of rows.
    pub fn with_rows(&self, m: usize) -> Self {
        Self { m, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "ensemble dimensions {}x{}",
                self.m, self.n
            )));
        }
        build_seed(&self.seed, self.m, self.n)?;
        self.noise.default.validate()?;
        let mu2 = self.noise.default.central_moment(2)?;
        for o in &self.noise.overrides {
            if o.row >= self.m || o.col >= self.n {
                return Err(Error::DimensionMismatch(format!(
                    "noise override at ({}, {}) outside {}x{}",
                    o.row, o.col, self.m, self.n
                )));
            }
            o.law.validate()?;
            let v = o.law.central_moment(2)?;
            if (v - mu2).abs() > CENTRALITY_TOL * mu2.abs().max(1.0) {
                return Err(Error::Centrality {
                    row: o.row,
                    col: o.col,
                    found: v,
                    expected: mu2,
                });
            }
        }
        Ok(())
    }

    /// Noise law of entry (i, j). The last matching override wins.
    pub fn law_at(&self, i: usize, j: usize) -> &DistributionSpec {
        self.noise
            .overrides
            .iter()
            .rev()
            .find(|o| o.row == i && o.col == j)
            .map_or(&self.noise.default, |o| &o.law)
    }

    fn row_laws(&self, i: usize) -> Vec<DistributionSpec> {
        let mut laws = vec![self.noise.default; self.n];
        for o in self.noise.overrides.iter().filter(|o| o.row == i) {
            laws[o.col] = o.law;
        }
        laws
    }

    pub fn seed_matrix(&self) -> Result<DenseMatrix> {
        build_seed(&self.seed, self.m, self.n)
    }

    /// `E{A}`: seed plus per-entry noise means, computed analytically.
    pub fn mean_matrix(&self) -> Result<DenseMatrix> {
        let mut a = self.seed_matrix()?;
        for i in 0..self.m {
            let laws = self.row_laws(i);
            for (x, law) in a.row_mut(i).iter_mut().zip(&laws) {
                *x += law.mean();
            }
        }
        Ok(a)
    }

    /// Draws row `i` of `M + R` from `stream`.
    pub fn sample_row_with(&self, seed_row: &[f64], i: usize, stream: &mut RngStream) -> Vec<f64> {
        if self.noise.overrides.is_empty() {
            let law = self.noise.default;
            seed_row.iter().map(|&s| s + law.sample(stream)).collect()
        } else {
            self.row_laws(i)
                .iter()
                .zip(seed_row)
                .map(|(law, &s)| s + law.sample(stream))
                .collect()
        }
    }

    /// Draws `A = M + R`; row `i` uses the substream `stream.split(i)`.
    pub fn sample(&self, stream: &RngStream) -> Result<DenseMatrix> {
        let seed = self.seed_matrix()?;
        let mut data = Vec::with_capacity(self.m * self.n);
        for i in 0..self.m {
            let mut rs = stream.split(i as u64);
            data.extend(self.sample_row_with(seed.row(i), i, &mut rs));
        }
        DenseMatrix::new(self.m, self.n, data)
    }

    fn distinct_laws(&self) -> Vec<DistributionSpec> {
        let mut laws = vec![self.noise.default];
        for o in &self.noise.overrides {
            if !laws.contains(&o.law) {
                laws.push(o.law);
            }
        }
        laws
    }
}

/// Moment range used for reasonability: `ceil(ln(e n))`, at least 2.
pub fn moment_range(n: usize) -> u32 {
    ((std::f64::consts::E * n as f64).ln().ceil() as u32).max(2)
}

/// Shared variance, worst-case third and fourth central moments, and the
/// reasonability constants of the centered noise.
pub fn ensemble_profile(ens: &EnsembleSpec) -> Result<MomentProfile> {
    ens.validate()?;
    let laws = ens.distinct_laws();
    let mu2 = laws[0].central_moment(2)?;
    if mu2 <= 0.0 {
        return Err(Error::arg("degenerate noise has zero variance; no moment profile"));
    }
    let mut mu3_abs: f64 = 0.0;
    let mut mu4: f64 = 0.0;
    let mut alpha: f64 = 0.5;
    for law in &laws {
        mu3_abs = mu3_abs.max(law.central_moment(3)?.abs());
        mu4 = mu4.max(law.central_moment(4)?);
        alpha = alpha.max(law.natural_alpha());
    }
    let r = moment_range(ens.n);
    let mut kappa: f64 = 0.0;
    for law in &laws {
        kappa = kappa.max(certify_reasonable(law, alpha, r)?);
    }
    MomentProfile::new(mu2, mu3_abs, mu4, kappa, alpha, r)
}

/// `||A||_{F,s}`: root of the `s` largest squared column norms.
pub fn local_frobenius(a: &DenseMatrix, s: usize) -> Result<f64> {
    if s == 0 || s > a.cols() {
        return Err(Error::arg(format!("s = {s} out of range 1..={}", a.cols())));
    }
    let mut norms = a.column_norms_sq();
    norms.sort_by(|x, y| y.total_cmp(x));
    Ok(norms[..s].iter().sum::<f64>().sqrt())
}

/// `F = min{ ||E A||_{F,s}, sqrt(s ln n) ||E A||_inf }`.
pub fn f_functional(mean: &DenseMatrix, s: usize) -> Result<f64> {
    let local = local_frobenius(mean, s)?;
    let n = mean.cols() as f64;
    let sup = (s as f64 * n.ln()).sqrt() * mean.max_abs();
    Ok(local.min(sup))
}
