//! Experiment configuration and its validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::ensembles::EnsembleSpec;
use crate::error::{Error, Result};
use crate::sparse::RnspParams;

/// Version of the configuration schema this build reads.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Phase,
    Certify,
    Recover,
    Smallball,
    Width,
    Mendelson,
    Lemmas,
    Bounds,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Phase => "phase",
            ExperimentKind::Certify => "certify",
            ExperimentKind::Recover => "recover",
            ExperimentKind::Smallball => "smallball",
            ExperimentKind::Width => "width",
            ExperimentKind::Mendelson => "mendelson",
            ExperimentKind::Lemmas => "lemmas",
            ExperimentKind::Bounds => "bounds",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Row counts. Each grid point uses the ensemble with `m` replaced.
    pub m: Vec<usize>,
    pub s: Vec<usize>,
    /// Ambient dimensions for the `bounds` table; defaults to the ensemble's `n`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub n: Vec<usize>,
}

/// Kind-specific knobs. Every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    /// Law of the nonzero signal values.
    pub signal: DistributionSpec,
    /// Recovery tolerance relative to `1 + ‖x‖∞`.
    pub tol: f64,
    /// Norm of the measurement noise in `recover`; also the denoising radius.
    pub noise_level: f64,
    /// Small-ball level; defaults to `sqrt(mu2) / 4`.
    pub eps: Option<f64>,
    pub theta: f64,
    /// Deviation levels for `mendelson`; empty means `t_factor (mu2^2/K) sqrt(m)`.
    pub t: Vec<f64>,
    pub t_factor: f64,
    /// Sampled cone directions.
    pub n_u: usize,
    /// Monte-Carlo sample size for `smallball` rows and `lemmas`.
    pub samples: usize,
    /// Constant in the width bound.
    pub cw: f64,
    /// Absolute constants `C` and `c` of the sample-complexity bounds.
    #[serde(rename = "C")]
    pub c_big: f64,
    #[serde(rename = "c")]
    pub c_small: f64,
    pub psi_surrogate: f64,
    /// Matrix CSV for `certify`; sampled from the ensemble when absent.
    pub matrix: Option<PathBuf>,
    pub falsify_inits: usize,
    pub falsify_iters: usize,
    pub rnsp_samples: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            signal: DistributionSpec::standard_gaussian(),
            tol: 1e-6,
            noise_level: 0.0,
            eps: None,
            theta: 0.25,
            t: Vec::new(),
            t_factor: 0.1,
            n_u: 50,
            samples: 10_000,
            cw: 1.0,
            c_big: 1.0,
            c_small: 1.0,
            psi_surrogate: 1.0,
            matrix: None,
            falsify_inits: 50,
            falsify_iters: 200,
            rnsp_samples: 1000,
        }
    }
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_version")]
    pub schema_version: u32,
    /// May be omitted when the CLI subcommand supplies it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<ExperimentKind>,
    pub ensemble: EnsembleSpec,
    pub params: RnspParams,
    pub grids: Grids,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub options: Options,
}

impl ExperimentConfig {
    /// Parses JSON, reporting the field path of any type error.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::schema(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::schema("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn kind(&self) -> Result<ExperimentKind> {
        self.kind.ok_or_else(|| Error::schema("kind", "experiment kind is missing"))
    }

    /// Semantic checks beyond the JSON shape; errors name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            ));
        }
        if self.grids.m.is_empty() {
            return Err(Error::schema("grids.m", "grid must be nonempty"));
        }
        if self.grids.s.is_empty() {
            return Err(Error::schema("grids.s", "grid must be nonempty"));
        }
        if let Some(k) = self.grids.m.iter().position(|&m| m == 0) {
            return Err(Error::schema(format!("grids.m[{k}]"), "row count must be positive"));
        }
        let n = self.ensemble.n;
        if let Some(k) = self.grids.s.iter().position(|&s| s == 0 || s > n) {
            return Err(Error::schema(format!("grids.s[{k}]"), format!("s must lie in 1..={n}")));
        }
        if let Some(k) = self.grids.n.iter().position(|&v| v == 0) {
            return Err(Error::schema(format!("grids.n[{k}]"), "dimension must be positive"));
        }
        if self.trials == 0 {
            return Err(Error::schema("trials", "need at least one trial"));
        }
        self.ensemble
            .validate()
            .map_err(|e| Error::schema("ensemble", e.to_string()))?;
        self.params
            .validate_for(n)
            .map_err(|e| Error::schema("params", e.to_string()))?;
        let o = &self.options;
        o.signal
            .validate()
            .map_err(|e| Error::schema("options.signal", e.to_string()))?;
        let checks = [
            ("options.tol", o.tol >= 0.0),
            ("options.noise_level", o.noise_level >= 0.0 && o.noise_level.is_finite()),
            ("options.eps", o.eps.map_or(true, |e| e > 0.0 && e.is_finite())),
            ("options.theta", (0.0..=1.0).contains(&o.theta)),
            ("options.t", o.t.iter().all(|t| *t >= 0.0 && t.is_finite())),
            ("options.t_factor", o.t_factor > 0.0),
            ("options.n_u", o.n_u > 0),
            ("options.samples", o.samples > 0),
            ("options.cw", o.cw > 0.0),
            ("options.C", o.c_big > 0.0),
            ("options.c", o.c_small > 0.0),
            ("options.psi_surrogate", o.psi_surrogate >= 0.0),
            ("options.falsify_inits", o.falsify_inits > 0),
            ("options.rnsp_samples", o.rnsp_samples > 0),
        ];
        if let Some((path, _)) = checks.iter().find(|(_, ok)| !ok) {
            return Err(Error::schema(*path, "value out of range"));
        }
        Ok(())
    }
}
