//! Sparse vectors, head/tail splits, rearranged norms and the cone `T_{rho,s}`.

use std::fmt::Write as _;

use rand::seq::index;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::matrix::norm2;
use crate::rng::RngStream;

/// Sparsity order `s`, tail weight `rho` and noise weight `tau`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RnspParams {
    pub s: usize,
    pub rho: f64,
    pub tau: f64,
}

impl RnspParams {
    pub fn new(s: usize, rho: f64, tau: f64) -> Result<Self> {
        let p = Self { s, rho, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s == 0 {
            return Err(Error::arg("sparsity s must be >= 1"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::arg(format!("rho must lie in (0,1), got {}", self.rho)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::arg(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }

    pub fn validate_for(&self, n: usize) -> Result<()> {
        self.validate()?;
        if self.s > n {
            return Err(Error::arg(format!("s = {} exceeds dimension n = {n}", self.s)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Entries are sorted by index; explicit zeros are dropped.
    pub fn new(n: usize, mut entries: Vec<(usize, f64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::arg("duplicate index in sparse vector"));
        }
        if let Some(&(i, _)) = entries.last() {
            if i >= n {
                return Err(Error::arg(format!("index {i} out of range for n = {n}")));
            }
        }
        if entries.iter().any(|e| !e.1.is_finite()) {
            return Err(Error::arg("non-finite sparse entry"));
        }
        entries.retain(|e| e.1 != 0.0);
        let (support, values) = entries.into_iter().unzip();
        Ok(Self { n, support, values })
    }

    pub fn from_dense(v: &[f64]) -> Self {
        let entries = v
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, x))
            .collect();
        Self::new(v.len(), entries).expect("dense vector is a valid sparse vector")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.n];
        for (&i, &x) in self.support.iter().zip(&self.values) {
            v[i] = x;
        }
        v
    }

    /// `index,value` lines preceded by a `# n` header.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# {}\n", self.n);
        for (i, x) in self.support.iter().zip(&self.values) {
            writeln!(s, "{i},{x}").unwrap();
        }
        s
    }

    /// Parses `index,value` lines. Without a `# n` header the dimension must be given.
    pub fn from_csv(text: &str, n: Option<usize>) -> Result<Self> {
        let mut dim = n;
        let mut entries = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            if let Some(rest) = line.strip_prefix('#') {
                let hn: usize = rest
                    .trim()
                    .parse()
                    .map_err(|e| Error::Format(format!("bad header `{line}`: {e}")))?;
                if dim.is_some_and(|d| d != hn) {
                    return Err(Error::Format(format!("header n = {hn} disagrees with {dim:?}")));
                }
                dim = Some(hn);
                continue;
            }
            let (i, x) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("expected `index,value`, got `{line}`")))?;
            let i: usize = i.trim().parse().map_err(|e| Error::Format(format!("{e}")))?;
            let x: f64 = x.trim().parse().map_err(|e| Error::Format(format!("{e}")))?;
            entries.push((i, x));
        }
        let n = dim.ok_or_else(|| Error::Format("sparse vector dimension unknown".into()))?;
        SparseVector::new(n, entries).map_err(|e| Error::Format(e.to_string()))
    }
}

fn check_s(s: usize, n: usize) -> Result<()> {
    if s == 0 || s > n {
        return Err(Error::arg(format!("s = {s} out of range 1..={n}")));
    }
    Ok(())
}

/// Indices of the `s` largest `|v_i|` (ties to the lowest index) and the rest, both ascending.
pub fn head_tail_split(v: &[f64], s: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    check_s(s, v.len())?;
    let mut order: Vec<usize> = (0..v.len()).collect();
    // stable: equal magnitudes keep ascending index order
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()));
    let mut head = order[..s].to_vec();
    let mut tail = order[s..].to_vec();
    head.sort_unstable();
    tail.sort_unstable();
    Ok((head, tail))
}

/// `||y*||_{2,s}`: l2 norm of the `s` largest-magnitude entries.
pub fn top_s_norm(y: &[f64], s: usize) -> Result<f64> {
    check_s(s, y.len())?;
    let mut sq: Vec<f64> = y.iter().map(|x| x * x).collect();
    if s < sq.len() {
        sq.select_nth_unstable_by(s - 1, |a, b| b.total_cmp(a));
    }
    Ok(sq[..s].iter().sum::<f64>().sqrt())
}

/// Head l2 norm and tail l1 norm for the split of `v` at order `s`.
pub fn head_tail_norms(v: &[f64], s: usize) -> Result<(f64, f64)> {
    let (head, tail) = head_tail_split(v, s)?;
    let h = head.iter().map(|&i| v[i] * v[i]).sum::<f64>().sqrt();
    let t = tail.iter().map(|&i| v[i].abs()).sum::<f64>();
    Ok((h, t))
}

/// Unit-norm tolerance in membership tests.
pub const UNIT_TOL: f64 = 1e-10;

/// Membership in `T_{rho,s}`: unit norm and head l2 mass above `(rho/sqrt s)` times tail l1 mass.
pub fn t_membership(v: &[f64], params: &RnspParams) -> Result<bool> {
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::arg("zero vector has no direction"));
    }
    params.validate_for(v.len())?;
    if (norm2(v) - 1.0).abs() > UNIT_TOL {
        return Ok(false);
    }
    let (head, tail) = head_tail_norms(v, params.s)?;
    Ok(head > params.rho / (params.s as f64).sqrt() * tail)
}

const SAMPLER_CAP: usize = 1000;

fn normalize(v: &mut [f64]) {
    let nrm = norm2(v);
    v.iter_mut().for_each(|x| *x /= nrm);
}

fn sparse_gaussian_direction(n: usize, s: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut v = vec![0.0; n];
    loop {
        for i in index::sample(rng, n, s).into_iter() {
            v[i] = rng.sample(StandardNormal);
        }
        if v.iter().any(|&x| x != 0.0) {
            normalize(&mut v);
            return v;
        }
    }
}

/// Draws a unit vector in `T_{rho,s}`.
///
/// With probability 1/2 the draw is an exactly `s`-sparse normalized Gaussian
/// (always a member). Otherwise it is a normalized convex mix of such a head
/// with a dense Gaussian direction, rejected until it lands in the cone.
pub fn sample_t(n: usize, params: &RnspParams, rng: &mut RngStream) -> Result<Vec<f64>> {
    params.validate_for(n)?;
    let s = params.s;
    if rng.gen::<bool>() {
        return Ok(sparse_gaussian_direction(n, s, rng));
    }
    for _ in 0..SAMPLER_CAP {
        let head = sparse_gaussian_direction(n, s, rng);
        let dense: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let dn = norm2(&dense);
        let lambda: f64 = rng.gen();
        let mut v: Vec<f64> = head
            .iter()
            .zip(&dense)
            .map(|(h, d)| (1.0 - lambda) * h + lambda * d / dn)
            .collect();
        if v.iter().all(|&x| x == 0.0) {
            continue;
        }
        normalize(&mut v);
        if t_membership(&v, params)? {
            return Ok(v);
        }
    }
    Err(Error::SamplerExhausted(SAMPLER_CAP))
}

/// Uniformly random support of size `s`, values i.i.d. from `law` (zeros redrawn).
pub fn sample_sparse_signal(
    n: usize,
    s: usize,
    law: &DistributionSpec,
    rng: &mut RngStream,
) -> Result<SparseVector> {
    if s > n {
        return Err(Error::arg(format!("s = {s} exceeds n = {n}")));
    }
    law.validate()?;
    if let DistributionSpec::PointMass { value } = law {
        if *value == 0.0 {
            return Err(Error::arg("signal law is identically zero"));
        }
    }
    let mut support: Vec<usize> = index::sample(rng, n, s).into_vec();
    support.sort_unstable();
    let entries = support
        .into_iter()
        .map(|i| {
            let mut x = law.sample(rng);
            while x == 0.0 {
                x = law.sample(rng);
            }
            (i, x)
        })
        .collect();
    SparseVector::new(n, entries)
}
