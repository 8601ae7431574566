//! Row-major dense matrices and their CSV form.

use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(m: usize, n: usize, data: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch(format!("empty matrix {m}x{n}")));
        }
        if data.len() != m * n {
            return Err(Error::DimensionMismatch(format!(
                "{m}x{n} matrix needs {} entries, got {}",
                m * n,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::arg(format!(
                "non-finite entry at ({}, {})",
                pos / n,
                pos % n
            )));
        }
        Ok(Self { m, n, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Self::new(m, n, rows.concat())
    }

    pub fn filled(m: usize, n: usize, value: f64) -> Self {
        assert!(m > 0 && n > 0, "empty matrix");
        Self {
            m,
            n,
            data: vec![value; m * n],
        }
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self::filled(m, n, 0.0)
    }

    pub fn identity(n: usize) -> Self {
        let mut a = Self::zeros(n, n);
        for i in 0..n {
            a.data[i * n + i] = 1.0;
        }
        a
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    /// `A x`
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "matvec dimension");
        (0..self.m).map(|i| dot(self.row(i), x)).collect()
    }

    /// `A^T y`
    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.m, "matvec_t dimension");
        let mut out = vec![0.0; self.n];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(i)) {
                    *o += yi * a;
                }
            }
        }
        out
    }

    /// `self * other`
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n != other.m {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.m, self.n, other.m, other.n
            )));
        }
        let mut out = vec![0.0; self.m * other.n];
        for i in 0..self.m {
            for k in 0..self.n {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..other.n {
                        out[i * other.n + j] += a * other.get(k, j);
                    }
                }
            }
        }
        DenseMatrix::new(self.m, other.n, out)
    }

    pub fn column_norms_sq(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.m {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * a;
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.m, self.n, &self.data)
    }

    /// Numerical rank from singular values above `tol * sigma_max * max(m, n)`.
    pub fn rank(&self, tol: f64) -> usize {
        let sv = self.to_nalgebra().singular_values();
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        if smax == 0.0 {
            return 0;
        }
        let cut = tol * smax * self.m.max(self.n) as f64;
        sv.iter().filter(|&&s| s > cut).count()
    }

    /// CSV with a `# m n` header line and shortest round-trip decimals.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# {} {}\n", self.m, self.n);
        for i in 0..self.m {
            for (j, x) in self.row(i).iter().enumerate() {
                if j > 0 {
                    s.push(',');
                }
                write!(s, "{x}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    /// Parses the CSV form. The `# m n` header is optional; when present it must match.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if header.is_some() || !rows.is_empty() {
                    return Err(Error::Format(format!("line {}: misplaced header", lineno + 1)));
                }
                let dims: Vec<usize> = rest
                    .split_whitespace()
                    .map(str::parse)
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Format(format!("bad header `{line}`: {e}")))?;
                if dims.len() != 2 {
                    return Err(Error::Format(format!("header must be `# m n`, got `{line}`")));
                }
                header = Some((dims[0], dims[1]));
                continue;
            }
            let row = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Format("matrix CSV has no rows".into()));
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Format("rows have differing lengths".into()));
        }
        if let Some((hm, hn)) = header {
            if hm != rows.len() || hn != n {
                return Err(Error::Format(format!(
                    "header says {hm}x{hn} but data is {}x{n}",
                    rows.len()
                )));
            }
        }
        DenseMatrix::from_rows(&rows).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm1(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).sum()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}
