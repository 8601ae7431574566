//! Dense two-phase tableau simplex with Bland's rule.
//!
//! Problems have the form `min c^T x  s.t.  A x = b`, each variable either
//! nonnegative or free. Free variables are split internally into a difference
//! of two nonnegative columns. Artificial columns are kept in the tableau after
//! phase 1 (they are barred from re-entering) so the equality duals can be read
//! straight off their reduced costs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LowerBound {
    Zero,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    /// Equality rows, each of length `c.len()`.
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lower: Vec<LowerBound>,
}

impl LpProblem {
    /// All variables nonnegative, no rows yet.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        Self {
            c,
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            lower: vec![LowerBound::Zero; n],
        }
    }

    pub fn add_row(&mut self, row: Vec<f64>, rhs: f64) {
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        if self.lower.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} bounds for {n} variables",
                self.lower.len()
            )));
        }
        if self.a_eq.len() != self.b_eq.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} right-hand sides",
                self.a_eq.len(),
                self.b_eq.len()
            )));
        }
        if let Some(r) = self.a_eq.iter().position(|r| r.len() != n) {
            return Err(Error::DimensionMismatch(format!("row {r} has wrong length")));
        }
        let finite = self.c.iter().chain(self.b_eq.iter()).all(|x| x.is_finite())
            && self.a_eq.iter().flatten().all(|x| x.is_finite());
        if !finite {
            return Err(Error::arg("non-finite LP data"));
        }
        Ok(())
    }

    /// `b^T y` and the reduced costs `c - A^T y`.
    pub fn dual_objective(&self, y: &[f64]) -> (f64, Vec<f64>) {
        let obj = self.b_eq.iter().zip(y).map(|(b, y)| b * y).sum();
        let mut red = self.c.clone();
        for (row, &yi) in self.a_eq.iter().zip(y) {
            for (r, &a) in red.iter_mut().zip(row) {
                *r -= a * yi;
            }
        }
        (obj, red)
    }

    /// Absolute primal/dual objective gap of a solution, or `None` when the
    /// duals are infeasible beyond `tol`.
    pub fn duality_gap(&self, sol: &LpSolution, tol: f64) -> Option<f64> {
        let (dual_obj, red) = self.dual_objective(&sol.duals);
        for (r, lb) in red.iter().zip(&self.lower) {
            let bad = match lb {
                LowerBound::Zero => *r < -tol,
                LowerBound::Unbounded => r.abs() > tol,
            };
            if bad {
                return None;
            }
        }
        Some((sol.objective - dual_obj).abs())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Equality-row duals `y` with `c - A^T y` dual feasible at optimality.
    pub duals: Vec<f64>,
}

pub const MAX_PIVOTS: usize = 1_000_000;
const PIVOT_EPS: f64 = 1e-9;
const COST_EPS: f64 = 1e-10;

struct Tableau {
    rows: usize,
    cols: usize, // structural + artificial, excluding rhs
    width: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
    obj: Vec<f64>, // reduced costs, last entry = -objective value
    pivots: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.t[r * self.width + self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) -> Result<()> {
        self.pivots += 1;
        if self.pivots > MAX_PIVOTS {
            return Err(Error::SolverStall(MAX_PIVOTS));
        }
        let w = self.width;
        let p = self.t[pr * w + pc];
        for c in 0..w {
            self.t[pr * w + c] /= p;
        }
        let prow: Vec<f64> = self.t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let f = self.t[r * w + pc];
            if f != 0.0 {
                for (c, &pv) in prow.iter().enumerate() {
                    self.t[r * w + c] -= f * pv;
                }
                self.t[r * w + pc] = 0.0;
            }
        }
        let f = self.obj[pc];
        if f != 0.0 {
            for (c, &pv) in prow.iter().enumerate() {
                self.obj[c] -= f * pv;
            }
            self.obj[pc] = 0.0;
        }
        self.basis[pr] = pc;
        Ok(())
    }

    /// Bland iterations restricted to columns `< allowed`. Returns false on unboundedness.
    fn run(&mut self, allowed: usize) -> Result<bool> {
        loop {
            let Some(enter) = (0..allowed).find(|&j| self.obj[j] < -COST_EPS) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > PIVOT_EPS {
                    // rounding can leave a basic value slightly negative
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie
                                || tie && self.basis[r] < self.basis[lr]
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, enter)?,
            }
        }
    }

    fn remove_row(&mut self, r: usize) {
        let w = self.width;
        self.t.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }
}

/// Solves the LP. Infeasible and unbounded outcomes are statuses, not errors.
pub fn solve_lp(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars();
    let m = p.a_eq.len();

    // internal columns: one per variable, plus a negative copy for each free variable
    let mut col_of: Vec<(usize, f64)> = (0..n).map(|j| (j, 1.0)).collect();
    for j in 0..n {
        if p.lower[j] == LowerBound::Unbounded {
            col_of.push((j, -1.0));
        }
    }
    let ns = col_of.len();
    let cols = ns + m;
    let width = cols + 1;

    let b_scale = 1.0 + p.b_eq.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    let mut sign = vec![1.0; m];
    let mut t = vec![0.0; m * width];
    for r in 0..m {
        if p.b_eq[r] < 0.0 {
            sign[r] = -1.0;
        }
        for (k, &(j, s)) in col_of.iter().enumerate() {
            t[r * width + k] = sign[r] * s * p.a_eq[r][j];
        }
        t[r * width + ns + r] = 1.0;
        t[r * width + cols] = sign[r] * p.b_eq[r];
    }
    // phase 1 objective: sum of artificials, priced out
    let mut obj = vec![0.0; width];
    for r in 0..m {
        for c in 0..ns {
            obj[c] -= t[r * width + c];
        }
        obj[cols] -= t[r * width + cols];
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        width,
        t,
        basis: (ns..ns + m).collect(),
        obj,
        pivots: 0,
    };
    // original row index of each tableau row, to map duals back after removals
    let mut row_ids: Vec<usize> = (0..m).collect();

    tab.run(ns)?;
    let infeas = -tab.obj[cols];
    if infeas > 1e-9 * b_scale {
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            x: vec![0.0; n],
            objective: f64::NAN,
            iterations: tab.pivots,
            duals: vec![0.0; m],
        });
    }

    // drive artificials out of the basis; drop redundant rows
    let mut r = 0;
    while r < tab.rows {
        if tab.basis[r] >= ns {
            match (0..ns).find(|&c| tab.at(r, c).abs() > PIVOT_EPS) {
                Some(c) => {
                    tab.pivot(r, c)?;
                    r += 1;
                }
                None => {
                    tab.remove_row(r);
                    row_ids.remove(r);
                }
            }
        } else {
            r += 1;
        }
    }

    // phase 2 reduced costs: c_j - c_B^T T_j over all columns (artificials have cost 0)
    let mut cost = vec![0.0; cols];
    for (k, &(j, s)) in col_of.iter().enumerate() {
        cost[k] = s * p.c[j];
    }
    let mut obj = vec![0.0; width];
    obj[..cols].copy_from_slice(&cost);
    for r in 0..tab.rows {
        let cb = cost[tab.basis[r]];
        if cb != 0.0 {
            for c in 0..width {
                obj[c] -= cb * tab.at(r, c);
            }
        }
    }
    tab.obj = obj;

    let bounded = tab.run(ns)?;
    if !bounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective: f64::NEG_INFINITY,
            iterations: tab.pivots,
            duals: vec![0.0; m],
        });
    }

    let mut x = vec![0.0; n];
    for r in 0..tab.rows {
        let k = tab.basis[r];
        if k < ns {
            let (j, s) = col_of[k];
            x[j] += s * tab.rhs(r);
        }
    }
    let objective = p.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    // reduced cost of artificial r is -y_r (in the sign-flipped row space)
    let mut duals = vec![0.0; m];
    for &orig in &row_ids {
        duals[orig] = -tab.obj[ns + orig] * sign[orig];
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective,
        iterations: tab.pivots,
        duals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gap_ok(p: &LpProblem, s: &LpSolution) {
        let gap = p.duality_gap(s, 1e-8).expect("dual feasible");
        assert!(gap <= 1e-9 * (1.0 + s.objective.abs()), "gap {gap}");
    }

    #[test]
    fn single_equality() {
        let mut p = LpProblem::new(vec![1.0]);
        p.add_row(vec![1.0], 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective - 1.0).abs() < 1e-12);
        gap_ok(&p, &s);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut p = LpProblem::new(vec![1.0]);
        p.add_row(vec![1.0], 1.0);
        p.add_row(vec![1.0], 2.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_without_rows() {
        let p = LpProblem::new(vec![-1.0]);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_negative_rhs() {
        // min x0 + 2 x1 s.t. x0 - x1 = -3, x0 free, x1 >= 0 -> x1 = 0? no: x0 = x1 - 3,
        // objective 3 x1 - 3 minimized at x1 = 0, x0 = -3
        let mut p = LpProblem::new(vec![1.0, 2.0]);
        p.lower[0] = LowerBound::Unbounded;
        p.add_row(vec![1.0, -1.0], -3.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] + 3.0).abs() < 1e-12 && s.x[1].abs() < 1e-12);
        gap_ok(&p, &s);
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let mut p = LpProblem::new(vec![1.0, 1.0, 0.0]);
        p.add_row(vec![1.0, 1.0, 1.0], 2.0);
        p.add_row(vec![2.0, 2.0, 2.0], 4.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(s.objective.abs() < 1e-12);
        assert!((s.x[2] - 2.0).abs() < 1e-12);
        gap_ok(&p, &s);
    }

    #[test]
    fn classic_degenerate_lp_terminates() {
        // Beale's cycling example in equality form with slacks
        let c = vec![-0.75, 150.0, -0.02, 6.0, 0.0, 0.0, 0.0];
        let mut p = LpProblem::new(c);
        p.add_row(vec![0.25, -60.0, -0.04, 9.0, 1.0, 0.0, 0.0], 0.0);
        p.add_row(vec![0.5, -90.0, -0.02, 3.0, 0.0, 1.0, 0.0], 0.0);
        p.add_row(vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0], 1.0);
        let s = solve_lp(&p).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
        gap_ok(&p, &s);
    }

    #[test]
    fn dimension_errors() {
        let mut p = LpProblem::new(vec![1.0, 1.0]);
        p.add_row(vec![1.0], 1.0);
        assert!(solve_lp(&p).is_err());
    }
}
