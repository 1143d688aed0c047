//! Standard-form linear programs: `min c.x  s.t.  A x = b, x >= 0`.
//!
//! Dense two-phase simplex on a full tableau with Bland's pivot rule. Optimal
//! solutions are always basic, so they carry at most `rows(A)` nonzeros.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{OrexError, Result};
use crate::numerics::Matrix;

const PIVOT_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 50_000;

#[derive(Debug, Clone)]
pub struct StandardLp {
    pub cost: Vec<f64>,
    pub constraints: Matrix,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal solution (meaningful when optimal).
    pub x: Vec<f64>,
    pub value: f64,
    /// Dual multipliers `y` with `A^T y <= c` at optimality; zero on redundant rows.
    pub duals: Vec<f64>,
    /// Basic column indices at termination.
    pub basis: Vec<usize>,
}

impl LpSolution {
    fn with_status(status: LpStatus, n: usize, k: usize) -> Self {
        Self {
            status,
            x: vec![0.0; n],
            value: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            duals: vec![0.0; k],
            basis: Vec::new(),
        }
    }
}

struct Tableau {
    /// `rows` constraint rows followed by the objective row; the last column is the rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rows(&self) -> usize {
        self.basis.len()
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.basis[r] = c;
    }

    /// Run the simplex method on the objective row, allowing only columns in
    /// `allowed` to enter. Returns `false` when the problem is unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        let obj = self.rows();
        for _ in 0..MAX_PIVOTS {
            // Bland: lowest-index column with negative reduced cost.
            let entering = (0..allowed).find(|&j| self.t[obj][j] < -PIVOT_TOL);
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows() {
                let a = self.t[i][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs(i) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= PIVOT_TOL * (1.0 + lr.abs());
                            if ratio < lr && !tie || tie && self.basis[i] < self.basis[li] {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c),
            }
        }
        Err(OrexError::InfeasibleModel("simplex pivot limit reached".into()))
    }
}

/// Solve a standard-form LP.
pub fn solve_lp(p: &StandardLp) -> Result<LpSolution> {
    let (k, n) = p.constraints.shape();
    if p.cost.len() != n || p.rhs.len() != k {
        return Err(OrexError::InvalidInput(format!(
            "LP dimensions disagree: A is {k}x{n}, c has {}, b has {}",
            p.cost.len(),
            p.rhs.len()
        )));
    }
    if p.cost.iter().chain(&p.rhs).chain(p.constraints.iter()).any(|v| !v.is_finite()) {
        return Err(OrexError::InvalidInput("LP data has non-finite entries".into()));
    }

    // Phase 1 tableau: [A | I | b] with rows flipped so that b >= 0.
    let cols = n + k;
    let mut t = Vec::with_capacity(k + 1);
    for i in 0..k {
        let sign = if p.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        let mut row = vec![0.0; cols + 1];
        for j in 0..n {
            row[j] = sign * p.constraints[(i, j)];
        }
        row[n + i] = 1.0;
        row[cols] = sign * p.rhs[i];
        t.push(row);
    }
    // Phase-1 objective: minimize the sum of artificials, expressed in reduced form.
    let mut obj = vec![0.0; cols + 1];
    for row in &t {
        for j in 0..n {
            obj[j] -= row[j];
        }
        obj[cols] -= row[cols];
    }
    t.push(obj);
    let mut tab = Tableau { t, basis: (n..n + k).collect(), cols };

    if !tab.optimize(n)? {
        // Phase 1 is bounded below by zero; this cannot happen.
        return Err(OrexError::InfeasibleModel("phase one reported unbounded".into()));
    }
    let infeas = -tab.t[k][cols];
    let bscale = 1.0 + p.rhs.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
    if infeas > 1e-9 * bscale {
        return Ok(LpSolution::with_status(LpStatus::Infeasible, n, k));
    }

    // Drive artificials out of the basis; rows where that fails are redundant.
    let mut redundant = vec![false; k];
    for r in 0..k {
        if tab.basis[r] >= n {
            let col = (0..n).find(|&j| tab.t[r][j].abs() > 1e-9);
            match col {
                Some(c) => tab.pivot(r, c),
                None => redundant[r] = true,
            }
        }
    }
    let keep: Vec<usize> = (0..k).filter(|&r| !redundant[r]).collect();
    let mut t2: Vec<Vec<f64>> = keep.iter().map(|&r| tab.t[r].clone()).collect();
    let basis2: Vec<usize> = keep.iter().map(|&r| tab.basis[r]).collect();

    // Phase 2 objective row in reduced form.
    let mut obj = vec![0.0; cols + 1];
    obj[..n].copy_from_slice(&p.cost);
    for (row, &b) in t2.iter().zip(&basis2) {
        let cb = p.cost[b];
        if cb != 0.0 {
            for (o, v) in obj.iter_mut().zip(row) {
                *o -= cb * v;
            }
        }
    }
    t2.push(obj);
    let mut tab = Tableau { t: t2, basis: basis2, cols };
    if !tab.optimize(n)? {
        return Ok(LpSolution::with_status(LpStatus::Unbounded, n, k));
    }

    let mut x = vec![0.0; n];
    for (i, &b) in tab.basis.iter().enumerate() {
        x[b] = tab.rhs(i).max(0.0);
    }
    let value = p.cost.iter().zip(&x).map(|(c, v)| c * v).sum();

    // Duals from B^T y = c_B on the non-redundant rows.
    let m = keep.len();
    let mut duals = vec![0.0; k];
    if m > 0 {
        let bt = DMatrix::from_fn(m, m, |i, j| p.constraints[(keep[j], tab.basis[i])]);
        let cb = DVector::from_fn(m, |i, _| p.cost[tab.basis[i]]);
        if let Some(y) = bt.lu().solve(&cb) {
            for (j, &r) in keep.iter().enumerate() {
                duals[r] = y[j];
            }
        }
    }
    Ok(LpSolution { status: LpStatus::Optimal, x, value, duals, basis: tab.basis })
}
