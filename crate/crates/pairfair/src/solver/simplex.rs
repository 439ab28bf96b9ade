//! Small dense two-phase simplex method with Bland's rule.
//!
//! Solves `maximize c·x  subject to  A x = b, x >= 0` with `b >= 0`
//! (callers flip row signs as needed). Sized for the shrink problem:
//! around a hundred variables and a handful of rows, so a full tableau and
//! O(mn) pivots are plenty. Bland's rule (lowest eligible index enters,
//! lowest-index basic leaves on ratio ties) rules out cycling, and the
//! returned solution is basic: at most `m` coordinates are nonzero.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
}

const EPS: f64 = 1e-9;

struct Tableau {
    rows: Vec<Vec<f64>>,
    /// Reduced-cost row; the last entry holds minus the objective value.
    obj: Vec<f64>,
    basis: Vec<usize>,
    ncols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, j: usize) {
        let piv = self.rows[r][j];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..self.rows.len() {
            if i != r {
                let f = self.rows[i][j];
                if f != 0.0 {
                    for col in 0..=self.ncols {
                        self.rows[i][col] -= f * self.rows[r][col];
                    }
                }
            }
        }
        let f = self.obj[j];
        if f != 0.0 {
            for col in 0..=self.ncols {
                self.obj[col] -= f * self.rows[r][col];
            }
        }
        self.basis[r] = j;
    }

    /// Runs Bland pivots until no reduced cost is positive. `allowed` bounds
    /// the entering columns. Returns false on unboundedness.
    fn run(&mut self, allowed: usize) -> Result<bool> {
        for _ in 0..100_000 {
            let entering = (0..allowed).find(|&j| self.obj[j] > EPS);
            let j = match entering {
                Some(j) => j,
                None => return Ok(true),
            };
            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for i in 0..self.rows.len() {
                let a = self.rows[i][j];
                if a > EPS {
                    let ratio = self.rows[i][self.ncols] / a;
                    let better = ratio < best - EPS
                        || (ratio < best + EPS
                            && leave.map_or(true, |l| self.basis[i] < self.basis[l]));
                    if better {
                        best = ratio;
                        leave = Some(i);
                    }
                }
            }
            match leave {
                Some(r) => self.pivot(r, j),
                None => return Ok(false),
            }
        }
        Err(Error::Internal("simplex pivot limit exceeded".into()))
    }
}

/// Maximizes `c·x` over `{A x = b, x >= 0}`; `b` must be nonnegative.
pub fn solve(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpOutcome> {
    let m = a.len();
    let n = c.len();
    debug_assert!(b.iter().all(|&v| v >= 0.0), "rhs must be nonnegative");
    let ncols = n + m;
    let mut rows = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        let mut r = Vec::with_capacity(ncols + 1);
        r.extend_from_slice(row);
        for k in 0..m {
            r.push(if k == i { 1.0 } else { 0.0 });
        }
        r.push(b[i]);
        rows.push(r);
    }
    // Phase 1: maximize minus the artificial sum. With the artificial basis,
    // the reduced-cost row is the column sum of A and the rhs.
    let mut obj = vec![0.0; ncols + 1];
    for j in 0..n {
        obj[j] = a.iter().map(|row| row[j]).sum();
    }
    obj[ncols] = b.iter().sum::<f64>();
    let mut t = Tableau {
        rows,
        obj,
        basis: (n..n + m).collect(),
        ncols,
    };
    if !t.run(ncols)? {
        return Err(Error::Internal("phase-1 unbounded".into()));
    }
    if -t.obj[ncols] < -1e-7 {
        return Ok(LpOutcome::Infeasible);
    }
    // Drive leftover artificials out of the basis where possible; rows that
    // resist are redundant and their artificial stays basic at zero.
    for i in 0..m {
        if t.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| t.rows[i][j].abs() > EPS) {
                t.pivot(i, j);
            }
        }
    }
    // Phase 2: the real objective, artificials barred from entering.
    t.obj = vec![0.0; ncols + 1];
    t.obj[..n].copy_from_slice(c);
    for i in 0..m {
        let bi = t.basis[i];
        let f = t.obj[bi];
        if f != 0.0 {
            for col in 0..=ncols {
                t.obj[col] -= f * t.rows[i][col];
            }
        }
    }
    if !t.run(n)? {
        return Err(Error::Internal("objective unbounded".into()));
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.rows[i][ncols].max(0.0);
        }
    }
    Ok(LpOutcome::Optimal {
        x,
        value: -t.obj[ncols],
    })
}
