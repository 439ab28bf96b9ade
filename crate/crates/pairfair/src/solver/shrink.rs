//! Shrinks recorded snapshots to a sparse stochastic model via a small LP.
//!
//! Variables are a distribution `p` over snapshots plus, for robust goals,
//! free minimum-value variables. One LP covers both formulations:
//!
//! constrained (no free variables): maximize `sum_t p_t * objective_t`
//! subject to `sum_t p_t * (value_{c,t} - rhs_c) <= 0` per constraint;
//!
//! robust: maximize `sum_g mu_g` subject to
//! `mu_g(c) + sum_t p_t * value_{c,t} <= rhs_c`, which makes each `mu_g` the
//! minimum of its expected accuracies (values carry weight -1).
//!
//! A basic optimal solution has at most one nonzero per LP row, so the
//! mixture's support never exceeds the constraint count plus one.

use super::simplex::{solve, LpOutcome};
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct ShrinkRow {
    /// `sum_t w_t * acc_t` on validation, one entry per snapshot.
    pub values: Vec<f64>,
    pub rhs: f64,
    pub xi: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct ShrinkProblem {
    /// Validation objective per snapshot (AUC, or minus MSE).
    pub objective: Vec<f64>,
    pub rows: Vec<ShrinkRow>,
    pub n_xi: usize,
}

#[derive(Debug, Clone)]
pub enum ShrinkSolution {
    Mixture {
        /// Snapshot weights; nonnegative, sum 1, small support.
        weights: Vec<f64>,
        /// Optimal free-variable values (robust goals only).
        xi: Vec<f64>,
        /// LP optimum: expected objective, or the free-variable sum.
        lp_objective: f64,
        /// Expected row slacks `sum_t p_t (value - rhs) (+ xi)`.
        expected_slacks: Vec<f64>,
    },
    /// LP infeasible: index of the snapshot minimizing the worst row slack.
    Fallback { index: usize, max_slack: f64 },
}

/// Worst row slack of a single snapshot, free variables excluded.
pub fn snapshot_max_slack(problem: &ShrinkProblem, t: usize) -> f64 {
    problem
        .rows
        .iter()
        .map(|r| r.values[t] - r.rhs)
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn shrink(problem: &ShrinkProblem) -> Result<ShrinkSolution> {
    let t_n = problem.objective.len();
    assert!(t_n >= 1, "shrink needs at least one snapshot");
    let m = problem.rows.len();
    let n_xi = problem.n_xi;
    // Columns: p (t_n), mu (n_xi), one slack per constraint row.
    let n = t_n + n_xi + m;
    let mut c = vec![0.0; n];
    if n_xi == 0 {
        c[..t_n].copy_from_slice(&problem.objective);
    } else {
        for g in 0..n_xi {
            c[t_n + g] = 1.0;
        }
    }
    let mut a = Vec::with_capacity(m + 1);
    let mut b = Vec::with_capacity(m + 1);
    for (ci, row) in problem.rows.iter().enumerate() {
        let mut r = vec![0.0; n];
        for t in 0..t_n {
            r[t] = row.values[t] - if row.xi.is_some() { 0.0 } else { row.rhs };
        }
        if let Some(g) = row.xi {
            r[t_n + g] = 1.0;
        }
        r[t_n + n_xi + ci] = 1.0;
        // Equality rhs must be nonnegative for the solver; xi rows carry
        // their rhs on the right, others fold it into the coefficients.
        b.push(if row.xi.is_some() { row.rhs } else { 0.0 });
        a.push(r);
    }
    let mut r = vec![0.0; n];
    for t in 0..t_n {
        r[t] = 1.0;
    }
    a.push(r);
    b.push(1.0);
    debug_assert!(b.iter().all(|&v| v >= 0.0));

    match solve(&c, &a, &b)? {
        LpOutcome::Infeasible => {
            let mut best = 0;
            for t in 1..t_n {
                if snapshot_max_slack(problem, t) < snapshot_max_slack(problem, best) {
                    best = t;
                }
            }
            Ok(ShrinkSolution::Fallback {
                index: best,
                max_slack: snapshot_max_slack(problem, best),
            })
        }
        LpOutcome::Optimal { x, value } => {
            let mut weights: Vec<f64> = x[..t_n]
                .iter()
                .map(|&w| if w > 1e-9 { w } else { 0.0 })
                .collect();
            let sum: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= sum;
            }
            let xi = x[t_n..t_n + n_xi].to_vec();
            let expected_slacks = problem
                .rows
                .iter()
                .map(|row| {
                    let e: f64 = row
                        .values
                        .iter()
                        .zip(&weights)
                        .map(|(v, p)| p * v)
                        .sum();
                    e - row.rhs + row.xi.map_or(0.0, |g| xi[g])
                })
                .collect();
            Ok(ShrinkSolution::Mixture {
                weights,
                xi,
                lp_objective: value,
                expected_slacks,
            })
        }
    }
}
