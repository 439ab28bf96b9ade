//! Hinge surrogates for the pairwise metrics and the two players' payoffs.
//!
//! Every metric here is a mean over a set of score differences `d`. Training
//! replaces the indicator `I[d > 0]` by a hinge bound with unit margin:
//! `hinge_lower` from below for quantities being maximized, `hinge_upper`
//! from above for quantities being penalized. A constraint is a signed
//! combination of cell accuracies plus an optional free variable; choosing
//! the bound by the sign of each term makes the surrogate slack an upper
//! bound on the exact slack, so surrogate-feasible implies feasible.
//!
//! Sign convention, stated once and used everywhere: the theta-player
//! maximizes `lambda_1 * objective - sum_c lambda_{c+1} * surrogate_slack_c`,
//! while the lambda-player's payoff gradient is the vector of exact slacks
//! prefixed by a zero for the objective coordinate.

use crate::dataset::{Dataset, PairSet, CELL_ATTR_GREATER, CELL_ATTR_LESS};
use crate::error::{Error, Result};
use crate::metrics::Criterion;
use crate::model::Model;

/// Lower bound on the step indicator: `l(d) = 1 - max(0, 1 - d) = min(d, 1)`.
pub fn hinge_lower(d: f64) -> f64 {
    d.min(1.0)
}

/// Subderivative of `hinge_lower`, fixed to 1 at the kink `d = 1`.
pub fn hinge_lower_deriv(d: f64) -> f64 {
    if d <= 1.0 {
        1.0
    } else {
        0.0
    }
}

/// Upper bound on the step indicator: `u(d) = max(0, 1 + d)`.
pub fn hinge_upper(d: f64) -> f64 {
    (1.0 + d).max(0.0)
}

/// Subderivative of `hinge_upper`, fixed to 1 at the kink `d = -1`.
pub fn hinge_upper_deriv(d: f64) -> f64 {
    if d < -1.0 {
        0.0
    } else {
        1.0
    }
}

/// Selects a family of pairs and the direction their accuracy is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellSel {
    /// Supervised pairs with better member in group `i`, worse in group `j`.
    Cell(usize, usize),
    /// Union of `Cell(i, *)`: group `i` supplies the better member.
    Row(usize),
    /// Union of `Cell(*, i)`: group `i` supplies the worse member.
    Col(usize),
    /// Every supervised pair (the AUC).
    All,
    AttrGreater,
    AttrLess,
    /// Parity couples, probability that the group-`i` member outscores the
    /// group-`j` member.
    Parity(usize, usize),
}

#[derive(Debug, Clone, Copy)]
pub struct Term {
    pub sel: CellSel,
    pub weight: f64,
}

/// One row of the constraint system: `sum_t w_t * acc_t + xi - rhs <= 0`.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub label: String,
    pub terms: Vec<Term>,
    /// Index of the free variable appearing with coefficient +1, if any.
    pub xi: Option<usize>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub constraints: Vec<Constraint>,
    /// Number of free variables referenced by `xi` indices.
    pub n_xi: usize,
}

impl ConstraintSet {
    pub fn m(&self) -> usize {
        self.constraints.len()
    }
}

fn delta_pair(label: String, a: CellSel, b: CellSel, epsilon: f64) -> Constraint {
    Constraint {
        label,
        terms: vec![Term { sel: a, weight: 1.0 }, Term { sel: b, weight: -1.0 }],
        xi: None,
        rhs: epsilon,
    }
}

/// Constraints `Delta_c <= epsilon`, both directions for every unordered
/// cell or marginal pair the criterion compares.
pub fn constraint_set(criterion: Criterion, k: usize, epsilon: f64) -> Result<ConstraintSet> {
    if criterion.needs_continuous() != (k == 0) {
        return Err(Error::Config(format!(
            "criterion {} does not match the dataset's protection kind",
            criterion.name()
        )));
    }
    if k == 1 {
        return Err(Error::Config("need at least 2 groups to constrain".into()));
    }
    let mut constraints = Vec::new();
    let mut both = |label_fwd: String, label_rev: String, a: CellSel, b: CellSel| {
        constraints.push(delta_pair(label_fwd, a, b, epsilon));
        constraints.push(delta_pair(label_rev, b, a, epsilon));
    };
    match criterion {
        Criterion::CrossGroupEo => {
            for i in 0..k {
                for j in i + 1..k {
                    both(
                        format!("A({i}>{j})-A({j}>{i})"),
                        format!("A({j}>{i})-A({i}>{j})"),
                        CellSel::Cell(i, j),
                        CellSel::Cell(j, i),
                    );
                }
            }
        }
        Criterion::InGroupEa => {
            for i in 0..k {
                for j in i + 1..k {
                    both(
                        format!("A({i}>{i})-A({j}>{j})"),
                        format!("A({j}>{j})-A({i}>{i})"),
                        CellSel::Cell(i, i),
                        CellSel::Cell(j, j),
                    );
                }
            }
        }
        Criterion::AllEntries => {
            let cross = constraint_set(Criterion::CrossGroupEo, k, epsilon)?;
            let diag = constraint_set(Criterion::InGroupEa, k, epsilon)?;
            constraints.extend(cross.constraints);
            constraints.extend(diag.constraints);
        }
        Criterion::MarginalEo => {
            for i in 0..k {
                for j in i + 1..k {
                    both(
                        format!("A({i}>:)-A({j}>:)"),
                        format!("A({j}>:)-A({i}>:)"),
                        CellSel::Row(i),
                        CellSel::Row(j),
                    );
                }
            }
        }
        Criterion::StatisticalParity => {
            for i in 0..k {
                for j in i + 1..k {
                    both(
                        format!("P({i}>{j})-P({j}>{i})"),
                        format!("P({j}>{i})-P({i}>{j})"),
                        CellSel::Parity(i, j),
                        CellSel::Parity(j, i),
                    );
                }
            }
        }
        Criterion::ContinuousEo => {
            both(
                "A(>)-A(<)".into(),
                "A(<)-A(>)".into(),
                CellSel::AttrGreater,
                CellSel::AttrLess,
            );
        }
        Criterion::SymmetricEa => {
            for i in 0..k {
                for j in i + 1..k {
                    let sym = |g: usize, s: f64| {
                        [
                            Term { sel: CellSel::Row(g), weight: s },
                            Term { sel: CellSel::Col(g), weight: s },
                        ]
                    };
                    let mk = |hi: usize, lo: usize| Constraint {
                        label: format!("S({hi})-S({lo})"),
                        terms: sym(hi, 1.0).into_iter().chain(sym(lo, -1.0)).collect(),
                        xi: None,
                        rhs: epsilon,
                    };
                    constraints.push(mk(i, j));
                    constraints.push(mk(j, i));
                }
            }
        }
    }
    Ok(ConstraintSet { constraints, n_xi: 0 })
}

fn xi_row(label: String, xi: usize, terms: Vec<Term>) -> Constraint {
    Constraint {
        label,
        terms,
        xi: Some(xi),
        rhs: 0.0,
    }
}

fn xi_le(label: String, xi: usize, sel: CellSel) -> Constraint {
    xi_row(label, xi, vec![Term { sel, weight: -1.0 }])
}

/// Rows `xi_g <= accuracy` for the criterion's robust goal; the objective is
/// the sum of the free variables. Every goal except the all-entries sum also
/// caps its variable by the AUC.
pub fn robust_set(criterion: Criterion, k: usize) -> Result<ConstraintSet> {
    if criterion.needs_continuous() != (k == 0) {
        return Err(Error::Config(format!(
            "criterion {} does not match the dataset's protection kind",
            criterion.name()
        )));
    }
    if k == 1 {
        return Err(Error::Config("need at least 2 groups for a robust goal".into()));
    }
    let mut constraints = Vec::new();
    let mut n_xi = 1;
    match criterion {
        Criterion::CrossGroupEo => {
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        constraints.push(xi_le(
                            format!("xi<=A({i}>{j})"),
                            0,
                            CellSel::Cell(i, j),
                        ));
                    }
                }
            }
            constraints.push(xi_le("xi<=AUC".into(), 0, CellSel::All));
        }
        Criterion::InGroupEa => {
            for i in 0..k {
                constraints.push(xi_le(format!("xi<=A({i}>{i})"), 0, CellSel::Cell(i, i)));
            }
            constraints.push(xi_le("xi<=AUC".into(), 0, CellSel::All));
        }
        Criterion::AllEntries => {
            // Maximizes min over off-diagonals plus min over diagonals.
            n_xi = 2;
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        constraints.push(xi_le(
                            format!("xi0<=A({i}>{j})"),
                            0,
                            CellSel::Cell(i, j),
                        ));
                    }
                }
            }
            for i in 0..k {
                constraints.push(xi_le(format!("xi1<=A({i}>{i})"), 1, CellSel::Cell(i, i)));
            }
        }
        Criterion::MarginalEo => {
            for i in 0..k {
                constraints.push(xi_le(format!("xi<=A({i}>:)"), 0, CellSel::Row(i)));
            }
            constraints.push(xi_le("xi<=AUC".into(), 0, CellSel::All));
        }
        Criterion::StatisticalParity => {
            for i in 0..k {
                for j in 0..k {
                    if i != j {
                        constraints.push(xi_le(
                            format!("xi<=P({i}>{j})"),
                            0,
                            CellSel::Parity(i, j),
                        ));
                    }
                }
            }
            constraints.push(xi_le("xi<=AUC".into(), 0, CellSel::All));
        }
        Criterion::ContinuousEo => {
            constraints.push(xi_le("xi<=A(>)".into(), 0, CellSel::AttrGreater));
            constraints.push(xi_le("xi<=A(<)".into(), 0, CellSel::AttrLess));
            constraints.push(xi_le("xi<=AUC".into(), 0, CellSel::All));
        }
        Criterion::SymmetricEa => {
            for i in 0..k {
                constraints.push(xi_row(
                    format!("xi<=S({i})/2"),
                    0,
                    vec![
                        Term { sel: CellSel::Row(i), weight: -0.5 },
                        Term { sel: CellSel::Col(i), weight: -0.5 },
                    ],
                ));
            }
            constraints.push(xi_le("xi<=AUC".into(), 0, CellSel::All));
        }
    }
    Ok(ConstraintSet { constraints, n_xi })
}

/// A term bound to concrete pair indices. `reversed` flips the score
/// difference before applying indicator or hinge (parity directions against
/// the stored couple orientation).
#[derive(Debug, Clone)]
pub struct ResolvedTerm {
    pub weight: f64,
    pub reversed: bool,
    pub in_parity: bool,
    pub pairs: Vec<u32>,
}

#[derive(Debug, Clone)]
pub struct ResolvedConstraint {
    pub label: String,
    pub terms: Vec<ResolvedTerm>,
    pub xi: Option<usize>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct ResolvedSet {
    pub constraints: Vec<ResolvedConstraint>,
    pub n_xi: usize,
    /// Labels of constraints dropped because a term had no pairs.
    pub dropped: Vec<String>,
}

impl ResolvedSet {
    pub fn m(&self) -> usize {
        self.constraints.len()
    }
}

fn cell_index_lists(pairs: &PairSet) -> Vec<Vec<u32>> {
    let mut lists = vec![Vec::new(); pairs.n_cells.max(1)];
    for (i, p) in pairs.pairs.iter().enumerate() {
        lists[p.cell as usize].push(i as u32);
    }
    lists
}

/// Binds a constraint set to enumerated pairs. Constraints touching an empty
/// cell are dropped and reported; dropping everything is an error.
pub fn resolve(
    set: &ConstraintSet,
    sup: &PairSet,
    par: Option<&PairSet>,
) -> Result<ResolvedSet> {
    let sup_cells = cell_index_lists(sup);
    let par_cells = par.map(cell_index_lists);
    let k = sup.k;
    let mut constraints = Vec::new();
    let mut dropped = Vec::new();
    'outer: for c in &set.constraints {
        let mut terms = Vec::with_capacity(c.terms.len());
        for t in &c.terms {
            let (indices, reversed, in_parity): (Vec<u32>, bool, bool) = match t.sel {
                CellSel::Cell(i, j) => (sup_cells[i * k + j].clone(), false, false),
                CellSel::Row(i) => (
                    (0..k).flat_map(|j| sup_cells[i * k + j].iter().copied()).collect(),
                    false,
                    false,
                ),
                CellSel::Col(i) => (
                    (0..k).flat_map(|j| sup_cells[j * k + i].iter().copied()).collect(),
                    false,
                    false,
                ),
                CellSel::All => ((0..sup.pairs.len() as u32).collect(), false, false),
                CellSel::AttrGreater => {
                    (sup_cells[CELL_ATTR_GREATER as usize].clone(), false, false)
                }
                CellSel::AttrLess => (sup_cells[CELL_ATTR_LESS as usize].clone(), false, false),
                CellSel::Parity(i, j) => {
                    let cells = par_cells
                        .as_ref()
                        .ok_or_else(|| Error::Internal("parity term without parity pairs".into()))?;
                    let pk = par.unwrap().k;
                    let (lo, hi) = (i.min(j), i.max(j));
                    (cells[lo * pk + hi].clone(), i > j, true)
                }
            };
            if indices.is_empty() {
                dropped.push(c.label.clone());
                continue 'outer;
            }
            terms.push(ResolvedTerm {
                weight: t.weight,
                reversed,
                in_parity,
                pairs: indices,
            });
        }
        constraints.push(ResolvedConstraint {
            label: c.label.clone(),
            terms,
            xi: c.xi,
            rhs: c.rhs,
        });
    }
    if constraints.is_empty() && !set.constraints.is_empty() {
        return Err(Error::Data(format!(
            "every constraint references an empty cell: {}",
            dropped.join(", ")
        )));
    }
    Ok(ResolvedSet {
        constraints,
        n_xi: set.n_xi,
        dropped,
    })
}

fn term_diff(scores: &[f64], sup: &PairSet, par: Option<&PairSet>, t: &ResolvedTerm, pi: u32) -> f64 {
    let p = if t.in_parity {
        &par.expect("parity pairs present").pairs[pi as usize]
    } else {
        &sup.pairs[pi as usize]
    };
    let d = scores[p.better as usize] - scores[p.worse as usize];
    if t.reversed {
        -d
    } else {
        d
    }
}

/// Exact accuracy of one resolved term under strict comparison.
pub fn exact_term_accuracy(
    scores: &[f64],
    sup: &PairSet,
    par: Option<&PairSet>,
    t: &ResolvedTerm,
) -> f64 {
    let c = t
        .pairs
        .iter()
        .filter(|&&pi| term_diff(scores, sup, par, t, pi) > 0.0)
        .count();
    c as f64 / t.pairs.len() as f64
}

fn surrogate_term_value(
    scores: &[f64],
    sup: &PairSet,
    par: Option<&PairSet>,
    t: &ResolvedTerm,
) -> f64 {
    let h: fn(f64) -> f64 = if t.weight > 0.0 { hinge_upper } else { hinge_lower };
    let s: f64 = t
        .pairs
        .iter()
        .map(|&pi| h(term_diff(scores, sup, par, t, pi)))
        .sum();
    s / t.pairs.len() as f64
}

/// Exact slack `sum_t w_t * acc_t + xi - rhs` per constraint.
pub fn exact_slacks(
    scores: &[f64],
    xi: &[f64],
    rset: &ResolvedSet,
    sup: &PairSet,
    par: Option<&PairSet>,
) -> Vec<f64> {
    rset.constraints
        .iter()
        .map(|c| {
            let acc: f64 = c
                .terms
                .iter()
                .map(|t| t.weight * exact_term_accuracy(scores, sup, par, t))
                .sum();
            acc + c.xi.map_or(0.0, |g| xi[g]) - c.rhs
        })
        .collect()
}

/// Surrogate slack per constraint; always >= the exact slack.
pub fn surrogate_slacks(
    scores: &[f64],
    xi: &[f64],
    rset: &ResolvedSet,
    sup: &PairSet,
    par: Option<&PairSet>,
) -> Vec<f64> {
    rset.constraints
        .iter()
        .map(|c| {
            let acc: f64 = c
                .terms
                .iter()
                .map(|t| t.weight * surrogate_term_value(scores, sup, par, t))
                .sum();
            acc + c.xi.map_or(0.0, |g| xi[g]) - c.rhs
        })
        .collect()
}

/// The lambda-player's payoff gradient: exact slacks prefixed by a zero for
/// the objective coordinate.
pub fn lagrangian_lambda(
    scores: &[f64],
    xi: &[f64],
    rset: &ResolvedSet,
    sup: &PairSet,
    par: Option<&PairSet>,
) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(exact_slacks(scores, xi, rset, sup, par));
    g
}

/// What the theta-player maximizes besides the constraint penalties.
#[derive(Debug, Clone)]
pub enum Objective {
    /// Mean `hinge_lower` over all supervised pairs.
    SurrogateAuc,
    /// Per-example weighted version: pair weight `alpha[b] * alpha[w]`,
    /// scaled by `norm`.
    WeightedSurrogateAuc { alpha: Vec<f64>, norm: f64 },
    /// Negated mean squared error over the given example indices.
    NegMse { indices: Vec<u32> },
    /// Sum of the robust free variables.
    XiSum,
}

/// Everything a payoff evaluation needs besides the model.
pub struct EvalContext<'a> {
    pub ds: &'a Dataset,
    pub sup: &'a PairSet,
    pub par: Option<&'a PairSet>,
}

/// Value and gradients of the theta-player's payoff at fixed lambda. Scores
/// must already hold `model.score` for every example referenced by the pair
/// sets or objective. The per-example coefficient trick keeps the cost at
/// one pass over pairs plus one backward pass per touched example.
pub fn theta_payoff(
    model: &Model,
    scores: &[f64],
    xi: &[f64],
    lambda: &[f64],
    objective: &Objective,
    rset: &ResolvedSet,
    ctx: &EvalContext,
    coef: &mut Vec<f64>,
    grad_theta: &mut Vec<f64>,
    grad_xi: &mut Vec<f64>,
) -> f64 {
    debug_assert_eq!(lambda.len(), rset.m() + 1);
    let n_ex = ctx.ds.len();
    coef.clear();
    coef.resize(n_ex, 0.0);
    grad_theta.clear();
    grad_theta.resize(model.theta.len(), 0.0);
    grad_xi.clear();
    grad_xi.resize(rset.n_xi, 0.0);
    let lam1 = lambda[0];
    let mut value = 0.0;

    match objective {
        Objective::SurrogateAuc => {
            let n = ctx.sup.pairs.len() as f64;
            let w = lam1 / n;
            for p in &ctx.sup.pairs {
                let d = scores[p.better as usize] - scores[p.worse as usize];
                value += w * hinge_lower(d);
                let g = w * hinge_lower_deriv(d);
                coef[p.better as usize] += g;
                coef[p.worse as usize] -= g;
            }
        }
        Objective::WeightedSurrogateAuc { alpha, norm } => {
            for p in &ctx.sup.pairs {
                let w = lam1 * norm * alpha[p.better as usize] * alpha[p.worse as usize];
                let d = scores[p.better as usize] - scores[p.worse as usize];
                value += w * hinge_lower(d);
                let g = w * hinge_lower_deriv(d);
                coef[p.better as usize] += g;
                coef[p.worse as usize] -= g;
            }
        }
        Objective::NegMse { indices } => {
            let n = indices.len() as f64;
            for &i in indices {
                let r = scores[i as usize] - ctx.ds.examples[i as usize].label;
                value -= lam1 * r * r / n;
                coef[i as usize] -= lam1 * 2.0 * r / n;
            }
        }
        Objective::XiSum => {
            for g in 0..rset.n_xi {
                value += lam1 * xi[g];
                grad_xi[g] += lam1;
            }
        }
    }

    for (ci, c) in rset.constraints.iter().enumerate() {
        let lam = lambda[ci + 1];
        let mut slack = c.xi.map_or(0.0, |g| xi[g]) - c.rhs;
        for t in &c.terms {
            let inv_n = 1.0 / t.pairs.len() as f64;
            let sign = if t.reversed { -1.0 } else { 1.0 };
            let upper = t.weight > 0.0;
            let mut term_sum = 0.0;
            // Gradient coefficient shared by every pair of this term.
            let base = -lam * t.weight * inv_n * sign;
            for &pi in &t.pairs {
                let p = if t.in_parity {
                    &ctx.par.expect("parity pairs present").pairs[pi as usize]
                } else {
                    &ctx.sup.pairs[pi as usize]
                };
                let d = sign * (scores[p.better as usize] - scores[p.worse as usize]);
                let (h, hd) = if upper {
                    (hinge_upper(d), hinge_upper_deriv(d))
                } else {
                    (hinge_lower(d), hinge_lower_deriv(d))
                };
                term_sum += h;
                let g = base * hd;
                coef[p.better as usize] += g;
                coef[p.worse as usize] -= g;
            }
            slack += t.weight * term_sum * inv_n;
        }
        value -= lam * slack;
        if let Some(g) = c.xi {
            grad_xi[g] -= lam;
        }
    }

    for (i, &cf) in coef.iter().enumerate() {
        if cf != 0.0 {
            model.accumulate_score_gradient(&ctx.ds.examples[i].features, cf, grad_theta);
        }
    }
    value
}

fn scores_of(model: &Model, ds: &Dataset) -> Vec<f64> {
    ds.examples.iter().map(|e| model.score(&e.features)).collect()
}

/// Surrogate AUC and its theta-gradient over the given supervised pairs.
pub fn surrogate_auc(model: &Model, ds: &Dataset, sup: &PairSet) -> Result<(f64, Vec<f64>)> {
    if sup.pairs.is_empty() {
        return Err(Error::Data("no pairs for surrogate AUC".into()));
    }
    let scores = scores_of(model, ds);
    let rset = ResolvedSet {
        constraints: Vec::new(),
        n_xi: 0,
        dropped: Vec::new(),
    };
    let ctx = EvalContext { ds, sup, par: None };
    let (mut coef, mut grad, mut gxi) = (Vec::new(), Vec::new(), Vec::new());
    let v = theta_payoff(
        model,
        &scores,
        &[],
        &[1.0],
        &Objective::SurrogateAuc,
        &rset,
        &ctx,
        &mut coef,
        &mut grad,
        &mut gxi,
    );
    Ok((v, grad))
}

/// Surrogate constraint value `sum_t w_t * tilde_acc_t` (no slack, no xi)
/// and its theta-gradient; an upper bound on the exact signed combination.
pub fn surrogate_delta(
    model: &Model,
    ds: &Dataset,
    constraint: &ResolvedConstraint,
    sup: &PairSet,
    par: Option<&PairSet>,
) -> (f64, Vec<f64>) {
    let scores = scores_of(model, ds);
    let value: f64 = constraint
        .terms
        .iter()
        .map(|t| t.weight * surrogate_term_value(&scores, sup, par, t))
        .sum();
    // Gradient via the shared payoff with lambda = (0, 1) and rhs folded out.
    let rset = ResolvedSet {
        constraints: vec![ResolvedConstraint {
            label: constraint.label.clone(),
            terms: constraint.terms.clone(),
            xi: None,
            rhs: 0.0,
        }],
        n_xi: 0,
        dropped: Vec::new(),
    };
    let ctx = EvalContext { ds, sup, par };
    let (mut coef, mut grad, mut gxi) = (Vec::new(), Vec::new(), Vec::new());
    theta_payoff(
        model,
        &scores,
        &[],
        &[0.0, -1.0],
        &Objective::SurrogateAuc,
        &rset,
        &ctx,
        &mut coef,
        &mut grad,
        &mut gxi,
    );
    (value, grad)
}

/// Full theta-player payoff with simplex validation, for callers outside the
/// training loop.
#[allow(clippy::too_many_arguments)]
pub fn proxy_lagrangian_theta(
    model: &Model,
    xi: &[f64],
    lambda: &[f64],
    objective: &Objective,
    rset: &ResolvedSet,
    ds: &Dataset,
    sup: &PairSet,
    par: Option<&PairSet>,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let sum: f64 = lambda.iter().sum();
    if lambda.len() != rset.m() + 1
        || lambda.iter().any(|&l| l < -1e-9)
        || (sum - 1.0).abs() > 1e-9
    {
        return Err(Error::Internal(format!(
            "lambda off the {}-simplex (sum {})",
            rset.m() + 1,
            sum
        )));
    }
    let scores = scores_of(model, ds);
    let ctx = EvalContext { ds, sup, par };
    let (mut coef, mut grad, mut gxi) = (Vec::new(), Vec::new(), Vec::new());
    let v = theta_payoff(
        model, &scores, xi, lambda, objective, rset, &ctx, &mut coef, &mut grad, &mut gxi,
    );
    Ok((v, grad, gxi))
}
