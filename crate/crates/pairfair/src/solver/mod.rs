//! Training: unconstrained and debiased Adam runs, the proxy-Lagrangian
//! two-player game for constrained and robust goals, snapshotting, shrinking,
//! and validation-driven step-size selection.
//!
//! One run is strictly single threaded so that a `(dataset, config, seed)`
//! triple always reproduces the same artifact bit for bit; the step-size grid
//! search runs its independent runs on scoped threads and collects them in
//! grid order.

pub mod adam;
pub mod lambda;
pub mod shrink;
pub mod simplex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{
    enumerate_parity_pairs, enumerate_ranking_pairs, enumerate_regression_pairs, Dataset, PairSet,
    SplitTag, Task,
};
use crate::error::{Error, Result};
use crate::metrics::{FairnessSpec, StochasticModel};
use crate::model::{init as model_init, Model, ModelSpec};
use crate::surrogate::{
    constraint_set, exact_term_accuracy, hinge_lower, resolve, robust_set, ConstraintSet,
    EvalContext, Objective, ResolvedSet,
};
use adam::{Adam, AdamParams};
use lambda::{swap_regret_update, LambdaState};
use shrink::{shrink, ShrinkProblem, ShrinkRow, ShrinkSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Unconstrained,
    Debiased,
    Constrained,
    Robust,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Unconstrained => "unconstrained",
            Method::Debiased => "debiased",
            Method::Constrained => "constrained",
            Method::Robust => "robust",
        }
    }

    pub fn parse(name: &str) -> Result<Method> {
        Ok(match name {
            "unconstrained" => Method::Unconstrained,
            "debiased" => Method::Debiased,
            "constrained" => Method::Constrained,
            "robust" => Method::Robust,
            _ => return Err(Error::Config(format!("unknown method {:?}", name))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObjectiveKind {
    Auc,
    Mse,
}

impl ObjectiveKind {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveKind::Auc => "auc",
            ObjectiveKind::Mse => "mse",
        }
    }

    pub fn parse(name: &str) -> Result<ObjectiveKind> {
        Ok(match name {
            "auc" => ObjectiveKind::Auc,
            "mse" => ObjectiveKind::Mse,
            _ => return Err(Error::Config(format!("unknown objective {:?}", name))),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub iterations: usize,
    pub snapshots: usize,
    pub step_grid: Vec<f64>,
    /// eta_lambda = step * this ratio; both players share the grid value.
    pub eta_lambda_ratio: f64,
    pub adam: AdamParams,
    /// Stratified minibatch size per pair cell; full batch when absent.
    pub minibatch: Option<usize>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            iterations: 2500,
            snapshots: 100,
            step_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 10.0],
            eta_lambda_ratio: 1.0,
            adam: AdamParams::default(),
            minibatch: None,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.snapshots == 0 || self.snapshots > self.iterations {
            return Err(Error::Config(format!(
                "need 1 <= snapshots <= iterations, got {} and {}",
                self.snapshots, self.iterations
            )));
        }
        if self.step_grid.is_empty() || self.step_grid.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Config("step grid must be positive".into()));
        }
        if !(self.eta_lambda_ratio > 0.0) {
            return Err(Error::Config("eta_lambda_ratio must be positive".into()));
        }
        if let Some(b) = self.minibatch {
            if b == 0 {
                return Err(Error::Config("minibatch size must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainSpec<'a> {
    pub dataset: &'a Dataset,
    pub model_spec: ModelSpec,
    pub method: Method,
    pub objective: ObjectiveKind,
    pub fairness: Option<FairnessSpec>,
    /// Cap on enumerated regression pairs per split.
    pub max_pairs: Option<usize>,
    pub config: SolverConfig,
}

/// One recorded iterate with its exact validation measurements.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub iteration: usize,
    pub model: Model,
    pub xi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub train_surrogate_objective: f64,
    pub validation_objective: f64,
    /// `sum_t w_t * acc_t` per validation constraint, before slack terms.
    pub validation_values: Vec<f64>,
    pub validation_slacks: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LogLine {
    pub iteration: usize,
    pub lambda: Vec<f64>,
    pub surrogate_objective: f64,
    pub validation_objective: f64,
    pub validation_slacks: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub constraint_labels: Vec<String>,
    pub lines: Vec<LogLine>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: StochasticModel,
    pub chosen_step: f64,
    /// True when the shrink LP was infeasible and a single snapshot was used.
    pub fallback: bool,
    /// Labels of constraints dropped at training resolution (empty cells).
    pub dropped: Vec<String>,
    pub constraint_labels: Vec<String>,
    pub expected_validation_objective: f64,
    pub expected_validation_slacks: Vec<f64>,
    pub log: RunLog,
}

struct Prepared<'a> {
    ds: &'a Dataset,
    train_idx: Vec<u32>,
    val_idx: Vec<u32>,
    sup_train: PairSet,
    par_train: Option<PairSet>,
    sup_val: PairSet,
    par_val: Option<PairSet>,
    cset: ConstraintSet,
    rset_train: ResolvedSet,
    rset_val: ResolvedSet,
    objective: Objective,
    val_kind: ObjectiveKind,
    dropped: Vec<String>,
}

fn group_count(ds: &Dataset) -> usize {
    ds.groups().unwrap_or(0)
}

/// Weights for the debiased objective. The free weight on (group 1, worse
/// label) solves the ratio equation: it equals the negative:positive ratio
/// of group 0 divided by that of group 1, computed on the training split.
fn debiased_alpha(ds: &Dataset, train_idx: &[u32]) -> Result<(Vec<f64>, f64)> {
    if group_count(ds) != 2 {
        return Err(Error::Config(
            "debiased training needs exactly 2 groups".into(),
        ));
    }
    let mut labels: Vec<f64> = train_idx
        .iter()
        .map(|&i| ds.examples[i as usize].label)
        .collect();
    labels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    labels.dedup();
    if labels.len() != 2 {
        return Err(Error::Data(format!(
            "debiased training needs exactly 2 distinct labels, found {}",
            labels.len()
        )));
    }
    let neg = labels[0];
    let mut counts = [[0u64; 2]; 2];
    for &i in train_idx {
        let e = &ds.examples[i as usize];
        let z = e.group.unwrap() as usize;
        let y = usize::from(e.label != neg);
        counts[z][y] += 1;
    }
    for z in 0..2 {
        for y in 0..2 {
            if counts[z][y] == 0 {
                return Err(Error::Data(format!(
                    "debiased weights undefined: group {} has no label-{} examples",
                    z,
                    if y == 0 { "negative" } else { "positive" }
                )));
            }
        }
    }
    let ratio0 = counts[0][0] as f64 / counts[0][1] as f64;
    let ratio1 = counts[1][0] as f64 / counts[1][1] as f64;
    let alpha_1_neg = ratio0 / ratio1;
    let alpha = ds
        .examples
        .iter()
        .map(|e| {
            if e.group == Some(1) && e.label == neg {
                alpha_1_neg
            } else {
                1.0
            }
        })
        .collect();
    let n_pos = counts[0][1] + counts[1][1];
    let n_neg = counts[0][0] + counts[1][0];
    Ok((alpha, 1.0 / (n_pos as f64 * n_neg as f64)))
}

fn supervised_pairs(
    ds: &Dataset,
    tag: SplitTag,
    max_pairs: Option<usize>,
    seed: u64,
) -> Result<PairSet> {
    match ds.task {
        Task::Ranking => enumerate_ranking_pairs(ds, tag),
        Task::Regression => enumerate_regression_pairs(ds, tag, max_pairs, seed),
    }
}

fn prepare<'a>(spec: &TrainSpec<'a>) -> Result<Prepared<'a>> {
    spec.config.validate()?;
    let ds = spec.dataset;
    let train_idx = ds.split_indices(SplitTag::Train)?;
    let val_idx = ds.split_indices(SplitTag::Validation)?;
    let sup_train = supervised_pairs(ds, SplitTag::Train, spec.max_pairs, spec.config.seed)?;
    let sup_val = supervised_pairs(
        ds,
        SplitTag::Validation,
        spec.max_pairs,
        spec.config.seed.wrapping_add(1),
    )?;
    let needs_fairness = matches!(spec.method, Method::Constrained | Method::Robust);
    if needs_fairness && spec.fairness.is_none() {
        return Err(Error::Config(format!(
            "method {} needs a fairness criterion",
            spec.method.name()
        )));
    }
    let k = group_count(ds);
    let cset = match (spec.method, spec.fairness) {
        (Method::Constrained, Some(f)) => constraint_set(f.criterion, k, f.epsilon)?,
        (Method::Robust, Some(f)) => robust_set(f.criterion, k)?,
        _ => ConstraintSet {
            constraints: Vec::new(),
            n_xi: 0,
        },
    };
    let needs_parity = cset
        .constraints
        .iter()
        .any(|c| c.terms.iter().any(|t| matches!(t.sel, crate::surrogate::CellSel::Parity(_, _))));
    let (par_train, par_val) = if needs_parity {
        (
            Some(enumerate_parity_pairs(ds, SplitTag::Train)?),
            Some(enumerate_parity_pairs(ds, SplitTag::Validation)?),
        )
    } else {
        (None, None)
    };
    let rset_train = resolve(&cset, &sup_train, par_train.as_ref())?;
    let rset_val = resolve(&cset, &sup_val, par_val.as_ref())?;
    let dropped = rset_train.dropped.clone();
    let objective = match spec.method {
        Method::Robust => Objective::XiSum,
        Method::Debiased => {
            if spec.objective != ObjectiveKind::Auc {
                return Err(Error::Config(
                    "debiased training is defined for the auc objective".into(),
                ));
            }
            let (alpha, norm) = debiased_alpha(ds, &train_idx)?;
            Objective::WeightedSurrogateAuc { alpha, norm }
        }
        _ => match spec.objective {
            ObjectiveKind::Auc => Objective::SurrogateAuc,
            ObjectiveKind::Mse => Objective::NegMse {
                indices: train_idx.clone(),
            },
        },
    };
    if spec.method == Method::Robust && spec.objective == ObjectiveKind::Mse {
        return Err(Error::Config(
            "robust goals are defined over pairwise accuracies, not mse".into(),
        ));
    }
    Ok(Prepared {
        ds,
        train_idx,
        val_idx,
        sup_train,
        par_train,
        sup_val,
        par_val,
        cset,
        rset_train,
        rset_val,
        objective,
        val_kind: spec.objective,
        dropped,
    })
}

fn derive_seed(seed: u64, idx: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(idx)
        .rotate_left(17)
        ^ (idx.wrapping_mul(0xD134_2543_DE82_EF95))
}

fn fill_scores(model: &Model, ds: &Dataset, idx: &[u32], scores: &mut [f64]) {
    for &i in idx {
        scores[i as usize] = model.score(&ds.examples[i as usize].features);
    }
}

/// Objective component alone (no constraint penalties), on current scores.
fn objective_value(p: &Prepared, objective: &Objective, scores: &[f64], xi: &[f64]) -> f64 {
    match objective {
        Objective::SurrogateAuc => {
            let s: f64 = p
                .sup_train
                .pairs
                .iter()
                .map(|pr| hinge_lower(scores[pr.better as usize] - scores[pr.worse as usize]))
                .sum();
            s / p.sup_train.pairs.len() as f64
        }
        Objective::WeightedSurrogateAuc { alpha, norm } => {
            let s: f64 = p
                .sup_train
                .pairs
                .iter()
                .map(|pr| {
                    alpha[pr.better as usize]
                        * alpha[pr.worse as usize]
                        * hinge_lower(scores[pr.better as usize] - scores[pr.worse as usize])
                })
                .sum();
            s * norm
        }
        Objective::NegMse { indices } => {
            let s: f64 = indices
                .iter()
                .map(|&i| {
                    let r = scores[i as usize] - p.ds.examples[i as usize].label;
                    r * r
                })
                .sum();
            -s / indices.len() as f64
        }
        Objective::XiSum => xi.iter().sum(),
    }
}

fn validation_objective(p: &Prepared, scores: &[f64]) -> f64 {
    match p.val_kind {
        ObjectiveKind::Auc => {
            crate::metrics::pooled_accuracy(scores, &p.sup_val).unwrap_or(0.0)
        }
        ObjectiveKind::Mse => {
            let s: f64 = p
                .val_idx
                .iter()
                .map(|&i| {
                    let r = scores[i as usize] - p.ds.examples[i as usize].label;
                    r * r
                })
                .sum();
            -s / p.val_idx.len() as f64
        }
    }
}

fn subsample_pairset(pairs: &PairSet, per_cell: usize, rng: &mut ChaCha8Rng) -> PairSet {
    let mut by_cell: Vec<Vec<u32>> = vec![Vec::new(); pairs.n_cells.max(1)];
    for (i, p) in pairs.pairs.iter().enumerate() {
        by_cell[p.cell as usize].push(i as u32);
    }
    let mut chosen = Vec::new();
    for cell in &by_cell {
        if cell.len() <= per_cell {
            chosen.extend_from_slice(cell);
        } else {
            let picked = rand::seq::index::sample(rng, cell.len(), per_cell);
            let mut v: Vec<usize> = picked.into_iter().collect();
            v.sort_unstable();
            chosen.extend(v.into_iter().map(|i| cell[i]));
        }
    }
    chosen.sort_unstable();
    PairSet {
        mode: pairs.mode,
        k: pairs.k,
        n_cells: pairs.n_cells,
        pairs: chosen.iter().map(|&i| pairs.pairs[i as usize]).collect(),
        queries: None,
    }
}

struct RunResult {
    snapshots: Vec<Snapshot>,
    log: RunLog,
}

fn run_one(p: &Prepared, spec: &TrainSpec, step: f64, run_seed: u64) -> Result<RunResult> {
    let cfg = &spec.config;
    let t_total = cfg.iterations;
    let s_total = cfg.snapshots;
    let m = p.rset_train.m();
    let mut model = model_init(&spec.model_spec, run_seed);
    let mut xi = vec![0.0; p.rset_train.n_xi];
    let mut opt = Adam::new(model.theta.len() + xi.len(), cfg.adam);
    let mut lstate = LambdaState::new(m + 1);
    let mut batch_rng = ChaCha8Rng::seed_from_u64(run_seed ^ 0x6d69_6e69_6261_7463);
    let mut scores = vec![0.0; p.ds.len()];
    let mut coef = Vec::new();
    let mut grad_theta = Vec::new();
    let mut grad_xi = Vec::new();
    let mut snapshots = Vec::with_capacity(s_total);
    let mut lines = Vec::with_capacity(s_total);
    let snap_at: Vec<usize> = (0..s_total).map(|k| (k + 1) * t_total / s_total).collect();
    let mut next_snap = 0;
    let eta_lambda = step * cfg.eta_lambda_ratio;

    for t in 1..=t_total {
        fill_scores(&model, p.ds, &p.train_idx, &mut scores);
        // Exact slacks on the full training pairs, before any update: both
        // players move simultaneously off the same iterate.
        let slacks = if m > 0 {
            crate::surrogate::exact_slacks(
                &scores,
                &xi,
                &p.rset_train,
                &p.sup_train,
                p.par_train.as_ref(),
            )
        } else {
            Vec::new()
        };
        match cfg.minibatch {
            None => {
                let ctx = EvalContext {
                    ds: p.ds,
                    sup: &p.sup_train,
                    par: p.par_train.as_ref(),
                };
                crate::surrogate::theta_payoff(
                    &model,
                    &scores,
                    &xi,
                    &lstate.lambda,
                    &p.objective,
                    &p.rset_train,
                    &ctx,
                    &mut coef,
                    &mut grad_theta,
                    &mut grad_xi,
                );
            }
            Some(b) => {
                let sup_b = subsample_pairset(&p.sup_train, b, &mut batch_rng);
                let par_b = p
                    .par_train
                    .as_ref()
                    .map(|pp| subsample_pairset(pp, b, &mut batch_rng));
                let rset_b = resolve(&p.cset, &sup_b, par_b.as_ref())?;
                let ctx = EvalContext {
                    ds: p.ds,
                    sup: &sup_b,
                    par: par_b.as_ref(),
                };
                crate::surrogate::theta_payoff(
                    &model,
                    &scores,
                    &xi,
                    &lstate.lambda,
                    &p.objective,
                    &rset_b,
                    &ctx,
                    &mut coef,
                    &mut grad_theta,
                    &mut grad_xi,
                );
            }
        }
        opt.step_pair(&mut model.theta, &mut xi, &grad_theta, &grad_xi, step);
        // xi lower-bounds pairwise accuracies, so every optimum has xi in
        // [0, 1]; projecting after the step keeps the lambda payoffs bounded.
        for x in xi.iter_mut() {
            *x = x.clamp(0.0, 1.0);
        }
        if m > 0 {
            let mut g = vec![0.0];
            g.extend_from_slice(&slacks);
            swap_regret_update(&mut lstate, &g, eta_lambda)?;
        }
        if next_snap < snap_at.len() && t == snap_at[next_snap] {
            next_snap += 1;
            fill_scores(&model, p.ds, &p.train_idx, &mut scores);
            let surr = objective_value(p, &p.objective, &scores, &xi);
            fill_scores(&model, p.ds, &p.val_idx, &mut scores);
            let val_obj = validation_objective(p, &scores);
            let values: Vec<f64> = p
                .rset_val
                .constraints
                .iter()
                .map(|c| {
                    c.terms
                        .iter()
                        .map(|term| {
                            term.weight
                                * exact_term_accuracy(
                                    &scores,
                                    &p.sup_val,
                                    p.par_val.as_ref(),
                                    term,
                                )
                        })
                        .sum()
                })
                .collect();
            let val_slacks: Vec<f64> = p
                .rset_val
                .constraints
                .iter()
                .zip(&values)
                .map(|(c, v)| v + c.xi.map_or(0.0, |g| xi[g]) - c.rhs)
                .collect();
            lines.push(LogLine {
                iteration: t,
                lambda: lstate.lambda.clone(),
                surrogate_objective: surr,
                validation_objective: val_obj,
                validation_slacks: val_slacks.clone(),
            });
            snapshots.push(Snapshot {
                iteration: t,
                model: model.clone(),
                xi: xi.clone(),
                lambda: lstate.lambda.clone(),
                train_surrogate_objective: surr,
                validation_objective: val_obj,
                validation_values: values,
                validation_slacks: val_slacks,
            });
        }
    }
    Ok(RunResult {
        snapshots,
        log: RunLog {
            constraint_labels: p
                .rset_val
                .constraints
                .iter()
                .map(|c| c.label.clone())
                .collect(),
            lines,
        },
    })
}

/// One grid entry's candidate artifact plus its selection statistics.
struct Candidate {
    model: StochasticModel,
    fallback: bool,
    max_slack: f64,
    selection_objective: f64,
    expected_validation_objective: f64,
    expected_validation_slacks: Vec<f64>,
    log: RunLog,
}

fn finish_run(p: &Prepared, spec: &TrainSpec, run: RunResult) -> Result<Candidate> {
    let snaps = run.snapshots;
    match spec.method {
        Method::Unconstrained | Method::Debiased => {
            let last = snaps.last().expect("at least one snapshot");
            Ok(Candidate {
                model: StochasticModel::degenerate(last.model.clone()),
                fallback: false,
                max_slack: f64::NEG_INFINITY,
                selection_objective: last.validation_objective,
                expected_validation_objective: last.validation_objective,
                expected_validation_slacks: Vec::new(),
                log: run.log,
            })
        }
        Method::Constrained | Method::Robust => {
            let problem = ShrinkProblem {
                objective: snaps.iter().map(|s| s.validation_objective).collect(),
                rows: p
                    .rset_val
                    .constraints
                    .iter()
                    .enumerate()
                    .map(|(ci, c)| ShrinkRow {
                        values: snaps.iter().map(|s| s.validation_values[ci]).collect(),
                        rhs: c.rhs,
                        xi: c.xi,
                    })
                    .collect(),
                n_xi: p.rset_val.n_xi,
            };
            match shrink(&problem)? {
                ShrinkSolution::Mixture {
                    weights,
                    lp_objective,
                    expected_slacks,
                    ..
                } => {
                    let atoms: Vec<(f64, Model)> = weights
                        .iter()
                        .zip(&snaps)
                        .filter(|(&w, _)| w > 0.0)
                        .map(|(&w, s)| (w, s.model.clone()))
                        .collect();
                    let expected_obj: f64 = weights
                        .iter()
                        .zip(&snaps)
                        .map(|(w, s)| w * s.validation_objective)
                        .sum();
                    let max_slack = expected_slacks
                        .iter()
                        .copied()
                        .fold(f64::NEG_INFINITY, f64::max);
                    Ok(Candidate {
                        model: StochasticModel { atoms },
                        fallback: false,
                        max_slack,
                        selection_objective: lp_objective,
                        expected_validation_objective: expected_obj,
                        expected_validation_slacks: expected_slacks,
                        log: run.log,
                    })
                }
                ShrinkSolution::Fallback { index, max_slack } => {
                    let s = &snaps[index];
                    Ok(Candidate {
                        model: StochasticModel::degenerate(s.model.clone()),
                        fallback: true,
                        max_slack,
                        selection_objective: s.validation_objective,
                        expected_validation_objective: s.validation_objective,
                        expected_validation_slacks: problem
                            .rows
                            .iter()
                            .map(|r| r.values[index] - r.rhs)
                            .collect(),
                        log: run.log,
                    })
                }
            }
        }
    }
}

/// Feasibility-first selection: among runs whose worst expected validation
/// slack is at most 0.01, the highest objective wins; otherwise the run with
/// the smallest worst slack. Ties keep the earliest grid entry.
pub fn select_step_size(runs: &[(f64, f64)]) -> usize {
    assert!(!runs.is_empty());
    let feasible: Vec<usize> = (0..runs.len()).filter(|&i| runs[i].0 <= 0.01).collect();
    if feasible.is_empty() {
        (0..runs.len()).fold(0, |best, i| if runs[i].0 < runs[best].0 { i } else { best })
    } else {
        feasible
            .iter()
            .copied()
            .fold(feasible[0], |best, i| if runs[i].1 > runs[best].1 { i } else { best })
    }
}

pub fn train(spec: &TrainSpec) -> Result<TrainOutput> {
    let p = prepare(spec)?;
    let grid = &spec.config.step_grid;
    let mut results: Vec<Result<Candidate>> = Vec::with_capacity(grid.len());
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(grid.len());
        for (gi, &step) in grid.iter().enumerate() {
            let p_ref = &p;
            let seed = derive_seed(spec.config.seed, gi as u64);
            handles.push(scope.spawn(move || {
                run_one(p_ref, spec, step, seed).and_then(|r| finish_run(p_ref, spec, r))
            }));
        }
        for h in handles {
            results.push(h.join().expect("training thread panicked"));
        }
    });
    // A diverged grid entry (for example a step size whose lambda matrix
    // stops mixing) drops out of the selection; the search only fails when
    // every entry does.
    let mut survivors: Vec<(usize, Candidate)> = Vec::new();
    let mut first_err = None;
    for (gi, r) in results.into_iter().enumerate() {
        match r {
            Ok(c) => survivors.push((gi, c)),
            Err(e) => first_err = first_err.or(Some(e)),
        }
    }
    if survivors.is_empty() {
        return Err(first_err.expect("step grid is non-empty"));
    }
    let stats: Vec<(f64, f64)> = survivors
        .iter()
        .map(|(_, c)| (c.max_slack, c.selection_objective))
        .collect();
    let chosen = select_step_size(&stats);
    let (gi, c) = survivors
        .into_iter()
        .nth(chosen)
        .expect("chosen index in range");
    Ok(TrainOutput {
        model: c.model,
        chosen_step: grid[gi],
        fallback: c.fallback,
        dropped: p.dropped,
        constraint_labels: p
            .rset_val
            .constraints
            .iter()
            .map(|cc| cc.label.clone())
            .collect(),
        expected_validation_objective: c.expected_validation_objective,
        expected_validation_slacks: c.expected_validation_slacks,
        log: c.log,
    })
}

/// Adam on the plain objective; returns the winning run's final model.
pub fn train_unconstrained(
    dataset: &Dataset,
    model_spec: ModelSpec,
    objective: ObjectiveKind,
    config: SolverConfig,
) -> Result<TrainOutput> {
    train(&TrainSpec {
        dataset,
        model_spec,
        method: Method::Unconstrained,
        objective,
        fairness: None,
        max_pairs: None,
        config,
    })
}

/// Weighted pairwise objective correcting group-conditioned label skew.
pub fn train_debiased(
    dataset: &Dataset,
    model_spec: ModelSpec,
    config: SolverConfig,
) -> Result<TrainOutput> {
    train(&TrainSpec {
        dataset,
        model_spec,
        method: Method::Debiased,
        objective: ObjectiveKind::Auc,
        fairness: None,
        max_pairs: None,
        config,
    })
}

/// Proxy-Lagrangian game under `|Delta| <= epsilon` constraints; returns the
/// shrunk stochastic model.
pub fn train_constrained(
    dataset: &Dataset,
    model_spec: ModelSpec,
    objective: ObjectiveKind,
    fairness: FairnessSpec,
    config: SolverConfig,
) -> Result<TrainOutput> {
    train(&TrainSpec {
        dataset,
        model_spec,
        method: Method::Constrained,
        objective,
        fairness: Some(fairness),
        max_pairs: None,
        config,
    })
}

/// Min-max goal: maximize the smallest of the criterion's accuracy list.
pub fn train_robust(
    dataset: &Dataset,
    model_spec: ModelSpec,
    fairness: FairnessSpec,
    config: SolverConfig,
) -> Result<TrainOutput> {
    train(&TrainSpec {
        dataset,
        model_spec,
        method: Method::Robust,
        objective: ObjectiveKind::Auc,
        fairness: Some(fairness),
        max_pairs: None,
        config,
    })
}
