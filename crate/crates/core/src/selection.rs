//! Two-stage model search.
//!
//! Stage one draws random variable subsets and runs each against a small
//! ("coarse") hyperparameter grid. Stage two re-runs the best `top_k` subsets
//! over an expanded ("fine") grid and returns the best refined trial.
//!
//! Trials only depend on their plan, so a [`TrialExecutor`] may run them in any
//! order or in parallel; results are merged by trial id before ranking.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::evaluation::{mae, rmse, SplitSpec};
use crate::lstm::Hyperparams;
use crate::pipeline::{Experiment, ModelSpec, PipelineError};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionError {
    InvalidConfig(&'static str),
    AllTrialsFailed { attempted: usize },
}

impl fmt::Display for SelectionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectionError::InvalidConfig(why) => write!(f, "invalid search config: {why}"),
            SelectionError::AllTrialsFailed { attempted } => write!(f, "all {attempted} trials failed"),
        }
    }
}

impl core::error::Error for SelectionError {}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub candidates: Vec<String>,
    pub n_trials: usize,
    /// Inclusive bounds on the number of variables per subset.
    pub subset_size: (usize, usize),
    pub coarse_grid: Vec<Hyperparams>,
    pub fine_grid: Vec<Hyperparams>,
    pub top_k: usize,
    pub seed: u64,
}

/// 2 x 2 grid over hidden size and learning rate.
pub fn default_coarse_grid(model_seed: u64) -> Vec<Hyperparams> {
    let mut grid = Vec::new();
    for hidden_size in [4, 8] {
        for learning_rate in [0.01, 0.003] {
            grid.push(Hyperparams {
                n_timesteps: 12,
                hidden_size,
                learning_rate,
                epochs: 200,
                seed: model_seed,
                l2_penalty: 1e-3,
            });
        }
    }
    grid
}

/// 4 x 2 x 2 grid over hidden size, window length and learning rate.
pub fn default_fine_grid(model_seed: u64) -> Vec<Hyperparams> {
    let mut grid = Vec::new();
    for hidden_size in [2, 4, 8, 16] {
        for n_timesteps in [12, 18] {
            for learning_rate in [0.01, 0.003] {
                grid.push(Hyperparams {
                    n_timesteps,
                    hidden_size,
                    learning_rate,
                    epochs: 300,
                    seed: model_seed,
                    l2_penalty: 1e-3,
                });
            }
        }
    }
    grid
}

impl SearchConfig {
    /// 300 trials of 4 to 12 variables, default grids, top 3 refined.
    pub fn with_defaults(candidates: Vec<String>, seed: u64) -> Self {
        let model_seed = seed::derive(seed, "model");
        let max = candidates.len().min(12);
        SearchConfig {
            subset_size: (4.min(max), max),
            candidates,
            n_trials: 300,
            coarse_grid: default_coarse_grid(model_seed),
            fine_grid: default_fine_grid(model_seed),
            top_k: 3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), SelectionError> {
        let (lo, hi) = self.subset_size;
        if self.n_trials == 0 {
            return Err(SelectionError::InvalidConfig("n_trials must be >= 1"));
        }
        if lo == 0 || lo > hi || hi > self.candidates.len() {
            return Err(SelectionError::InvalidConfig("subset size range must satisfy 1 <= min <= max <= candidates"));
        }
        if self.coarse_grid.is_empty() || self.fine_grid.is_empty() {
            return Err(SelectionError::InvalidConfig("hyperparameter grids must be non-empty"));
        }
        if self.top_k == 0 {
            return Err(SelectionError::InvalidConfig("top_k must be >= 1"));
        }
        if self.coarse_grid.iter().chain(&self.fine_grid).any(|h| h.validate().is_err()) {
            return Err(SelectionError::InvalidConfig("grid contains invalid hyperparameters"));
        }
        Ok(())
    }
}

/// A uniformly sized, uniformly drawn subset of the candidates, in candidate order.
pub fn sample_subset<R: Rng + ?Sized>(rng: &mut R, config: &SearchConfig) -> Vec<String> {
    let (lo, hi) = config.subset_size;
    let size = rng.random_range(lo..=hi);
    let mut picked = index::sample(rng, config.candidates.len(), size).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| config.candidates[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub trial_id: usize,
    pub spec: ModelSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrialStatus {
    Ok { val_mae: f64, val_rmse: f64 },
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_id: usize,
    pub spec: ModelSpec,
    pub status: TrialStatus,
}

impl TrialResult {
    pub fn metrics(&self) -> Option<(f64, f64)> {
        match self.status {
            TrialStatus::Ok { val_mae, val_rmse } => Some((val_mae, val_rmse)),
            TrialStatus::Failed(_) => None,
        }
    }

    pub fn val_mae(&self) -> Option<f64> {
        self.metrics().map(|m| m.0)
    }
}

fn evaluate(spec: &ModelSpec, splits: &SplitSpec, exp: &Experiment) -> Result<(f64, f64), PipelineError> {
    let model = exp.fit(spec, splits.train)?;
    let mut preds = Vec::with_capacity(splits.validation.len());
    let mut actuals = Vec::with_capacity(splits.validation.len());
    for year in splits.validation.years() {
        preds.push(exp.nowcast(&model, year, None)?.0);
        actuals.push(exp.actual(year)?);
    }
    let m = mae(&preds, &actuals).expect("validation years are non-empty");
    let r = rmse(&preds, &actuals).expect("validation years are non-empty");
    Ok((m, r))
}

/// Trains on the train years and scores the validation years on full data.
/// Errors become a failed result rather than aborting.
pub fn run_trial(plan: &TrialPlan, splits: &SplitSpec, exp: &Experiment) -> TrialResult {
    let status = match evaluate(&plan.spec, splits, exp) {
        Ok((val_mae, val_rmse)) if val_mae.is_finite() && val_rmse.is_finite() => TrialStatus::Ok { val_mae, val_rmse },
        Ok(_) => TrialStatus::Failed("non-finite validation metrics".into()),
        Err(e) => TrialStatus::Failed(e.to_string()),
    };
    TrialResult { trial_id: plan.trial_id, spec: plan.spec.clone(), status }
}

/// Runs a batch of trial plans.
pub trait TrialExecutor {
    fn execute(&self, plans: &[TrialPlan], splits: &SplitSpec, exp: &Experiment) -> Vec<TrialResult>;
}

/// Runs trials one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TrialExecutor for Sequential {
    fn execute(&self, plans: &[TrialPlan], splits: &SplitSpec, exp: &Experiment) -> Vec<TrialResult> {
        plans.iter().map(|p| run_trial(p, splits, exp)).collect()
    }
}

/// Ascending validation MAE, then RMSE, then trial id.
pub fn compare_trials(a: &TrialResult, b: &TrialResult) -> Ordering {
    match (a.metrics(), b.metrics()) {
        (Some((ma, ra)), Some((mb, rb))) => ma.total_cmp(&mb).then(ra.total_cmp(&rb)).then(a.trial_id.cmp(&b.trial_id)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.trial_id.cmp(&b.trial_id),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    /// Successful trials, best first.
    pub ranked: Vec<TrialResult>,
    /// Failed trials by trial id.
    pub failed: Vec<TrialResult>,
}

impl SearchReport {
    pub fn from_results(mut results: Vec<TrialResult>) -> Self {
        results.sort_by_key(|r| r.trial_id);
        let (mut ranked, failed): (Vec<_>, Vec<_>) = results.into_iter().partition(|r| r.metrics().is_some());
        ranked.sort_by(compare_trials);
        SearchReport { ranked, failed }
    }

    pub fn len(&self) -> usize {
        self.ranked.len() + self.failed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Coarse-stage plans: `n_trials` subsets, each crossed with the coarse grid.
/// Trial `s * |grid| + g` pairs subset `s` with grid point `g`.
pub fn plan_coarse(config: &SearchConfig) -> Vec<TrialPlan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, "subsets"));
    let mut plans = Vec::with_capacity(config.n_trials * config.coarse_grid.len());
    for _ in 0..config.n_trials {
        let subset = sample_subset(&mut rng, config);
        for hyper in &config.coarse_grid {
            plans.push(TrialPlan {
                trial_id: plans.len(),
                spec: ModelSpec { variables: subset.clone(), hyper: *hyper },
            });
        }
    }
    plans
}

pub fn random_search(
    config: &SearchConfig,
    splits: &SplitSpec,
    exp: &Experiment,
    executor: &dyn TrialExecutor,
) -> Result<SearchReport, SelectionError> {
    config.validate()?;
    let plans = plan_coarse(config);
    let report = SearchReport::from_results(executor.execute(&plans, splits, exp));
    if report.ranked.is_empty() {
        return Err(SelectionError::AllTrialsFailed { attempted: plans.len() });
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub trials: SearchReport,
    pub winner: TrialResult,
}

/// Re-runs the `top_k` best distinct subsets over the fine grid. Refined trial
/// ids continue after `first_trial_id`.
pub fn refine_top_k(
    ranked: &[TrialResult],
    config: &SearchConfig,
    splits: &SplitSpec,
    exp: &Experiment,
    executor: &dyn TrialExecutor,
    first_trial_id: usize,
) -> Result<Refinement, SelectionError> {
    let mut seen = BTreeSet::new();
    let subsets: Vec<&Vec<String>> = ranked
        .iter()
        .filter(|r| r.metrics().is_some())
        .map(|r| &r.spec.variables)
        .filter(|v| seen.insert((*v).clone()))
        .take(config.top_k)
        .collect();
    let mut plans = Vec::with_capacity(subsets.len() * config.fine_grid.len());
    for subset in subsets {
        for hyper in &config.fine_grid {
            plans.push(TrialPlan {
                trial_id: first_trial_id + plans.len(),
                spec: ModelSpec { variables: subset.clone(), hyper: *hyper },
            });
        }
    }
    let trials = SearchReport::from_results(executor.execute(&plans, splits, exp));
    let winner = trials.ranked.first().cloned().ok_or(SelectionError::AllTrialsFailed { attempted: plans.len() })?;
    Ok(Refinement { trials, winner })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub coarse: SearchReport,
    pub refined: SearchReport,
    pub winner: TrialResult,
}

/// Both stages end to end.
pub fn select_model(
    config: &SearchConfig,
    splits: &SplitSpec,
    exp: &Experiment,
    executor: &dyn TrialExecutor,
) -> Result<SelectionOutcome, SelectionError> {
    let coarse = random_search(config, splits, exp, executor)?;
    let Refinement { trials, winner } = refine_top_k(&coarse.ranked, config, splits, exp, executor, coarse.len())?;
    Ok(SelectionOutcome { coarse, refined: trials, winner })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn config(n: usize, size: (usize, usize)) -> SearchConfig {
        let candidates = (0..n).map(|i| format!("x{i}")).collect();
        SearchConfig { subset_size: size, ..SearchConfig::with_defaults(candidates, 5) }
    }

    #[test]
    fn forced_full_subset() {
        let c = config(4, (4, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_subset(&mut rng, &c), c.candidates);
    }

    #[test]
    fn same_state_same_subset() {
        let c = config(10, (2, 6));
        let a = sample_subset(&mut ChaCha8Rng::seed_from_u64(9), &c);
        let b = sample_subset(&mut ChaCha8Rng::seed_from_u64(9), &c);
        assert_eq!(a, b);
        assert!((2..=6).contains(&a.len()));
    }

    #[test]
    fn inclusion_frequency_is_uniform() {
        let c = config(10, (3, 3));
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut hits = [0usize; 10];
        let draws = 10_000;
        for _ in 0..draws {
            for v in sample_subset(&mut rng, &c) {
                hits[v[1..].parse::<usize>().unwrap()] += 1;
            }
        }
        for h in hits {
            let freq = h as f64 / draws as f64;
            assert!((freq - 0.3).abs() <= 0.02, "{freq}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(config(10, (3, 3)).validate().is_ok());
        assert!(config(10, (0, 3)).validate().is_err());
        assert!(config(10, (5, 3)).validate().is_err());
        assert!(config(10, (3, 11)).validate().is_err());
        assert!(SearchConfig { top_k: 0, ..config(10, (3, 3)) }.validate().is_err());
        assert!(SearchConfig { coarse_grid: vec![], ..config(10, (3, 3)) }.validate().is_err());
    }

    #[test]
    fn coarse_plan_layout() {
        let c = SearchConfig { n_trials: 3, ..config(10, (2, 4)) };
        let plans = plan_coarse(&c);
        assert_eq!(plans.len(), 3 * c.coarse_grid.len());
        assert!(plans.iter().enumerate().all(|(i, p)| p.trial_id == i));
        assert_eq!(plans[0].spec.variables, plans[1].spec.variables);
        assert_eq!(plans, plan_coarse(&c));
    }

    fn result(id: usize, status: TrialStatus) -> TrialResult {
        let hyper = default_coarse_grid(0)[0];
        TrialResult { trial_id: id, spec: ModelSpec { variables: vec![format!("x{id}")], hyper }, status }
    }

    #[test]
    fn ranking_order_and_partition() {
        let rs = vec![
            result(0, TrialStatus::Ok { val_mae: 0.2, val_rmse: 0.3 }),
            result(1, TrialStatus::Failed("boom".into())),
            result(2, TrialStatus::Ok { val_mae: 0.1, val_rmse: 0.5 }),
            result(3, TrialStatus::Ok { val_mae: 0.1, val_rmse: 0.4 }),
            result(4, TrialStatus::Ok { val_mae: 0.1, val_rmse: 0.4 }),
        ];
        let report = SearchReport::from_results(rs);
        let order: Vec<usize> = report.ranked.iter().map(|r| r.trial_id).collect();
        assert_eq!(order, [3, 4, 2, 0]);
        assert_eq!(report.failed.len(), 1);
        assert_eq!(report.len(), 5);
    }
}
