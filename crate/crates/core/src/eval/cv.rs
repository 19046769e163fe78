//! Repeated k-fold cross-validation: per iteration a fresh speaker-stratified
//! fold plan; per fold one test fold, one early-stopping fold and the rest
//! (optionally a subset) for training.

use serde::{Deserialize, Serialize};

use crate::data::{
    make_folds, split_roles, subset_train_folds, znormalize, Dataset, FoldPlan, NormStats, NormalizationMode,
    Stratification, TaskData, TaskLabel,
};
use crate::parallel::Parallelism;
use crate::seed::derive_tagged;
use crate::transfer::{
    evaluate_uar, finetune, Model, train_dnn, train_prognet, StrategyKind, TrainConfig, TrainLog, TrainedModel,
    TransferStrategy,
};
use crate::{Error, Result};

/// Fold whose role is "test" when splitting the source corpus; the source
/// model trains on `k − 2` folds and early-stops on the next one.
pub const SOURCE_HELDOUT_FOLD: usize = 0;

#[derive(Clone, Copy, Debug)]
pub struct SourceSpec<'a> {
    pub dataset: &'a Dataset,
    pub task: TaskLabel,
}

/// Everything that defines a cross-validation experiment except the strategy.
#[derive(Clone, Debug)]
pub struct CvSetup<'a> {
    pub target: &'a Dataset,
    pub target_task: TaskLabel,
    pub source: Option<SourceSpec<'a>>,
    pub config: TrainConfig,
    pub iterations: usize,
    pub k: usize,
    pub base_seed: u64,
    /// Number of training folds to sample per step; `None` uses all `k − 2`.
    pub train_fold_subset: Option<usize>,
    pub stratification: Stratification,
    pub normalization: NormalizationMode,
    pub parallelism: Parallelism,
    /// Keep each fold's trained model in its [`FoldLog`].
    pub keep_models: bool,
}

impl<'a> CvSetup<'a> {
    pub fn new(target: &'a Dataset, target_task: TaskLabel) -> Self {
        Self {
            target,
            target_task,
            source: None,
            config: TrainConfig::default(),
            iterations: 10,
            k: 10,
            base_seed: 0,
            train_fold_subset: None,
            stratification: Stratification::default(),
            normalization: NormalizationMode::default(),
            parallelism: Parallelism::default(),
            keep_models: false,
        }
    }

    pub fn train_folds(&self) -> usize {
        self.train_fold_subset.unwrap_or(self.k.saturating_sub(2))
    }
}

/// UARs of one strategy on one task, `iterations × k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CVResult {
    pub strategy: StrategyKind,
    pub task: TaskLabel,
    pub source_task: Option<TaskLabel>,
    pub k: usize,
    pub base_seed: u64,
    pub train_folds: usize,
    /// One fingerprint per iteration; equal fingerprints mean identical fold plans.
    pub plan_fingerprints: Vec<String>,
    pub uars: Vec<Vec<f64>>,
    pub iteration_means: Vec<f64>,
    pub iteration_stds: Vec<f64>,
    /// Mean over iterations of the within-iteration mean.
    pub mean_uar: f64,
    /// Mean over iterations of the within-iteration (population) std.
    pub mean_within_std: f64,
    /// Population std over all `iterations × k` UARs.
    pub overall_std: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
pub(crate) fn pop_std(v: &[f64]) -> f64 {
    if v.iter().all(|&x| x == v[0]) {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt()
}

impl CVResult {
    #[allow(clippy::too_many_arguments)]
    pub fn from_uars(
        strategy: StrategyKind,
        task: TaskLabel,
        source_task: Option<TaskLabel>,
        k: usize,
        base_seed: u64,
        train_folds: usize,
        plan_fingerprints: Vec<String>,
        uars: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if uars.is_empty() || uars.iter().any(|row| row.len() != k) {
            return Err(Error::Shape(format!("UAR matrix must be iterations x {k}")));
        }
        if plan_fingerprints.len() != uars.len() {
            return Err(Error::Shape("one plan fingerprint per iteration required".into()));
        }
        if uars.iter().flatten().any(|u| !(0.0..=1.0).contains(u)) {
            return Err(Error::Numeric("UAR outside [0, 1]".into()));
        }
        let iteration_means: Vec<f64> = uars.iter().map(|r| mean(r)).collect();
        let iteration_stds: Vec<f64> = uars.iter().map(|r| pop_std(r)).collect();
        let all: Vec<f64> = uars.iter().flatten().copied().collect();
        Ok(Self {
            strategy,
            task,
            source_task,
            k,
            base_seed,
            train_folds,
            plan_fingerprints,
            mean_uar: mean(&iteration_means),
            mean_within_std: mean(&iteration_stds),
            overall_std: pop_std(&all),
            iteration_means,
            iteration_stds,
            uars,
        })
    }

    pub fn iterations(&self) -> usize {
        self.uars.len()
    }

    /// Test-fold size over training size: `1 / train_folds`.
    pub fn default_train_test_ratio(&self) -> f64 {
        1.0 / self.train_folds as f64
    }

    /// Both results must come from the same fold plans and protocol.
    pub fn check_paired(&self, other: &CVResult) -> Result<()> {
        let fail = |m: String| Err(Error::Pairing(m));
        if self.uars.len() != other.uars.len() || self.k != other.k {
            return fail(format!(
                "shapes differ: {}x{} vs {}x{}",
                self.uars.len(),
                self.k,
                other.uars.len(),
                other.k
            ));
        }
        if self.uars.iter().zip(&other.uars).any(|(a, b)| a.len() != b.len()) {
            return fail("ragged UAR matrices".into());
        }
        if self.base_seed != other.base_seed {
            return fail(format!("base seeds differ ({} vs {})", self.base_seed, other.base_seed));
        }
        if self.train_folds != other.train_folds {
            return fail(format!(
                "training-fold counts differ ({} vs {})",
                self.train_folds, other.train_folds
            ));
        }
        if self.plan_fingerprints != other.plan_fingerprints {
            return fail("fold plans differ".into());
        }
        if self.task != other.task {
            return fail(format!("tasks differ ({} vs {})", self.task, other.task));
        }
        Ok(())
    }
}

/// One fold's training log.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldLog {
    pub iteration: usize,
    pub fold: usize,
    pub strategy: StrategyKind,
    pub log: TrainLog,
    pub model: Option<Model>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvRun {
    pub result: CVResult,
    pub logs: Vec<FoldLog>,
}

fn fold_context(iteration: usize, fold: usize, strategy: &str) -> impl FnOnce(Error) -> Error + '_ {
    move |e| Error::Fold {
        iteration,
        fold,
        strategy: strategy.to_string(),
        source: Box::new(e),
    }
}

/// Training and evaluation data for one split, normalized per the mode.
fn split_data(
    ds: &Dataset,
    task: TaskLabel,
    mode: NormalizationMode,
    train: &[usize],
    others: &[&[usize]],
) -> Result<(TaskData, Vec<TaskData>, Option<NormStats>)> {
    let vocab = ds.vocab(task);
    let mut train_data = ds.task_data(train, &vocab)?;
    let mut rest = others
        .iter()
        .map(|rows| ds.task_data(rows, &vocab))
        .collect::<Result<Vec<_>>>()?;
    let stats = match mode {
        NormalizationMode::TrainOnly => {
            let stats = NormStats::fit(ds, train)?;
            stats.apply_matrix(&mut train_data.x);
            for d in &mut rest {
                stats.apply_matrix(&mut d.x);
            }
            Some(stats)
        }
        _ => ds.normalization().cloned(),
    };
    Ok((train_data, rest, stats))
}

fn train_source(setup: &CvSetup<'_>, source: &Dataset, task: TaskLabel, iteration: usize) -> Result<TrainedModel> {
    let plan = make_folds(
        source,
        setup.k,
        derive_tagged(setup.base_seed, "source-plan", &[iteration as u64]),
        setup.stratification,
    )?;
    let roles = split_roles(setup.k, SOURCE_HELDOUT_FOLD)?;
    let train_rows = plan.indices(&roles.train);
    let val_rows = plan.indices(&[roles.early_stop]);
    let (train, rest, stats) = split_data(source, task, setup.normalization, &train_rows, &[&val_rows])?;
    let vocab = source.vocab(task);
    let seed = derive_tagged(setup.base_seed, "source-model", &[iteration as u64]);
    let (mut model, _) = train_dnn(&train, &rest[0], &vocab, &setup.config, seed)?;
    model.normalization = stats;
    Ok(model)
}

fn normalized_copy(ds: &Dataset, mode: NormalizationMode) -> Result<Option<Dataset>> {
    match mode {
        NormalizationMode::Global => Ok(Some(znormalize(ds)?.0)),
        _ => Ok(None),
    }
}

/// Runs the full protocol for several strategies that share fold plans,
/// training-fold subsets and (per iteration) one source model.
pub fn run_repeated_cv_many(setup: &CvSetup<'_>, strategies: &[StrategyKind]) -> Result<Vec<CvRun>> {
    setup.config.validate()?;
    if strategies.is_empty() {
        return Err(Error::Hyperparams("no strategies requested".into()));
    }
    if setup.iterations == 0 {
        return Err(Error::Hyperparams("iterations must be >= 1".into()));
    }
    if setup.k < 3 {
        return Err(Error::InvalidK(setup.k));
    }
    let train_folds = setup.train_folds();
    if train_folds == 0 || train_folds > setup.k - 2 {
        return Err(Error::InvalidSubset {
            requested: train_folds,
            available: setup.k - 2,
        });
    }
    let needs_source = strategies.iter().any(|s| s.needs_source());
    let source = match (needs_source, setup.source) {
        (true, None) => return Err(Error::Hyperparams("transfer strategies need a source dataset and task".into())),
        (true, Some(src)) => {
            if src.dataset.feature_dim() != setup.target.feature_dim() {
                return Err(Error::IncompatibleDomain(format!(
                    "source has {} features, target {}",
                    src.dataset.feature_dim(),
                    setup.target.feature_dim()
                )));
            }
            Some(src)
        }
        (false, _) => None,
    };

    let target_norm = normalized_copy(setup.target, setup.normalization)?;
    let target = target_norm.as_ref().unwrap_or(setup.target);
    let source_norm = match source {
        Some(src) if std::ptr::eq(src.dataset, setup.target) => None,
        Some(src) => normalized_copy(src.dataset, setup.normalization)?,
        None => None,
    };
    let source_ds = source.map(|src| {
        if std::ptr::eq(src.dataset, setup.target) {
            target
        } else {
            source_norm.as_ref().unwrap_or(src.dataset)
        }
    });

    let plans: Vec<FoldPlan> = (0..setup.iterations)
        .map(|i| {
            make_folds(
                target,
                setup.k,
                derive_tagged(setup.base_seed, "fold-plan", &[i as u64]),
                setup.stratification,
            )
        })
        .collect::<Result<_>>()?;

    let source_models: Vec<TrainedModel> = match (source, source_ds) {
        (Some(src), Some(ds)) => setup
            .parallelism
            .map(setup.iterations, |i| {
                train_source(setup, ds, src.task, i).map_err(fold_context(i, SOURCE_HELDOUT_FOLD, "source"))
            })
            .into_iter()
            .collect::<Result<_>>()?,
        _ => Vec::new(),
    };

    let per_iter = setup.k * strategies.len();
    let n_jobs = setup.iterations * per_iter;
    let target_vocab = target.vocab(setup.target_task);
    let outcomes = setup.parallelism.map(n_jobs, |job| {
        let iteration = job / per_iter;
        let fold = (job % per_iter) / strategies.len();
        let kind = strategies[job % strategies.len()];
        let run = || -> Result<(f64, TrainLog, Option<Model>)> {
            let roles = split_roles(setup.k, fold)?;
            let train_set = match setup.train_fold_subset {
                Some(n) => subset_train_folds(
                    &roles.train,
                    n,
                    derive_tagged(setup.base_seed, "subset", &[iteration as u64, fold as u64]),
                )?,
                None => roles.train.clone(),
            };
            let plan = &plans[iteration];
            let train_rows = plan.indices(&train_set);
            let val_rows = plan.indices(&[roles.early_stop]);
            let test_rows = plan.indices(&[roles.test]);
            let (train, rest, _) =
                split_data(target, setup.target_task, setup.normalization, &train_rows, &[&val_rows, &test_rows])?;
            let (val, test) = (&rest[0], &rest[1]);
            let seed = derive_tagged(
                setup.base_seed,
                "train",
                &[iteration as u64, fold as u64, kind as u64],
            );
            let (model, log) = match kind {
                StrategyKind::Baseline => train_dnn(&train, val, &target_vocab, &setup.config, seed)?,
                StrategyKind::Ptft => finetune(&source_models[iteration], &train, val, &target_vocab, &setup.config, seed)?,
                StrategyKind::Prognet => {
                    train_prognet(&source_models[iteration], &train, val, &target_vocab, &setup.config, seed)?
                }
            };
            let uar = evaluate_uar(&model.model, test)?;
            Ok((uar, log, setup.keep_models.then_some(model.model)))
        };
        run().map_err(fold_context(iteration, fold, kind.name()))
    });

    let mut uars = vec![vec![vec![0.0; setup.k]; setup.iterations]; strategies.len()];
    let mut logs: Vec<Vec<FoldLog>> = vec![Vec::with_capacity(setup.iterations * setup.k); strategies.len()];
    for (job, outcome) in outcomes.into_iter().enumerate() {
        let (uar, log, model) = outcome?;
        let iteration = job / per_iter;
        let fold = (job % per_iter) / strategies.len();
        let s = job % strategies.len();
        uars[s][iteration][fold] = uar;
        logs[s].push(FoldLog {
            iteration,
            fold,
            strategy: strategies[s],
            log,
            model,
        });
    }
    let fingerprints: Vec<String> = plans.iter().map(|p| format!("{:016x}", p.fingerprint())).collect();
    strategies
        .iter()
        .zip(uars)
        .zip(logs)
        .map(|((&kind, uars), logs)| {
            let result = CVResult::from_uars(
                kind,
                setup.target_task,
                kind.needs_source().then(|| source.map(|s| s.task)).flatten(),
                setup.k,
                setup.base_seed,
                train_folds,
                fingerprints.clone(),
                uars,
            )?;
            Ok(CvRun { result, logs })
        })
        .collect()
}

/// Repeated cross-validation of a single strategy.
pub fn run_repeated_cv(setup: &CvSetup<'_>, strategy: TransferStrategy) -> Result<CvRun> {
    let mut setup = setup.clone();
    if let (Some(task), Some(src)) = (strategy.source_task(), setup.source.as_mut()) {
        src.task = task;
    }
    let mut runs = run_repeated_cv_many(&setup, &[strategy.kind()])?;
    Ok(runs.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_statistics() {
        let uars = vec![vec![0.5, 0.7, 0.6], vec![0.4, 0.4, 0.4]];
        let r = CVResult::from_uars(
            StrategyKind::Baseline,
            TaskLabel::Emotion,
            None,
            3,
            0,
            1,
            vec!["a".into(), "b".into()],
            uars,
        )
        .unwrap();
        assert!((r.iteration_means[0] - 0.6).abs() < 1e-15);
        assert!((r.mean_uar - 0.5).abs() < 1e-15);
        assert!((r.iteration_stds[0] - (0.02f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(r.iteration_stds[1], 0.0);
        assert!((r.mean_within_std - 0.5 * (0.02f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pairing_checks() {
        let mk = |seed: u64, fp: &str| {
            CVResult::from_uars(
                StrategyKind::Baseline,
                TaskLabel::Emotion,
                None,
                3,
                seed,
                1,
                vec![fp.into()],
                vec![vec![0.5; 3]],
            )
            .unwrap()
        };
        assert!(mk(1, "x").check_paired(&mk(1, "x")).is_ok());
        assert!(matches!(mk(1, "x").check_paired(&mk(2, "x")), Err(Error::Pairing(_))));
        assert!(matches!(mk(1, "x").check_paired(&mk(1, "y")), Err(Error::Pairing(_))));
    }
}
