//! Cross-validated experiment engine: per-fold train/normalize/test cycles,
//! repeat handling, hyperparameter sweeps, and the paired single-ELM
//! comparison.
//!
//! All scheduling is free to run concurrently; results are keyed by
//! (repeat, fold) and model seeds are derived per cell, so outcomes are
//! identical under any thread count.

use rayon::prelude::*;

use crate::data::{normalize_apply, normalize_fit, stratified_folds, Dataset};
use crate::error::{Error, Result};
use crate::eval::{evaluate, timed, EvalReport};
use crate::model::{ClassifierStrategy, ModelParams, StrategyRegistry};
use crate::rng::derive_seed;

/// Feature preprocessing applied per fold, fitted on the training split only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    #[default]
    MinMax,
    None,
}

impl Normalization {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "minmax" => Ok(Normalization::MinMax),
            "none" => Ok(Normalization::None),
            other => Err(Error::invalid(
                "normalize",
                format!("`{other}` is not one of: minmax, none"),
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Normalization::MinMax => "minmax",
            Normalization::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalOptions {
    pub n_folds: usize,
    pub repeats: usize,
    pub base_seed: u64,
    pub normalize: Normalization,
}

impl Default for CrossvalOptions {
    fn default() -> Self {
        CrossvalOptions {
            n_folds: 10,
            repeats: 1,
            base_seed: 0,
            normalize: Normalization::MinMax,
        }
    }
}

/// One (repeat, fold) evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub repeat: usize,
    pub fold: usize,
    /// Seed the repeat ran under: `base_seed + repeat`.
    pub repeat_seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub report: EvalReport,
}

/// Aggregates over every (repeat, fold) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalSummary {
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_macro_precision: f64,
    pub mean_macro_recall: f64,
    pub mean_train_seconds: f64,
    pub mean_test_seconds: f64,
    /// Cost-model estimate for one training run at the first fold's size.
    pub training_ops: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossvalOutcome {
    pub folds: Vec<FoldOutcome>,
    pub summary: CrossvalSummary,
}

/// Runs `repeats` rounds of stratified k-fold cross-validation. Repeat r
/// uses seed `base_seed + r` for its fold plan, and the model trained
/// against fold f is seeded with `derive_seed(base_seed + r, f)`. The
/// normalizer is fitted per fold on the training split only.
pub fn run_crossval(
    dataset: &Dataset,
    strategy: &dyn ClassifierStrategy,
    options: &CrossvalOptions,
) -> Result<CrossvalOutcome> {
    if options.repeats == 0 {
        return Err(Error::invalid("repeats", "must be at least 1"));
    }
    let mut cells: Vec<(usize, usize, u64)> = Vec::new();
    for repeat in 0..options.repeats {
        let repeat_seed = options.base_seed.wrapping_add(repeat as u64);
        for fold in 0..options.n_folds {
            cells.push((repeat, fold, repeat_seed));
        }
    }
    // Fold plans are cheap; recompute per cell rather than sharing state.
    let folds: Vec<FoldOutcome> = cells
        .into_par_iter()
        .map(|(repeat, fold, repeat_seed)| -> Result<FoldOutcome> {
            let plan = stratified_folds(dataset, options.n_folds, repeat_seed)?;
            let train_idx = plan.train_indices(fold);
            let test_idx = plan.test_indices(fold);
            let train = dataset.select(&train_idx);
            let test = dataset.select(&test_idx);

            let (train_features, test_features) = match options.normalize {
                Normalization::MinMax => {
                    let params = normalize_fit(&train.features);
                    (
                        normalize_apply(&params, &train.features),
                        normalize_apply(&params, &test.features),
                    )
                }
                Normalization::None => (train.features.clone(), test.features.clone()),
            };

            let model_seed = derive_seed(repeat_seed, fold as u64);
            let (fitted, train_seconds) =
                timed(|| strategy.fit(&train_features, &train.targets, model_seed));
            let fitted = fitted?;
            let (predicted, test_seconds) = timed(|| fitted.predict_labels(&test_features));
            let predicted = predicted?;
            let report = evaluate(
                &test.labels,
                &predicted,
                dataset.n_classes(),
                train_seconds,
                test_seconds,
            )?;
            Ok(FoldOutcome {
                repeat,
                fold,
                repeat_seed,
                n_train: train_idx.len(),
                n_test: test_idx.len(),
                report,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let summary = summarize(dataset, strategy, &folds);
    Ok(CrossvalOutcome { folds, summary })
}

fn summarize(
    dataset: &Dataset,
    strategy: &dyn ClassifierStrategy,
    folds: &[FoldOutcome],
) -> CrossvalSummary {
    let n = folds.len() as f64;
    let mean = |f: &dyn Fn(&FoldOutcome) -> f64| folds.iter().map(f).sum::<f64>() / n;
    let mean_accuracy = mean(&|o| o.report.accuracy);
    let variance = folds
        .iter()
        .map(|o| {
            let d = o.report.accuracy - mean_accuracy;
            d * d
        })
        .sum::<f64>()
        / n;
    CrossvalSummary {
        mean_accuracy,
        std_accuracy: variance.sqrt(),
        mean_macro_precision: mean(&|o| o.report.macro_precision),
        mean_macro_recall: mean(&|o| o.report.macro_recall),
        mean_train_seconds: mean(&|o| o.report.train_seconds),
        mean_test_seconds: mean(&|o| o.report.test_seconds),
        training_ops: strategy.training_ops(
            folds.first().map(|o| o.n_train).unwrap_or(0),
            dataset.n_features(),
            dataset.n_classes(),
        ),
    }
}

/// One cell of the expert-count x hidden-width grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub experts: usize,
    pub hidden: usize,
    pub gate_hidden: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_train_seconds: f64,
}

/// Full factorial sweep of expert counts and hidden widths, each cell
/// cross-validated with the shared options. Unless pinned, the gate's width
/// follows the expert width.
pub fn run_sweep(
    dataset: &Dataset,
    expert_counts: &[usize],
    hidden_sizes: &[usize],
    base_params: &ModelParams,
    pinned_gate_hidden: Option<usize>,
    options: &CrossvalOptions,
) -> Result<Vec<SweepCell>> {
    if expert_counts.is_empty() || hidden_sizes.is_empty() {
        return Err(Error::invalid(
            "sweep",
            "expert and hidden lists must be nonempty",
        ));
    }
    let registry = StrategyRegistry::builtin();
    let mut cells = Vec::with_capacity(expert_counts.len() * hidden_sizes.len());
    for &experts in expert_counts {
        for &hidden in hidden_sizes {
            let gate_hidden = pinned_gate_hidden.unwrap_or(hidden);
            let params = ModelParams {
                experts,
                hidden,
                gate_hidden,
                ..base_params.clone()
            };
            let strategy = registry.create("meetg", params)?;
            let outcome = run_crossval(dataset, strategy.as_ref(), options)?;
            cells.push(SweepCell {
                experts,
                hidden,
                gate_hidden,
                mean_accuracy: outcome.summary.mean_accuracy,
                std_accuracy: outcome.summary.std_accuracy,
                mean_train_seconds: outcome.summary.mean_train_seconds,
            });
        }
    }
    Ok(cells)
}

/// MEETG against the single-ELM baseline under identical folds and seeds.
/// The baseline is reported twice: at the same width as one expert, and at
/// the ensemble's total hidden budget (k x width).
#[derive(Debug, Clone, PartialEq)]
pub struct CompareOutcome {
    pub meetg: CrossvalOutcome,
    pub elm_same_width: CrossvalOutcome,
    pub elm_budget: CrossvalOutcome,
    pub budget_width: usize,
    /// Accuracy deltas, meetg minus baseline, in percentage points.
    pub delta_same_width_pp: f64,
    pub delta_budget_pp: f64,
}

pub fn run_compare(
    dataset: &Dataset,
    params: &ModelParams,
    options: &CrossvalOptions,
) -> Result<CompareOutcome> {
    let registry = StrategyRegistry::builtin();
    let meetg = run_crossval(
        dataset,
        registry.create("meetg", params.clone())?.as_ref(),
        options,
    )?;
    let elm_same_width = run_crossval(
        dataset,
        registry.create("elm", params.clone())?.as_ref(),
        options,
    )?;
    let budget_width = params.experts * params.hidden;
    let elm_budget = run_crossval(
        dataset,
        registry
            .create(
                "elm",
                ModelParams {
                    hidden: budget_width,
                    ..params.clone()
                },
            )?
            .as_ref(),
        options,
    )?;
    let delta_same_width_pp =
        100.0 * (meetg.summary.mean_accuracy - elm_same_width.summary.mean_accuracy);
    let delta_budget_pp = 100.0 * (meetg.summary.mean_accuracy - elm_budget.summary.mean_accuracy);
    Ok(CompareOutcome {
        meetg,
        elm_same_width,
        elm_budget,
        budget_width,
        delta_same_width_pp,
        delta_budget_pp,
    })
}
