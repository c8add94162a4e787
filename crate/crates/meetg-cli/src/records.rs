//! Machine-readable records and the human tables rendered from them.
//!
//! A record is one line of tab-separated `key=value` pairs in a fixed,
//! documented order, headed by its `kind`. Timing values live in fields
//! whose names end in `_seconds`; those are the only fields excluded from
//! the byte-identical reproducibility contract.

use meetg::experiment::{CompareOutcome, CrossvalOptions, CrossvalOutcome, SweepCell};
use meetg::model::ModelParams;

pub const RECORD_VERSION: u32 = 1;

/// One output line.
#[derive(Debug, Clone)]
pub struct Record {
    fields: Vec<(&'static str, String)>,
}

impl Record {
    pub fn new(kind: &str) -> Self {
        let mut record = Record { fields: Vec::new() };
        record.push("kind", kind);
        record.push("record_version", RECORD_VERSION);
        record
    }

    pub fn push(&mut self, key: &'static str, value: impl ToString) -> &mut Self {
        self.fields.push((key, value.to_string()));
        self
    }

    pub fn line(&self) -> String {
        self.fields
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join("\t")
    }
}

/// Run identity shared by the crossval-style records.
pub struct RunContext<'a> {
    pub dataset: &'a str,
    pub model: &'a str,
    pub params: &'a ModelParams,
    pub options: &'a CrossvalOptions,
}

impl RunContext<'_> {
    fn stamp(&self, record: &mut Record) {
        record
            .push("dataset", self.dataset)
            .push("model", self.model)
            .push("experts", self.params.experts)
            .push("hidden", self.params.hidden)
            .push("gate_hidden", self.params.gate_hidden)
            .push("gamma", self.params.gamma)
            .push("folds", self.options.n_folds)
            .push("repeats", self.options.repeats)
            .push("seed", self.options.base_seed)
            .push("normalize", self.options.normalize.name());
    }
}

/// Fold records (one per repeat x fold) followed by the summary record.
pub fn crossval_records(context: &RunContext, outcome: &CrossvalOutcome) -> Vec<Record> {
    let mut records = Vec::with_capacity(outcome.folds.len() + 1);
    for fold in &outcome.folds {
        let mut record = Record::new("fold");
        context.stamp(&mut record);
        record
            .push("repeat", fold.repeat)
            .push("fold", fold.fold)
            .push("n_train", fold.n_train)
            .push("n_test", fold.n_test)
            .push("accuracy", fold.report.accuracy)
            .push("macro_precision", fold.report.macro_precision)
            .push("macro_recall", fold.report.macro_recall)
            .push("train_seconds", fold.report.train_seconds)
            .push("test_seconds", fold.report.test_seconds);
        records.push(record);
    }
    let summary = &outcome.summary;
    let mut record = Record::new("summary");
    context.stamp(&mut record);
    record
        .push("mean_accuracy", summary.mean_accuracy)
        .push("std_accuracy", summary.std_accuracy)
        .push("mean_macro_precision", summary.mean_macro_precision)
        .push("mean_macro_recall", summary.mean_macro_recall)
        .push("training_ops", summary.training_ops)
        .push("mean_train_seconds", summary.mean_train_seconds)
        .push("mean_test_seconds", summary.mean_test_seconds);
    records.push(record);
    records
}

/// One record per sweep grid cell: dataset, k, L, fold-mean accuracy, std,
/// seconds.
pub fn sweep_records(dataset: &str, options: &CrossvalOptions, cells: &[SweepCell]) -> Vec<Record> {
    cells
        .iter()
        .map(|cell| {
            let mut record = Record::new("sweep");
            record
                .push("dataset", dataset)
                .push("experts", cell.experts)
                .push("hidden", cell.hidden)
                .push("mean_accuracy", cell.mean_accuracy)
                .push("std_accuracy", cell.std_accuracy)
                .push("gate_hidden", cell.gate_hidden)
                .push("folds", options.n_folds)
                .push("repeats", options.repeats)
                .push("seed", options.base_seed)
                .push("mean_train_seconds", cell.mean_train_seconds);
            record
        })
        .collect()
}

/// Paired-comparison records: per-arm summaries plus the delta record.
pub fn compare_records(context: &RunContext, outcome: &CompareOutcome) -> Vec<Record> {
    let budget_params = ModelParams {
        hidden: outcome.budget_width,
        ..context.params.clone()
    };
    let mut records = Vec::new();
    for (model, arm, params) in [
        ("meetg", &outcome.meetg, context.params),
        ("elm", &outcome.elm_same_width, context.params),
        ("elm-budget", &outcome.elm_budget, &budget_params),
    ] {
        let arm_context = RunContext {
            model,
            params,
            ..*context
        };
        records.extend(crossval_records(&arm_context, arm));
    }
    let mut record = Record::new("compare");
    context.stamp(&mut record);
    record
        .push("budget_width", outcome.budget_width)
        .push("meetg_accuracy", outcome.meetg.summary.mean_accuracy)
        .push(
            "elm_same_width_accuracy",
            outcome.elm_same_width.summary.mean_accuracy,
        )
        .push(
            "elm_budget_accuracy",
            outcome.elm_budget.summary.mean_accuracy,
        )
        .push("delta_same_width_pp", outcome.delta_same_width_pp)
        .push("delta_budget_pp", outcome.delta_budget_pp);
    records.push(record);
    records
}

/// Human rendering of a crossval outcome.
pub fn crossval_table(context: &RunContext, outcome: &CrossvalOutcome) -> String {
    let summary = &outcome.summary;
    let mut out = String::new();
    out.push_str(&format!(
        "{} | model={} k={} L={} Lg={} gamma={} folds={} repeats={} seed={} normalize={}\n",
        context.dataset,
        context.model,
        context.params.experts,
        context.params.hidden,
        context.params.gate_hidden,
        context.params.gamma,
        context.options.n_folds,
        context.options.repeats,
        context.options.base_seed,
        context.options.normalize.name(),
    ));
    out.push_str(&format!(
        "  accuracy        {:.4} +/- {:.4}  (error rate {:.2}%)\n",
        summary.mean_accuracy,
        summary.std_accuracy,
        100.0 * (1.0 - summary.mean_accuracy)
    ));
    out.push_str(&format!(
        "  macro precision {:.4}   macro recall {:.4}\n",
        summary.mean_macro_precision, summary.mean_macro_recall
    ));
    out.push_str(&format!(
        "  training ops    {}   mean train {:.4}s   mean test {:.4}s\n",
        summary.training_ops, summary.mean_train_seconds, summary.mean_test_seconds
    ));
    out
}

pub fn sweep_table(dataset: &str, cells: &[SweepCell]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{dataset} sweep\n"));
    out.push_str("  experts  hidden  accuracy    std       seconds\n");
    for cell in cells {
        out.push_str(&format!(
            "  {:<7}  {:<6}  {:<9.4}  {:<8.4}  {:.4}\n",
            cell.experts,
            cell.hidden,
            cell.mean_accuracy,
            cell.std_accuracy,
            cell.mean_train_seconds
        ));
    }
    out
}

pub fn compare_table(context: &RunContext, outcome: &CompareOutcome) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} | k={} L={} folds={} repeats={} seed={}\n",
        context.dataset,
        context.params.experts,
        context.params.hidden,
        context.options.n_folds,
        context.options.repeats,
        context.options.base_seed,
    ));
    out.push_str(&format!(
        "  meetg                  {:.4} +/- {:.4}\n",
        outcome.meetg.summary.mean_accuracy, outcome.meetg.summary.std_accuracy
    ));
    out.push_str(&format!(
        "  elm (same width L={})  {:.4} +/- {:.4}   delta {:+.2} pp\n",
        context.params.hidden,
        outcome.elm_same_width.summary.mean_accuracy,
        outcome.elm_same_width.summary.std_accuracy,
        outcome.delta_same_width_pp
    ));
    out.push_str(&format!(
        "  elm (budget L={})      {:.4} +/- {:.4}   delta {:+.2} pp\n",
        outcome.budget_width,
        outcome.elm_budget.summary.mean_accuracy,
        outcome.elm_budget.summary.std_accuracy,
        outcome.delta_budget_pp
    ));
    out
}
