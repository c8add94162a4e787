//! Subcommand drivers.

use std::io::Write;
use std::path::{Path, PathBuf};

use meetg::data::{normalize_apply, normalize_fit};
use meetg::error::{Error, Result};
use meetg::eval::timed;
use meetg::experiment::{run_compare, run_crossval, run_sweep, Normalization};
use meetg::mixture::save_model_file;
use meetg::model::StrategyRegistry;

use crate::args::{CompareArgs, CrossvalArgs, OutputFormat, SweepArgs, TrainArgs};
use crate::records::{
    compare_records, compare_table, crossval_records, crossval_table, sweep_records, sweep_table,
    Record, RunContext,
};
use crate::source::resolve;

fn configure_threads(threads: usize) {
    if threads > 0 {
        // A second configuration attempt in one process is harmless; the
        // first pool stays.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn emit(records: &[Record], table: &str, format: OutputFormat, out: Option<&Path>) -> Result<()> {
    let mut lines = String::new();
    for record in records {
        lines.push_str(&record.line());
        lines.push('\n');
    }
    if let Some(path) = out {
        std::fs::write(path, &lines)?;
    }
    match format {
        OutputFormat::Records => print!("{lines}"),
        OutputFormat::Table => print!("{table}"),
    }
    std::io::stdout().flush()?;
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<()> {
    let settings = args.common.resolve(None)?;
    configure_threads(settings.threads);
    let named = resolve(
        &settings.data,
        settings.schema.as_deref(),
        settings.crossval.base_seed,
    )?;
    let dataset = &named.dataset;

    let features = match settings.crossval.normalize {
        Normalization::MinMax => {
            let params = normalize_fit(&dataset.features);
            normalize_apply(&params, &dataset.features)
        }
        Normalization::None => dataset.features.clone(),
    };

    let registry = StrategyRegistry::builtin();
    let strategy = registry.create("meetg", settings.params.clone())?;
    let seed = settings.crossval.base_seed;
    let (fitted, train_seconds) = timed(|| strategy.fit(&features, &dataset.targets, seed));
    let fitted = fitted?;

    let predicted = fitted.predict_labels(&features)?;
    let correct = predicted
        .iter()
        .zip(&dataset.labels)
        .filter(|(p, t)| p == t)
        .count();
    let train_accuracy = correct as f64 / dataset.n_samples() as f64;

    let model = fitted
        .as_meetg()
        .ok_or_else(|| Error::invalid("model", "train writes ensemble model files only"))?;
    let model_path: PathBuf = settings
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("meetg-model.json"));
    save_model_file(model, &dataset.class_names, &model_path)?;

    let mut record = Record::new("train");
    record
        .push("dataset", &named.name)
        .push("model", "meetg")
        .push("experts", settings.params.experts)
        .push("hidden", settings.params.hidden)
        .push("gate_hidden", settings.params.gate_hidden)
        .push("gamma", settings.params.gamma)
        .push("seed", seed)
        .push("normalize", settings.crossval.normalize.name())
        .push("n_train", dataset.n_samples())
        .push("train_accuracy", train_accuracy)
        .push("model_file", model_path.display())
        .push("train_seconds", train_seconds);

    let table = format!(
        "trained meetg on {} ({} samples): training accuracy {:.4}, {:.3}s, model -> {}\n",
        named.name,
        dataset.n_samples(),
        train_accuracy,
        train_seconds,
        model_path.display()
    );
    // The model file already went to `out`; records go to stdout only.
    emit(&[record], &table, settings.format, None)
}

pub fn crossval(args: &CrossvalArgs) -> Result<()> {
    let settings = args.common.resolve(args.model.as_deref())?;
    configure_threads(settings.threads);
    let named = resolve(
        &settings.data,
        settings.schema.as_deref(),
        settings.crossval.base_seed,
    )?;

    let registry = StrategyRegistry::builtin();
    let strategy = registry.create(&settings.model, settings.params.clone())?;
    let outcome = run_crossval(&named.dataset, strategy.as_ref(), &settings.crossval)?;

    let context = RunContext {
        dataset: &named.name,
        model: &settings.model,
        params: &settings.params,
        options: &settings.crossval,
    };
    let records = crossval_records(&context, &outcome);
    let table = crossval_table(&context, &outcome);
    emit(&records, &table, settings.format, settings.out.as_deref())
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let settings = args.common.resolve(None)?;
    configure_threads(settings.threads);
    let named = resolve(
        &settings.data,
        settings.schema.as_deref(),
        settings.crossval.base_seed,
    )?;

    let expert_counts = args.experts_grid.clone().unwrap_or_else(|| vec![3, 5, 7]);
    let hidden_sizes = args
        .hidden_grid
        .clone()
        .unwrap_or_else(|| vec![10, 20, 30, 40, 50, 60]);
    // --gate-hidden pins the gate width across the whole grid; otherwise it
    // follows the swept expert width.
    let pinned_gate = settings.gate_hidden_pinned;

    let cells = run_sweep(
        &named.dataset,
        &expert_counts,
        &hidden_sizes,
        &settings.params,
        pinned_gate,
        &settings.crossval,
    )?;
    let records = sweep_records(&named.name, &settings.crossval, &cells);
    let table = sweep_table(&named.name, &cells);
    emit(&records, &table, settings.format, settings.out.as_deref())
}

pub fn compare_elm(args: &CompareArgs) -> Result<()> {
    let settings = args.common.resolve(None)?;
    configure_threads(settings.threads);
    let named = resolve(
        &settings.data,
        settings.schema.as_deref(),
        settings.crossval.base_seed,
    )?;

    let outcome = run_compare(&named.dataset, &settings.params, &settings.crossval)?;
    let context = RunContext {
        dataset: &named.name,
        model: "meetg",
        params: &settings.params,
        options: &settings.crossval,
    };
    let records = compare_records(&context, &outcome);
    let table = compare_table(&context, &outcome);
    emit(&records, &table, settings.format, settings.out.as_deref())
}
