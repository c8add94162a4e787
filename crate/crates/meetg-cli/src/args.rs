//! Argument plumbing: clap definitions, the optional key=value config file,
//! and the merged effective settings.
//!
//! Precedence is flag > environment (`MEETG_*`) > config file > built-in
//! default. Flags are declared optional so an absent flag can fall through
//! to the config layer.

use std::collections::HashMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use meetg::error::{Error, Result};
use meetg::experiment::{CrossvalOptions, Normalization};
use meetg::model::ModelParams;

#[derive(Parser, Debug)]
#[command(
    name = "meetg",
    version,
    about = "Mixture of ELM experts with a trainable gating network: train, cross-validate, sweep, compare"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train one ensemble on the full dataset and write a model file.
    Train(TrainArgs),
    /// Stratified k-fold cross-validation of a registered model.
    Crossval(CrossvalArgs),
    /// Factorial expert-count x hidden-width sweep, cross-validated per cell.
    Sweep(SweepArgs),
    /// MEETG against the single-ELM baseline under identical folds and seeds.
    CompareElm(CompareArgs),
}

/// Flags shared by every subcommand.
#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Dataset: a CSV path, or `twonorm[:<n>:<dim>]` for the synthetic benchmark.
    #[arg(long, env = "MEETG_DATA")]
    pub data: Option<String>,

    /// Schema config file describing the CSV layout.
    #[arg(long, env = "MEETG_SCHEMA")]
    pub schema: Option<PathBuf>,

    /// Expert count k.
    #[arg(long, env = "MEETG_EXPERTS")]
    pub experts: Option<usize>,

    /// Hidden neurons per expert (and single-ELM width).
    #[arg(long, env = "MEETG_HIDDEN")]
    pub hidden: Option<usize>,

    /// Hidden neurons of the gating network (defaults to --hidden).
    #[arg(long, env = "MEETG_GATE_HIDDEN")]
    pub gate_hidden: Option<usize>,

    /// Error scale in the gating target.
    #[arg(long, env = "MEETG_GAMMA")]
    pub gamma: Option<f64>,

    /// Cross-validation fold count.
    #[arg(long, env = "MEETG_FOLDS")]
    pub folds: Option<usize>,

    /// Independent repeats; repeat r runs under seed (seed + r).
    #[arg(long, env = "MEETG_REPEATS")]
    pub repeats: Option<usize>,

    /// Base seed for everything random.
    #[arg(long, env = "MEETG_SEED")]
    pub seed: Option<u64>,

    /// Singular-value cutoff factor for the least-squares solves.
    #[arg(long, env = "MEETG_SV_CUTOFF")]
    pub sv_cutoff: Option<f64>,

    /// Feature preprocessing: minmax or none.
    #[arg(long, env = "MEETG_NORMALIZE")]
    pub normalize: Option<String>,

    /// Output path (model file for train, records file otherwise).
    #[arg(long, env = "MEETG_OUT")]
    pub out: Option<PathBuf>,

    /// Stdout rendering: table or records.
    #[arg(long, env = "MEETG_FORMAT")]
    pub format: Option<String>,

    /// Worker threads (0 = library default).
    #[arg(long, env = "MEETG_THREADS")]
    pub threads: Option<usize>,

    /// Optional key=value file mirroring these flags; flags override it.
    #[arg(long, env = "MEETG_CONFIG")]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Registered model strategy to evaluate.
    #[arg(long, env = "MEETG_MODEL")]
    pub model: Option<String>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Expert counts to sweep, comma separated.
    #[arg(
        long = "experts-grid",
        env = "MEETG_EXPERTS_GRID",
        value_delimiter = ','
    )]
    pub experts_grid: Option<Vec<usize>>,

    /// Hidden widths to sweep, comma separated.
    #[arg(long = "hidden-grid", env = "MEETG_HIDDEN_GRID", value_delimiter = ',')]
    pub hidden_grid: Option<Vec<usize>>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

/// Output rendering selected on stdout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Table,
    Records,
}

impl OutputFormat {
    fn parse(name: &str) -> Result<Self> {
        match name {
            "table" => Ok(OutputFormat::Table),
            "records" => Ok(OutputFormat::Records),
            other => Err(Error::invalid(
                "format",
                format!("`{other}` is not one of: table, records"),
            )),
        }
    }
}

/// Fully merged settings for one invocation.
#[derive(Debug, Clone)]
pub struct Settings {
    pub data: String,
    pub schema: Option<PathBuf>,
    pub params: ModelParams,
    /// Set only when --gate-hidden (or the config file) named a width
    /// explicitly; sweep uses this to pin the gate across the grid.
    pub gate_hidden_pinned: Option<usize>,
    pub crossval: CrossvalOptions,
    pub model: String,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub threads: usize,
}

/// Key=value config file, `#` comments allowed. Keys are the long flag names.
fn parse_config_file(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: i + 1,
            column: 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn config_value<T: std::str::FromStr>(
    config: &HashMap<String, String>,
    key: &str,
) -> Result<Option<T>> {
    match config.get(key) {
        None => Ok(None),
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| Error::invalid("config", format!("key `{key}`: cannot parse `{raw}`"))),
    }
}

impl CommonArgs {
    /// Applies flag > env > config > default and validates the combination.
    pub fn resolve(&self, model: Option<&str>) -> Result<Settings> {
        let config = match &self.config {
            Some(path) => parse_config_file(&std::fs::read_to_string(path)?)?,
            None => HashMap::new(),
        };

        let data = match self.data.clone().or(config.get("data").cloned()) {
            Some(d) => d,
            None => {
                return Err(Error::invalid(
                    "data",
                    "no dataset given; pass --data <path|twonorm[:<n>:<dim>]>",
                ))
            }
        };
        let schema = self
            .schema
            .clone()
            .or(config.get("schema").map(PathBuf::from));

        let defaults = ModelParams::default();
        let hidden = self
            .hidden
            .or(config_value(&config, "hidden")?)
            .unwrap_or(defaults.hidden);
        let gate_hidden_pinned = self.gate_hidden.or(config_value(&config, "gate-hidden")?);
        let gate_hidden = gate_hidden_pinned.unwrap_or(hidden);
        let params = ModelParams {
            experts: self
                .experts
                .or(config_value(&config, "experts")?)
                .unwrap_or(defaults.experts),
            hidden,
            gate_hidden,
            gamma: self
                .gamma
                .or(config_value(&config, "gamma")?)
                .unwrap_or(defaults.gamma),
            weight_range: defaults.weight_range,
            sv_cutoff_factor: self.sv_cutoff.or(config_value(&config, "sv-cutoff")?),
        };

        let crossval = CrossvalOptions {
            n_folds: self.folds.or(config_value(&config, "folds")?).unwrap_or(10),
            repeats: self
                .repeats
                .or(config_value(&config, "repeats")?)
                .unwrap_or(1),
            base_seed: self.seed.or(config_value(&config, "seed")?).unwrap_or(0),
            normalize: Normalization::parse(
                self.normalize
                    .clone()
                    .or(config.get("normalize").cloned())
                    .as_deref()
                    .unwrap_or("minmax"),
            )?,
        };

        let format = OutputFormat::parse(
            self.format
                .clone()
                .or(config.get("format").cloned())
                .as_deref()
                .unwrap_or("table"),
        )?;

        Ok(Settings {
            data,
            schema,
            params,
            gate_hidden_pinned,
            crossval,
            model: model
                .map(str::to_string)
                .or(config.get("model").cloned())
                .unwrap_or_else(|| "meetg".to_string()),
            out: self.out.clone().or(config.get("out").map(PathBuf::from)),
            format,
            threads: self
                .threads
                .or(config_value(&config, "threads")?)
                .unwrap_or(0),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare_common() -> CommonArgs {
        CommonArgs {
            data: Some("twonorm:100:5".into()),
            schema: None,
            experts: None,
            hidden: None,
            gate_hidden: None,
            gamma: None,
            folds: None,
            repeats: None,
            seed: None,
            sv_cutoff: None,
            normalize: None,
            out: None,
            format: None,
            threads: None,
            config: None,
        }
    }

    #[test]
    fn defaults_fill_in() {
        let settings = bare_common().resolve(None).unwrap();
        assert_eq!(settings.params.experts, 7);
        assert_eq!(settings.params.gate_hidden, settings.params.hidden);
        assert_eq!(settings.crossval.n_folds, 10);
        assert_eq!(settings.model, "meetg");
        assert_eq!(settings.format, OutputFormat::Table);
    }

    #[test]
    fn gate_hidden_follows_hidden() {
        let mut args = bare_common();
        args.hidden = Some(25);
        let settings = args.resolve(None).unwrap();
        assert_eq!(settings.params.gate_hidden, 25);
    }

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# run config\nexperts = 3\nfolds = 5\nseed = 9\n").unwrap();
        let mut args = bare_common();
        args.config = Some(path);
        args.experts = Some(5);
        let settings = args.resolve(None).unwrap();
        assert_eq!(settings.params.experts, 5); // flag wins
        assert_eq!(settings.crossval.n_folds, 5); // config fills the gap
        assert_eq!(settings.crossval.base_seed, 9);
    }

    #[test]
    fn missing_data_is_usage_error() {
        let mut args = bare_common();
        args.data = None;
        assert!(args.resolve(None).is_err());
    }

    #[test]
    fn bad_config_value_reports_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "folds = lots\n").unwrap();
        let mut args = bare_common();
        args.config = Some(path);
        let err = args.resolve(None).unwrap_err();
        assert!(err.to_string().contains("folds"), "{err}");
    }
}
