//! Resolving `--data` / `--schema` into a loaded dataset.
//!
//! `--data` is either a CSV path or a synthetic spec `twonorm[:<n>:<dim>]`.
//! A schema config names the CSV layout; without one, the label is taken
//! from the last column.

use std::path::Path;

use meetg::data::{
    generate_twonorm, load_csv_file, load_schema_config, CsvSchema, Dataset, LabelColumn,
};
use meetg::error::{Error, Result};
use meetg::rng::derive_seed;

/// Stream tag separating synthetic-data generation from fold/model seeding.
const TWONORM_STREAM: u64 = 0x74776f_u64;

#[derive(Debug)]
pub struct NamedDataset {
    pub name: String,
    pub dataset: Dataset,
}

pub fn resolve(data: &str, schema_path: Option<&Path>, seed: u64) -> Result<NamedDataset> {
    if let Some(spec) = data.strip_prefix("twonorm") {
        let (n, dim) = parse_twonorm_spec(spec)?;
        return Ok(NamedDataset {
            name: "twonorm".to_string(),
            dataset: generate_twonorm(n, dim, derive_seed(seed, TWONORM_STREAM))?,
        });
    }

    let (name, csv_schema, path) = match schema_path {
        Some(config_path) => {
            let schema = load_schema_config(config_path)?;
            // --data wins over the path recorded in the schema file.
            (schema.name, schema.csv, data.to_string())
        }
        None => {
            let stem = Path::new(data)
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| data.to_string());
            let schema = CsvSchema {
                label_column: LabelColumn::Last,
                ..CsvSchema::default()
            };
            (stem, schema, data.to_string())
        }
    };

    if !Path::new(&path).exists() {
        return Err(Error::invalid(
            "data",
            format!("dataset file `{path}` does not exist"),
        ));
    }
    Ok(NamedDataset {
        name,
        dataset: load_csv_file(&path, &csv_schema)?,
    })
}

fn parse_twonorm_spec(spec: &str) -> Result<(usize, usize)> {
    if spec.is_empty() {
        return Ok((7400, 20));
    }
    let parts: Vec<&str> = spec
        .strip_prefix(':')
        .unwrap_or_default()
        .split(':')
        .collect();
    if let [n, dim] = parts.as_slice() {
        let n = n
            .parse()
            .map_err(|_| Error::invalid("data", format!("twonorm sample count `{n}`")))?;
        let dim = dim
            .parse()
            .map_err(|_| Error::invalid("data", format!("twonorm dimension `{dim}`")))?;
        return Ok((n, dim));
    }
    Err(Error::invalid(
        "data",
        format!("`twonorm{spec}` should be twonorm or twonorm:<n>:<dim>"),
    ))
}
