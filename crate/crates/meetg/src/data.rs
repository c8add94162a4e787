//! Dataset ingestion, target encoding, normalization, stratified k-fold
//! plans, and the synthetic twonorm generator.
//!
//! Class order is first appearance in the file, so label indices are
//! reproducible from the raw data alone. Feature cells must be numeric;
//! missing values are rejected rather than imputed.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::SplitMix64;

/// Post-ingestion classification dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// N x d feature matrix.
    pub features: Matrix,
    /// N x m one-hot target matrix.
    pub targets: Matrix,
    /// Class index per sample; `labels[i]` is the argmax of `targets` row i.
    pub labels: Vec<usize>,
    /// Distinct class names in first-appearance order.
    pub class_names: Vec<String>,
}

impl Dataset {
    pub fn n_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Builds a dataset from features and class labels, deriving one-hot
    /// targets. Class names index into `class_names` order.
    pub fn from_labeled(
        features: Matrix,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let m = class_names.len();
        if m < 2 {
            return Err(Error::invalid(
                "dataset",
                format!("{m} classes; classification needs at least 2"),
            ));
        }
        if labels.len() != features.rows() {
            return Err(Error::invalid(
                "dataset",
                format!("{} labels for {} samples", labels.len(), features.rows()),
            ));
        }
        if let Some(bad) = labels.iter().find(|l| **l >= m) {
            return Err(Error::invalid(
                "dataset",
                format!("label index {bad} out of range for {m} classes"),
            ));
        }
        let targets = Matrix::from_fn(
            labels.len(),
            m,
            |r, c| if labels[r] == c { 1.0 } else { 0.0 },
        );
        Ok(Dataset {
            features,
            targets,
            labels,
            class_names,
        })
    }

    /// Row subset in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let features = Matrix::from_fn(indices.len(), self.n_features(), |r, c| {
            self.features.get(indices[r], c)
        });
        let labels: Vec<usize> = indices.iter().map(|&i| self.labels[i]).collect();
        let targets = Matrix::from_fn(indices.len(), self.n_classes(), |r, c| {
            if labels[r] == c {
                1.0
            } else {
                0.0
            }
        });
        Dataset {
            features,
            targets,
            labels,
            class_names: self.class_names.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

/// Which column holds the class label.
#[derive(Debug, Clone, PartialEq)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
    /// Rightmost column, whatever the row arity turns out to be.
    Last,
}

/// Parse rules for one CSV source.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub label_column: LabelColumn,
    pub has_header: bool,
    pub delimiter: u8,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            label_column: LabelColumn::Index(0),
            has_header: false,
            delimiter: b',',
        }
    }
}

/// Loads a delimited text source into a [`Dataset`]. Every row must have the
/// same arity; feature cells must parse as finite reals ("?" and empty cells
/// are rejected, with the offending row and column named).
pub fn load_csv(source: impl Read, schema: &CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .delimiter(schema.delimiter)
        .flexible(false)
        .trim(csv::Trim::All)
        .from_reader(source);

    let label_idx =
        match &schema.label_column {
            LabelColumn::Index(i) => Some(*i),
            LabelColumn::Last => None,
            LabelColumn::Name(name) => {
                if !schema.has_header {
                    return Err(Error::invalid(
                        "csv schema",
                        format!("label column named `{name}` requires a header row"),
                    ));
                }
                let headers = reader
                    .headers()
                    .map_err(|e| csv_error(e, schema.has_header))?;
                Some(headers.iter().position(|h| h == name).ok_or_else(|| {
                    Error::invalid("csv schema", format!("no column named `{name}`"))
                })?)
            }
        };

    let mut feature_rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();
    let header_offset = if schema.has_header { 2 } else { 1 };

    for (row_number, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(e, schema.has_header))?;
        let line = row_number + header_offset;
        let label_idx = match label_idx {
            Some(i) => i,
            None => record.len().saturating_sub(1),
        };
        if label_idx >= record.len() {
            return Err(Error::Parse {
                line,
                column: label_idx + 1,
                message: format!("label column {label_idx} beyond row arity {}", record.len()),
            });
        }
        let mut features = Vec::with_capacity(record.len() - 1);
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                continue;
            }
            if cell.is_empty() || cell == "?" {
                return Err(Error::Parse {
                    line,
                    column: col + 1,
                    message: format!("missing value `{cell}` (imputation is not supported)"),
                });
            }
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                line,
                column: col + 1,
                message: format!("`{cell}` is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line,
                    column: col + 1,
                    message: format!("`{cell}` is not finite"),
                });
            }
            features.push(value);
        }
        let label_name = record.get(label_idx).unwrap_or_default().to_string();
        let next = class_index.len();
        let idx = *class_index.entry(label_name.clone()).or_insert_with(|| {
            class_names.push(label_name);
            next
        });
        labels.push(idx);
        feature_rows.push(features);
    }

    if feature_rows.is_empty() {
        return Err(Error::invalid("csv data", "no data rows"));
    }
    if class_names.len() < 2 {
        return Err(Error::invalid(
            "csv data",
            format!("only one class (`{}`) present", class_names[0]),
        ));
    }
    let features = Matrix::from_rows(&feature_rows)?;
    Dataset::from_labeled(features, labels, class_names)
}

pub fn load_csv_file(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    load_csv(std::io::BufReader::new(file), schema)
}

/// Writes a dataset back out as label-last CSV, full float precision.
/// `load_csv` of the output reproduces the dataset exactly.
pub fn write_csv(dataset: &Dataset, mut dest: impl std::io::Write) -> Result<()> {
    for i in 0..dataset.n_samples() {
        let mut fields: Vec<String> = dataset
            .features
            .row(i)
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        fields.push(dataset.class_names[dataset.labels[i]].clone());
        writeln!(dest, "{}", fields.join(","))?;
    }
    Ok(())
}

fn csv_error(e: csv::Error, has_header: bool) -> Error {
    let line = e
        .position()
        .map(|p| p.line() as usize)
        .unwrap_or(if has_header { 2 } else { 1 });
    Error::Parse {
        line,
        column: 1,
        message: e.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Schema config files
// ---------------------------------------------------------------------------

/// Parsed schema config: versioned key-value text describing one dataset.
///
/// ```text
/// schema_version = 1
/// name = iris
/// path = data/iris.csv
/// label_column = 4
/// header = false
/// delimiter = ,
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaConfig {
    pub name: String,
    pub path: Option<String>,
    pub csv: CsvSchema,
}

pub const SCHEMA_CONFIG_VERSION: u32 = 1;

pub fn parse_schema_config(text: &str) -> Result<SchemaConfig> {
    let mut pairs: HashMap<&str, &str> = HashMap::new();
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
        pairs.insert(key.trim(), value.trim());
    }
    let version: u32 = pairs
        .get("schema_version")
        .ok_or_else(|| Error::invalid("schema config", "missing schema_version"))?
        .parse()
        .map_err(|_| Error::invalid("schema config", "schema_version is not an integer"))?;
    if version != SCHEMA_CONFIG_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            supported: SCHEMA_CONFIG_VERSION,
        });
    }
    let name = pairs
        .get("name")
        .ok_or_else(|| Error::invalid("schema config", "missing name"))?
        .to_string();
    let label_column = match pairs.get("label_column") {
        None => return Err(Error::invalid("schema config", "missing label_column")),
        Some(&"last") => LabelColumn::Last,
        Some(v) => match v.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(v.to_string()),
        },
    };
    let has_header = match pairs.get("header").copied().unwrap_or("false") {
        "true" => true,
        "false" => false,
        other => {
            return Err(Error::invalid(
                "schema config",
                format!("header must be true or false, got `{other}`"),
            ))
        }
    };
    let delimiter = {
        let d = pairs.get("delimiter").copied().unwrap_or(",");
        let mut bytes = d.bytes();
        match (bytes.next(), bytes.next()) {
            (Some(b), None) => b,
            _ => {
                return Err(Error::invalid(
                    "schema config",
                    format!("delimiter must be a single byte, got `{d}`"),
                ))
            }
        }
    };
    Ok(SchemaConfig {
        name,
        path: pairs.get("path").map(|s| s.to_string()),
        csv: CsvSchema {
            label_column,
            has_header,
            delimiter,
        },
    })
}

pub fn load_schema_config(path: impl AsRef<Path>) -> Result<SchemaConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_schema_config(&text)
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Per-column min-max statistics, fitted on training folds only.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizerParams {
    mins: Vec<f64>,
    ranges: Vec<f64>,
}

/// Fits per-column min-max onto [0, 1].
pub fn normalize_fit(train_features: &Matrix) -> NormalizerParams {
    let cols = train_features.cols();
    let mut mins = vec![f64::INFINITY; cols];
    let mut maxs = vec![f64::NEG_INFINITY; cols];
    for r in 0..train_features.rows() {
        for (c, v) in train_features.row(r).iter().enumerate() {
            mins[c] = mins[c].min(*v);
            maxs[c] = maxs[c].max(*v);
        }
    }
    let ranges = mins.iter().zip(&maxs).map(|(lo, hi)| hi - lo).collect();
    NormalizerParams { mins, ranges }
}

/// Applies fitted statistics. Constant training columns map to 0.5; values
/// outside the training range are NOT clamped, so test features may leave
/// [0, 1].
pub fn normalize_apply(params: &NormalizerParams, features: &Matrix) -> Matrix {
    Matrix::from_fn(features.rows(), features.cols(), |r, c| {
        let range = params.ranges[c];
        if range == 0.0 {
            0.5
        } else {
            (features.get(r, c) - params.mins[c]) / range
        }
    })
}

// ---------------------------------------------------------------------------
// Stratified k-fold
// ---------------------------------------------------------------------------

/// Fold assignment for every sample.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldPlan {
    pub n_folds: usize,
    /// `assignments[i]` is the fold index of sample i.
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    /// Indices held out by `fold`, ascending.
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    /// Indices used for training against `fold`, ascending.
    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Deterministic stratified fold plan: samples are shuffled within each
/// class, then dealt round-robin with the dealing position carried across
/// classes, so per-class counts differ by at most one between folds and the
/// whole plan is a partition.
pub fn stratified_folds(dataset: &Dataset, n_folds: usize, seed: u64) -> Result<FoldPlan> {
    let n = dataset.n_samples();
    if n_folds < 2 {
        return Err(Error::invalid(
            "fold plan",
            format!("{n_folds} folds; cross-validation needs at least 2"),
        ));
    }
    if n_folds > n {
        return Err(Error::invalid(
            "fold plan",
            format!("{n_folds} folds for {n} samples"),
        ));
    }
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes()];
    for (i, &label) in dataset.labels.iter().enumerate() {
        per_class[label].push(i);
    }
    let mut rng = SplitMix64::new(seed);
    let mut assignments = vec![0usize; n];
    let mut next_fold = 0usize;
    for class_members in per_class.iter_mut() {
        rng.shuffle(class_members);
        for &sample in class_members.iter() {
            assignments[sample] = next_fold;
            next_fold = (next_fold + 1) % n_folds;
        }
    }
    Ok(FoldPlan {
        n_folds,
        assignments,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Synthetic twonorm
// ---------------------------------------------------------------------------

/// Two-class Gaussian benchmark: class c is an isotropic unit-variance
/// Gaussian with every coordinate mean at `(-1)^c * 2 / sqrt(dim)`.
/// Generates n/2 samples per class, class 0 first.
pub fn generate_twonorm(n: usize, dim: usize, seed: u64) -> Result<Dataset> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid(
            "twonorm",
            format!("n = {n} must be even and at least 2"),
        ));
    }
    if dim == 0 {
        return Err(Error::invalid("twonorm", "dim must be positive"));
    }
    let offset = 2.0 / (dim as f64).sqrt();
    let mut rng = SplitMix64::new(seed);
    let half = n / 2;
    let mut features = Matrix::zeros(n, dim);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = usize::from(i >= half);
        let mean = if class == 0 { offset } else { -offset };
        for c in 0..dim {
            features.set(i, c, mean + rng.next_gaussian());
        }
        labels.push(class);
    }
    Dataset::from_labeled(features, labels, vec!["0".to_string(), "1".to_string()])
}
