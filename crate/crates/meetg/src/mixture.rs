//! Mixture of ELM experts with a trainable ELM gating network.
//!
//! Training is non-iterative: every expert trains on the full training set in
//! closed form, the gate's target matrix encodes each expert's relative error
//! as a per-sample softmax, and the gate itself is another closed-form ELM
//! solve. At inference the gate's raw outputs are softmaxed into per-sample
//! convex weights over the experts.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elm::{init_random, ElmConfig, ElmModel, UntrainedElm};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::derive_seed;

/// Hyperparameters of the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetgConfig {
    /// Expert count k.
    pub n_experts: usize,
    /// Hidden width of each expert.
    pub expert_hidden: usize,
    /// Hidden width of the gating network.
    pub gate_hidden: usize,
    /// Scale on squared errors in the gating target; higher values
    /// concentrate the target on the best expert.
    pub error_scale: f64,
    /// Uniform init interval for all submodels.
    pub weight_range: (f64, f64),
    pub base_seed: u64,
    /// Singular-value cutoff factor for every least-squares solve;
    /// `None` selects the numerical-rank default.
    pub sv_cutoff_factor: Option<f64>,
}

impl MeetgConfig {
    pub fn new(n_experts: usize, expert_hidden: usize, gate_hidden: usize, base_seed: u64) -> Self {
        MeetgConfig {
            n_experts,
            expert_hidden,
            gate_hidden,
            error_scale: 0.5,
            weight_range: (-1.0, 1.0),
            base_seed,
            sv_cutoff_factor: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_experts < 2 {
            return Err(Error::invalid(
                "meetg config",
                format!("n_experts = {}, need at least 2", self.n_experts),
            ));
        }
        if !(self.error_scale.is_finite() && self.error_scale > 0.0) {
            return Err(Error::invalid(
                "meetg config",
                format!("error_scale = {} must be positive", self.error_scale),
            ));
        }
        if self.expert_hidden == 0 || self.gate_hidden == 0 {
            return Err(Error::invalid(
                "meetg config",
                "hidden widths must be positive",
            ));
        }
        Ok(())
    }

    /// Seed for expert `j`; the gate uses stream index `n_experts`.
    pub fn expert_seed(&self, j: usize) -> u64 {
        derive_seed(self.base_seed, j as u64)
    }

    pub fn gate_seed(&self) -> u64 {
        derive_seed(self.base_seed, self.n_experts as u64)
    }
}

/// Trained ensemble: k experts, one gate, all immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct MeetgModel {
    config: MeetgConfig,
    experts: Vec<ElmModel>,
    gate: ElmModel,
    class_count: usize,
}

impl MeetgModel {
    /// Reassembles a trained ensemble, enforcing cross-model shape
    /// consistency. Unlike training, this admits a single expert so test
    /// harnesses can build degenerate ensembles.
    pub fn from_parts(
        config: MeetgConfig,
        experts: Vec<ElmModel>,
        gate: ElmModel,
        class_count: usize,
    ) -> Result<Self> {
        if experts.is_empty() {
            return Err(Error::invalid("meetg model", "no experts"));
        }
        if class_count == 0 {
            return Err(Error::invalid(
                "meetg model",
                "class_count must be positive",
            ));
        }
        let d = experts[0].config().input_dim;
        for (j, e) in experts.iter().enumerate() {
            if e.config().input_dim != d || e.config().output_dim != class_count {
                return Err(Error::invalid(
                    "meetg model",
                    format!(
                        "expert {j} maps {} -> {}, expected {} -> {}",
                        e.config().input_dim,
                        e.config().output_dim,
                        d,
                        class_count
                    ),
                ));
            }
        }
        if gate.config().input_dim != d || gate.config().output_dim != experts.len() {
            return Err(Error::invalid(
                "meetg model",
                format!(
                    "gate maps {} -> {}, expected {} -> {}",
                    gate.config().input_dim,
                    gate.config().output_dim,
                    d,
                    experts.len()
                ),
            ));
        }
        Ok(MeetgModel {
            config,
            experts,
            gate,
            class_count,
        })
    }

    pub fn config(&self) -> &MeetgConfig {
        &self.config
    }

    pub fn experts(&self) -> &[ElmModel] {
        &self.experts
    }

    pub fn gate(&self) -> &ElmModel {
        &self.gate
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn input_dim(&self) -> usize {
        self.experts[0].config().input_dim
    }
}

/// Numerically stabilized softmax over one row.
pub fn softmax_in_place(xs: &mut [f64]) {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in xs.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in xs.iter_mut() {
        *x /= sum;
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Gating-network target matrix: row i, column j is the softmax over experts
/// of `-error_scale * ||y_i - output_ij||^2`, so low-error experts receive
/// high target weight and each row sums to 1.
pub fn gating_target(y: &Matrix, expert_outputs: &[Matrix], error_scale: f64) -> Result<Matrix> {
    if expert_outputs.is_empty() {
        return Err(Error::invalid("gating target", "no expert outputs"));
    }
    if !(error_scale.is_finite() && error_scale > 0.0) {
        return Err(Error::invalid(
            "gating target",
            format!("error_scale = {error_scale} must be positive"),
        ));
    }
    for o in expert_outputs {
        if o.shape() != y.shape() {
            return Err(Error::ShapeMismatch {
                op: "gating_target",
                left_rows: y.rows(),
                left_cols: y.cols(),
                right_rows: o.rows(),
                right_cols: o.cols(),
            });
        }
    }
    let k = expert_outputs.len();
    let mut target = Matrix::zeros(y.rows(), k);
    let mut row = vec![0.0; k];
    for i in 0..y.rows() {
        for (j, o) in expert_outputs.iter().enumerate() {
            row[j] = -error_scale * squared_distance(y.row(i), o.row(i));
        }
        softmax_in_place(&mut row);
        for (j, v) in row.iter().enumerate() {
            target.set(i, j, *v);
        }
    }
    Ok(target)
}

/// Trains the full ensemble:
/// experts and gate are initialized from per-submodel derived seeds, every
/// expert trains on the whole set, the gate trains against [`gating_target`]
/// of the experts' training-set outputs.
pub fn train_meetg(config: &MeetgConfig, x: &Matrix, y: &Matrix) -> Result<MeetgModel> {
    config.validate()?;
    let d = x.cols();
    let m = y.cols();
    let experts = (0..config.n_experts)
        .map(|j| {
            init_random(ElmConfig {
                hidden_neurons: config.expert_hidden,
                input_dim: d,
                output_dim: m,
                weight_range: config.weight_range,
                seed: config.expert_seed(j),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let gate = init_random(ElmConfig {
        hidden_neurons: config.gate_hidden,
        input_dim: d,
        output_dim: config.n_experts,
        weight_range: config.weight_range,
        seed: config.gate_seed(),
    })?;
    train_meetg_from_parts(config, experts, gate, x, y)
}

/// Training core with caller-supplied initial submodels. Exposed so
/// harnesses can force expert configurations (identical seeds, widths);
/// [`train_meetg`] is the seeded front door.
///
/// Expert solves are independent and run in parallel; results are keyed by
/// expert index, so the outcome is identical under any thread count.
pub fn train_meetg_from_parts(
    config: &MeetgConfig,
    experts: Vec<UntrainedElm>,
    gate: UntrainedElm,
    x: &Matrix,
    y: &Matrix,
) -> Result<MeetgModel> {
    if x.rows() != y.rows() {
        return Err(Error::ShapeMismatch {
            op: "train_meetg",
            left_rows: x.rows(),
            left_cols: x.cols(),
            right_rows: y.rows(),
            right_cols: y.cols(),
        });
    }
    let m = y.cols();
    let trained: Vec<(ElmModel, Matrix)> = experts
        .into_par_iter()
        .map(|untrained| -> Result<(ElmModel, Matrix)> {
            let model = untrained.train(x, y, config.sv_cutoff_factor)?;
            let outputs = model.predict(x)?;
            Ok((model, outputs))
        })
        .collect::<Result<Vec<_>>>()?;

    let (experts, outputs): (Vec<ElmModel>, Vec<Matrix>) = trained.into_iter().unzip();
    let target = gating_target(y, &outputs, config.error_scale)?;
    let gate = gate.train(x, &target, config.sv_cutoff_factor)?;
    MeetgModel::from_parts(config.clone(), experts, gate, m)
}

/// Per-sample convex weights over experts: softmax of the gate ELM's raw
/// outputs. Rows are nonnegative and sum to 1.
pub fn gate_weights(model: &MeetgModel, x: &Matrix) -> Result<Matrix> {
    let mut raw = model.gate.predict(x)?;
    let cols = raw.cols();
    for row in raw.data_mut().chunks_mut(cols) {
        softmax_in_place(row);
    }
    Ok(raw)
}

/// Ensemble scores and class decisions: score row is the gate-weighted sum
/// of expert score rows; the label is the argmax with ties broken toward the
/// lowest class index.
pub fn predict_meetg(model: &MeetgModel, x: &Matrix) -> Result<(Matrix, Vec<usize>)> {
    let weights = gate_weights(model, x)?;
    let expert_scores = model
        .experts
        .par_iter()
        .map(|e| e.predict(x))
        .collect::<Result<Vec<_>>>()?;

    let mut scores = Matrix::zeros(x.rows(), model.class_count);
    for (j, outputs) in expert_scores.iter().enumerate() {
        for i in 0..x.rows() {
            let g = weights.get(i, j);
            for c in 0..model.class_count {
                scores.set(i, c, scores.get(i, c) + g * outputs.get(i, c));
            }
        }
    }
    let labels = (0..scores.rows()).map(|i| argmax(scores.row(i))).collect();
    Ok((scores, labels))
}

/// Index of the largest value; the first occurrence wins on ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in xs.iter().enumerate().skip(1) {
        if *v > xs[best] {
            best = i;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------

/// Format version this build writes and reads.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ElmWeightsFile {
    config: ElmConfig,
    input_weights: Matrix,
    biases: Vec<f64>,
    output_weights: Matrix,
}

impl ElmWeightsFile {
    fn from_model(m: &ElmModel) -> Self {
        ElmWeightsFile {
            config: m.config().clone(),
            input_weights: m.input_weights().clone(),
            biases: m.biases().to_vec(),
            output_weights: m.output_weights().clone(),
        }
    }

    fn into_model(self) -> Result<ElmModel> {
        ElmModel::from_parts(
            self.config,
            self.input_weights,
            self.biases,
            self.output_weights,
        )
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    config: MeetgConfig,
    class_count: usize,
    experts: Vec<ElmWeightsFile>,
    gate: ElmWeightsFile,
    label_map: Vec<String>,
}

#[derive(Deserialize)]
struct VersionProbe {
    format_version: u32,
}

/// Writes a trained ensemble as versioned, self-describing JSON. Numbers
/// round-trip at full precision.
pub fn save_model(model: &MeetgModel, label_map: &[String], mut dest: impl Write) -> Result<()> {
    let file = ModelFile {
        format_version: MODEL_FORMAT_VERSION,
        config: model.config.clone(),
        class_count: model.class_count,
        experts: model
            .experts
            .iter()
            .map(ElmWeightsFile::from_model)
            .collect(),
        gate: ElmWeightsFile::from_model(&model.gate),
        label_map: label_map.to_vec(),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::ModelFormat {
        path: String::new(),
        message: e.to_string(),
    })?;
    dest.write_all(text.as_bytes())?;
    dest.write_all(b"\n")?;
    Ok(())
}

pub fn save_model_file(
    model: &MeetgModel,
    label_map: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let file = std::fs::File::create(path)?;
    save_model(model, label_map, std::io::BufWriter::new(file))
}

/// Reads a model file back. Malformed input reports the JSON field path;
/// a foreign `format_version` is rejected before anything else is parsed.
pub fn load_model(mut source: impl Read) -> Result<(MeetgModel, Vec<String>)> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;

    let probe: VersionProbe = serde_json::from_str(&text).map_err(|e| Error::ModelFormat {
        path: "format_version".to_string(),
        message: e.to_string(),
    })?;
    if probe.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: probe.format_version,
            supported: MODEL_FORMAT_VERSION,
        });
    }

    let mut de = serde_json::Deserializer::from_str(&text);
    let file: ModelFile =
        serde_path_to_error::deserialize(&mut de).map_err(|e| Error::ModelFormat {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;

    if file.experts.is_empty() {
        return Err(Error::invalid("model file", "k = 0: file holds no experts"));
    }
    if file.config.n_experts != file.experts.len() {
        return Err(Error::invalid(
            "model file",
            format!(
                "config says {} experts, file holds {}",
                file.config.n_experts,
                file.experts.len()
            ),
        ));
    }
    if file.label_map.len() != file.class_count {
        return Err(Error::invalid(
            "model file",
            format!(
                "label_map has {} entries for class_count {}",
                file.label_map.len(),
                file.class_count
            ),
        ));
    }
    let experts = file
        .experts
        .into_iter()
        .map(ElmWeightsFile::into_model)
        .collect::<Result<Vec<_>>>()?;
    let gate = file.gate.into_model()?;
    let model = MeetgModel::from_parts(file.config, experts, gate, file.class_count)?;
    Ok((model, file.label_map))
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<(MeetgModel, Vec<String>)> {
    let file = std::fs::File::open(path)?;
    load_model(std::io::BufReader::new(file))
}
