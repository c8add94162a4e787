//! Single-hidden-layer extreme learning machine: random frozen input weights,
//! sigmoid hidden layer, output weights solved in closed form by least
//! squares.
//!
//! Training is two-phase at the type level: [`init_random`] produces an
//! [`UntrainedElm`], and only [`UntrainedElm::train`] (which consumes it) can
//! produce an [`ElmModel`]. Predicting with an untrained model is therefore
//! unrepresentable, and a model cannot be trained twice.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matmul, solve_least_squares, Matrix};
use crate::rng::{derive_seed, SplitMix64};

/// Hyperparameters of one ELM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElmConfig {
    /// Hidden-layer width L.
    pub hidden_neurons: usize,
    /// Feature dimension d.
    pub input_dim: usize,
    /// Output dimension m (class count for one-hot targets).
    pub output_dim: usize,
    /// Uniform init interval for input weights and biases.
    pub weight_range: (f64, f64),
    pub seed: u64,
}

impl ElmConfig {
    /// Conventional defaults: weights and biases uniform in [-1, 1].
    pub fn new(hidden_neurons: usize, input_dim: usize, output_dim: usize, seed: u64) -> Self {
        ElmConfig {
            hidden_neurons,
            input_dim,
            output_dim,
            weight_range: (-1.0, 1.0),
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.hidden_neurons == 0 || self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::invalid(
                "elm config",
                format!(
                    "hidden_neurons={}, input_dim={}, output_dim={} must all be positive",
                    self.hidden_neurons, self.input_dim, self.output_dim
                ),
            ));
        }
        let (lo, hi) = self.weight_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::invalid(
                "elm config",
                format!("weight_range [{lo}, {hi}] must be a finite interval with lo < hi"),
            ));
        }
        Ok(())
    }
}

/// ELM with frozen random hidden layer, before the output solve.
#[derive(Debug, Clone)]
pub struct UntrainedElm {
    config: ElmConfig,
    input_weights: Matrix,
    biases: Vec<f64>,
}

/// Trained ELM. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ElmModel {
    config: ElmConfig,
    input_weights: Matrix,
    biases: Vec<f64>,
    output_weights: Matrix,
}

/// Draws the frozen hidden layer.
///
/// Each hidden neuron `j` draws from its own substream
/// `derive_seed(config.seed, j)`: first its `d` input weights in column
/// order, then its bias. Substreams make the neuron list prefix-stable --
/// a config with `2L` neurons shares its first `L` neurons with the
/// `L`-neuron config of the same seed.
pub fn init_random(config: ElmConfig) -> Result<UntrainedElm> {
    config.validate()?;
    let (lo, hi) = config.weight_range;
    let mut input_weights = Matrix::zeros(config.hidden_neurons, config.input_dim);
    let mut biases = Vec::with_capacity(config.hidden_neurons);
    for j in 0..config.hidden_neurons {
        let mut rng = SplitMix64::new(derive_seed(config.seed, j as u64));
        for c in 0..config.input_dim {
            input_weights.set(j, c, rng.next_range(lo, hi));
        }
        biases.push(rng.next_range(lo, hi));
    }
    Ok(UntrainedElm {
        config,
        input_weights,
        biases,
    })
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn hidden_output_of(input_weights: &Matrix, biases: &[f64], x: &Matrix) -> Result<Matrix> {
    if x.cols() != input_weights.cols() {
        return Err(Error::ShapeMismatch {
            op: "hidden_output",
            left_rows: input_weights.rows(),
            left_cols: input_weights.cols(),
            right_rows: x.rows(),
            right_cols: x.cols(),
        });
    }
    let mut h = matmul(x, &input_weights.transpose())?;
    for r in 0..h.rows() {
        for j in 0..h.cols() {
            h.set(r, j, sigmoid(h.get(r, j) + biases[j]));
        }
    }
    Ok(h)
}

impl UntrainedElm {
    pub fn config(&self) -> &ElmConfig {
        &self.config
    }

    pub fn input_weights(&self) -> &Matrix {
        &self.input_weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    /// Sigmoid activations of every sample against every hidden neuron:
    /// entry (i, j) = sigmoid(w_j . x_i + b_j).
    pub fn hidden_output(&self, x: &Matrix) -> Result<Matrix> {
        hidden_output_of(&self.input_weights, &self.biases, x)
    }

    /// Solves the output weights against one-hot (or regression) targets and
    /// freezes the model. Consumes the untrained state, so a model cannot be
    /// trained twice.
    pub fn train(self, x: &Matrix, y: &Matrix, sv_cutoff_factor: Option<f64>) -> Result<ElmModel> {
        if x.rows() != y.rows() {
            return Err(Error::ShapeMismatch {
                op: "elm train",
                left_rows: x.rows(),
                left_cols: x.cols(),
                right_rows: y.rows(),
                right_cols: y.cols(),
            });
        }
        if y.cols() != self.config.output_dim {
            return Err(Error::invalid(
                "training targets",
                format!(
                    "target width {} does not match configured output_dim {}",
                    y.cols(),
                    self.config.output_dim
                ),
            ));
        }
        let h = self.hidden_output(x)?;
        let output_weights = solve_least_squares(&h, y, sv_cutoff_factor)?;
        Ok(ElmModel {
            config: self.config,
            input_weights: self.input_weights,
            biases: self.biases,
            output_weights,
        })
    }
}

impl ElmModel {
    /// Reassembles a trained model from stored weights, validating shapes.
    pub fn from_parts(
        config: ElmConfig,
        input_weights: Matrix,
        biases: Vec<f64>,
        output_weights: Matrix,
    ) -> Result<Self> {
        config.validate()?;
        let expect = |ok: bool, msg: String| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid("elm weights", msg))
            }
        };
        expect(
            input_weights.shape() == (config.hidden_neurons, config.input_dim),
            format!(
                "input_weights is {:?}, config wants ({}, {})",
                input_weights.shape(),
                config.hidden_neurons,
                config.input_dim
            ),
        )?;
        expect(
            biases.len() == config.hidden_neurons,
            format!(
                "{} biases for {} hidden neurons",
                biases.len(),
                config.hidden_neurons
            ),
        )?;
        expect(
            biases.iter().all(|b| b.is_finite()),
            "non-finite bias".to_string(),
        )?;
        expect(
            output_weights.shape() == (config.hidden_neurons, config.output_dim),
            format!(
                "output_weights is {:?}, config wants ({}, {})",
                output_weights.shape(),
                config.hidden_neurons,
                config.output_dim
            ),
        )?;
        Ok(ElmModel {
            config,
            input_weights,
            biases,
            output_weights,
        })
    }

    pub fn config(&self) -> &ElmConfig {
        &self.config
    }

    pub fn input_weights(&self) -> &Matrix {
        &self.input_weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn output_weights(&self) -> &Matrix {
        &self.output_weights
    }

    pub fn hidden_output(&self, x: &Matrix) -> Result<Matrix> {
        hidden_output_of(&self.input_weights, &self.biases, x)
    }

    /// Raw real scores, one row per test sample. Not normalized; class
    /// decisions by argmax are the caller's concern.
    pub fn predict(&self, x: &Matrix) -> Result<Matrix> {
        let h = self.hidden_output(x)?;
        matmul(&h, &self.output_weights)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn features(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = SplitMix64::new(seed);
        Matrix::from_fn(rows, cols, |_, _| rng.next_f64())
    }

    #[test]
    fn same_seed_bit_identical() {
        let a = init_random(ElmConfig::new(8, 3, 2, 99)).unwrap();
        let b = init_random(ElmConfig::new(8, 3, 2, 99)).unwrap();
        assert_eq!(a.input_weights(), b.input_weights());
        assert_eq!(a.biases(), b.biases());
    }

    #[test]
    fn adjacent_seeds_differ() {
        let a = init_random(ElmConfig::new(8, 3, 2, 100)).unwrap();
        let b = init_random(ElmConfig::new(8, 3, 2, 101)).unwrap();
        assert_ne!(a.input_weights(), b.input_weights());
    }

    #[test]
    fn init_mean_near_zero() {
        // 100_500 entries over [-1, 1]; law of large numbers.
        let model = init_random(ElmConfig::new(335, 300, 2, 7)).unwrap();
        let w = model.input_weights();
        let n = (w.rows() * w.cols()) as f64;
        let mean = w.data().iter().sum::<f64>() / n;
        assert!(mean.abs() <= 0.02, "empirical mean {mean}");
    }

    #[test]
    fn neuron_prefix_stable_under_widening() {
        let small = init_random(ElmConfig::new(5, 4, 2, 21)).unwrap();
        let wide = init_random(ElmConfig::new(10, 4, 2, 21)).unwrap();
        for j in 0..5 {
            assert_eq!(small.input_weights().row(j), wide.input_weights().row(j));
            assert_eq!(small.biases()[j], wide.biases()[j]);
        }
    }

    #[test]
    fn sigmoid_at_zero_is_half() {
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn zero_weights_give_all_half() {
        let config = ElmConfig::new(4, 3, 2, 0);
        let model = UntrainedElm {
            config,
            input_weights: Matrix::zeros(4, 3),
            biases: vec![0.0; 4],
        };
        let h = model.hidden_output(&features(6, 3, 1)).unwrap();
        assert!(h.data().iter().all(|v| *v == 0.5));
    }

    #[test]
    fn hidden_output_matches_scalar_oracle() {
        let model = init_random(ElmConfig::new(3, 3, 2, 8)).unwrap();
        let x = features(4, 3, 2);
        let h = model.hidden_output(&x).unwrap();
        for i in 0..4 {
            for j in 0..3 {
                let mut z = model.biases()[j];
                for c in 0..3 {
                    z += model.input_weights().get(j, c) * x.get(i, c);
                }
                let expect = 1.0 / (1.0 + (-z).exp());
                assert!((h.get(i, j) - expect).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn hidden_output_strictly_inside_unit_interval() {
        // Normalized features and unit weight range keep |z| far from the
        // sigmoid saturation threshold.
        let model = init_random(ElmConfig::new(32, 16, 2, 3)).unwrap();
        let h = model.hidden_output(&features(64, 16, 4)).unwrap();
        assert!(h.data().iter().all(|v| *v > 0.0 && *v < 1.0));
    }

    #[test]
    fn single_sample_interpolates() {
        let x = features(1, 3, 10);
        let y = Matrix::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        let model = init_random(ElmConfig::new(4, 3, 2, 11))
            .unwrap()
            .train(&x, &y, None)
            .unwrap();
        let out = model.predict(&x).unwrap();
        assert!(out.sub(&y).unwrap().frobenius_norm() <= 1e-8);
    }

    #[test]
    fn interpolation_regime_zero_residual() {
        // L >= N with generic weights: H is square-or-wide and full row rank,
        // so the least-squares fit is exact.
        let n = 12;
        let x = features(n, 4, 31);
        let mut rng = SplitMix64::new(32);
        let y = Matrix::from_fn(n, 3, |_, _| rng.next_range(-1.0, 1.0));
        let untrained = init_random(ElmConfig::new(16, 4, 3, 33)).unwrap();

        // Confirm numerically full row rank before asserting interpolation.
        let h = untrained.hidden_output(&x).unwrap();
        let svd = crate::linalg::Svd::decompose(&h).unwrap();
        let threshold = f64::EPSILON * h.rows().max(h.cols()) as f64 * svd.sigma_max();
        assert_eq!(
            svd.rank_at(threshold),
            n,
            "H lost row rank; pick another seed"
        );

        let model = untrained.train(&x, &y, None).unwrap();
        let residual = model.predict(&x).unwrap().sub(&y).unwrap().frobenius_norm();
        assert!(residual <= 1e-6, "training residual {residual}");
    }

    #[test]
    fn separable_blobs_train_to_perfect_accuracy() {
        // Two Gaussian blobs separated by >= 4 sigma in both coordinates.
        let n_per = 20;
        let mut rng = SplitMix64::new(55);
        let sigma = 0.05f64;
        let mut rows = Vec::new();
        let mut targets = Vec::new();
        for c in 0..2 {
            let center = if c == 0 { 0.25 } else { 0.75 };
            for _ in 0..n_per {
                rows.push(vec![
                    center + sigma * rng.next_gaussian(),
                    center + sigma * rng.next_gaussian(),
                ]);
                targets.push(if c == 0 {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                });
            }
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let y = Matrix::from_rows(&targets).unwrap();
        let model = init_random(ElmConfig::new(20, 2, 2, 56))
            .unwrap()
            .train(&x, &y, None)
            .unwrap();
        let scores = model.predict(&x).unwrap();
        let correct = (0..x.rows())
            .filter(|&i| {
                let predicted = if scores.get(i, 0) >= scores.get(i, 1) {
                    0
                } else {
                    1
                };
                let truth = if y.get(i, 0) == 1.0 { 0 } else { 1 };
                predicted == truth
            })
            .count();
        assert_eq!(correct, x.rows());
    }

    #[test]
    fn predict_zero_output_weights() {
        let config = ElmConfig::new(3, 2, 2, 1);
        let model = ElmModel::from_parts(
            config.clone(),
            init_random(config).unwrap().input_weights.clone(),
            vec![0.1, 0.2, 0.3],
            Matrix::zeros(3, 2),
        )
        .unwrap();
        let out = model.predict(&features(5, 2, 9)).unwrap();
        assert!(out.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn duplicate_rows_predict_identically() {
        let x = features(1, 3, 70);
        let doubled = Matrix::from_rows(&[x.row(0).to_vec(), x.row(0).to_vec()]).unwrap();
        let y = Matrix::from_vec(1, 2, vec![0.0, 1.0]).unwrap();
        let model = init_random(ElmConfig::new(5, 3, 2, 71))
            .unwrap()
            .train(&x, &y, None)
            .unwrap();
        let out = model.predict(&doubled).unwrap();
        assert_eq!(out.row(0), out.row(1));
    }

    #[test]
    fn residual_never_grows_with_width() {
        // The widened model shares its first-L neurons with the narrow one,
        // so its hidden column space contains the narrow one's.
        let x = features(20, 3, 81);
        let mut rng = SplitMix64::new(82);
        let y = Matrix::from_fn(20, 2, |_, _| rng.next_range(0.0, 1.0));
        let residual = |hidden: usize| {
            let model = init_random(ElmConfig::new(hidden, 3, 2, 83))
                .unwrap()
                .train(&x, &y, None)
                .unwrap();
            model.predict(&x).unwrap().sub(&y).unwrap().frobenius_norm()
        };
        let narrow = residual(6);
        let wide = residual(12);
        assert!(
            wide <= narrow + 1e-9,
            "residual grew from {narrow} to {wide} when widening"
        );
    }

    #[test]
    fn config_validation() {
        assert!(init_random(ElmConfig::new(0, 2, 2, 0)).is_err());
        let mut bad = ElmConfig::new(2, 2, 2, 0);
        bad.weight_range = (1.0, -1.0);
        assert!(init_random(bad).is_err());
    }

    #[test]
    fn predict_column_mismatch_rejected() {
        let model = init_random(ElmConfig::new(4, 3, 2, 1)).unwrap();
        assert!(model.hidden_output(&features(2, 5, 2)).is_err());
    }
}
