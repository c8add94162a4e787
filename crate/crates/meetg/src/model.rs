//! Classifier strategies behind a common trait, registered by name.
//!
//! The harness does not care whether it is driving a single ELM or the full
//! ensemble; both live behind [`ClassifierStrategy`] and are selected at
//! runtime through the [`StrategyRegistry`].

use crate::elm::{init_random, ElmConfig, ElmModel};
use crate::error::{Error, Result};
use crate::eval::{cost_estimate, GateCostVariant};
use crate::linalg::Matrix;
use crate::mixture::{argmax, predict_meetg, train_meetg, MeetgConfig, MeetgModel};

/// Hyperparameters shared by every strategy. Strategies ignore fields that
/// do not apply to them (a single ELM has no gate).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Expert count k.
    pub experts: usize,
    /// Expert hidden width (also the single-ELM width).
    pub hidden: usize,
    /// Gate hidden width.
    pub gate_hidden: usize,
    /// Error scale in the gating target.
    pub gamma: f64,
    pub weight_range: (f64, f64),
    pub sv_cutoff_factor: Option<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            experts: 7,
            hidden: 40,
            gate_hidden: 40,
            gamma: 0.5,
            weight_range: (-1.0, 1.0),
            sv_cutoff_factor: None,
        }
    }
}

impl ModelParams {
    pub fn meetg_config(&self, base_seed: u64) -> MeetgConfig {
        MeetgConfig {
            n_experts: self.experts,
            expert_hidden: self.hidden,
            gate_hidden: self.gate_hidden,
            error_scale: self.gamma,
            weight_range: self.weight_range,
            base_seed,
            sv_cutoff_factor: self.sv_cutoff_factor,
        }
    }
}

/// A trainable classification algorithm.
pub trait ClassifierStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Trains on one-hot targets; all randomness derives from `seed`.
    fn fit(
        &self,
        features: &Matrix,
        targets: &Matrix,
        seed: u64,
    ) -> Result<Box<dyn FittedClassifier>>;

    /// Operation-count estimate for one training run.
    fn training_ops(&self, n_train: usize, n_features: usize, n_classes: usize) -> u64;
}

/// A trained classifier ready for prediction. Immutable and thread-safe.
pub trait FittedClassifier: Send + Sync {
    /// Raw class scores, one row per sample.
    fn scores(&self, features: &Matrix) -> Result<Matrix>;

    /// Class decisions: argmax of scores with ties broken toward the lowest
    /// class index.
    fn predict_labels(&self, features: &Matrix) -> Result<Vec<usize>> {
        let scores = self.scores(features)?;
        Ok((0..scores.rows()).map(|i| argmax(scores.row(i))).collect())
    }

    /// The underlying ensemble, when this classifier is one.
    fn as_meetg(&self) -> Option<&MeetgModel> {
        None
    }
}

/// Single ELM baseline.
pub struct SingleElmStrategy {
    pub params: ModelParams,
}

struct FittedElm(ElmModel);

impl FittedClassifier for FittedElm {
    fn scores(&self, features: &Matrix) -> Result<Matrix> {
        self.0.predict(features)
    }
}

impl ClassifierStrategy for SingleElmStrategy {
    fn name(&self) -> &'static str {
        "elm"
    }

    fn fit(
        &self,
        features: &Matrix,
        targets: &Matrix,
        seed: u64,
    ) -> Result<Box<dyn FittedClassifier>> {
        let config = ElmConfig {
            hidden_neurons: self.params.hidden,
            input_dim: features.cols(),
            output_dim: targets.cols(),
            weight_range: self.params.weight_range,
            seed,
        };
        let model = init_random(config)?.train(features, targets, self.params.sv_cutoff_factor)?;
        Ok(Box::new(FittedElm(model)))
    }

    fn training_ops(&self, n_train: usize, n_features: usize, _n_classes: usize) -> u64 {
        (n_train * n_features * self.params.hidden) as u64
    }
}

/// The ensemble: k ELM experts combined by a trainable ELM gate.
pub struct MeetgStrategy {
    pub params: ModelParams,
}

struct FittedMeetg(MeetgModel);

impl FittedClassifier for FittedMeetg {
    fn scores(&self, features: &Matrix) -> Result<Matrix> {
        Ok(predict_meetg(&self.0, features)?.0)
    }

    fn predict_labels(&self, features: &Matrix) -> Result<Vec<usize>> {
        Ok(predict_meetg(&self.0, features)?.1)
    }

    fn as_meetg(&self) -> Option<&MeetgModel> {
        Some(&self.0)
    }
}

impl ClassifierStrategy for MeetgStrategy {
    fn name(&self) -> &'static str {
        "meetg"
    }

    fn fit(
        &self,
        features: &Matrix,
        targets: &Matrix,
        seed: u64,
    ) -> Result<Box<dyn FittedClassifier>> {
        let config = self.params.meetg_config(seed);
        let model = train_meetg(&config, features, targets)?;
        Ok(Box::new(FittedMeetg(model)))
    }

    fn training_ops(&self, n_train: usize, n_features: usize, n_classes: usize) -> u64 {
        let config = self.params.meetg_config(0);
        cost_estimate(
            &config,
            n_train,
            n_features,
            n_classes,
            GateCostVariant::Symmetric,
        )
        .total_ops
    }
}

type StrategyCtor = fn(ModelParams) -> Box<dyn ClassifierStrategy>;

/// Name-keyed strategy factory.
pub struct StrategyRegistry {
    entries: Vec<(&'static str, StrategyCtor)>,
}

impl StrategyRegistry {
    /// Registry with the built-in strategies: `elm` and `meetg`.
    pub fn builtin() -> Self {
        let mut registry = StrategyRegistry {
            entries: Vec::new(),
        };
        registry.register("elm", |params| Box::new(SingleElmStrategy { params }));
        registry.register("meetg", |params| Box::new(MeetgStrategy { params }));
        registry
    }

    pub fn register(&mut self, name: &'static str, ctor: StrategyCtor) {
        self.entries.retain(|(n, _)| *n != name);
        self.entries.push((name, ctor));
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|(n, _)| *n).collect()
    }

    pub fn create(&self, name: &str, params: ModelParams) -> Result<Box<dyn ClassifierStrategy>> {
        self.entries
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, ctor)| ctor(params))
            .ok_or_else(|| {
                Error::invalid(
                    "model",
                    format!(
                        "unknown strategy `{name}`, available: {}",
                        self.names().join(", ")
                    ),
                )
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn toy_problem() -> (Matrix, Matrix) {
        let mut rng = SplitMix64::new(9);
        let x = Matrix::from_fn(30, 2, |_, _| rng.next_f64());
        let y = Matrix::from_fn(30, 2, |r, c| {
            let class = usize::from(x.get(r, 0) + x.get(r, 1) > 1.0);
            if class == c {
                1.0
            } else {
                0.0
            }
        });
        (x, y)
    }

    #[test]
    fn registry_resolves_builtins() {
        let registry = StrategyRegistry::builtin();
        assert_eq!(registry.names(), vec!["elm", "meetg"]);
        let (x, y) = toy_problem();
        for name in ["elm", "meetg"] {
            let params = ModelParams {
                experts: 3,
                hidden: 8,
                gate_hidden: 8,
                ..ModelParams::default()
            };
            let strategy = registry.create(name, params).unwrap();
            assert_eq!(strategy.name(), name);
            let fitted = strategy.fit(&x, &y, 4).unwrap();
            let labels = fitted.predict_labels(&x).unwrap();
            assert_eq!(labels.len(), 30);
        }
    }

    #[test]
    fn unknown_name_lists_available() {
        let registry = StrategyRegistry::builtin();
        let message = match registry.create("mlp", ModelParams::default()) {
            Err(e) => e.to_string(),
            Ok(_) => panic!("unknown strategy name resolved"),
        };
        assert!(
            message.contains("mlp") && message.contains("meetg"),
            "{message}"
        );
    }

    #[test]
    fn meetg_fit_exposes_model_for_saving() {
        let (x, y) = toy_problem();
        let params = ModelParams {
            experts: 2,
            hidden: 6,
            gate_hidden: 6,
            ..ModelParams::default()
        };
        let fitted = MeetgStrategy { params }.fit(&x, &y, 5).unwrap();
        assert!(fitted.as_meetg().is_some());
        let elm = SingleElmStrategy {
            params: ModelParams::default(),
        }
        .fit(&x, &y, 5)
        .unwrap();
        assert!(elm.as_meetg().is_none());
    }

    #[test]
    fn strategies_are_seed_deterministic() {
        let (x, y) = toy_problem();
        let params = ModelParams {
            experts: 3,
            hidden: 8,
            gate_hidden: 8,
            ..ModelParams::default()
        };
        let strategy = MeetgStrategy { params };
        let a = strategy.fit(&x, &y, 11).unwrap().scores(&x).unwrap();
        let b = strategy.fit(&x, &y, 11).unwrap().scores(&x).unwrap();
        assert_eq!(a, b);
    }
}
