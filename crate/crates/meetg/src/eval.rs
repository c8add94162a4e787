//! Classification metrics, the operation-count cost model, and wall-clock
//! timing capture.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::mixture::MeetgConfig;

/// Confusion counts plus derived rates for one evaluation.
///
/// A class with an empty predicted column has undefined precision (likewise
/// recall for an empty true row); such entries are `None` and excluded from
/// the macro averages rather than silently counted as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// m x m counts; rows are true classes, columns predicted.
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub per_class_precision: Vec<Option<f64>>,
    pub per_class_recall: Vec<Option<f64>>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub train_seconds: f64,
    pub test_seconds: f64,
}

/// Counts (true, predicted) label pairs into an m x m matrix.
pub fn confusion_matrix(
    true_labels: &[usize],
    predicted_labels: &[usize],
    n_classes: usize,
) -> Result<Vec<Vec<usize>>> {
    if true_labels.len() != predicted_labels.len() {
        return Err(Error::invalid(
            "labels",
            format!(
                "{} true labels vs {} predictions",
                true_labels.len(),
                predicted_labels.len()
            ),
        ));
    }
    let mut counts = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in true_labels.iter().zip(predicted_labels) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::invalid(
                "labels",
                format!("label pair ({t}, {p}) out of range for {n_classes} classes"),
            ));
        }
        counts[t][p] += 1;
    }
    Ok(counts)
}

/// Per-class and macro precision/recall from a confusion matrix.
/// Classes with an empty predicted column (or true row) contribute `None`
/// and are excluded from the corresponding macro mean.
pub fn precision_recall(
    confusion: &[Vec<usize>],
) -> (Vec<Option<f64>>, Vec<Option<f64>>, f64, f64) {
    let m = confusion.len();
    let mut precision = Vec::with_capacity(m);
    let mut recall = Vec::with_capacity(m);
    for c in 0..m {
        let tp = confusion[c][c];
        let col_sum: usize = (0..m).map(|r| confusion[r][c]).sum();
        let row_sum: usize = confusion[c].iter().sum();
        precision.push((col_sum > 0).then(|| tp as f64 / col_sum as f64));
        recall.push((row_sum > 0).then(|| tp as f64 / row_sum as f64));
    }
    (
        precision.clone(),
        recall.clone(),
        mean_defined(&precision),
        mean_defined(&recall),
    )
}

fn mean_defined(values: &[Option<f64>]) -> f64 {
    let defined: Vec<f64> = values.iter().flatten().copied().collect();
    if defined.is_empty() {
        0.0
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    }
}

/// Accuracy as trace over total.
pub fn accuracy(confusion: &[Vec<usize>]) -> f64 {
    let total: usize = confusion.iter().map(|row| row.iter().sum::<usize>()).sum();
    if total == 0 {
        return 0.0;
    }
    let trace: usize = (0..confusion.len()).map(|c| confusion[c][c]).sum();
    trace as f64 / total as f64
}

/// Builds a full report from label vectors plus captured timings.
pub fn evaluate(
    true_labels: &[usize],
    predicted_labels: &[usize],
    n_classes: usize,
    train_seconds: f64,
    test_seconds: f64,
) -> Result<EvalReport> {
    let confusion = confusion_matrix(true_labels, predicted_labels, n_classes)?;
    let (per_class_precision, per_class_recall, macro_precision, macro_recall) =
        precision_recall(&confusion);
    Ok(EvalReport {
        accuracy: accuracy(&confusion),
        confusion,
        per_class_precision,
        per_class_recall,
        macro_precision,
        macro_recall,
        train_seconds,
        test_seconds,
    })
}

// ---------------------------------------------------------------------------
// Operation-count cost model
// ---------------------------------------------------------------------------

/// How the gating network's operation count is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GateCostVariant {
    /// Same structure as the per-expert count: `n_train * d * gate_hidden`.
    #[default]
    Symmetric,
    /// Alternate reading that also multiplies by the gate's output count:
    /// `n_train * d * gate_hidden * k`.
    OutputCoupled,
}

/// Operation-count estimate for training one ensemble.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostEstimate {
    pub per_expert_ops: Vec<u64>,
    pub gating_ops: u64,
    pub combine_ops: u64,
    pub total_ops: u64,
}

/// Estimated operation counts: each expert costs `n_train * d * expert_hidden`,
/// the combination stage costs `classes * k`, and the gate follows the chosen
/// [`GateCostVariant`]. The total is the plain sum.
pub fn cost_estimate(
    config: &MeetgConfig,
    n_train: usize,
    n_features: usize,
    n_classes: usize,
    gate_variant: GateCostVariant,
) -> CostEstimate {
    let per_expert = (n_train * n_features * config.expert_hidden) as u64;
    let per_expert_ops = vec![per_expert; config.n_experts];
    let gating_ops = match gate_variant {
        GateCostVariant::Symmetric => (n_train * n_features * config.gate_hidden) as u64,
        GateCostVariant::OutputCoupled => {
            (n_train * n_features * config.gate_hidden * config.n_experts) as u64
        }
    };
    let combine_ops = (n_classes * config.n_experts) as u64;
    let total_ops = per_expert_ops.iter().sum::<u64>() + gating_ops + combine_ops;
    CostEstimate {
        per_expert_ops,
        gating_ops,
        combine_ops,
        total_ops,
    }
}

/// Runs `computation`, returning its result and the wall-clock seconds it
/// took on a monotonic clock.
pub fn timed<T>(computation: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let value = computation();
    (value, start.elapsed().as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn perfect_prediction_is_diagonal() {
        let labels = vec![0, 1, 2, 1, 0, 2, 2];
        let c = confusion_matrix(&labels, &labels, 3).unwrap();
        assert_eq!(c, vec![vec![2, 0, 0], vec![0, 2, 0], vec![0, 0, 3]]);
        assert_eq!(accuracy(&c), 1.0);
    }

    #[test]
    fn collapsed_predictor_fills_one_column() {
        let truth = vec![0, 1, 2, 1];
        let predicted = vec![0, 0, 0, 0];
        let c = confusion_matrix(&truth, &predicted, 3).unwrap();
        assert_eq!(c, vec![vec![1, 0, 0], vec![2, 0, 0], vec![1, 0, 0]]);
    }

    #[test]
    fn matches_counting_oracle() {
        let mut rng = SplitMix64::new(33);
        let truth: Vec<usize> = (0..50).map(|_| rng.next_below(4)).collect();
        let predicted: Vec<usize> = (0..50).map(|_| rng.next_below(4)).collect();
        let fast = confusion_matrix(&truth, &predicted, 4).unwrap();
        for t in 0..4 {
            for p in 0..4 {
                let count = truth
                    .iter()
                    .zip(&predicted)
                    .filter(|(a, b)| **a == t && **b == p)
                    .count();
                assert_eq!(fast[t][p], count);
            }
        }
    }

    #[test]
    fn out_of_range_label_rejected() {
        assert!(confusion_matrix(&[0, 3], &[0, 1], 3).is_err());
        assert!(confusion_matrix(&[0, 1], &[0], 3).is_err());
    }

    #[test]
    fn binary_hand_counts() {
        // [[8,2],[1,9]]: precision = [8/9, 9/11], recall = [0.8, 0.9].
        let c = vec![vec![8, 2], vec![1, 9]];
        let (precision, recall, macro_p, macro_r) = precision_recall(&c);
        assert_eq!(precision[0], Some(8.0 / 9.0));
        assert_eq!(precision[1], Some(9.0 / 11.0));
        assert_eq!(recall[0], Some(0.8));
        assert_eq!(recall[1], Some(0.9));
        assert!((macro_p - (8.0 / 9.0 + 9.0 / 11.0) / 2.0).abs() <= 1e-15);
        assert!((macro_r - 0.85).abs() <= 1e-15);
    }

    #[test]
    fn perfect_diagonal_gives_ones() {
        let c = vec![vec![5, 0], vec![0, 7]];
        let (precision, recall, macro_p, macro_r) = precision_recall(&c);
        assert!(precision.iter().all(|p| *p == Some(1.0)));
        assert!(recall.iter().all(|r| *r == Some(1.0)));
        assert_eq!((macro_p, macro_r), (1.0, 1.0));
    }

    #[test]
    fn empty_predicted_column_is_undefined_not_zero() {
        // Nothing predicted as class 1.
        let c = vec![vec![3, 0], vec![2, 0]];
        let (precision, _, macro_p, _) = precision_recall(&c);
        assert_eq!(precision[1], None);
        assert_eq!(precision[0], Some(0.6));
        assert_eq!(macro_p, 0.6);
    }

    #[test]
    fn accuracy_is_recall_weighted_by_class_share() {
        let mut rng = SplitMix64::new(77);
        let truth: Vec<usize> = (0..200).map(|_| rng.next_below(5)).collect();
        let predicted: Vec<usize> = (0..200).map(|_| rng.next_below(5)).collect();
        let c = confusion_matrix(&truth, &predicted, 5).unwrap();
        let (_, recall, _, _) = precision_recall(&c);
        let n = truth.len() as f64;
        let weighted: f64 = (0..5)
            .map(|class| {
                let share = c[class].iter().sum::<usize>() as f64 / n;
                recall[class].unwrap_or(0.0) * share
            })
            .sum();
        assert!((accuracy(&c) - weighted).abs() <= 1e-12);
    }

    #[test]
    fn cost_direct_substitution() {
        let config = MeetgConfig::new(3, 10, 10, 0);
        let cost = cost_estimate(&config, 100, 4, 3, GateCostVariant::Symmetric);
        assert_eq!(cost.per_expert_ops, vec![4000, 4000, 4000]);
        assert_eq!(cost.combine_ops, 9);
        assert_eq!(
            cost.total_ops,
            cost.per_expert_ops.iter().sum::<u64>() + cost.gating_ops + cost.combine_ops
        );
    }

    #[test]
    fn cost_linear_in_samples_and_width() {
        let config = MeetgConfig::new(3, 10, 10, 0);
        let base = cost_estimate(&config, 100, 4, 3, GateCostVariant::Symmetric);
        let double_n = cost_estimate(&config, 200, 4, 3, GateCostVariant::Symmetric);
        assert_eq!(double_n.per_expert_ops[0], 2 * base.per_expert_ops[0]);
        let wide = MeetgConfig::new(3, 20, 10, 0);
        let double_l = cost_estimate(&wide, 100, 4, 3, GateCostVariant::Symmetric);
        assert_eq!(double_l.per_expert_ops[0], 2 * base.per_expert_ops[0]);
    }

    #[test]
    fn gate_cost_variants() {
        let config = MeetgConfig::new(5, 10, 8, 0);
        let symmetric = cost_estimate(&config, 100, 4, 3, GateCostVariant::Symmetric);
        let coupled = cost_estimate(&config, 100, 4, 3, GateCostVariant::OutputCoupled);
        assert_eq!(symmetric.gating_ops, 100 * 4 * 8);
        assert_eq!(coupled.gating_ops, 100 * 4 * 8 * 5);
    }

    #[test]
    fn timed_returns_value_and_nonneg_seconds() {
        let (value, seconds) = timed(|| 21 * 2);
        assert_eq!(value, 42);
        assert!(seconds >= 0.0);
    }
}
