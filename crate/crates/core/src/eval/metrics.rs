use serde::ser::{Serialize, SerializeMap, Serializer};

use crate::corpus::LabelSet;
use crate::error::{Error, Result};

/// Per-fold evaluation scores. `confusion[gold][pred]` counts clauses.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub per_class_f1: Vec<f64>,
    pub macro_f1: f64,
    pub confusion: Vec<Vec<u64>>,
}

/// Values keyed by label name, serialized as a JSON object in label-set order.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap<'a> {
    pub labels: &'a LabelSet,
    pub values: &'a [f64],
}

impl Serialize for LabelMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.values.len()))?;
        for (name, v) in self.labels.names().iter().zip(self.values) {
            map.serialize_entry(name, v)?;
        }
        map.end()
    }
}

fn f1_from(confusion: &[Vec<u64>], class: usize) -> f64 {
    let tp = confusion[class][class] as f64;
    let predicted: u64 = confusion.iter().map(|row| row[class]).sum();
    let actual: u64 = confusion[class].iter().sum();
    let precision = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
    let recall = if actual > 0 { tp / actual as f64 } else { 0.0 };
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Accuracy, per-class F1 and macro-F1 over every class in `labels`.
/// Classes that never occur score F1 = 0 and still count in the macro average.
pub fn compute_metrics(gold: &[usize], pred: &[usize], labels: &LabelSet) -> Result<Metrics> {
    if gold.len() != pred.len() {
        return Err(Error::invalid(
            "predictions",
            format!("{} gold labels but {} predictions", gold.len(), pred.len()),
        ));
    }
    if gold.is_empty() {
        return Err(Error::invalid("predictions", "nothing to evaluate"));
    }
    let k = labels.len();
    let mut confusion = vec![vec![0u64; k]; k];
    for (&g, &p) in gold.iter().zip(pred) {
        if g >= k || p >= k {
            return Err(Error::invalid("predictions", format!("label index out of range for {k} labels")));
        }
        confusion[g][p] += 1;
    }
    let correct: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let per_class_f1: Vec<f64> = (0..k).map(|c| f1_from(&confusion, c)).collect();
    Ok(Metrics {
        accuracy: correct as f64 / gold.len() as f64,
        macro_f1: per_class_f1.iter().sum::<f64>() / k as f64,
        per_class_f1,
        confusion,
    })
}

/// Fold-level metrics summarized by means; confusion matrices are summed.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateMetrics {
    pub folds: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_macro_f1: f64,
    pub mean_per_class_f1: Vec<f64>,
    pub confusion: Vec<Vec<u64>>,
}

impl AggregateMetrics {
    pub fn from_folds<'a>(folds: impl IntoIterator<Item = &'a Metrics>) -> Option<Self> {
        let folds: Vec<&Metrics> = folds.into_iter().collect();
        let first = folds.first()?;
        let n = folds.len() as f64;
        let k = first.per_class_f1.len();
        let mean_accuracy = folds.iter().map(|m| m.accuracy).sum::<f64>() / n;
        let std_accuracy = if folds.len() > 1 {
            (folds.iter().map(|m| (m.accuracy - mean_accuracy).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let mut confusion = vec![vec![0u64; k]; k];
        let mut per_class = vec![0.0; k];
        for m in &folds {
            for (acc, row) in confusion.iter_mut().zip(&m.confusion) {
                for (a, c) in acc.iter_mut().zip(row) {
                    *a += c;
                }
            }
            for (p, f) in per_class.iter_mut().zip(&m.per_class_f1) {
                *p += f;
            }
        }
        Some(AggregateMetrics {
            folds: folds.len(),
            mean_accuracy,
            std_accuracy,
            mean_macro_f1: folds.iter().map(|m| m.macro_f1).sum::<f64>() / n,
            mean_per_class_f1: per_class.into_iter().map(|p| p / n).collect(),
            confusion,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ab() -> LabelSet {
        LabelSet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn perfect_prediction() {
        let m = compute_metrics(&[0, 1, 1, 0], &[0, 1, 1, 0], &ab()).unwrap();
        assert_eq!((m.accuracy, m.macro_f1), (1.0, 1.0));
    }

    #[test]
    fn constant_prediction_hand_values() {
        // a: P = 2/4, R = 1, F1 = 2/3. b: never predicted, F1 = 0.
        let m = compute_metrics(&[0, 0, 1, 1], &[0, 0, 0, 0], &ab()).unwrap();
        assert_eq!(m.accuracy, 0.5);
        assert!((m.per_class_f1[0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.per_class_f1[1], 0.0);
        assert!((m.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.confusion, vec![vec![2, 0], vec![2, 0]]);
    }

    #[test]
    fn absent_class_counts_in_macro_average() {
        let labels = LabelSet::new(["a", "b", "c"]).unwrap();
        let m = compute_metrics(&[0, 1], &[0, 1], &labels).unwrap();
        assert!((m.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(compute_metrics(&[0], &[0, 1], &ab()).is_err());
        assert!(compute_metrics(&[], &[], &ab()).is_err());
        assert!(compute_metrics(&[2], &[0], &ab()).is_err());
    }

    #[test]
    fn label_map_keeps_label_order() {
        let labels = LabelSet::new(["zeta", "alpha"]).unwrap();
        let json = serde_json::to_string(&LabelMap { labels: &labels, values: &[0.5, 0.25] }).unwrap();
        assert_eq!(json, r#"{"zeta":0.5,"alpha":0.25}"#);
    }

    #[test]
    fn aggregate_means_and_sums() {
        let a = compute_metrics(&[0, 1], &[0, 1], &ab()).unwrap();
        let b = compute_metrics(&[0, 0, 1, 1], &[0, 0, 0, 0], &ab()).unwrap();
        let agg = AggregateMetrics::from_folds([&a, &b]).unwrap();
        assert_eq!(agg.mean_accuracy, 0.75);
        assert_eq!(agg.confusion, vec![vec![3, 0], vec![2, 1]]);
        assert!((agg.mean_macro_f1 - (1.0 + 1.0 / 3.0) / 2.0).abs() < 1e-15);
        assert!(AggregateMetrics::from_folds(std::iter::empty()).is_none());
    }

    proptest! {
        #[test]
        fn joint_permutation_leaves_metrics_unchanged(
            pairs in proptest::collection::vec((0usize..3, 0usize..3), 1..40),
            rot in 0usize..40,
        ) {
            let labels = LabelSet::new(["a", "b", "c"]).unwrap();
            let (g, p): (Vec<usize>, Vec<usize>) = pairs.iter().cloned().unzip();
            let mut shifted = pairs.clone();
            let r = rot % shifted.len();
            shifted.rotate_left(r);
            shifted.reverse();
            let (g2, p2): (Vec<usize>, Vec<usize>) = shifted.into_iter().unzip();
            prop_assert_eq!(compute_metrics(&g, &p, &labels).unwrap(), compute_metrics(&g2, &p2, &labels).unwrap());
        }

        #[test]
        fn structural_invariants(pairs in proptest::collection::vec((0usize..4, 0usize..4), 1..60)) {
            let labels = LabelSet::new(["a", "b", "c", "d"]).unwrap();
            let (g, p): (Vec<usize>, Vec<usize>) = pairs.iter().cloned().unzip();
            let m = compute_metrics(&g, &p, &labels).unwrap();
            for (c, row) in m.confusion.iter().enumerate() {
                prop_assert_eq!(row.iter().sum::<u64>() as usize, g.iter().filter(|&&x| x == c).count());
            }
            let trace: u64 = (0..4).map(|i| m.confusion[i][i]).sum();
            prop_assert_eq!(m.accuracy, trace as f64 / g.len() as f64);
            prop_assert_eq!(m.macro_f1, m.per_class_f1.iter().sum::<f64>() / 4.0);
        }
    }
}
