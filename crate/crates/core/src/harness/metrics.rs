use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: Vec<String>,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
    pub support: Vec<u64>,
    pub accuracy: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn compute_metrics(pred: &[usize], truth: &[usize], classes: &[String]) -> Result<MetricsReport> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} true labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("no predictions to score".into()));
    }
    let k = classes.len();
    if let Some(bad) = pred.iter().chain(truth).find(|c| **c >= k) {
        return Err(Error::InvalidInput(format!("class index {bad} outside {k} classes")));
    }
    let mut confusion = vec![vec![0u64; k]; k];
    for (p, t) in pred.iter().zip(truth) {
        confusion[*t][*p] += 1;
    }
    let support: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
    let predicted: Vec<u64> = (0..k).map(|c| confusion.iter().map(|r| r[c]).sum()).collect();
    let precision: Vec<f64> = (0..k).map(|c| ratio(confusion[c][c], predicted[c])).collect();
    let recall: Vec<f64> = (0..k).map(|c| ratio(confusion[c][c], support[c])).collect();
    let f1: Vec<f64> = precision
        .iter()
        .zip(&recall)
        .map(|(p, r)| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) })
        .collect();
    let correct: u64 = (0..k).map(|c| confusion[c][c]).sum();
    Ok(MetricsReport {
        classes: classes.to_vec(),
        accuracy: ratio(correct, pred.len() as u64),
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        macro_f1: mean(&f1),
        confusion,
        support,
        precision,
        recall,
        f1,
    })
}

impl MetricsReport {
    pub fn to_text(&self) -> String {
        let w = self.classes.iter().map(|c| c.len()).max().unwrap_or(5).max(9);
        let mut s = format!("accuracy  {:.4}\n\n", self.accuracy);
        s.push_str(&format!("{:<w$}  {:>9}  {:>9}  {:>9}  {:>7}\n", "class", "precision", "recall", "f1", "support"));
        for (i, c) in self.classes.iter().enumerate() {
            s.push_str(&format!(
                "{c:<w$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}\n",
                self.precision[i], self.recall[i], self.f1[i], self.support[i]
            ));
        }
        s.push_str(&format!(
            "{:<w$}  {:>9.4}  {:>9.4}  {:>9.4}  {:>7}\n\nconfusion (rows = truth, columns = prediction)\n",
            "macro",
            self.macro_precision,
            self.macro_recall,
            self.macro_f1,
            self.support.iter().sum::<u64>()
        ));
        for (c, row) in self.classes.iter().zip(&self.confusion) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:>7}")).collect();
            s.push_str(&format!("{c:<w$}  {}\n", cells.join(" ")));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn perfect_predictions() {
        let t = [0, 1, 2, 2, 1];
        let m = compute_metrics(&t, &t, &names(3)).unwrap();
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.f1, vec![1.0; 3]);
        assert_eq!(m.macro_f1, 1.0);
    }

    #[test]
    fn binary_hand_example() {
        let truth = [0, 0, 0, 1, 1, 1];
        let pred = [0, 0, 1, 1, 1, 1];
        let m = compute_metrics(&pred, &truth, &names(2)).unwrap();
        assert_eq!(m.confusion, vec![vec![2, 1], vec![0, 3]]);
        assert!((m.accuracy - 5.0 / 6.0).abs() < 1e-15);
        assert_eq!(m.precision[0], 1.0);
        assert!((m.recall[0] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_predicted_class() {
        let truth = [0, 1, 2, 0, 1, 2];
        let m = compute_metrics(&[0; 6], &truth, &names(3)).unwrap();
        assert!((m.accuracy - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.macro_f1 - 0.5 / 3.0).abs() < 1e-15);
        assert!(m.to_text().contains("macro"));
    }

    #[test]
    fn errors() {
        assert!(compute_metrics(&[0], &[0, 1], &names(2)).is_err());
        assert!(compute_metrics(&[], &[], &names(2)).is_err());
        assert!(compute_metrics(&[3], &[0], &names(2)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn agrees_with_counting(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..60)) {
            let pred: Vec<usize> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<usize> = pairs.iter().map(|p| p.1).collect();
            let m = compute_metrics(&pred, &truth, &names(3)).unwrap();
            let n = pairs.len() as f64;
            let hits = pairs.iter().filter(|(p, t)| p == t).count() as f64;
            prop_assert_eq!(m.accuracy, hits / n);
            let mut f1s = Vec::new();
            for c in 0..3 {
                let tp = pairs.iter().filter(|(p, t)| *p == c && *t == c).count() as f64;
                let fp = pairs.iter().filter(|(p, t)| *p == c && *t != c).count() as f64;
                let fneg = pairs.iter().filter(|(p, t)| *p != c && *t == c).count() as f64;
                let prec = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
                let rec = if tp + fneg > 0.0 { tp / (tp + fneg) } else { 0.0 };
                let f = if prec + rec > 0.0 { 2.0 * prec * rec / (prec + rec) } else { 0.0 };
                prop_assert_eq!(m.precision[c], prec);
                prop_assert_eq!(m.recall[c], rec);
                prop_assert!((m.f1[c] - f).abs() < 1e-15);
                prop_assert_eq!(m.support[c] as f64, tp + fneg);
                f1s.push(f);
            }
            prop_assert!((m.macro_f1 - f1s.iter().sum::<f64>() / 3.0).abs() < 1e-15);
            let trace: u64 = (0..3).map(|c| m.confusion[c][c]).sum();
            prop_assert_eq!(trace as f64 / n, m.accuracy);
        }
    }
}
