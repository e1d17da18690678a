use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` before logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Summed binary cross entropy `-sum_i [y_i ln p_i + (1 - y_i) ln(1 - p_i)]`.
pub fn cross_entropy(labels: &[bool], probs: &[f64]) -> Result<f64> {
    if labels.len() != probs.len() {
        return Err(Error::Argument(format!(
            "{} labels but {} probabilities",
            labels.len(),
            probs.len()
        )));
    }
    Ok(labels
        .iter()
        .zip(probs)
        .map(|(&y, &p)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum())
}

/// Cross entropy against soft targets in `[0, 1]`, averaged over entries.
pub fn mean_soft_cross_entropy(targets: &[f64], probs: &[f64]) -> Result<f64> {
    if targets.len() != probs.len() || targets.is_empty() {
        return Err(Error::Argument(format!(
            "{} targets but {} probabilities",
            targets.len(),
            probs.len()
        )));
    }
    let total: f64 = targets
        .iter()
        .zip(probs)
        .map(|(&y, &p)| {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / targets.len() as f64)
}

/// `(1 + b^2) P R / (b^2 P + R)`, zero when `P = R = 0`.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Argument(format!("beta must be positive, got {beta}")));
    }
    for (name, v) in [("precision", precision), ("recall", recall)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Argument(format!("{name} {v} outside [0, 1]")));
        }
    }
    let b2 = beta * beta;
    let denom = b2 * precision + recall;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((1.0 + b2) * precision * recall / denom)
}

/// Confusion counts and derived scores for a binary classifier.
///
/// `precision` is `None` when nothing was predicted positive and `recall`
/// is `None` when there are no positives. For the F-score an undefined
/// precision counts as 1 and an undefined recall as 0, so a classifier that
/// predicts nothing scores `F = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub beta: f64,
    pub f_beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_entropy: Option<f64>,
}

impl Metrics {
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    /// Perfect precision with at least one detection.
    pub fn is_sound(&self) -> bool {
        self.fp == 0 && self.tp > 0
    }
}

pub fn compute_metrics(predictions: &[bool], labels: &[bool], beta: f64) -> Result<Metrics> {
    if predictions.len() != labels.len() {
        return Err(Error::Argument(format!(
            "{} predictions but {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
    let recall = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
    let f = f_beta(precision.unwrap_or(1.0), recall.unwrap_or(0.0), beta)?;
    Ok(Metrics {
        tp,
        fp,
        fn_,
        tn,
        precision,
        recall,
        beta,
        f_beta: f,
        cross_entropy: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BETA: f64 = 1.0 / 30.0;

    #[test]
    fn cross_entropy_examples() {
        assert!(cross_entropy(&[true], &[1.0]).unwrap() < 1e-11);
        let ce = cross_entropy(&[true, false], &[0.5, 0.5]).unwrap();
        assert!((ce - 2.0 * 2f64.ln()).abs() < 1e-14);
        let clamped = cross_entropy(&[false], &[1.0]).unwrap();
        assert!((clamped - 27.631021115928547).abs() < 1e-4, "{clamped}");
        assert!(cross_entropy(&[false], &[0.5, 0.5]).is_err());
        assert!(cross_entropy(&[true, false], &[0.0, 1.0]).unwrap().is_finite());
    }

    #[test]
    fn f_beta_examples() {
        assert_eq!(f_beta(1.0, 1.0, 0.3).unwrap(), 1.0);
        assert_eq!(f_beta(0.0, 0.0, BETA).unwrap(), 0.0);
        assert_eq!(format!("{:.4}", f_beta(1.0, 0.1053, BETA).unwrap()), "0.9907");
        assert_eq!(format!("{:.4}", f_beta(1.0, 0.0256, BETA).unwrap()), "0.9595");
        assert!(f_beta(1.0, 1.0, 0.0).is_err());
        assert!(f_beta(1.0, 1.0, -1.0).is_err());
        assert!(f_beta(1.2, 0.5, 1.0).is_err());
        // beta = 1 is the harmonic mean
        assert!((f_beta(0.5, 1.0, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn metrics_from_counts() {
        // 6 of 57 positives detected, no false alarms among 28 negatives
        let mut labels = vec![true; 57];
        labels.extend(vec![false; 28]);
        let mut preds = vec![false; 85];
        preds[..6].iter_mut().for_each(|p| *p = true);
        let m = compute_metrics(&preds, &labels, BETA).unwrap();
        assert_eq!((m.tp, m.fp, m.fn_, m.tn), (6, 0, 51, 28));
        assert_eq!(m.precision, Some(1.0));
        assert_eq!(format!("{:.4}", m.recall.unwrap()), "0.1053");
        assert_eq!(m.positives(), 57);
        assert!(m.is_sound());
    }

    #[test]
    fn metrics_edge_cases() {
        let labels = [true, false, true];
        let none = compute_metrics(&[false; 3], &labels, BETA).unwrap();
        assert_eq!(none.precision, None);
        assert_eq!(none.recall, Some(0.0));
        assert_eq!(none.f_beta, 0.0);

        let perfect = compute_metrics(&labels, &labels, BETA).unwrap();
        assert_eq!(perfect.precision, Some(1.0));
        assert_eq!(perfect.recall, Some(1.0));
        assert!((perfect.f_beta - 1.0).abs() < 1e-15);

        assert!(compute_metrics(&[true], &labels, BETA).is_err());

        let json = serde_json::to_string(&none).unwrap();
        assert!(json.contains("\"precision\":null") && json.contains("\"fn\":2"));
    }

    #[test]
    fn soft_cross_entropy() {
        let v = mean_soft_cross_entropy(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(v < 1e-11);
        let h = mean_soft_cross_entropy(&[0.5], &[0.5]).unwrap();
        assert!((h - 2f64.ln()).abs() < 1e-15);
        assert!(mean_soft_cross_entropy(&[], &[]).is_err());
    }
}
