//! Precision, recall and F1 of a recovered set, and their spread across runs.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::graph::VarSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Scores `found` against `truth`.
///
/// An empty `found` has precision 1 only when `truth` is also empty; recall
/// of an empty `truth` is 1. F1 is 0 when precision and recall are both 0.
pub fn score(found: &VarSet, truth: &VarSet) -> Score {
    let hits = found.intersection(truth).count() as f64;
    let precision = match (found.is_empty(), truth.is_empty()) {
        (true, true) => 1.0,
        (true, false) => 0.0,
        _ => hits / found.len() as f64,
    };
    let recall = if truth.is_empty() { 1.0 } else { hits / truth.len() as f64 };
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Score { precision, recall, f1 }
}

/// Sample mean and standard deviation (n − 1 denominator; 0 for one value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}

impl fmt::Display for MeanStd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = f.precision().unwrap_or(2);
        write!(f, "{:.p$}±{:.p$}", self.mean, self.std)
    }
}

/// Mean and spread of precision, recall, F1 and test counts over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSummary {
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub n_test: MeanStd,
}

impl ScoreSummary {
    pub fn of(scores: &[Score], n_tests: &[u64]) -> Self {
        let col = |f: fn(&Score) -> f64| MeanStd::of(&scores.iter().map(f).collect::<Vec<_>>());
        Self {
            precision: col(|s| s.precision),
            recall: col(|s| s.recall),
            f1: col(|s| s.f1),
            n_test: MeanStd::of(&n_tests.iter().map(|&n| n as f64).collect::<Vec<_>>()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VarId;

    fn set(ids: &[usize]) -> VarSet {
        ids.iter().map(|&i| VarId(i)).collect()
    }

    #[test]
    fn exact_and_partial() {
        let s = score(&set(&[0, 1, 2]), &set(&[0, 1, 2]));
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = score(&set(&[0, 1, 2, 9]), &set(&[0, 1, 2, 3]));
        assert_eq!((s.precision, s.recall, s.f1), (0.75, 0.75, 0.75));
    }

    #[test]
    fn empty_conventions() {
        assert_eq!(score(&set(&[]), &set(&[])).f1, 1.0);
        let s = score(&set(&[]), &set(&[1]));
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = score(&set(&[1]), &set(&[]));
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 1.0, 0.0));
    }

    #[test]
    fn mean_std_format() {
        let m = MeanStd::of(&[1.0, 1.0, 1.0]);
        assert_eq!(m.to_string(), "1.00±0.00");
        let m = MeanStd::of(&[1102.0, 1000.0, 1204.0]);
        assert_eq!(format!("{m:.0}"), "1102±102");
    }
}
