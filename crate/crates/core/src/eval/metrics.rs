use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::normalize::{values_match, Field, FieldValue};

/// How a present prediction is compared against a present gold value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Correct only when the normalized values match.
    #[default]
    StrictValue,
    /// Correct whenever both sides are present.
    DetectionOnly,
}

impl MatchMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchMode::StrictValue => "strict_value",
            MatchMode::DetectionOnly => "detection_only",
        }
    }
}

impl std::str::FromStr for MatchMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "strict" | "strict_value" => Ok(MatchMode::StrictValue),
            "detection" | "detection_only" => Ok(MatchMode::DetectionOnly),
            other => Err(format!("unknown match mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    TruePositive,
    FalsePositive,
    FalseNegative,
    TrueNegative,
}

/// Scores one (gold, prediction) pair. Absence is the negative class; a
/// present but wrong value under [`MatchMode::StrictValue`] is a false
/// positive, so every pair has exactly one outcome.
pub fn classify_pair(gold: Option<&FieldValue>, pred: Option<&FieldValue>, field: Field, mode: MatchMode) -> Outcome {
    match (gold, pred) {
        (None, None) => Outcome::TrueNegative,
        (None, Some(_)) => Outcome::FalsePositive,
        (Some(_), None) => Outcome::FalseNegative,
        (Some(_), Some(_)) if mode == MatchMode::DetectionOnly => Outcome::TruePositive,
        (Some(g), Some(p)) => {
            if values_match(field, g, p) {
                Outcome::TruePositive
            } else {
                Outcome::FalsePositive
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn record(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::TruePositive => self.tp += 1,
            Outcome::FalsePositive => self.fp += 1,
            Outcome::FalseNegative => self.fn_ += 1,
            Outcome::TrueNegative => self.tn += 1,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.tp += rhs.tp;
        self.fp += rhs.fp;
        self.fn_ += rhs.fn_;
        self.tn += rhs.tn;
    }
}

impl FromIterator<Outcome> for ConfusionCounts {
    fn from_iter<I: IntoIterator<Item = Outcome>>(iter: I) -> Self {
        let mut c = ConfusionCounts::default();
        iter.into_iter().for_each(|o| c.record(o));
        c
    }
}

/// Only an all-negative cell with at least one true negative counts as a
/// perfect score when there are no positives at all.
fn all_negative_perfect(c: &ConfusionCounts) -> f64 {
    if c.tn > 0 {
        1.0
    } else {
        0.0
    }
}

/// TP / (TP + FP).
pub fn precision(c: &ConfusionCounts) -> f64 {
    if c.tp + c.fp > 0 {
        c.tp as f64 / (c.tp + c.fp) as f64
    } else if c.fn_ > 0 {
        0.0
    } else {
        all_negative_perfect(c)
    }
}

/// TP / (TP + FN).
pub fn recall(c: &ConfusionCounts) -> f64 {
    if c.tp + c.fn_ > 0 {
        c.tp as f64 / (c.tp + c.fn_) as f64
    } else if c.fp > 0 {
        0.0
    } else {
        all_negative_perfect(c)
    }
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl MetricTriple {
    pub fn from_counts(c: &ConfusionCounts) -> Self {
        let (p, r) = (precision(c), recall(c));
        MetricTriple { precision: p, recall: r, f1: f1(p, r) }
    }
}
