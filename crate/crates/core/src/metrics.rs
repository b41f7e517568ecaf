//! Detection metrics over (truth, prediction) pairs. Anomalies are the
//! positive class for detection rate; normals for false-positive rate.

use thiserror::Error;

use crate::svm::Label;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("no predictions to score")]
    Empty,
}

/// Confusion counts with anomalies (`Label::Negative`) as the detected class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    /// Anomalies flagged anomalous.
    pub detected: u64,
    /// Anomalies passed as normal.
    pub missed: u64,
    /// Normals passed as normal.
    pub passed: u64,
    /// Normals flagged anomalous.
    pub false_alarms: u64,
}

impl Confusion {
    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Negative, Label::Negative) => self.detected += 1,
            (Label::Negative, Label::Positive) => self.missed += 1,
            (Label::Positive, Label::Positive) => self.passed += 1,
            (Label::Positive, Label::Negative) => self.false_alarms += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.detected + self.missed + self.passed + self.false_alarms
    }

    pub fn anomalies(&self) -> u64 {
        self.detected + self.missed
    }

    pub fn normals(&self) -> u64 {
        self.passed + self.false_alarms
    }

    pub fn merge(&mut self, other: &Confusion) {
        self.detected += other.detected;
        self.missed += other.missed;
        self.passed += other.passed;
        self.false_alarms += other.false_alarms;
    }

    pub fn rates(&self) -> Result<Rates, MetricsError> {
        let total = self.total();
        if total == 0 {
            return Err(MetricsError::Empty);
        }
        let pct = |num: u64, den: u64| num as f64 / den as f64 * 100.0;
        Ok(Rates {
            accuracy: pct(self.detected + self.passed, total),
            detection_rate: (self.anomalies() > 0).then(|| pct(self.detected, self.anomalies())),
            false_positive_rate: (self.normals() > 0).then(|| pct(self.false_alarms, self.normals())),
        })
    }
}

/// Percentages. A rate is absent when its class never occurs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub accuracy: f64,
    pub detection_rate: Option<f64>,
    pub false_positive_rate: Option<f64>,
}

pub fn compute_metrics<I: IntoIterator<Item = (Label, Label)>>(
    predictions: I,
) -> Result<(Rates, Confusion), MetricsError> {
    let mut c = Confusion::default();
    for (truth, predicted) in predictions {
        c.record(truth, predicted);
    }
    Ok((c.rates()?, c))
}
