//! Binary soft-margin SVM with an RBF kernel.
//!
//! Training maximizes the usual dual
//!
//! ```text
//! L(a) = sum_i a_i - 1/2 sum_i sum_j a_i a_j y_i y_j K(x_i, x_j)
//! s.t.   sum_i y_i a_i = 0,  0 <= a_i <= C
//! ```
//!
//! with sequential minimal optimization (see [`smo`]). A trained
//! [`SvmModel`] keeps only the samples with a strictly positive multiplier.

mod smo;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use smo::SmoConfig;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SvmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature vector is empty")]
    EmptyVector,
    #[error("feature vector contains a non-finite value at position {0}")]
    NonFinite(usize),
    #[error("training data must contain both labels")]
    SingleClass,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("solver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Identity of a sample inside its source corpus.
///
/// Distributed training deduplicates by identity, never by float equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SampleId(pub u64);

impl fmt::Display for SampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// Class label. `Positive` (+1) is normal traffic, `Negative` (-1) is an attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Positive => 1.0,
            Label::Negative => -1.0,
        }
    }

    pub fn from_sign(value: i32) -> Option<Label> {
        match value {
            1 => Some(Label::Positive),
            -1 => Some(Label::Negative),
            _ => None,
        }
    }

    /// Sign of a decision value; exactly zero resolves to `Positive`.
    pub fn from_decision(value: f64) -> Label {
        if value >= 0.0 {
            Label::Positive
        } else {
            Label::Negative
        }
    }
}

/// Finite, non-empty vector of feature values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, SvmError> {
        if values.is_empty() {
            return Err(SvmError::EmptyVector);
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(SvmError::NonFinite(pos));
        }
        Ok(FeatureVector(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn squared_distance(&self, other: &FeatureVector) -> Result<f64, SvmError> {
        check_dim(self.dim(), other.dim())?;
        Ok(squared_distance(&self.0, &other.0))
    }

    pub fn distance(&self, other: &FeatureVector) -> Result<f64, SvmError> {
        self.squared_distance(other).map(f64::sqrt)
    }
}

impl TryFrom<Vec<f64>> for FeatureVector {
    type Error = SvmError;

    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        FeatureVector::new(values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub id: SampleId,
    pub x: FeatureVector,
    pub y: Label,
}

impl Sample {
    pub fn new(id: u64, x: FeatureVector, y: Label) -> Self {
        Sample { id: SampleId(id), x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub sigma: f64,
    /// Square the distance inside the exponent (standard RBF). When unset the
    /// plain Euclidean distance is used instead.
    pub squared_norm: bool,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            sigma: 1.0,
            squared_norm: true,
        }
    }
}

impl KernelParams {
    pub fn rbf(sigma: f64) -> Self {
        KernelParams {
            sigma,
            squared_norm: true,
        }
    }

    pub fn validate(&self) -> Result<(), SvmError> {
        if self.sigma.is_finite() && self.sigma > 0.0 {
            Ok(())
        } else {
            Err(SvmError::InvalidParameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )))
        }
    }

    /// `1 / (2 sigma^2)`
    pub fn gamma(&self) -> f64 {
        1.0 / (2.0 * self.sigma * self.sigma)
    }

    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2 = squared_distance(a, b);
        let d = if self.squared_norm { d2 } else { d2.sqrt() };
        (-d * self.gamma()).exp()
    }
}

/// `exp(-|x1 - x2|^2 / (2 sigma^2))`, or the unsquared variant when
/// `k.squared_norm` is false.
pub fn rbf_kernel(x1: &FeatureVector, x2: &FeatureVector, k: &KernelParams) -> Result<f64, SvmError> {
    check_dim(x1.dim(), x2.dim())?;
    k.validate()?;
    Ok(k.eval_unchecked(x1.as_slice(), x2.as_slice()))
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn check_dim(expected: usize, found: usize) -> Result<(), SvmError> {
    if expected == found {
        Ok(())
    } else {
        Err(SvmError::DimensionMismatch { expected, found })
    }
}

/// A trained classifier. Only samples with `alpha > 0` are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    support_vectors: Vec<Sample>,
    alphas: Vec<f64>,
    bias: f64,
    c_param: f64,
    kernel: KernelParams,
    iterations: usize,
}

impl SvmModel {
    pub fn support_vectors(&self) -> &[Sample] {
        &self.support_vectors
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn c_param(&self) -> f64 {
        self.c_param
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    /// Number of SMO pair updates the solver performed.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn dim(&self) -> usize {
        self.support_vectors[0].x.dim()
    }

    pub fn decision_value(&self, x: &FeatureVector) -> Result<f64, SvmError> {
        check_dim(self.dim(), x.dim())?;
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.alphas)
            .map(|(sv, a)| a * sv.y.sign() * self.kernel.eval_unchecked(sv.x.as_slice(), x.as_slice()))
            .sum();
        Ok(sum + self.bias)
    }

    /// Label and raw decision value for `x`.
    pub fn decide(&self, x: &FeatureVector) -> Result<(Label, f64), SvmError> {
        let value = self.decision_value(x)?;
        Ok((Label::from_decision(value), value))
    }

    /// Samples with a positive multiplier, in training order.
    pub fn support_vector_set(&self) -> Vec<Sample> {
        self.support_vectors.clone()
    }

    /// Dual objective evaluated at the stored multipliers. Samples with a
    /// zero multiplier contribute nothing, so this equals the objective over
    /// the full training set.
    pub fn dual_objective(&self) -> f64 {
        let n = self.support_vectors.len();
        let mut quad = 0.0;
        for i in 0..n {
            let si = &self.support_vectors[i];
            for j in 0..n {
                let sj = &self.support_vectors[j];
                quad += self.alphas[i]
                    * self.alphas[j]
                    * si.y.sign()
                    * sj.y.sign()
                    * self.kernel.eval_unchecked(si.x.as_slice(), sj.x.as_slice());
            }
        }
        self.alphas.iter().sum::<f64>() - 0.5 * quad
    }
}

/// Train a soft-margin SVM with the default solver settings.
pub fn train(data: &[Sample], c_param: f64, kernel: KernelParams) -> Result<SvmModel, SvmError> {
    train_with(data, c_param, kernel, &SmoConfig::default())
}

pub fn train_with(data: &[Sample], c_param: f64, kernel: KernelParams, smo: &SmoConfig) -> Result<SvmModel, SvmError> {
    kernel.validate()?;
    if !(c_param.is_finite() && c_param > 0.0) {
        return Err(SvmError::InvalidParameter(format!("C must be positive, got {c_param}")));
    }
    let Some(first) = data.first() else {
        return Err(SvmError::SingleClass);
    };
    let dim = first.x.dim();
    for s in data {
        check_dim(dim, s.x.dim())?;
    }
    let has_pos = data.iter().any(|s| s.y == Label::Positive);
    let has_neg = data.iter().any(|s| s.y == Label::Negative);
    if !(has_pos && has_neg) {
        return Err(SvmError::SingleClass);
    }

    let solution = smo::solve(data, c_param, &kernel, smo)?;

    let mut support_vectors = Vec::new();
    let mut alphas = Vec::new();
    for (sample, &alpha) in data.iter().zip(&solution.alphas) {
        if alpha > 0.0 {
            support_vectors.push(sample.clone());
            alphas.push(alpha);
        }
    }
    Ok(SvmModel {
        support_vectors,
        alphas,
        bias: solution.bias,
        c_param,
        kernel,
        iterations: solution.iterations,
    })
}
