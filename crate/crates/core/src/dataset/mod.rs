//! KDD'99 ingestion: parsing, label mapping, feature projection,
//! normalization, per-agent sampling and delete-one feature ranking.

pub mod categories;
pub mod kdd;
mod ranking;
mod sampling;
pub mod synth;

use std::io;
use std::path::Path;

use thiserror::Error;

pub use categories::{Category, CategoryMap, LabelMapping};
pub use kdd::{for_each_record, parse_kdd, FeatureId, FieldKind, RawField, RawRecord};
pub use ranking::{rank_features, FeatureRanking, RankingRow, Score};
pub use sampling::{
    sample_agent_training, sample_test, AgentQuota, PlanSpec, SamplingPlan, TEST_ANOMALY_SHARE, TEST_SAMPLES_PER_AGENT,
};

use crate::svm::{FeatureVector, Sample};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: expected 42 fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("unknown attack label {0:?}")]
    UnknownLabel(String),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error("feature {0} is symbolic and cannot be used")]
    UnsupportedFeature(String),
    #[error("no features selected")]
    EmptySelection,
    #[error("insufficient data: need {needed} {what}, only {available} available")]
    Insufficient {
        what: String,
        needed: usize,
        available: usize,
    },
    #[error("category map line {line}: {message}")]
    CategoryMap { line: usize, message: String },
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Provenance of one retained sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMeta {
    pub category: Category,
    /// Attack name without the trailing period (`"normal"` for normal traffic).
    pub attack: String,
}

/// Per-feature `(min, max)` pairs fitted on training data.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalization {
    pub bounds: Vec<(f64, f64)>,
}

impl Normalization {
    pub fn fit<'a, I>(samples: I) -> Option<Normalization>
    where
        I: IntoIterator<Item = &'a Sample>,
    {
        let mut bounds: Option<Vec<(f64, f64)>> = None;
        for s in samples {
            let b = bounds.get_or_insert_with(|| vec![(f64::INFINITY, f64::NEG_INFINITY); s.x.dim()]);
            for (slot, &v) in b.iter_mut().zip(s.x.as_slice()) {
                slot.0 = slot.0.min(v);
                slot.1 = slot.1.max(v);
            }
        }
        bounds.map(|bounds| Normalization { bounds })
    }

    /// Min-max scale into `[0, 1]`, clipping values outside the fitted
    /// range. Constant features map to 0.
    pub fn apply(&self, x: &FeatureVector) -> FeatureVector {
        let values = x
            .as_slice()
            .iter()
            .zip(&self.bounds)
            .map(|(&v, &(lo, hi))| {
                if hi > lo {
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();
        FeatureVector::new(values).expect("scaled values are finite")
    }

    pub fn apply_sample(&self, s: &Sample) -> Sample {
        Sample {
            id: s.id,
            x: self.apply(&s.x),
            y: s.y,
        }
    }
}

/// Samples over a fixed feature projection, with their provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Vec<Sample>,
    pub meta: Vec<SampleMeta>,
    pub feature_ids: Vec<FeatureId>,
    pub normalization: Option<Normalization>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn count(&self, category: Category) -> usize {
        self.meta.iter().filter(|m| m.category == category).count()
    }

    /// Keep only the listed features, in the listed order.
    pub fn project(&self, features: &[FeatureId]) -> Result<LabeledDataset, DataError> {
        if features.is_empty() {
            return Err(DataError::EmptySelection);
        }
        let cols: Vec<usize> = features
            .iter()
            .map(|f| {
                self.feature_ids
                    .iter()
                    .position(|g| g == f)
                    .ok_or_else(|| DataError::UnknownFeature(f.name().to_string()))
            })
            .collect::<Result<_, _>>()?;
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                id: s.id,
                x: FeatureVector::new(cols.iter().map(|&c| s.x.as_slice()[c]).collect())
                    .expect("projection of a finite vector"),
                y: s.y,
            })
            .collect();
        let normalization = self.normalization.as_ref().map(|n| Normalization {
            bounds: cols.iter().map(|&c| n.bounds[c]).collect(),
        });
        Ok(LabeledDataset {
            samples,
            meta: self.meta.clone(),
            feature_ids: features.to_vec(),
            normalization,
        })
    }

    /// Apply previously fitted statistics (e.g. from a training split).
    pub fn normalized_with(&self, norm: &Normalization) -> LabeledDataset {
        LabeledDataset {
            samples: self.samples.iter().map(|s| norm.apply_sample(s)).collect(),
            meta: self.meta.clone(),
            feature_ids: self.feature_ids.clone(),
            normalization: Some(norm.clone()),
        }
    }
}

fn check_selection(feature_ids: &[FeatureId]) -> Result<(), DataError> {
    if feature_ids.is_empty() {
        return Err(DataError::EmptySelection);
    }
    if let Some(f) = feature_ids.iter().find(|f| f.kind() == FieldKind::Symbolic) {
        return Err(DataError::UnsupportedFeature(f.name().to_string()));
    }
    Ok(())
}

impl LabeledDataset {
    fn empty(feature_ids: &[FeatureId]) -> Self {
        LabeledDataset {
            samples: Vec::new(),
            meta: Vec::new(),
            feature_ids: feature_ids.to_vec(),
            normalization: None,
        }
    }

    /// Append `rec` as sample `idx` unless its category is out of scope.
    fn push_record(&mut self, idx: usize, rec: &RawRecord, categories: &CategoryMap) -> Result<(), DataError> {
        let LabelMapping::Labeled(label, category) = categories.map_label(rec)? else {
            return Ok(());
        };
        let values = self
            .feature_ids
            .iter()
            .map(|&f| rec.value(f).expect("numeric field"))
            .collect();
        self.samples.push(Sample::new(
            idx as u64,
            FeatureVector::new(values).map_err(|e| DataError::Parse {
                line: rec.line,
                message: e.to_string(),
            })?,
            label,
        ));
        self.meta.push(SampleMeta {
            category,
            attack: categories::normalize_name(&rec.label).to_string(),
        });
        Ok(())
    }
}

/// Map labels, drop U2R/R2L records and project onto `feature_ids`.
/// Sample identities are positions in `records`.
pub fn select_features(
    records: &[RawRecord],
    feature_ids: &[FeatureId],
    categories: &CategoryMap,
) -> Result<LabeledDataset, DataError> {
    check_selection(feature_ids)?;
    let mut ds = LabeledDataset::empty(feature_ids);
    for (idx, rec) in records.iter().enumerate() {
        ds.push_record(idx, rec, categories)?;
    }
    Ok(ds)
}

/// Fit min-max statistics on `ds` itself and apply them.
pub fn normalize(ds: &LabeledDataset) -> LabeledDataset {
    match Normalization::fit(&ds.samples) {
        Some(norm) => ds.normalized_with(&norm),
        None => ds.clone(),
    }
}

/// Read a corpus file (plain or gzip) and build the labelled projection
/// without holding the raw records in memory.
pub fn load_dataset(
    path: &Path,
    feature_ids: &[FeatureId],
    categories: &CategoryMap,
) -> Result<LabeledDataset, DataError> {
    check_selection(feature_ids)?;
    let file = std::fs::File::open(path)?;
    let mut ds = LabeledDataset::empty(feature_ids);
    let mut idx = 0;
    kdd::for_each_record(file, |rec| {
        ds.push_record(idx, &rec, categories)?;
        idx += 1;
        Ok(())
    })?;
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::Label;

    fn line(src: u32, count: u32, label: &str) -> String {
        format!(
            "0,tcp,http,SF,{src},100,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,{count},8,0,0,0,0,1,0,0.5,9,9,1,0,0.11,0,0,0,0,0,{label}"
        )
    }

    fn records() -> Vec<RawRecord> {
        let text = [
            line(0, 1, "normal."),
            line(5, 2, "neptune."),
            line(10, 3, "buffer_overflow."),
            line(10, 4, "ipsweep."),
        ]
        .join("\n");
        parse_kdd(text.as_bytes()).unwrap()
    }

    #[test]
    fn default_selection_is_four_dimensional_and_drops_excluded() {
        let ds = select_features(&records(), &FeatureId::default_selection(), &CategoryMap::default()).unwrap();
        assert_eq!(ds.dim(), 4);
        assert_eq!(ds.len(), 3);
        assert!(ds.samples.iter().all(|s| s.x.dim() == 4));
        let ids: Vec<u64> = ds.samples.iter().map(|s| s.id.0).collect();
        assert_eq!(ids, vec![0, 1, 3]);
        assert_eq!(ds.samples[0].y, Label::Positive);
        assert_eq!(ds.samples[1].y, Label::Negative);
        assert_eq!(ds.meta[2].attack, "ipsweep");
        assert!(ds
            .meta
            .iter()
            .all(|m| !matches!(m.category, Category::U2r | Category::R2l)));
    }

    #[test]
    fn all_numeric_fields_are_accepted() {
        let ds = select_features(&records(), &FeatureId::numeric(), &CategoryMap::default()).unwrap();
        assert_eq!(ds.dim(), 38);
    }

    #[test]
    fn empty_and_symbolic_selections_are_rejected() {
        let cm = CategoryMap::default();
        assert!(matches!(
            select_features(&records(), &[], &cm),
            Err(DataError::EmptySelection)
        ));
        let service = FeatureId::from_name("service").unwrap();
        assert!(matches!(
            select_features(&records(), &[service], &cm),
            Err(DataError::UnsupportedFeature(_))
        ));
    }

    fn column_ds(values: &[f64]) -> LabeledDataset {
        LabeledDataset {
            samples: values
                .iter()
                .enumerate()
                .map(|(i, &v)| Sample::new(i as u64, FeatureVector::new(vec![v, 7.0]).unwrap(), Label::Positive))
                .collect(),
            meta: vec![
                SampleMeta {
                    category: Category::Normal,
                    attack: "normal".into()
                };
                values.len()
            ],
            feature_ids: vec![FeatureId::SRC_BYTES, FeatureId::COUNT],
            normalization: None,
        }
    }

    #[test]
    fn min_max_scaling() {
        let ds = normalize(&column_ds(&[0.0, 5.0, 10.0]));
        let col: Vec<f64> = ds.samples.iter().map(|s| s.x.as_slice()[0]).collect();
        assert_eq!(col, vec![0.0, 0.5, 1.0]);
        // constant second column
        assert!(ds.samples.iter().all(|s| s.x.as_slice()[1] == 0.0));
        let norm = ds.normalization.clone().unwrap();
        assert_eq!(norm.bounds, vec![(0.0, 10.0), (7.0, 7.0)]);

        let test = FeatureVector::new(vec![12.0, 9.0]).unwrap();
        assert_eq!(norm.apply(&test).as_slice(), &[1.0, 0.0]);
        let below = FeatureVector::new(vec![-3.0, 7.0]).unwrap();
        assert_eq!(norm.apply(&below).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn normalization_is_idempotent() {
        let once = normalize(&column_ds(&[3.0, 17.5, -2.25, 8.0, 100.0]));
        let twice = normalize(&once);
        assert_eq!(once.samples, twice.samples);
    }

    #[test]
    fn projection_keeps_order_and_bounds() {
        let ds = normalize(&column_ds(&[0.0, 10.0]));
        let p = ds.project(&[FeatureId::COUNT]).unwrap();
        assert_eq!(p.dim(), 1);
        assert_eq!(p.normalization.unwrap().bounds, vec![(7.0, 7.0)]);
        assert!(ds.project(&[FeatureId::DST_BYTES]).is_err());
    }
}
