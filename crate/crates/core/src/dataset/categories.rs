use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::kdd::RawRecord;
use super::DataError;
use crate::svm::Label;

/// The attack-name table shipped with the crate.
pub const DEFAULT_CATEGORY_TABLE: &str = include_str!("../../data/kdd_categories.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    Normal,
    Dos,
    Probe,
    U2r,
    R2l,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Normal => "normal",
            Category::Dos => "dos",
            Category::Probe => "probe",
            Category::U2r => "u2r",
            Category::R2l => "r2l",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" => Ok(Category::Normal),
            "dos" => Ok(Category::Dos),
            "probe" => Ok(Category::Probe),
            "u2r" => Ok(Category::U2r),
            "r2l" => Ok(Category::R2l),
            other => Err(format!("unknown category {other:?}")),
        }
    }
}

/// Outcome of mapping a record's attack name onto the binary problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMapping {
    Labeled(Label, Category),
    Excluded(Category),
}

/// Attack name to category, e.g. `neptune -> Dos`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    entries: BTreeMap<String, Category>,
}

impl Default for CategoryMap {
    fn default() -> Self {
        CategoryMap::parse(DEFAULT_CATEGORY_TABLE).expect("bundled category table is valid")
    }
}

impl CategoryMap {
    /// Parse `attack_name<TAB>category` lines. `#` starts a comment.
    pub fn parse(text: &str) -> Result<CategoryMap, DataError> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t').map(str::trim).filter(|c| !c.is_empty());
            let (Some(name), Some(cat), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(DataError::CategoryMap {
                    line: idx + 1,
                    message: "expected two tab-separated columns".into(),
                });
            };
            let category = cat
                .parse()
                .map_err(|message| DataError::CategoryMap { line: idx + 1, message })?;
            entries.insert(normalize_name(name).to_string(), category);
        }
        Ok(CategoryMap { entries })
    }

    pub fn category(&self, attack_name: &str) -> Result<Category, DataError> {
        self.entries
            .get(normalize_name(attack_name))
            .copied()
            .ok_or_else(|| DataError::UnknownLabel(attack_name.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Normal is +1, Dos and Probe are -1, U2R and R2L are left out.
    pub fn map_label(&self, record: &RawRecord) -> Result<LabelMapping, DataError> {
        let category = self.category(&record.label)?;
        Ok(match category {
            Category::Normal => LabelMapping::Labeled(Label::Positive, category),
            Category::Dos | Category::Probe => LabelMapping::Labeled(Label::Negative, category),
            Category::U2r | Category::R2l => LabelMapping::Excluded(category),
        })
    }
}

/// Strip the trailing period KDD puts on labels.
pub fn normalize_name(name: &str) -> &str {
    let name = name.trim();
    name.strip_suffix('.').unwrap_or(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::kdd::RawRecord;

    fn record(label: &str) -> RawRecord {
        let mut line =
            "0,tcp,http,SF,181,5450,0,0,0,0,0,1,0,0,0,0,0,0,0,0,0,0,8,8,0,0,0,0,1,0,0,9,9,1,0,0.11,0,0,0,0,0,"
                .to_string();
        line.push_str(label);
        RawRecord::parse_line(1, &line).unwrap()
    }

    #[test]
    fn maps_labels_to_binary_classes() {
        let cm = CategoryMap::default();
        assert_eq!(
            cm.map_label(&record("normal.")).unwrap(),
            LabelMapping::Labeled(Label::Positive, Category::Normal)
        );
        assert_eq!(
            cm.map_label(&record("neptune.")).unwrap(),
            LabelMapping::Labeled(Label::Negative, Category::Dos)
        );
        assert_eq!(
            cm.map_label(&record("satan.")).unwrap(),
            LabelMapping::Labeled(Label::Negative, Category::Probe)
        );
        assert_eq!(
            cm.map_label(&record("buffer_overflow.")).unwrap(),
            LabelMapping::Excluded(Category::U2r)
        );
        assert_eq!(
            cm.map_label(&record("warezclient")).unwrap(),
            LabelMapping::Excluded(Category::R2l)
        );
    }

    #[test]
    fn unknown_label_is_an_error() {
        let cm = CategoryMap::default();
        assert!(matches!(
            cm.map_label(&record("martian.")),
            Err(DataError::UnknownLabel(name)) if name == "martian."
        ));
    }

    #[test]
    fn bundled_table_covers_ten_percent_names() {
        let cm = CategoryMap::default();
        for name in [
            "back",
            "land",
            "neptune",
            "pod",
            "smurf",
            "teardrop",
            "ipsweep",
            "nmap",
            "portsweep",
            "satan",
            "ftp_write",
            "guess_passwd",
            "imap",
            "multihop",
            "phf",
            "spy",
            "warezclient",
            "warezmaster",
            "buffer_overflow",
            "loadmodule",
            "perl",
            "rootkit",
            "normal",
        ] {
            assert!(cm.category(name).is_ok(), "{name}");
        }
    }

    #[test]
    fn malformed_table_reports_line() {
        let err = CategoryMap::parse("normal\tnormal\nsmurf dos\n").unwrap_err();
        assert!(matches!(err, DataError::CategoryMap { line: 2, .. }));
        let err = CategoryMap::parse("smurf\tweird\n").unwrap_err();
        assert!(matches!(err, DataError::CategoryMap { line: 1, .. }));
    }
}
