//! KDD'99 connection-record schema and text parser.

use std::fmt;
use std::io::{BufRead, BufReader, Read};

use flate2::read::GzDecoder;

use super::DataError;

/// Number of feature fields in a KDD'99 record (the label is extra).
pub const FIELD_COUNT: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Numeric,
    Symbolic,
}

/// Field names in file order.
pub const FIELD_NAMES: [&str; FIELD_COUNT] = [
    "duration",
    "protocol_type",
    "service",
    "flag",
    "src_bytes",
    "dst_bytes",
    "land",
    "wrong_fragment",
    "urgent",
    "hot",
    "num_failed_logins",
    "logged_in",
    "num_compromised",
    "root_shell",
    "su_attempted",
    "num_root",
    "num_file_creations",
    "num_shells",
    "num_access_files",
    "num_outbound_cmds",
    "is_host_login",
    "is_guest_login",
    "count",
    "srv_count",
    "serror_rate",
    "srv_serror_rate",
    "rerror_rate",
    "srv_rerror_rate",
    "same_srv_rate",
    "diff_srv_rate",
    "srv_diff_host_rate",
    "dst_host_count",
    "dst_host_srv_count",
    "dst_host_same_srv_rate",
    "dst_host_diff_srv_rate",
    "dst_host_same_src_port_rate",
    "dst_host_srv_diff_host_rate",
    "dst_host_serror_rate",
    "dst_host_srv_serror_rate",
    "dst_host_rerror_rate",
    "dst_host_srv_rerror_rate",
];

/// A KDD field, by zero-based position in the record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FeatureId(usize);

impl FeatureId {
    pub const SRC_BYTES: FeatureId = FeatureId(4);
    pub const DST_BYTES: FeatureId = FeatureId(5);
    pub const COUNT: FeatureId = FeatureId(22);
    pub const SRV_DIFF_HOST_RATE: FeatureId = FeatureId(30);

    pub fn new(index: usize) -> Option<FeatureId> {
        (index < FIELD_COUNT).then_some(FeatureId(index))
    }

    pub fn from_name(name: &str) -> Result<FeatureId, DataError> {
        let wanted = name.trim().to_ascii_lowercase();
        FIELD_NAMES
            .iter()
            .position(|n| *n == wanted)
            .map(FeatureId)
            .ok_or_else(|| DataError::UnknownFeature(name.to_string()))
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn name(self) -> &'static str {
        FIELD_NAMES[self.0]
    }

    pub fn kind(self) -> FieldKind {
        match self.0 {
            1..=3 => FieldKind::Symbolic,
            _ => FieldKind::Numeric,
        }
    }

    /// All numeric fields, in file order (38 of the 41).
    pub fn numeric() -> Vec<FeatureId> {
        (0..FIELD_COUNT)
            .map(FeatureId)
            .filter(|f| f.kind() == FieldKind::Numeric)
            .collect()
    }

    /// `src_bytes, dst_bytes, count, srv_diff_host_rate`
    pub fn default_selection() -> Vec<FeatureId> {
        vec![
            FeatureId::SRC_BYTES,
            FeatureId::DST_BYTES,
            FeatureId::COUNT,
            FeatureId::SRV_DIFF_HOST_RATE,
        ]
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawField {
    Numeric(f64),
    Symbolic(String),
}

impl RawField {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            RawField::Numeric(v) => Some(*v),
            RawField::Symbolic(_) => None,
        }
    }
}

/// One connection record as it appears in the file.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    /// One-based line number in the source.
    pub line: usize,
    pub fields: Vec<RawField>,
    /// Attack name exactly as written, e.g. `"normal."`.
    pub label: String,
}

impl RawRecord {
    pub fn value(&self, feature: FeatureId) -> Option<f64> {
        self.fields[feature.index()].as_number()
    }

    /// Parse one comma-separated line.
    pub fn parse_line(line_no: usize, line: &str) -> Result<RawRecord, DataError> {
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != FIELD_COUNT + 1 {
            return Err(DataError::FieldCount {
                line: line_no,
                found: parts.len(),
            });
        }
        let mut fields = Vec::with_capacity(FIELD_COUNT);
        for (idx, raw) in parts[..FIELD_COUNT].iter().enumerate() {
            let field = match FeatureId(idx).kind() {
                FieldKind::Symbolic => RawField::Symbolic(raw.to_string()),
                FieldKind::Numeric => {
                    let v: f64 = raw.parse().map_err(|_| DataError::Parse {
                        line: line_no,
                        message: format!("field {} ({}) is not numeric: {raw:?}", idx + 1, FIELD_NAMES[idx]),
                    })?;
                    if !v.is_finite() {
                        return Err(DataError::Parse {
                            line: line_no,
                            message: format!("field {} ({}) is not finite", idx + 1, FIELD_NAMES[idx]),
                        });
                    }
                    RawField::Numeric(v)
                }
            };
            fields.push(field);
        }
        let label = parts[FIELD_COUNT].to_string();
        if label.is_empty() {
            return Err(DataError::Parse {
                line: line_no,
                message: "empty label".into(),
            });
        }
        Ok(RawRecord {
            line: line_no,
            fields,
            label,
        })
    }

    /// Render back into the file format.
    pub fn to_line(&self) -> String {
        let mut out = String::new();
        for field in &self.fields {
            match field {
                RawField::Numeric(v) => out.push_str(&format_number(*v)),
                RawField::Symbolic(s) => out.push_str(s),
            }
            out.push(',');
        }
        out.push_str(&self.label);
        out
    }
}

fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.2}")
    }
}

/// Parse KDD'99 text, plain or gzip-compressed. Blank lines are skipped.
pub fn parse_kdd<R: Read>(source: R) -> Result<Vec<RawRecord>, DataError> {
    let mut records = Vec::new();
    for_each_record(source, |rec| {
        records.push(rec);
        Ok(())
    })?;
    Ok(records)
}

/// Streaming form of [`parse_kdd`]: hands each record to `visit` in order.
pub fn for_each_record<R, F>(source: R, visit: F) -> Result<(), DataError>
where
    R: Read,
    F: FnMut(RawRecord) -> Result<(), DataError>,
{
    let mut reader = BufReader::new(source);
    let gzip = {
        let head = reader.fill_buf()?;
        head.len() >= 2 && head[0] == 0x1f && head[1] == 0x8b
    };
    if gzip {
        visit_lines(BufReader::new(GzDecoder::new(reader)), visit)
    } else {
        visit_lines(reader, visit)
    }
}

fn visit_lines<R: BufRead, F>(reader: R, mut visit: F) -> Result<(), DataError>
where
    F: FnMut(RawRecord) -> Result<(), DataError>,
{
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        visit(RawRecord::parse_line(idx + 1, line)?)?;
    }
    Ok(())
}
