//! Delimited-table ingestion driven by a TOML schema mapping.
//!
//! ```toml
//! delimiter = ","
//! exclude_na = true
//! ignore = ["Timestamp"]
//!
//! [columns]
//! "Age" = "age"
//! "Feeling anxious" = "label"
//! "Trouble sleeping at night" = "trouble_sleeping"
//!
//! [labels]
//! present = ["Yes", "1"]
//! absent = ["No", "0"]
//!
//! [aliases]
//! "" = "na"
//! "Two or more days a week" = "often"
//! ```
//!
//! Every topic needs exactly one column, plus one `age` and one `label`
//! column. Cells match aliases after trimming and ignoring case; the
//! canonical slugs and labels of the options are always accepted.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use ppd_core::record::{AgeBucket, ResponseOption, ScreeningRecord, Topic};
use serde::Deserialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Age,
    Label,
    Topic(Topic),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaMapping {
    pub delimiter: u8,
    /// Header name to role, in no particular order.
    pub columns: BTreeMap<String, ColumnRole>,
    /// Headers that are read past.
    pub ignore: Vec<String>,
    /// Lower-cased raw cell to option.
    pub aliases: BTreeMap<String, ResponseOption>,
    pub present: Vec<String>,
    pub absent: Vec<String>,
    /// Drop rows with an NA answer instead of returning them.
    pub exclude_na: bool,
    /// Rows without a label are an error.
    pub require_label: bool,
}

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("cannot read mapping: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid mapping: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("column `{column}` has unknown role `{role}`")]
    UnknownRole { column: String, role: String },
    #[error("alias `{alias}` points at unknown option `{option}`")]
    UnknownAlias { alias: String, option: String },
    #[error("{0} is mapped by no column")]
    Unmapped(String),
    #[error("{0} is mapped by more than one column")]
    Duplicate(String),
    #[error("delimiter must be a single ASCII character")]
    BadDelimiter,
    #[error("label value `{0}` is listed as both present and absent")]
    AmbiguousLabel(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMapping {
    #[serde(default = "default_delimiter")]
    delimiter: String,
    #[serde(default)]
    exclude_na: bool,
    #[serde(default = "yes")]
    require_label: bool,
    #[serde(default)]
    ignore: Vec<String>,
    columns: BTreeMap<String, String>,
    #[serde(default)]
    labels: RawLabels,
    #[serde(default)]
    aliases: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLabels {
    present: Vec<String>,
    absent: Vec<String>,
}

impl Default for RawLabels {
    fn default() -> Self {
        Self {
            present: vec!["1".into()],
            absent: vec!["0".into()],
        }
    }
}

fn default_delimiter() -> String {
    ",".into()
}

fn yes() -> bool {
    true
}

fn norm(s: &str) -> String {
    s.trim().to_lowercase()
}

impl SchemaMapping {
    pub fn from_toml(text: &str) -> Result<Self, MappingError> {
        let raw: RawMapping = toml::from_str(text)?;
        let delimiter = match raw.delimiter.as_bytes() {
            [b] if b.is_ascii() => *b,
            _ => return Err(MappingError::BadDelimiter),
        };
        let mut columns = BTreeMap::new();
        for (column, role) in raw.columns {
            let parsed = match role.trim() {
                "age" => ColumnRole::Age,
                "label" => ColumnRole::Label,
                other => ColumnRole::Topic(other.parse().map_err(|_| MappingError::UnknownRole {
                    column: column.clone(),
                    role: role.clone(),
                })?),
            };
            columns.insert(column, parsed);
        }
        let mut aliases = BTreeMap::new();
        for (alias, option) in raw.aliases {
            let o = option.parse().map_err(|_| MappingError::UnknownAlias {
                alias: alias.clone(),
                option: option.clone(),
            })?;
            aliases.insert(norm(&alias), o);
        }
        let mapping = SchemaMapping {
            delimiter,
            columns,
            ignore: raw.ignore,
            aliases,
            present: raw.labels.present,
            absent: raw.labels.absent,
            exclude_na: raw.exclude_na,
            require_label: raw.require_label,
        };
        mapping.validate()?;
        Ok(mapping)
    }

    pub fn load(path: &Path) -> Result<Self, MappingError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Default mapping whose headers are the canonical slugs; this is what
    /// [`write_dataset`] produces with it.
    pub fn canonical() -> Self {
        let mut columns: BTreeMap<String, ColumnRole> =
            Topic::ALL.into_iter().map(|t| (t.slug().to_string(), ColumnRole::Topic(t))).collect();
        columns.insert("age".into(), ColumnRole::Age);
        columns.insert("label".into(), ColumnRole::Label);
        SchemaMapping {
            delimiter: b',',
            columns,
            ignore: Vec::new(),
            aliases: BTreeMap::new(),
            present: vec!["1".into()],
            absent: vec!["0".into()],
            exclude_na: false,
            require_label: true,
        }
    }

    fn validate(&self) -> Result<(), MappingError> {
        let count = |role: ColumnRole| self.columns.values().filter(|&&r| r == role).count();
        let mut roles: Vec<(ColumnRole, String)> = vec![(ColumnRole::Age, "age".into()), (ColumnRole::Label, "label".into())];
        roles.extend(Topic::ALL.into_iter().map(|t| (ColumnRole::Topic(t), format!("topic `{t}`"))));
        for (role, name) in roles {
            match count(role) {
                0 => return Err(MappingError::Unmapped(name)),
                1 => {}
                _ => return Err(MappingError::Duplicate(name)),
            }
        }
        let absent: Vec<String> = self.absent.iter().map(|s| norm(s)).collect();
        if let Some(v) = self.present.iter().find(|p| absent.contains(&norm(p))) {
            return Err(MappingError::AmbiguousLabel(v.clone()));
        }
        Ok(())
    }

    fn column_for(&self, role: ColumnRole) -> &str {
        self.columns
            .iter()
            .find(|(_, &r)| r == role)
            .map(|(c, _)| c.as_str())
            .expect("validated mapping maps every role")
    }

    fn option(&self, raw: &str) -> Option<ResponseOption> {
        self.aliases.get(&norm(raw)).copied().or_else(|| {
            let t = raw.trim();
            t.parse()
                .ok()
                .or_else(|| ResponseOption::ALL.into_iter().find(|o| o.label().eq_ignore_ascii_case(t)))
        })
    }

    fn label(&self, raw: &str) -> Option<Option<bool>> {
        let n = norm(raw);
        if n.is_empty() {
            Some(None)
        } else if self.present.iter().any(|p| norm(p) == n) {
            Some(Some(true))
        } else if self.absent.iter().any(|a| norm(a) == n) {
            Some(Some(false))
        } else {
            None
        }
    }
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("row {row}: {message}")]
    Csv { row: usize, message: String },
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("column `{0}` is missing from the header")]
    MissingColumn(String),
    #[error("row {row}, column `{column}`: unmapped value `{value}`")]
    UnmappedValue { row: usize, column: String, value: String },
    #[error("row {row}: bad age `{value}`")]
    BadAge { row: usize, value: String },
    #[error("row {row}: missing label")]
    MissingLabel { row: usize },
}

impl DatasetError {
    /// 1-based data row the error refers to, if any.
    pub fn row(&self) -> Option<usize> {
        match self {
            DatasetError::Csv { row, .. }
            | DatasetError::UnmappedValue { row, .. }
            | DatasetError::BadAge { row, .. }
            | DatasetError::MissingLabel { row } => Some(*row),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedDataset {
    /// In file order.
    pub records: Vec<ScreeningRecord>,
    /// Rows dropped because of an NA answer.
    pub skipped_na: usize,
    /// Rows (1-based) whose integer age was clamped into range.
    pub clamped_rows: Vec<usize>,
}

impl ParsedDataset {
    pub fn class_counts(&self) -> (usize, usize) {
        let present = self.records.iter().filter(|r| r.label == Some(true)).count();
        let absent = self.records.iter().filter(|r| r.label == Some(false)).count();
        (absent, present)
    }
}

fn parse_age(raw: &str) -> Option<(AgeBucket, bool)> {
    let t = raw.trim();
    if let Ok(years) = t.parse::<u32>() {
        return Some(ppd_core::record::clamp_age(years));
    }
    t.parse().ok().map(|b| (b, false))
}

/// Parses a header-first table. Rows come back in file order; the first
/// failing row aborts the parse.
pub fn parse_dataset<R: Read>(source: R, mapping: &SchemaMapping) -> Result<ParsedDataset, DatasetError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| DatasetError::Csv { row: 0, message: e.to_string() })?
        .clone();
    let mut roles: Vec<Option<ColumnRole>> = Vec::with_capacity(headers.len());
    for h in headers.iter() {
        if let Some(&role) = mapping.columns.get(h) {
            roles.push(Some(role));
        } else if mapping.ignore.iter().any(|i| i == h) {
            roles.push(None);
        } else {
            return Err(DatasetError::UnknownColumn(h.into()));
        }
    }
    for column in mapping.columns.keys() {
        if !headers.iter().any(|h| h == column) {
            return Err(DatasetError::MissingColumn(column.clone()));
        }
    }

    let mut out = ParsedDataset::default();
    for (i, row) in reader.records().enumerate() {
        let row_no = i + 1;
        let row = row.map_err(|e| DatasetError::Csv { row: row_no, message: e.to_string() })?;
        let mut responses = [ResponseOption::Na; 8];
        let mut age = None;
        let mut label = None;
        for (cell, (role, header)) in row.iter().zip(roles.iter().zip(headers.iter())) {
            match role {
                None => {}
                Some(ColumnRole::Age) => {
                    let (bucket, clamped) = parse_age(cell).ok_or_else(|| DatasetError::BadAge {
                        row: row_no,
                        value: cell.into(),
                    })?;
                    if clamped {
                        out.clamped_rows.push(row_no);
                    }
                    age = Some(bucket);
                }
                Some(ColumnRole::Label) => {
                    label = mapping.label(cell).ok_or_else(|| DatasetError::UnmappedValue {
                        row: row_no,
                        column: header.into(),
                        value: cell.into(),
                    })?;
                }
                Some(ColumnRole::Topic(t)) => {
                    responses[t.index()] = mapping.option(cell).ok_or_else(|| DatasetError::UnmappedValue {
                        row: row_no,
                        column: header.into(),
                        value: cell.into(),
                    })?;
                }
            }
        }
        if label.is_none() && mapping.require_label {
            return Err(DatasetError::MissingLabel { row: row_no });
        }
        let record = ScreeningRecord::new(age.expect("age column present"), responses, label);
        if mapping.exclude_na && record.has_na() {
            out.skipped_na += 1;
            continue;
        }
        out.records.push(record);
    }
    Ok(out)
}

pub fn load_dataset(path: &Path, mapping: &SchemaMapping) -> Result<ParsedDataset, DatasetError> {
    parse_dataset(std::fs::File::open(path)?, mapping)
}

/// Writes `records` so that [`parse_dataset`] with the same mapping reads
/// them back unchanged. Options are written as their canonical slugs, the
/// age as its bucket label and the label as the first configured value.
pub fn write_dataset<W: Write>(sink: W, records: &[ScreeningRecord], mapping: &SchemaMapping) -> Result<(), DatasetError> {
    let mut writer = csv::WriterBuilder::new().delimiter(mapping.delimiter).from_writer(sink);
    let mut header: Vec<&str> = vec![mapping.column_for(ColumnRole::Age)];
    header.extend(Topic::ALL.iter().map(|&t| mapping.column_for(ColumnRole::Topic(t))));
    header.push(mapping.column_for(ColumnRole::Label));
    let csv_err = |row: usize| move |e: csv::Error| DatasetError::Csv { row, message: e.to_string() };
    writer.write_record(&header).map_err(csv_err(0))?;
    for (i, r) in records.iter().enumerate() {
        let mut cells: Vec<String> = vec![r.age_bucket.label().into()];
        cells.extend(r.responses().map(|(_, o)| o.slug().to_string()));
        cells.push(match r.label {
            Some(true) => mapping.present[0].clone(),
            Some(false) => mapping.absent[0].clone(),
            None => String::new(),
        });
        writer.write_record(&cells).map_err(csv_err(i + 1))?;
    }
    writer.flush()?;
    Ok(())
}
