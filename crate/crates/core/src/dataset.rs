//! CSV ingestion, min-max normalization and dimensionality padding.
//!
//! A [`Dataset`] is immutable once built. Normalization returns a new
//! dataset whose attributes live in `[0, 1]` and which remembers the
//! original per-attribute ranges so values can be mapped back.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};

/// One labeled n-D point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub id: usize,
    /// Attribute values, followed by `padding` trailing copies when padded.
    pub values: Vec<f64>,
    pub class_label: String,
    /// Number of trailing values appended by [`pad_to_multiple`].
    #[serde(default)]
    pub padding: usize,
    /// Numeric regression target in original units, if the dataset has one.
    #[serde(default)]
    pub target: Option<f64>,
}

impl CaseRecord {
    pub fn new(id: usize, values: Vec<f64>, class_label: impl Into<String>) -> Self {
        Self {
            id,
            values,
            class_label: class_label.into(),
            padding: 0,
            target: None,
        }
    }

    #[must_use]
    pub fn with_target(mut self, target: f64) -> Self {
        self.target = Some(target);
        self
    }

    /// The original attribute values with any padding dropped.
    pub fn attributes(&self) -> &[f64] {
        &self.values[..self.values.len() - self.padding]
    }

    /// Dimensionality before padding.
    pub fn dimensionality(&self) -> usize {
        self.values.len() - self.padding
    }

    /// Copy of this case with padding removed.
    pub fn unpadded(&self) -> CaseRecord {
        CaseRecord {
            values: self.attributes().to_vec(),
            padding: 0,
            ..self.clone()
        }
    }
}

/// Pads a case so its length is a multiple of `k`.
///
/// The trailing `k - n mod k` attribute values are copied, in order, onto the
/// end and flagged as padding. A case whose length is already a multiple of
/// `k` comes back unchanged. Existing padding is discarded before re-padding.
///
/// # Panics
///
/// Panics if `k == 0`.
pub fn pad_to_multiple(case: &CaseRecord, k: usize) -> CaseRecord {
    assert!(k > 0, "padding multiple must be positive");
    let base = case.attributes();
    let n = base.len();
    let missing = (k - n % k) % k;
    if missing == 0 || n == 0 {
        return case.unpadded();
    }
    let mut values = base.to_vec();
    // copy the last `missing` values; if n < missing, cycle through the tail
    let start = n.saturating_sub(missing);
    values.extend((0..missing).map(|i| base[start + i % (n - start)]));
    CaseRecord {
        values,
        padding: missing,
        ..case.clone()
    }
}

/// Original-unit range of one attribute, recorded by [`Dataset::normalize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeRange {
    pub min: f64,
    pub max: f64,
}

impl AttributeRange {
    /// Maps a normalized value back to original units.
    pub fn denormalize(&self, v: f64) -> f64 {
        self.min + v * (self.max - self.min)
    }
}

/// How to read a CSV file.
#[derive(Debug, Clone)]
pub struct LoadConfig {
    pub class_column: String,
    pub delimiter: u8,
    /// Optional numeric regression target column, kept out of the attributes.
    pub target_column: Option<String>,
}

impl Default for LoadConfig {
    fn default() -> Self {
        Self {
            class_column: "class".to_string(),
            delimiter: b',',
            target_column: None,
        }
    }
}

/// Labeled n-D data plus normalization metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    attribute_names: Vec<String>,
    cases: Vec<CaseRecord>,
    class_labels: Vec<String>,
    normalization: Option<Vec<AttributeRange>>,
    target_name: Option<String>,
}

impl Dataset {
    /// Builds a dataset from in-memory cases in original units.
    ///
    /// Class labels are collected in order of first appearance.
    pub fn new(attribute_names: Vec<String>, cases: Vec<CaseRecord>) -> Result<Self> {
        if cases.is_empty() {
            return Err(Error::validation("dataset has no cases"));
        }
        let n = attribute_names.len();
        let mut class_labels: Vec<String> = Vec::new();
        for case in &cases {
            if case.values.len() != n || case.padding != 0 {
                return Err(Error::validation(format!(
                    "case {} has {} values, expected {}",
                    case.id,
                    case.values.len(),
                    n
                )));
            }
            if let Some(v) = case.values.iter().find(|v| !v.is_finite()) {
                return Err(Error::validation(format!(
                    "case {} has non-finite value {v}",
                    case.id
                )));
            }
            if !class_labels.contains(&case.class_label) {
                class_labels.push(case.class_label.clone());
            }
        }
        Ok(Self {
            attribute_names,
            cases,
            class_labels,
            normalization: None,
            target_name: None,
        })
    }

    /// Names the numeric target carried by the cases.
    #[must_use]
    pub fn with_target_name(mut self, name: impl Into<String>) -> Self {
        self.target_name = Some(name.into());
        self
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn cases(&self) -> &[CaseRecord] {
        &self.cases
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn normalization(&self) -> Option<&[AttributeRange]> {
        self.normalization.as_deref()
    }

    pub fn target_name(&self) -> Option<&str> {
        self.target_name.as_deref()
    }

    pub fn has_target(&self) -> bool {
        self.target_name.is_some() && self.cases.iter().all(|c| c.target.is_some())
    }

    pub fn dimensionality(&self) -> usize {
        self.attribute_names.len()
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalization.is_some()
    }

    pub fn count_class(&self, label: &str) -> usize {
        self.cases.iter().filter(|c| c.class_label == label).count()
    }

    /// Reads a dataset from CSV. Values stay in original units.
    pub fn load_csv<R: Read>(source: R, config: &LoadConfig) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(config.delimiter)
            .has_headers(true)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(source);

        let header: Vec<String> = reader
            .headers()
            .map_err(|e| csv_error(&e, "cannot read header row"))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.iter().all(String::is_empty) {
            return Err(Error::Parse {
                location: Location { line: 1, column: None },
                message: "missing header row".into(),
            });
        }

        let class_idx = header
            .iter()
            .position(|h| *h == config.class_column)
            .ok_or_else(|| {
                Error::config(format!(
                    "class column '{}' not found in header [{}]",
                    config.class_column,
                    header.join(", ")
                ))
            })?;
        let target_idx = match &config.target_column {
            Some(name) => Some(header.iter().position(|h| h == name).ok_or_else(|| {
                Error::config(format!("target column '{name}' not found in header"))
            })?),
            None => None,
        };
        let attr_idx: Vec<usize> = (0..header.len())
            .filter(|&i| i != class_idx && Some(i) != target_idx)
            .collect();

        let mut cases = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(&e, "malformed record"))?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != header.len() {
                let column = header.get(record.len()).cloned();
                return Err(Error::Parse {
                    location: Location { line, column },
                    message: format!(
                        "expected {} fields, found {}",
                        header.len(),
                        record.len()
                    ),
                });
            }
            let parse = |i: usize| -> Result<f64> {
                let cell = &record[i];
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::Parse {
                        location: Location {
                            line,
                            column: Some(header[i].clone()),
                        },
                        message: format!("'{cell}' is not a finite number"),
                    }),
                }
            };
            let values = attr_idx.iter().map(|&i| parse(i)).collect::<Result<Vec<_>>>()?;
            let label = record[class_idx].to_string();
            if label.is_empty() {
                return Err(Error::Parse {
                    location: Location {
                        line,
                        column: Some(header[class_idx].clone()),
                    },
                    message: "empty class label".into(),
                });
            }
            let mut case = CaseRecord::new(cases.len(), values, label);
            if let Some(t) = target_idx {
                case.target = Some(parse(t)?);
            }
            cases.push(case);
        }

        let names = attr_idx.iter().map(|&i| header[i].clone()).collect();
        let mut dataset = Dataset::new(names, cases)?;
        if let Some(t) = target_idx {
            dataset.target_name = Some(header[t].clone());
        }
        Ok(dataset)
    }

    /// Min-max normalizes every attribute to `[0, 1]`.
    ///
    /// Constant attributes map to 0.5. Normalizing an already-normalized
    /// dataset composes the ranges, so the recorded metadata always refers
    /// to the original units.
    pub fn normalize(&self) -> Dataset {
        let n = self.dimensionality();
        let mut ranges = Vec::with_capacity(n);
        let mut cases = self.cases.clone();
        for j in 0..n {
            let (lo, hi) = self
                .cases
                .iter()
                .map(|c| c.values[j])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                });
            for case in &mut cases {
                let v = case.values[j];
                case.values[j] = if hi > lo { (v - lo) / (hi - lo) } else { 0.5 };
            }
            let range = match &self.normalization {
                // already in normalized units: express against the original range
                Some(prev) => {
                    let p = prev[j];
                    if hi > lo {
                        AttributeRange {
                            min: p.denormalize(lo),
                            max: p.denormalize(hi),
                        }
                    } else {
                        let c = p.denormalize(lo);
                        AttributeRange { min: c, max: c }
                    }
                }
                None => AttributeRange { min: lo, max: hi },
            };
            ranges.push(range);
        }
        Dataset {
            attribute_names: self.attribute_names.clone(),
            cases,
            class_labels: self.class_labels.clone(),
            normalization: Some(ranges),
            target_name: self.target_name.clone(),
        }
    }

    /// Maps normalized values back to original units. A no-op on raw data.
    pub fn denormalize(&self) -> Dataset {
        let Some(ranges) = &self.normalization else {
            return self.clone();
        };
        let cases = self
            .cases
            .iter()
            .map(|c| CaseRecord {
                values: c
                    .values
                    .iter()
                    .zip(ranges)
                    .map(|(&v, r)| r.denormalize(v))
                    .collect(),
                ..c.clone()
            })
            .collect();
        Dataset {
            attribute_names: self.attribute_names.clone(),
            cases,
            class_labels: self.class_labels.clone(),
            normalization: None,
            target_name: self.target_name.clone(),
        }
    }

    /// Writes the dataset as CSV in original units, class column last.
    pub fn write_csv<W: Write>(&self, sink: W) -> Result<()> {
        let raw = self.denormalize();
        let mut writer = csv::Writer::from_writer(sink);
        let mut header: Vec<&str> = raw.attribute_names.iter().map(String::as_str).collect();
        if let Some(t) = &raw.target_name {
            header.push(t);
        }
        header.push("class");
        writer.write_record(&header).map_err(csv_write_error)?;
        for case in &raw.cases {
            let mut row: Vec<String> = case.values.iter().map(|v| format!("{v:?}")).collect();
            if raw.target_name.is_some() {
                row.push(case.target.map_or_else(String::new, |t| format!("{t:?}")));
            }
            row.push(case.class_label.clone());
            writer.write_record(&row).map_err(csv_write_error)?;
        }
        writer.flush()?;
        Ok(())
    }

    /// Wraps cases that are already in unit-interval coordinates.
    ///
    /// The recorded ranges are the identity `(0, 1)` for every attribute.
    pub fn from_unit_cases(attribute_names: Vec<String>, cases: Vec<CaseRecord>) -> Result<Self> {
        if let Some(c) = cases
            .iter()
            .find(|c| c.values.iter().any(|v| !(0.0..=1.0).contains(v)))
        {
            return Err(Error::validation(format!(
                "case {} has values outside [0, 1]",
                c.id
            )));
        }
        let mut d = Dataset::new(attribute_names, cases)?;
        d.normalization = Some(vec![AttributeRange { min: 0.0, max: 1.0 }; d.dimensionality()]);
        Ok(d)
    }

    /// The cases satisfying `keep`, with ids, units and normalization
    /// metadata unchanged.
    pub fn select(&self, keep: impl Fn(&CaseRecord) -> bool) -> Result<Dataset> {
        let cases: Vec<CaseRecord> = self.cases.iter().filter(|c| keep(c)).cloned().collect();
        let mut d = Dataset::new(self.attribute_names.clone(), cases)?;
        d.normalization = self.normalization.clone();
        d.target_name = self.target_name.clone();
        Ok(d)
    }
}

fn csv_error(e: &csv::Error, what: &str) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    Error::Parse {
        location: Location { line, column: None },
        message: format!("{what}: {e}"),
    }
}

fn csv_write_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::validation(format!("csv write failed: {other:?}")),
    }
}
