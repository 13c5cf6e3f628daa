//! Patient record and labeled-sample ingestion.
//!
//! Records are accepted either as a JSON object — flat `{"BMI": 30.0, ...}`
//! or wrapped `{"id": "p7", "values": {...}}` — or as `ATTR=value` lines.
//! Labeled samples for fidelity checks come as a CSV with one column per
//! attribute plus a `MODEL_LABEL` column.

use std::collections::BTreeMap;

use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::PatientRecord;

/// Column name reserved for the model's classification in sample files.
pub const MODEL_LABEL_COLUMN: &str = "MODEL_LABEL";

fn number_of(v: &Value, attr: &str) -> Result<f64> {
    let n = v
        .as_f64()
        .ok_or_else(|| Error::Validation(format!("value of '{attr}' is not a number")))?;
    if !n.is_finite() {
        return Err(Error::Validation(format!("value of '{attr}' is not finite")));
    }
    Ok(n)
}

/// Parses a patient record from JSON. `default_id` is used when the flat
/// form carries no id (typically the file stem).
pub fn parse_record_json(text: &str, default_id: &str) -> Result<PatientRecord> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::parse(e.line(), e.column(), e.to_string()))?;
    record_from_value(&value, default_id)
}

/// Builds a patient record from an already-parsed JSON value.
pub fn record_from_value(value: &Value, default_id: &str) -> Result<PatientRecord> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Validation("patient record must be a JSON object".into()))?;
    if obj.is_empty() {
        return Err(Error::Validation("patient record is empty".into()));
    }
    // wrapped form: {"id": ..., "values": {...}}
    if let Some(values) = obj.get("values") {
        let id = obj
            .get("id")
            .and_then(|v| v.as_str())
            .unwrap_or(default_id)
            .to_string();
        let inner = values
            .as_object()
            .ok_or_else(|| Error::Validation("'values' must be a JSON object".into()))?;
        let mut map = BTreeMap::new();
        for (attr, v) in inner {
            map.insert(attr.clone(), number_of(v, attr)?);
        }
        return PatientRecord::new(id, map);
    }
    // flat form
    let mut map = BTreeMap::new();
    for (attr, v) in obj {
        map.insert(attr.clone(), number_of(v, attr)?);
    }
    PatientRecord::new(default_id, map)
}

/// Parses `ATTR=value` lines into a patient record.
pub fn parse_record_kv(text: &str, id: &str) -> Result<PatientRecord> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (attr, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(line_no, 1, "expected 'ATTR=value'"))?;
        let attr = attr.trim();
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, 1, format!("invalid number for '{attr}'")))?;
        if map.insert(attr.to_string(), value).is_some() {
            return Err(Error::parse(line_no, 1, format!("duplicate attribute '{attr}'")));
        }
    }
    PatientRecord::new(id, map)
}

/// Parses a labeled-sample CSV: attribute columns plus `MODEL_LABEL`.
/// Empty cells mean "attribute missing from this sample".
pub fn parse_labeled_samples(text: &str) -> Result<Vec<(PatientRecord, String)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Validation(format!("bad CSV header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    let label_idx = headers
        .iter()
        .position(|h| h == MODEL_LABEL_COLUMN)
        .ok_or_else(|| Error::Validation(format!("missing '{MODEL_LABEL_COLUMN}' column")))?;

    let mut out = Vec::new();
    for (row_idx, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Validation(format!("bad CSV row: {e}")))?;
        let mut values = BTreeMap::new();
        let mut label = String::new();
        for (col, cell) in row.iter().enumerate() {
            if col == label_idx {
                label = cell.to_string();
                continue;
            }
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| {
                Error::Validation(format!(
                    "row {}: invalid number '{}' in column '{}'",
                    row_idx + 1,
                    cell,
                    headers[col]
                ))
            })?;
            values.insert(headers[col].clone(), v);
        }
        if label.is_empty() {
            return Err(Error::Validation(format!("row {}: empty model label", row_idx + 1)));
        }
        let record = PatientRecord::new(format!("s{}", row_idx + 1), values)?;
        out.push((record, label));
    }
    Ok(out)
}
