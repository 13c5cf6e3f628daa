//! Clustering (`.factors`) file parsing.
//!
//! Format:
//!
//! ```text
//! [clustering clinical]
//! SMOKER: SMOKER, FORMER_SMOKER, CURRENT_SMOKER
//! RT_TECHNIQUE: IMRT_CHM, IMRT_TOMOTHERAPY, IMRT_X3D, IMRT_VMAT
//! ```
//!
//! One file may carry several named clusterings, each under its own
//! `[clustering <name>]` header. A headerless file defines a single
//! clustering named `default`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{is_valid_attribute, is_valid_identifier, Clustering};

/// Parses every clustering declared in the document, in declaration order.
pub fn parse_clusterings(text: &str) -> Result<Vec<Clustering>> {
    let mut sections: Vec<(String, BTreeMap<String, String>, usize)> = Vec::new();
    let mut current: Option<(String, BTreeMap<String, String>, usize)> = None;

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
        if let Some(rest) = line.strip_prefix('[') {
            let rest = rest
                .strip_suffix(']')
                .ok_or_else(|| Error::parse(line_no, line.len(), "expected ']'"))?;
            let name = rest
                .strip_prefix("clustering")
                .ok_or_else(|| Error::parse(line_no, 2, "expected 'clustering <name>'"))?
                .trim();
            if !is_valid_identifier(name) {
                return Err(Error::parse(line_no, 1, format!("invalid clustering name '{name}'")));
            }
            if let Some(done) = current.take() {
                sections.push(done);
            }
            current = Some((name.to_string(), BTreeMap::new(), line_no));
            continue;
        }

        let (factor, attrs) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(line_no, 1, "expected '<FACTOR>: <attr>, <attr>, ...'"))?;
        let factor = factor.trim();
        if !is_valid_attribute(factor) {
            return Err(Error::parse(
                line_no,
                1,
                format!("invalid factor name '{factor}' (expected [A-Z][A-Z0-9_]*)"),
            ));
        }
        let section = current.get_or_insert_with(|| ("default".to_string(), BTreeMap::new(), line_no));
        let mut any = false;
        for attr in attrs.split(',') {
            let attr = attr.trim();
            if attr.is_empty() {
                continue;
            }
            if !is_valid_attribute(attr) {
                return Err(Error::parse(line_no, 1, format!("invalid attribute name '{attr}'")));
            }
            if let Some(prev) = section.1.insert(attr.to_string(), factor.to_string()) {
                return Err(Error::parse(
                    line_no,
                    1,
                    format!("attribute '{attr}' assigned to both '{prev}' and '{factor}'"),
                ));
            }
            any = true;
        }
        if !any {
            return Err(Error::parse(line_no, 1, format!("factor '{factor}' has no attributes")));
        }
    }
    if let Some(done) = current.take() {
        sections.push(done);
    }
    if sections.is_empty() {
        return Err(Error::parse(1, 1, "document declares no clustering"));
    }

    let mut out = Vec::new();
    let mut names = std::collections::BTreeSet::new();
    for (name, mapping, line_no) in sections {
        if !names.insert(name.clone()) {
            return Err(Error::parse(line_no, 1, format!("duplicate clustering name '{name}'")));
        }
        out.push(
            Clustering::new(&name, mapping)
                .map_err(|e| Error::parse(line_no, 1, e.to_string()))?,
        );
    }
    Ok(out)
}

/// Parses a document expected to hold exactly one clustering.
pub fn parse_clustering(text: &str) -> Result<Clustering> {
    let mut all = parse_clusterings(text)?;
    if all.len() != 1 {
        return Err(Error::Validation(format!(
            "expected exactly one clustering, found {}",
            all.len()
        )));
    }
    Ok(all.remove(0))
}

/// Serializes clusterings back to the `.factors` format.
pub fn serialize_clusterings(clusterings: &[Clustering]) -> String {
    let mut out = String::new();
    for c in clusterings {
        out.push_str(&format!("[clustering {}]\n", c.name()));
        for factor in c.factors() {
            let attrs = c.attributes_of(factor).join(", ");
            out.push_str(&format!("{factor}: {attrs}\n"));
        }
        out.push('\n');
    }
    out
}
