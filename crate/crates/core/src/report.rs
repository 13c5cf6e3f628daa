//! Ranked tables and deterministic SVG renderings of explanation reports.
//!
//! Renderers are pure: the same spec always yields byte-identical SVG.
//! Floats are formatted with 6 decimal places and no timestamps or
//! random ids appear in the output.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{Clustering, PatientRecord, RuleSet};
use crate::relevance::{explain_local, ExplanationReport, Normalize};

/// One row of a ranked factor table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub factor: String,
    pub score: f64,
    pub active: bool,
    /// Whether the score exceeds the mean of active-factor scores.
    pub above_mean: bool,
}

/// Ranked rows in report order; `top_k` truncates.
pub fn rank_table(report: &ExplanationReport, top_k: Option<usize>) -> Vec<RankRow> {
    let mean = report.mean_score;
    let rows = report.factor_scores.iter().map(|f| RankRow {
        factor: f.factor.clone(),
        score: f.score,
        active: f.active,
        above_mean: f.active && f.score > mean,
    });
    match top_k {
        Some(k) => rows.take(k).collect(),
        None => rows.collect(),
    }
}

/// Plain-text rendering of the ranked table.
pub fn format_rank_table(report: &ExplanationReport, top_k: Option<usize>) -> String {
    let rows = rank_table(report, top_k);
    let mut out = String::new();
    out.push_str(&format!(
        "clustering: {}  normalize: {}  rules in scope: {}\n",
        report.clustering,
        report.normalize.as_str(),
        report.rules_in_scope.len()
    ));
    out.push_str(&format!("mean active score: {:.6}\n", report.mean_score));
    out.push_str("factor                          score     status\n");
    for row in rows {
        let status = if !row.active {
            "inactive"
        } else if row.above_mean {
            "above mean"
        } else {
            "below mean"
        };
        out.push_str(&format!("{:<30} {:.6}  {}\n", row.factor, row.score, status));
    }
    out
}

/// Input for a radar chart: one spoke per factor.
#[derive(Debug, Clone, PartialEq)]
pub struct RadarSpec {
    pub axes: Vec<String>,
    pub values: Vec<f64>,
    pub title: String,
    pub axis_max: f64,
}

impl RadarSpec {
    /// Radar over the report's active-range scores (inactive factors
    /// render as zero-length spokes).
    pub fn from_report(report: &ExplanationReport, title: impl Into<String>) -> RadarSpec {
        RadarSpec {
            axes: report.factor_scores.iter().map(|f| f.factor.clone()).collect(),
            values: report.factor_scores.iter().map(|f| f.score).collect(),
            title: title.into(),
            axis_max: report.normalize.axis_max(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.axes.len() != self.values.len() {
            return Err(Error::Render("axes/values length mismatch".into()));
        }
        if self.axes.len() < 3 {
            return Err(Error::Render(format!(
                "radar chart needs at least 3 axes, got {}",
                self.axes.len()
            )));
        }
        if self.axis_max <= 0.0 || self.axis_max.is_nan() {
            return Err(Error::Render("axis_max must be positive".into()));
        }
        for v in &self.values {
            if !v.is_finite() || *v < 0.0 || *v > self.axis_max + 1e-12 {
                return Err(Error::Render(format!("value {v} outside [0, {}]", self.axis_max)));
            }
        }
        Ok(())
    }
}

/// Input for a profiles-by-factors heatmap.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapSpec {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    /// Row-major score matrix, `rows.len() x cols.len()`.
    pub cells: Vec<Vec<f64>>,
    pub scale_min: f64,
    pub scale_max: f64,
    pub title: String,
}

impl HeatmapSpec {
    fn validate(&self) -> Result<()> {
        if self.rows.is_empty() || self.cols.is_empty() {
            return Err(Error::Render("heatmap matrix is empty".into()));
        }
        if self.cells.len() != self.rows.len() {
            return Err(Error::Render("heatmap row count mismatch".into()));
        }
        for row in &self.cells {
            if row.len() != self.cols.len() {
                return Err(Error::Render("heatmap column count mismatch".into()));
            }
            for v in row {
                if !v.is_finite() || *v < self.scale_min - 1e-12 || *v > self.scale_max + 1e-12 {
                    return Err(Error::Render(format!(
                        "cell {v} outside scale [{}, {}]",
                        self.scale_min, self.scale_max
                    )));
                }
            }
        }
        Ok(())
    }
}

fn fmt(v: f64) -> String {
    format!("{:.6}", v)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders a radar (spider) chart as a standalone SVG document.
pub fn render_radar(spec: &RadarSpec) -> Result<String> {
    spec.validate()?;
    let size = 600.0;
    let cx = size / 2.0;
    let cy = size / 2.0 + 10.0;
    let radius = 220.0;
    let n = spec.axes.len();

    let angle_of = |i: usize| -> f64 {
        // start at 12 o'clock, clockwise
        std::f64::consts::PI * (2.0 * i as f64 / n as f64 - 0.5)
    };
    let point = |i: usize, r: f64| -> (f64, f64) {
        let a = angle_of(i);
        (cx + r * a.cos(), cy + r * a.sin())
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" width=\"{w}\" height=\"{h}\">\n",
        w = fmt(size),
        h = fmt(size + 20.0)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        fmt(cx),
        xml_escape(&spec.title)
    ));

    // grid rings at 25% steps
    for step in 1..=4 {
        let r = radius * step as f64 / 4.0;
        let ring: Vec<String> = (0..n)
            .map(|i| {
                let (x, y) = point(i, r);
                format!("{},{}", fmt(x), fmt(y))
            })
            .collect();
        svg.push_str(&format!(
            "<polygon points=\"{}\" fill=\"none\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n",
            ring.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"9\" fill=\"#888888\">{}</text>\n",
            fmt(cx + 4.0),
            fmt(cy - r - 2.0),
            fmt(spec.axis_max * step as f64 / 4.0)
        ));
    }

    // spokes and labels
    for (i, axis) in spec.axes.iter().enumerate() {
        let (x, y) = point(i, radius);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#999999\" stroke-width=\"1\"/>\n",
            fmt(cx),
            fmt(cy),
            fmt(x),
            fmt(y)
        ));
        let (lx, ly) = point(i, radius + 18.0);
        let anchor = if (lx - cx).abs() < 1.0 {
            "middle"
        } else if lx > cx {
            "start"
        } else {
            "end"
        };
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            fmt(lx),
            fmt(ly),
            anchor,
            xml_escape(axis)
        ));
    }

    // value polygon
    let poly: Vec<String> = spec
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let (x, y) = point(i, radius * v / spec.axis_max);
            format!("{},{}", fmt(x), fmt(y))
        })
        .collect();
    svg.push_str(&format!(
        "<polygon points=\"{}\" fill=\"#4477aa\" fill-opacity=\"0.35\" stroke=\"#225588\" stroke-width=\"2\"/>\n",
        poly.join(" ")
    ));
    for (i, v) in spec.values.iter().enumerate() {
        let (x, y) = point(i, radius * v / spec.axis_max);
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"#225588\"/>\n",
            fmt(x),
            fmt(y)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Linear two-color interpolation from near-white to deep blue.
fn heat_color(v: f64, lo: f64, hi: f64) -> String {
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.0 };
    let lerp = |a: f64, b: f64| -> u8 { (a + (b - a) * t).round() as u8 };
    format!("#{:02x}{:02x}{:02x}", lerp(247.0, 8.0), lerp(251.0, 48.0), lerp(255.0, 107.0))
}

/// Renders a profiles-by-factors heatmap as a standalone SVG document.
pub fn render_heatmap(spec: &HeatmapSpec) -> Result<String> {
    spec.validate()?;
    let cell = 36.0;
    let left = 120.0;
    let top = 80.0;
    let legend_h = 50.0;
    let width = left + spec.cols.len() as f64 * cell + 40.0;
    let height = top + spec.rows.len() as f64 * cell + legend_h + 20.0;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w} {h}\" width=\"{w}\" height=\"{h}\">\n",
        w = fmt(width),
        h = fmt(height)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{}</text>\n",
        fmt(width / 2.0),
        xml_escape(&spec.title)
    ));

    // column labels, rotated
    for (j, col) in spec.cols.iter().enumerate() {
        let x = left + (j as f64 + 0.5) * cell;
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{y}\" text-anchor=\"start\" font-family=\"sans-serif\" font-size=\"10\" transform=\"rotate(-45 {x} {y})\">{}</text>\n",
            xml_escape(col),
            x = fmt(x),
            y = fmt(top - 8.0)
        ));
    }

    for (i, row) in spec.rows.iter().enumerate() {
        let y = top + i as f64 * cell;
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
            fmt(left - 6.0),
            fmt(y + cell / 2.0 + 3.0),
            xml_escape(row)
        ));
        for (j, &v) in spec.cells[i].iter().enumerate() {
            let x = left + j as f64 * cell;
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"#ffffff\" stroke-width=\"1\"><title>{}</title></rect>\n",
                fmt(x),
                fmt(y),
                fmt(cell),
                fmt(cell),
                heat_color(v, spec.scale_min, spec.scale_max),
                fmt(v)
            ));
        }
    }

    // legend: gradient bar with min/max labels
    let ly = top + spec.rows.len() as f64 * cell + 20.0;
    let lw = 180.0;
    for k in 0..30 {
        let t = k as f64 / 29.0;
        let v = spec.scale_min + t * (spec.scale_max - spec.scale_min);
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"12\" fill=\"{}\"/>\n",
            fmt(left + t * lw),
            fmt(ly),
            fmt(lw / 30.0 + 1.0),
            heat_color(v, spec.scale_min, spec.scale_max)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
        fmt(left),
        fmt(ly + 26.0),
        fmt(spec.scale_min)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
        fmt(left + lw),
        fmt(ly + 26.0),
        fmt(spec.scale_max)
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Outcome for one profile within a batch run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOutcome {
    pub patient_id: String,
    /// `None` when no rule activated for the record.
    pub report: Option<ExplanationReport>,
}

impl ProfileOutcome {
    pub fn activated(&self) -> bool {
        self.report.is_some()
    }
}

/// Runs a local explanation per record and assembles the cross-profile
/// heatmap. Records activating no rule appear as all-zero rows.
pub fn batch_profiles(
    ruleset: &RuleSet,
    clustering: &Clustering,
    records: &[PatientRecord],
    normalize: Normalize,
) -> Result<(HeatmapSpec, Vec<ProfileOutcome>)> {
    if records.is_empty() {
        return Err(Error::Validation("batch requires at least one record".into()));
    }
    let cols: Vec<String> = clustering.factors().to_vec();
    let mut outcomes = Vec::with_capacity(records.len());
    let mut cells = Vec::with_capacity(records.len());
    for record in records {
        match explain_local(ruleset, clustering, record, normalize) {
            Ok(report) => {
                // cells follow the clustering's factor order, not the ranking
                let row: Vec<f64> = cols
                    .iter()
                    .map(|c| {
                        report
                            .factor_scores
                            .iter()
                            .find(|f| &f.factor == c)
                            .map(|f| f.score)
                            .unwrap_or(0.0)
                    })
                    .collect();
                cells.push(row);
                outcomes.push(ProfileOutcome { patient_id: record.id.clone(), report: Some(report) });
            }
            Err(Error::NoActivation { .. }) => {
                cells.push(vec![0.0; cols.len()]);
                outcomes.push(ProfileOutcome { patient_id: record.id.clone(), report: None });
            }
            Err(e) => return Err(e),
        }
    }
    let spec = HeatmapSpec {
        rows: records.iter().map(|r| r.id.clone()).collect(),
        cols,
        cells,
        scale_min: 0.0,
        scale_max: normalize.axis_max(),
        title: format!("factor relevance by profile ({})", clustering.name()),
    };
    Ok((spec, outcomes))
}

/// JSON form of a batch result: per-profile reports plus the matrix.
pub fn batch_to_json(spec: &HeatmapSpec, outcomes: &[ProfileOutcome], normalize: Normalize, clustering: &str) -> Value {
    json!({
        "clustering": clustering,
        "normalize": normalize.as_str(),
        "profiles": outcomes.iter().map(|o| match &o.report {
            Some(r) => json!({"id": o.patient_id, "activated": true, "report": r.to_json()}),
            None => json!({"id": o.patient_id, "activated": false}),
        }).collect::<Vec<_>>(),
        "matrix": {
            "rows": spec.rows,
            "cols": spec.cols,
            "cells": spec.cells.iter().map(|row| {
                row.iter().map(|v| crate::relevance::round_sig12(*v)).collect::<Vec<_>>()
            }).collect::<Vec<_>>(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{parse_clustering, parse_rules};
    use crate::relevance::explain_global;
    use std::collections::BTreeMap;

    fn oracle_report() -> ExplanationReport {
        let rs = parse_rules(
            "RULE r1 CLASS=high COVERAGE=3: A1 > 1 AND A2 > 1\n\
             RULE r2 CLASS=high COVERAGE=1: A1 > 2",
        )
        .unwrap();
        let clustering = parse_clustering("F1: A1\nF2: A2").unwrap();
        explain_global(&rs, &clustering, Normalize::Literal).unwrap()
    }

    #[test]
    fn rank_table_flags_above_mean() {
        let report = oracle_report();
        let rows = rank_table(&report, None);
        assert_eq!(rows[0].factor, "F1");
        assert!(rows[0].above_mean);
        assert_eq!(rows[1].factor, "F2");
        assert!(!rows[1].above_mean);
        // mean of actives = (0.5 + 0.467554...) / 2
        assert!((report.mean_score - 0.4837771913851973).abs() < 1e-12);
    }

    #[test]
    fn rank_table_top_k() {
        let report = oracle_report();
        let rows = rank_table(&report, Some(1));
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].factor, "F1");
    }

    fn radar3() -> RadarSpec {
        RadarSpec {
            axes: vec!["F1".into(), "F2".into(), "F3".into()],
            values: vec![0.5, 0.25, 0.1],
            title: "test".into(),
            axis_max: 0.5,
        }
    }

    #[test]
    fn radar_renders_and_is_deterministic() {
        let svg1 = render_radar(&radar3()).unwrap();
        let svg2 = render_radar(&radar3()).unwrap();
        assert_eq!(svg1, svg2);
        assert!(svg1.starts_with("<svg"));
        assert!(svg1.contains("viewBox"));
        assert_eq!(svg1.matches("<line").count(), 3);
    }

    #[test]
    fn radar_rejects_two_axes() {
        let mut spec = radar3();
        spec.axes.pop();
        spec.values.pop();
        assert!(render_radar(&spec).is_err());
    }

    #[test]
    fn heatmap_renders_grid() {
        let spec = HeatmapSpec {
            rows: vec!["p1".into(), "p2".into()],
            cols: vec!["F1".into(), "F2".into(), "F3".into()],
            cells: vec![vec![0.5, 0.2, 0.0], vec![0.1, 0.4, 0.3]],
            scale_min: 0.0,
            scale_max: 0.5,
            title: "hm".into(),
        };
        let svg = render_heatmap(&spec).unwrap();
        assert_eq!(svg, render_heatmap(&spec).unwrap());
        // 6 cells + 30 legend steps
        assert_eq!(svg.matches("<rect").count(), 36);
    }

    #[test]
    fn heatmap_single_cell() {
        let spec = HeatmapSpec {
            rows: vec!["p1".into()],
            cols: vec!["F1".into()],
            cells: vec![vec![0.5]],
            scale_min: 0.0,
            scale_max: 0.5,
            title: "hm".into(),
        };
        assert!(render_heatmap(&spec).is_ok());
    }

    #[test]
    fn heatmap_rejects_dimension_mismatch() {
        let spec = HeatmapSpec {
            rows: vec!["p1".into()],
            cols: vec!["F1".into(), "F2".into()],
            cells: vec![vec![0.5]],
            scale_min: 0.0,
            scale_max: 0.5,
            title: "hm".into(),
        };
        assert!(render_heatmap(&spec).is_err());
    }

    #[test]
    fn batch_marks_non_activating_profiles() {
        let rs = parse_rules("RULE r1 CLASS=high COVERAGE=3: A1 > 1 AND A2 > 1").unwrap();
        let clustering = parse_clustering("F1: A1\nF2: A2").unwrap();
        let hit = PatientRecord::new(
            "hit",
            BTreeMap::from([("A1".to_string(), 2.0), ("A2".to_string(), 2.0)]),
        )
        .unwrap();
        let miss = PatientRecord::new(
            "miss",
            BTreeMap::from([("A1".to_string(), 0.0), ("A2".to_string(), 0.0)]),
        )
        .unwrap();
        let (spec, outcomes) =
            batch_profiles(&rs, &clustering, &[hit, miss], Normalize::Literal).unwrap();
        assert_eq!(spec.rows, vec!["hit", "miss"]);
        assert!(outcomes[0].activated());
        assert!(!outcomes[1].activated());
        assert_eq!(spec.cells[1], vec![0.0, 0.0]);
        assert_eq!(spec.cells[0], vec![0.5, 0.5]);
    }

    #[test]
    fn batch_requires_records() {
        let rs = parse_rules("RULE r1 CLASS=high COVERAGE=3: A1 > 1").unwrap();
        let clustering = parse_clustering("F1: A1").unwrap();
        assert!(batch_profiles(&rs, &clustering, &[], Normalize::Literal).is_err());
    }
}
