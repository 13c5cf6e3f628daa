//! Factor relevance scoring over a collection of rules.
//!
//! Each rule is treated as a document and each factor as a token. A
//! factor's relevance combines its per-rule term frequency (weighted by
//! the rule's relative coverage) with its inverse document frequency
//! over the rules in scope, averaged and pushed through an inverted
//! logistic so that ubiquitous factors score highest.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::activation::{activate_rules, predict_class};
use crate::error::{Error, Result};
use crate::model::{Clustering, PatientRecord, RuleSet};

/// Tolerance used by numeric assertions throughout the test suites.
pub const SCORE_TOLERANCE: f64 = 1e-12;

/// How final scores are presented.
///
/// The literal inversion maps onto (0, 0.5]; `Minmax2x` doubles it onto
/// (0, 1] for presentation parity with full-range charts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalize {
    Literal,
    Minmax2x,
}

impl Normalize {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalize::Literal => "literal",
            Normalize::Minmax2x => "minmax2x",
        }
    }

    pub fn parse(s: &str) -> Option<Normalize> {
        match s {
            "literal" => Some(Normalize::Literal),
            "minmax2x" => Some(Normalize::Minmax2x),
            _ => None,
        }
    }

    /// Upper bound of the score range under this mode.
    pub fn axis_max(&self) -> f64 {
        match self {
            Normalize::Literal => 0.5,
            Normalize::Minmax2x => 1.0,
        }
    }
}

/// Term frequency of factor occurrences within one rule: n_ij / d_j.
pub fn term_frequency(n_ij: usize, d_j: usize) -> f64 {
    debug_assert!(d_j >= 1);
    n_ij as f64 / d_j as f64
}

/// Relative-coverage weight of a rule. Falls back to uniform weights
/// when every rule in scope has zero coverage.
pub fn rule_weight(c_j: u64, c_all: u64, rules_in_scope: usize) -> f64 {
    if c_all > 0 {
        c_j as f64 / c_all as f64
    } else {
        1.0 / rules_in_scope as f64
    }
}

/// Coverage-weighted term frequency: w_j * n_ij / d_j.
pub fn weighted_tf(w_j: f64, n_ij: usize, d_j: usize) -> f64 {
    w_j * term_frequency(n_ij, d_j)
}

/// Inverse document frequency ln(s_all / s_i); `None` marks a factor
/// absent from every rule in scope (inactive).
pub fn inverse_doc_freq(s_i: usize, s_all: usize) -> Option<f64> {
    debug_assert!(s_all >= 1 && s_i <= s_all);
    if s_i == 0 {
        None
    } else {
        Some((s_all as f64 / s_i as f64).ln())
    }
}

/// Per-rule tf-idf score: tf_ij * idf_i.
pub fn tfidf_rule(tf_ij: f64, idf_i: f64) -> f64 {
    tf_ij * idf_i
}

/// Mean tf-idf over every rule in scope (zero terms included).
pub fn factor_relevance(per_rule_scores: &[f64]) -> Result<f64> {
    if per_rule_scores.is_empty() {
        return Err(Error::EmptyScope);
    }
    Ok(per_rule_scores.iter().sum::<f64>() / per_rule_scores.len() as f64)
}

/// Inverted logistic: 1 - 1/(1 + e^(-x)). Strictly decreasing, 0.5 at 0.
pub fn invert_score(tfidf_i: f64) -> f64 {
    1.0 - 1.0 / (1.0 + (-tfidf_i).exp())
}

/// Per-factor relevance computation detail.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorScore {
    pub factor: String,
    /// Final relevance in the active range, or exactly 0 when inactive.
    pub score: f64,
    /// False when the factor occurs in no rule in scope.
    pub active: bool,
    /// Number of in-scope rules containing the factor (s_i).
    pub rules_with_factor: usize,
    /// Mean tf-idf before inversion; 0 for inactive factors.
    pub tfidf: f64,
}

/// A rule's weight within the scope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RuleWeight {
    pub id: String,
    pub weight: f64,
}

/// Scope of an explanation: the whole rule set or one record's activation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Scope {
    Global,
    Local { patient_id: String },
}

/// Surrogate class vote attached to local explanations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub label: String,
    pub support: f64,
}

/// Factor relevance scores over a scope of rules, ranked.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplanationReport {
    pub scope: Scope,
    pub clustering: String,
    pub normalize: Normalize,
    /// Rules in scope with their weights w_j.
    pub rules_in_scope: Vec<RuleWeight>,
    /// Sorted by score descending, ties by factor name ascending.
    pub factor_scores: Vec<FactorScore>,
    /// Arithmetic mean of active-factor scores.
    pub mean_score: f64,
    /// Coverage-weighted class vote; present for local scopes only.
    /// This is a rule-level surrogate, not the upstream model's estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prediction: Option<Prediction>,
}

/// Computes factor relevance over an explicit scope of rule ids.
///
/// The clustering must be total over every attribute referenced by the
/// scoped rules (run lenient validation first if it may not be).
pub fn explain(
    ruleset: &RuleSet,
    clustering: &Clustering,
    scope_ids: &[String],
    normalize: Normalize,
) -> Result<ExplanationReport> {
    explain_scoped(ruleset, clustering, scope_ids, normalize, Scope::Global)
}

fn explain_scoped(
    ruleset: &RuleSet,
    clustering: &Clustering,
    scope_ids: &[String],
    normalize: Normalize,
    scope: Scope,
) -> Result<ExplanationReport> {
    if scope_ids.is_empty() {
        return Err(Error::EmptyScope);
    }
    let rules: Vec<_> = scope_ids
        .iter()
        .map(|id| {
            ruleset
                .rule_by_id(id)
                .ok_or_else(|| Error::Validation(format!("scope references unknown rule '{id}'")))
        })
        .collect::<Result<_>>()?;

    let s_all = rules.len();
    let c_all: u64 = rules.iter().map(|r| r.coverage).sum();
    let weights: Vec<f64> = rules
        .iter()
        .map(|r| rule_weight(r.coverage, c_all, s_all))
        .collect();

    // n_ij per factor per rule
    let factors = clustering.factors();
    let mut counts: BTreeMap<&str, Vec<usize>> =
        factors.iter().map(|f| (f.as_str(), vec![0usize; s_all])).collect();
    for (j, rule) in rules.iter().enumerate() {
        for cond in &rule.conditions {
            let factor = clustering.factor_of(&cond.attribute).ok_or_else(|| {
                Error::Validation(format!(
                    "clustering '{}' does not map attribute '{}' (rule '{}')",
                    clustering.name(),
                    cond.attribute,
                    rule.id
                ))
            })?;
            counts.get_mut(factor).expect("factor list covers mapping")[j] += 1;
        }
    }

    let mut factor_scores = Vec::with_capacity(factors.len());
    for factor in factors {
        let n = &counts[factor.as_str()];
        let s_i = n.iter().filter(|&&c| c > 0).count();
        match inverse_doc_freq(s_i, s_all) {
            None => factor_scores.push(FactorScore {
                factor: factor.clone(),
                score: 0.0,
                active: false,
                rules_with_factor: 0,
                tfidf: 0.0,
            }),
            Some(idf) => {
                let per_rule: Vec<f64> = rules
                    .iter()
                    .enumerate()
                    .map(|(j, rule)| {
                        tfidf_rule(weighted_tf(weights[j], n[j], rule.condition_count()), idf)
                    })
                    .collect();
                let tfidf = factor_relevance(&per_rule)?;
                let mut score = invert_score(tfidf);
                if normalize == Normalize::Minmax2x {
                    score *= 2.0;
                }
                factor_scores.push(FactorScore {
                    factor: factor.clone(),
                    score,
                    active: true,
                    rules_with_factor: s_i,
                    tfidf,
                });
            }
        }
    }

    factor_scores.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| a.factor.cmp(&b.factor))
    });

    let active: Vec<f64> = factor_scores.iter().filter(|f| f.active).map(|f| f.score).collect();
    let mean_score = if active.is_empty() {
        0.0
    } else {
        active.iter().sum::<f64>() / active.len() as f64
    };

    Ok(ExplanationReport {
        scope,
        clustering: clustering.name().to_string(),
        normalize,
        rules_in_scope: rules
            .iter()
            .zip(&weights)
            .map(|(r, &w)| RuleWeight { id: r.id.clone(), weight: w })
            .collect(),
        factor_scores,
        mean_score,
        prediction: None,
    })
}

/// Relevance over the rules activated for one record.
pub fn explain_local(
    ruleset: &RuleSet,
    clustering: &Clustering,
    record: &PatientRecord,
    normalize: Normalize,
) -> Result<ExplanationReport> {
    let activation = activate_rules(ruleset, record);
    if activation.activated.is_empty() {
        return Err(Error::NoActivation { patient_id: record.id.clone() });
    }
    let (label, support) = predict_class(ruleset, &activation);
    let mut report = explain_scoped(
        ruleset,
        clustering,
        &activation.activated,
        normalize,
        Scope::Local { patient_id: record.id.clone() },
    )?;
    report.prediction = Some(Prediction { label, support });
    Ok(report)
}

/// Relevance over the entire rule set.
pub fn explain_global(
    ruleset: &RuleSet,
    clustering: &Clustering,
    normalize: Normalize,
) -> Result<ExplanationReport> {
    let ids: Vec<String> = ruleset.rules().iter().map(|r| r.id.clone()).collect();
    explain_scoped(ruleset, clustering, &ids, normalize, Scope::Global)
}

/// Rounds to 12 significant digits; applied to every float emitted in
/// report JSON so service payloads and library payloads compare exactly.
pub fn round_sig12(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{:.11e}", v).parse().unwrap()
}

impl ExplanationReport {
    /// Canonical JSON form of the report (floats at 12 significant digits).
    pub fn to_json(&self) -> Value {
        let scope = match &self.scope {
            Scope::Global => json!({"type": "global"}),
            Scope::Local { patient_id } => json!({"type": "local", "patient_id": patient_id}),
        };
        let mut obj = json!({
            "scope": scope,
            "clustering": self.clustering,
            "normalize": self.normalize.as_str(),
            "rules_in_scope": self.rules_in_scope.iter().map(|r| json!({
                "id": r.id,
                "weight": round_sig12(r.weight),
            })).collect::<Vec<_>>(),
            "factor_scores": self.factor_scores.iter().map(|f| json!({
                "factor": f.factor,
                "score": round_sig12(f.score),
                "active": f.active,
                "rules_with_factor": f.rules_with_factor,
                "tfidf": round_sig12(f.tfidf),
            })).collect::<Vec<_>>(),
            "mean_score": round_sig12(self.mean_score),
        });
        if let Some(p) = &self.prediction {
            obj["prediction"] = json!({
                "label": p.label,
                "support": round_sig12(p.support),
            });
        }
        obj
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{parse_clustering, parse_rules};
    use std::collections::BTreeMap;

    #[test]
    fn term_frequency_examples() {
        assert_eq!(term_frequency(1, 2), 0.5);
        assert_eq!(term_frequency(0, 5), 0.0);
        assert_eq!(term_frequency(3, 3), 1.0);
    }

    #[test]
    fn rule_weight_examples() {
        assert_eq!(rule_weight(3, 4, 2), 0.75);
        assert_eq!(rule_weight(0, 4, 2), 0.0);
        assert_eq!(rule_weight(0, 0, 5), 0.2);
    }

    #[test]
    fn weighted_tf_examples() {
        assert!((weighted_tf(0.75, 1, 2) - 0.375).abs() < SCORE_TOLERANCE);
        assert!((weighted_tf(0.25, 1, 1) - 0.25).abs() < SCORE_TOLERANCE);
        assert_eq!(weighted_tf(0.9, 0, 3), 0.0);
    }

    #[test]
    fn idf_examples() {
        assert_eq!(inverse_doc_freq(2, 2), Some(0.0));
        assert!((inverse_doc_freq(1, 2).unwrap() - 2f64.ln()).abs() < SCORE_TOLERANCE);
        assert_eq!(inverse_doc_freq(0, 2), None);
    }

    #[test]
    fn tfidf_rule_examples() {
        assert!((tfidf_rule(0.375, 2f64.ln()) - 0.375 * 2f64.ln()).abs() < SCORE_TOLERANCE);
        assert_eq!(tfidf_rule(0.7, 0.0), 0.0);
        assert_eq!(tfidf_rule(0.0, 0.7), 0.0);
    }

    #[test]
    fn factor_relevance_examples() {
        assert_eq!(factor_relevance(&[0.0, 0.0]).unwrap(), 0.0);
        let v = 0.375 * 2f64.ln();
        assert!((factor_relevance(&[v, 0.0]).unwrap() - v / 2.0).abs() < SCORE_TOLERANCE);
        assert!(factor_relevance(&[]).is_err());
    }

    #[test]
    fn invert_score_examples() {
        assert_eq!(invert_score(0.0), 0.5);
        assert!(invert_score(50.0) <= 1e-20);
        // strictly decreasing
        assert!(invert_score(0.1) > invert_score(0.2));
    }

    fn oracle_pair() -> (RuleSet, Clustering) {
        let rs = parse_rules(
            "RULE r1 CLASS=high COVERAGE=3: A1 > 1 AND A2 > 1\n\
             RULE r2 CLASS=high COVERAGE=1: A1 > 2",
        )
        .unwrap();
        let clustering = parse_clustering(
            "[clustering test]\nF1: A1\nF2: A2\nF3: A3",
        )
        .unwrap();
        (rs, clustering)
    }

    #[test]
    fn worked_two_rule_example() {
        let (rs, clustering) = oracle_pair();
        let report = explain_global(&rs, &clustering, Normalize::Literal).unwrap();

        let f1 = report.factor_scores.iter().find(|f| f.factor == "F1").unwrap();
        assert!(f1.active);
        assert_eq!(f1.rules_with_factor, 2);
        assert!((f1.score - 0.5).abs() < SCORE_TOLERANCE);

        let f2 = report.factor_scores.iter().find(|f| f.factor == "F2").unwrap();
        // hand computation: w1 = 0.75, tf = 1/2, idf = ln 2, mean over 2 rules
        let expected_tfidf = 0.75 * 0.5 * 2f64.ln() / 2.0;
        assert!((f2.tfidf - expected_tfidf).abs() < SCORE_TOLERANCE);
        assert!((f2.score - invert_score(expected_tfidf)).abs() < SCORE_TOLERANCE);
        assert!((f2.score - 0.4675543827703946).abs() < 1e-12);

        let f3 = report.factor_scores.iter().find(|f| f.factor == "F3").unwrap();
        assert!(!f3.active);
        assert_eq!(f3.score, 0.0);

        // ranking: F1 first, then F2, inactive last
        let names: Vec<&str> = report.factor_scores.iter().map(|f| f.factor.as_str()).collect();
        assert_eq!(names, vec!["F1", "F2", "F3"]);

        // weights sum to 1
        let wsum: f64 = report.rules_in_scope.iter().map(|r| r.weight).sum();
        assert!((wsum - 1.0).abs() < SCORE_TOLERANCE);
    }

    #[test]
    fn minmax2x_doubles_scores() {
        let (rs, clustering) = oracle_pair();
        let lit = explain_global(&rs, &clustering, Normalize::Literal).unwrap();
        let norm = explain_global(&rs, &clustering, Normalize::Minmax2x).unwrap();
        for (a, b) in lit.factor_scores.iter().zip(&norm.factor_scores) {
            assert!((b.score - 2.0 * a.score).abs() < SCORE_TOLERANCE);
        }
    }

    #[test]
    fn single_rule_scores_half_for_active_factors() {
        let rs = parse_rules("RULE r1 CLASS=high COVERAGE=5: A1 > 1 AND A2 > 1").unwrap();
        let clustering = Clustering::identity(&rs);
        let report = explain_global(&rs, &clustering, Normalize::Literal).unwrap();
        for f in &report.factor_scores {
            assert!(f.active);
            assert!((f.score - 0.5).abs() < SCORE_TOLERANCE);
        }
    }

    #[test]
    fn local_on_full_activation_equals_global() {
        let (rs, clustering) = oracle_pair();
        let record = PatientRecord::new(
            "p1",
            BTreeMap::from([("A1".to_string(), 5.0), ("A2".to_string(), 5.0)]),
        )
        .unwrap();
        let local = explain_local(&rs, &clustering, &record, Normalize::Literal).unwrap();
        let global = explain_global(&rs, &clustering, Normalize::Literal).unwrap();
        assert_eq!(local.factor_scores, global.factor_scores);
        assert_eq!(local.rules_in_scope, global.rules_in_scope);
        assert_eq!(local.mean_score, global.mean_score);
        assert_eq!(local.scope, Scope::Local { patient_id: "p1".into() });
        assert!(local.prediction.is_some());
    }

    #[test]
    fn local_without_activation_errors() {
        let (rs, clustering) = oracle_pair();
        let record =
            PatientRecord::new("p9", BTreeMap::from([("A1".to_string(), 0.0)])).unwrap();
        let err = explain_local(&rs, &clustering, &record, Normalize::Literal).unwrap_err();
        assert!(matches!(err, Error::NoActivation { ref patient_id } if patient_id == "p9"));
    }

    #[test]
    fn empty_scope_errors() {
        let (rs, clustering) = oracle_pair();
        assert!(matches!(
            explain(&rs, &clustering, &[], Normalize::Literal),
            Err(Error::EmptyScope)
        ));
    }

    #[test]
    fn json_shape() {
        let (rs, clustering) = oracle_pair();
        let report = explain_global(&rs, &clustering, Normalize::Literal).unwrap();
        let v = report.to_json();
        assert_eq!(v["scope"]["type"], "global");
        assert_eq!(v["clustering"], "test");
        assert_eq!(v["normalize"], "literal");
        assert_eq!(v["factor_scores"].as_array().unwrap().len(), 3);
        assert_eq!(v["rules_in_scope"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn round_sig12_is_stable() {
        let v = 0.4675543827703946;
        let r = round_sig12(v);
        assert!((r - v).abs() < 1e-11);
        assert_eq!(round_sig12(r), r);
        assert_eq!(round_sig12(0.0), 0.0);
    }
}
