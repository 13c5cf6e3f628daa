//! Rule activation, class voting and fidelity measurement.

use serde::Serialize;

use crate::model::{Condition, Operator, PatientRecord, Rule, RuleSet};

/// Absolute tolerance for `==` / `!=` on real-valued attributes.
/// Indicator attributes are exact 0/1; the tolerance guards against
/// decimal round-trip noise.
pub const EQ_TOLERANCE: f64 = 1e-9;

/// Label returned when no rule activates for a record.
pub const NO_PREDICTION: &str = "no-prediction";

/// Outcome of evaluating one condition against a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CondEval {
    True,
    False,
    /// The record has no value for the condition's attribute.
    Missing,
}

/// Compares the record's value against the condition threshold.
pub fn evaluate_condition(cond: &Condition, record: &PatientRecord) -> CondEval {
    let value = match record.value(&cond.attribute) {
        Some(v) => v,
        None => return CondEval::Missing,
    };
    let holds = match cond.operator {
        Operator::Lt => value < cond.threshold,
        Operator::Le => value <= cond.threshold,
        Operator::Gt => value > cond.threshold,
        Operator::Ge => value >= cond.threshold,
        Operator::Eq => (value - cond.threshold).abs() <= EQ_TOLERANCE,
        Operator::Ne => (value - cond.threshold).abs() > EQ_TOLERANCE,
    };
    if holds {
        CondEval::True
    } else {
        CondEval::False
    }
}

/// The set of rules firing for one record, with aggregate coverage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActivationResult {
    pub patient_id: String,
    /// Ids of activated rules, in rule-set order.
    pub activated: Vec<String>,
    /// Sum of coverage over activated rules.
    pub c_all: u64,
    /// Rules not evaluated because an attribute was absent: (rule id, attribute).
    pub skipped: Vec<(String, String)>,
}

/// Evaluates every rule; a rule activates iff all conditions hold.
/// Rules touching an attribute missing from the record are skipped,
/// never activated.
pub fn activate_rules(ruleset: &RuleSet, record: &PatientRecord) -> ActivationResult {
    let mut activated = Vec::new();
    let mut skipped = Vec::new();
    let mut c_all = 0u64;
    'rules: for rule in ruleset.rules() {
        for cond in &rule.conditions {
            match evaluate_condition(cond, record) {
                CondEval::True => {}
                CondEval::False => continue 'rules,
                CondEval::Missing => {
                    skipped.push((rule.id.clone(), cond.attribute.clone()));
                    continue 'rules;
                }
            }
        }
        c_all += rule.coverage;
        activated.push(rule.id.clone());
    }
    ActivationResult { patient_id: record.id.clone(), activated, c_all, skipped }
}

/// Coverage-weighted vote among the activated rules' classes.
///
/// Support is the winning class's coverage share of `c_all`. When every
/// activated rule has zero coverage the vote falls back to plain rule
/// counting and support is the winning count over the activation count.
/// With no activations the result is (`no-prediction`, 0). Ties break on
/// the lexicographically smallest label.
pub fn predict_class(ruleset: &RuleSet, result: &ActivationResult) -> (String, f64) {
    if result.activated.is_empty() {
        return (NO_PREDICTION.to_string(), 0.0);
    }
    let rules: Vec<&Rule> = result
        .activated
        .iter()
        .filter_map(|id| ruleset.rule_by_id(id))
        .collect();
    let mut tally: std::collections::BTreeMap<&str, u64> = std::collections::BTreeMap::new();
    let weighted = result.c_all > 0;
    for rule in &rules {
        let w = if weighted { rule.coverage } else { 1 };
        *tally.entry(rule.predicted_class.as_str()).or_insert(0) += w;
    }
    // BTreeMap iteration order makes max_by_key pick the lexicographically
    // smallest label on ties (later equal keys do not replace the current max
    // only if we compare strictly greater).
    let (label, votes) = tally
        .iter()
        .fold((None::<&str>, 0u64), |(best, best_v), (k, &v)| {
            if best.is_none() || v > best_v {
                (Some(k), v)
            } else {
                (best, best_v)
            }
        });
    let total: u64 = if weighted { result.c_all } else { rules.len() as u64 };
    (label.unwrap().to_string(), votes as f64 / total as f64)
}

/// Per-rule fidelity against labeled samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidelityReport {
    pub rule_id: String,
    /// Samples activating the rule (s).
    pub activations: u64,
    /// Activating samples whose model label matches the rule's class (s').
    pub matches: u64,
    /// s'/s; `None` when no sample activates the rule.
    pub fidelity: Option<f64>,
}

/// Computes s and s' for every rule over the labeled samples.
pub fn rule_fidelity(
    ruleset: &RuleSet,
    samples: &[(PatientRecord, String)],
) -> Vec<FidelityReport> {
    let mut reports: Vec<FidelityReport> = ruleset
        .rules()
        .iter()
        .map(|r| FidelityReport {
            rule_id: r.id.clone(),
            activations: 0,
            matches: 0,
            fidelity: None,
        })
        .collect();
    for (record, label) in samples {
        let result = activate_rules(ruleset, record);
        for id in &result.activated {
            let idx = ruleset.rules().iter().position(|r| &r.id == id).unwrap();
            reports[idx].activations += 1;
            if &ruleset.rules()[idx].predicted_class == label {
                reports[idx].matches += 1;
            }
        }
    }
    for report in &mut reports {
        if report.activations > 0 {
            report.fidelity = Some(report.matches as f64 / report.activations as f64);
        }
    }
    reports
}
