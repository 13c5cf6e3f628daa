//! Core domain types: rules, clusterings, patient records.
//!
//! All structures are immutable after construction and cheap to share
//! across threads.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Comparison operator of a rule condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
}

impl Operator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Operator::Lt => "<",
            Operator::Le => "<=",
            Operator::Gt => ">",
            Operator::Ge => ">=",
            Operator::Eq => "==",
            Operator::Ne => "!=",
        }
    }

    pub fn parse(s: &str) -> Option<Operator> {
        match s {
            "<" => Some(Operator::Lt),
            "<=" => Some(Operator::Le),
            ">" => Some(Operator::Gt),
            ">=" => Some(Operator::Ge),
            "==" => Some(Operator::Eq),
            "!=" => Some(Operator::Ne),
            _ => None,
        }
    }
}

/// Returns true when `name` matches the attribute grammar `[A-Z][A-Z0-9_]*`.
pub fn is_valid_attribute(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_uppercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

/// Returns true when `name` matches the identifier grammar for rule ids,
/// class labels and clustering names: `[A-Za-z_][A-Za-z0-9_-]*`.
pub fn is_valid_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

/// A single threshold condition on one model attribute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub attribute: String,
    pub operator: Operator,
    pub threshold: f64,
}

impl Condition {
    pub fn new(attribute: impl Into<String>, operator: Operator, threshold: f64) -> Result<Self> {
        let attribute = attribute.into();
        if !is_valid_attribute(&attribute) {
            return Err(Error::Validation(format!(
                "invalid attribute name '{attribute}' (expected [A-Z][A-Z0-9_]*)"
            )));
        }
        if !threshold.is_finite() {
            return Err(Error::Validation(format!(
                "non-finite threshold for attribute '{attribute}'"
            )));
        }
        Ok(Condition { attribute, operator, threshold })
    }
}

/// One extracted propositional rule: a conjunction of conditions, a
/// predicted class and its training-set coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: String,
    pub conditions: Vec<Condition>,
    pub predicted_class: String,
    pub coverage: u64,
}

impl Rule {
    pub fn new(
        id: impl Into<String>,
        conditions: Vec<Condition>,
        predicted_class: impl Into<String>,
        coverage: u64,
    ) -> Result<Self> {
        let id = id.into();
        let predicted_class = predicted_class.into();
        if !is_valid_identifier(&id) {
            return Err(Error::Validation(format!("invalid rule id '{id}'")));
        }
        if predicted_class.is_empty() {
            return Err(Error::Validation(format!("rule '{id}' has an empty class label")));
        }
        if conditions.is_empty() {
            return Err(Error::Validation(format!("rule '{id}' has no conditions")));
        }
        Ok(Rule { id, conditions, predicted_class, coverage })
    }

    /// Number of condition literals (`d_j`).
    pub fn condition_count(&self) -> usize {
        self.conditions.len()
    }
}

/// An ordered collection of rules with derived attribute and class views.
#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    rules: Vec<Rule>,
    attribute_universe: BTreeSet<String>,
    class_labels: BTreeSet<String>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::Validation("rule set must contain at least one rule".into()));
        }
        let mut seen = BTreeSet::new();
        for rule in &rules {
            if !seen.insert(rule.id.clone()) {
                return Err(Error::Validation(format!("duplicate rule id '{}'", rule.id)));
            }
        }
        let attribute_universe = rules
            .iter()
            .flat_map(|r| r.conditions.iter().map(|c| c.attribute.clone()))
            .collect();
        let class_labels = rules.iter().map(|r| r.predicted_class.clone()).collect();
        Ok(RuleSet { rules, attribute_universe, class_labels })
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        false // invariant: at least one rule
    }

    pub fn rule_by_id(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    pub fn attribute_universe(&self) -> &BTreeSet<String> {
        &self.attribute_universe
    }

    pub fn class_labels(&self) -> &BTreeSet<String> {
        &self.class_labels
    }

    /// Total training-set coverage over all rules.
    pub fn total_coverage(&self) -> u64 {
        self.rules.iter().map(|r| r.coverage).sum()
    }
}

/// A taxonomy mapping every attribute to exactly one semantic factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    name: String,
    factor_of: BTreeMap<String, String>,
    factors: Vec<String>,
}

impl Clustering {
    pub fn new(name: impl Into<String>, factor_of: BTreeMap<String, String>) -> Result<Self> {
        let name = name.into();
        if !is_valid_identifier(&name) {
            return Err(Error::Validation(format!("invalid clustering name '{name}'")));
        }
        for (attr, factor) in &factor_of {
            if !is_valid_attribute(attr) {
                return Err(Error::Validation(format!(
                    "clustering '{name}': invalid attribute name '{attr}'"
                )));
            }
            if !is_valid_attribute(factor) {
                return Err(Error::Validation(format!(
                    "clustering '{name}': invalid factor name '{factor}'"
                )));
            }
        }
        let mut factors: Vec<String> = Vec::new();
        let mut seen = BTreeSet::new();
        for factor in factor_of.values() {
            if seen.insert(factor.clone()) {
                factors.push(factor.clone());
            }
        }
        factors.sort();
        if factors.is_empty() {
            return Err(Error::Validation(format!("clustering '{name}' maps no attributes")));
        }
        Ok(Clustering { name, factor_of, factors })
    }

    /// Identity clustering: every attribute of the rule set becomes its own
    /// singleton factor. Named "technical" by convention.
    pub fn identity(ruleset: &RuleSet) -> Clustering {
        let factor_of: BTreeMap<String, String> = ruleset
            .attribute_universe()
            .iter()
            .map(|a| (a.clone(), a.clone()))
            .collect();
        // attribute universe is nonempty by the RuleSet invariant
        Clustering::new("technical", factor_of).expect("identity clustering is always valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn factor_of(&self, attribute: &str) -> Option<&str> {
        self.factor_of.get(attribute).map(|s| s.as_str())
    }

    pub fn mapping(&self) -> &BTreeMap<String, String> {
        &self.factor_of
    }

    /// Distinct factor names, sorted.
    pub fn factors(&self) -> &[String] {
        &self.factors
    }

    /// Attributes assigned to a factor, sorted.
    pub fn attributes_of(&self, factor: &str) -> Vec<&str> {
        self.factor_of
            .iter()
            .filter(|(_, f)| f.as_str() == factor)
            .map(|(a, _)| a.as_str())
            .collect()
    }
}

/// Attribute values for one input (e.g. a patient).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub id: String,
    pub values: BTreeMap<String, f64>,
}

impl PatientRecord {
    pub fn new(id: impl Into<String>, values: BTreeMap<String, f64>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Validation("patient record id must be nonempty".into()));
        }
        for (attr, value) in &values {
            if !is_valid_attribute(attr) {
                return Err(Error::Validation(format!(
                    "record '{id}': invalid attribute name '{attr}'"
                )));
            }
            if !value.is_finite() {
                return Err(Error::Validation(format!(
                    "record '{id}': non-finite value for '{attr}'"
                )));
            }
        }
        Ok(PatientRecord { id, values })
    }

    pub fn value(&self, attribute: &str) -> Option<f64> {
        self.values.get(attribute).copied()
    }
}

/// Outcome of checking a clustering against a rule set's attribute universe.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    /// Attributes of the rule set with no factor in the clustering.
    pub unmapped: Vec<String>,
    /// Attributes auto-assigned singleton factors (lenient mode only).
    pub auto_singletons: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.unmapped.is_empty() && self.auto_singletons.is_empty()
    }
}

/// Checks that `clustering` covers every attribute the rule set references.
///
/// Strict mode fails on any unmapped attribute. Lenient mode returns an
/// augmented clustering where each unmapped attribute becomes its own
/// singleton factor, listed in the report.
pub fn validate_against(
    ruleset: &RuleSet,
    clustering: &Clustering,
    strict: bool,
) -> Result<(Clustering, ValidationReport)> {
    let unmapped: Vec<String> = ruleset
        .attribute_universe()
        .iter()
        .filter(|a| clustering.factor_of(a).is_none())
        .cloned()
        .collect();
    if unmapped.is_empty() {
        return Ok((clustering.clone(), ValidationReport::default()));
    }
    if strict {
        return Err(Error::Validation(format!(
            "clustering '{}' does not map attributes: {}",
            clustering.name(),
            unmapped.join(", ")
        )));
    }
    let mut factor_of = clustering.mapping().clone();
    for attr in &unmapped {
        factor_of.insert(attr.clone(), attr.clone());
    }
    let augmented = Clustering::new(clustering.name(), factor_of)?;
    let report = ValidationReport { unmapped: Vec::new(), auto_singletons: unmapped };
    Ok((augmented, report))
}
