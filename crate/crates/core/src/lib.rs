//! Attribution engine for propositional rule-based risk models.
//!
//! Explains predictions by clustering model attributes into semantic
//! factors and scoring each factor's contribution with a
//! coverage-weighted, inverted tf-idf metric. Exposed as a library,
//! a CLI and a read-only HTTP service.

pub mod activation;
pub mod error;
pub mod io;
pub mod model;
pub mod relevance;
pub mod report;
pub mod service;

pub use error::{Error, Result};
pub use model::{
    validate_against, Clustering, Condition, Operator, PatientRecord, Rule, RuleSet,
    ValidationReport,
};
pub use relevance::{
    explain, explain_global, explain_local, ExplanationReport, Normalize,
};
