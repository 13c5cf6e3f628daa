//! Parsing and serialization of the external file formats: rule DSL
//! documents, clustering files, patient records and labeled samples.

pub mod factors;
pub mod patients;
pub mod rules;

pub use factors::{parse_clustering, parse_clusterings, serialize_clusterings};
pub use patients::{parse_labeled_samples, parse_record_json, parse_record_kv, record_from_value};
pub use rules::{parse_rules, serialize_rules};
