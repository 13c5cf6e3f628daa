//! C ABI over the attribution engine.
//!
//! Handles are opaque; every function returns an [`RfStatus`] code and
//! hands results back through out-parameters. Strings returned by the
//! library must be released with [`rf_string_free`]. The last error
//! message for a handle is available via [`rf_last_error`].

use std::collections::BTreeMap;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;

use rulefactor::io;
use rulefactor::model::{validate_against, Clustering, RuleSet};
use rulefactor::relevance::{explain_global, explain_local, Normalize};
use rulefactor::Error;

/// Status codes returned by every fallible FFI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RfStatus {
    Ok = 0,
    /// A pointer argument was null or not valid UTF-8.
    InvalidArgument = 1,
    /// Rule or clustering text failed to parse or validate.
    ParseError = 2,
    /// The requested clustering name is not loaded.
    UnknownClustering = 3,
    /// No rule activated for the record; no local explanation exists.
    NoActivation = 4,
    /// Unknown normalization mode string.
    BadNormalize = 5,
    /// Any other engine failure; see `rf_last_error`.
    Internal = 6,
}

/// Opaque engine: a parsed rule set plus its validated clusterings.
pub struct RfEngine {
    ruleset: RuleSet,
    clusterings: BTreeMap<String, Clustering>,
    last_error: Option<CString>,
}

impl RfEngine {
    fn set_error(&mut self, msg: String) {
        self.last_error = CString::new(msg).ok();
    }
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Option<&'a str> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok()
}

fn to_c_string(s: String) -> *mut c_char {
    CString::new(s).map(CString::into_raw).unwrap_or(std::ptr::null_mut())
}

/// Builds an engine from rule DSL text and optional clustering text.
///
/// `factors_text` may be null; the identity ("technical") clustering is
/// always available. On failure returns null and, if `error_out` is
/// non-null, stores a message there (free with `rf_string_free`).
///
/// # Safety
/// `rules_text` must be a valid NUL-terminated UTF-8 string; the same
/// holds for `factors_text` when non-null.
#[no_mangle]
pub unsafe extern "C" fn rf_engine_new(
    rules_text: *const c_char,
    factors_text: *const c_char,
    error_out: *mut *mut c_char,
) -> *mut RfEngine {
    let fail = |msg: String, error_out: *mut *mut c_char| -> *mut RfEngine {
        if !error_out.is_null() {
            *error_out = to_c_string(msg);
        }
        std::ptr::null_mut()
    };
    let rules_text = match cstr(rules_text) {
        Some(s) => s,
        None => return fail("rules_text is null or not UTF-8".into(), error_out),
    };
    let ruleset = match io::parse_rules(rules_text) {
        Ok(rs) => rs,
        Err(e) => return fail(e.to_string(), error_out),
    };
    let mut clusterings = BTreeMap::new();
    if !factors_text.is_null() {
        let text = match cstr(factors_text) {
            Some(s) => s,
            None => return fail("factors_text is not UTF-8".into(), error_out),
        };
        let parsed = match io::parse_clusterings(text) {
            Ok(cs) => cs,
            Err(e) => return fail(e.to_string(), error_out),
        };
        for c in parsed {
            let (validated, _) = match validate_against(&ruleset, &c, false) {
                Ok(v) => v,
                Err(e) => return fail(e.to_string(), error_out),
            };
            clusterings.insert(validated.name().to_string(), validated);
        }
    }
    let technical = Clustering::identity(&ruleset);
    clusterings.entry(technical.name().to_string()).or_insert(technical);
    Box::into_raw(Box::new(RfEngine { ruleset, clusterings, last_error: None }))
}

/// Releases an engine created by `rf_engine_new`.
///
/// # Safety
/// `engine` must be a pointer previously returned by `rf_engine_new`,
/// not yet freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rf_engine_free(engine: *mut RfEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must originate from this library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn rf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Message describing the engine's most recent failure, or null.
/// The pointer stays valid until the next failing call on the engine.
///
/// # Safety
/// `engine` must be a live engine pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_last_error(engine: *const RfEngine) -> *const c_char {
    match engine.as_ref().and_then(|e| e.last_error.as_ref()) {
        Some(msg) => msg.as_ptr(),
        None => std::ptr::null(),
    }
}

/// Number of rules in the loaded model; 0 for a null engine.
///
/// # Safety
/// `engine` must be a live engine pointer or null.
#[no_mangle]
pub unsafe extern "C" fn rf_rule_count(engine: *const RfEngine) -> usize {
    engine.as_ref().map(|e| e.ruleset.len()).unwrap_or(0)
}

struct Resolved {
    clustering_name: String,
    normalize: Normalize,
}

unsafe fn resolve(
    engine: &mut RfEngine,
    clustering: *const c_char,
    normalize: *const c_char,
) -> Result<Resolved, RfStatus> {
    let name = match cstr(clustering) {
        Some(s) => s.to_string(),
        None if clustering.is_null() => "technical".to_string(),
        None => {
            engine.set_error("clustering name is not UTF-8".into());
            return Err(RfStatus::InvalidArgument);
        }
    };
    let normalize = match cstr(normalize) {
        Some(s) => match Normalize::parse(s) {
            Some(n) => n,
            None => {
                engine.set_error(format!("unknown normalize mode '{s}'"));
                return Err(RfStatus::BadNormalize);
            }
        },
        None if normalize.is_null() => Normalize::Literal,
        None => {
            engine.set_error("normalize mode is not UTF-8".into());
            return Err(RfStatus::InvalidArgument);
        }
    };
    if !engine.clusterings.contains_key(&name) {
        engine.set_error(format!("unknown clustering '{name}'"));
        return Err(RfStatus::UnknownClustering);
    }
    Ok(Resolved { clustering_name: name, normalize })
}

/// Global explanation as a JSON document in `json_out`.
///
/// `clustering` may be null (identity clustering); `normalize` may be
/// null ("literal").
///
/// # Safety
/// `engine` must be a live engine pointer; string arguments follow the
/// `rf_engine_new` contract; `json_out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rf_explain_global_json(
    engine: *mut RfEngine,
    clustering: *const c_char,
    normalize: *const c_char,
    json_out: *mut *mut c_char,
) -> RfStatus {
    let engine = match engine.as_mut() {
        Some(e) => e,
        None => return RfStatus::InvalidArgument,
    };
    if json_out.is_null() {
        engine.set_error("json_out is null".into());
        return RfStatus::InvalidArgument;
    }
    let resolved = match resolve(engine, clustering, normalize) {
        Ok(r) => r,
        Err(status) => return status,
    };
    let clustering_ref = &engine.clusterings[&resolved.clustering_name];
    match explain_global(&engine.ruleset, clustering_ref, resolved.normalize) {
        Ok(report) => {
            *json_out = to_c_string(report.to_json().to_string());
            RfStatus::Ok
        }
        Err(e) => {
            engine.set_error(e.to_string());
            RfStatus::Internal
        }
    }
}

/// Local explanation for a patient record given as JSON
/// (flat `{"ATTR": value}` or `{"id": ..., "values": {...}}`).
///
/// # Safety
/// Same contract as `rf_explain_global_json`; `record_json` must be a
/// valid NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn rf_explain_local_json(
    engine: *mut RfEngine,
    record_json: *const c_char,
    clustering: *const c_char,
    normalize: *const c_char,
    json_out: *mut *mut c_char,
) -> RfStatus {
    let engine = match engine.as_mut() {
        Some(e) => e,
        None => return RfStatus::InvalidArgument,
    };
    if json_out.is_null() {
        engine.set_error("json_out is null".into());
        return RfStatus::InvalidArgument;
    }
    let record_text = match cstr(record_json) {
        Some(s) => s.to_string(),
        None => {
            engine.set_error("record_json is null or not UTF-8".into());
            return RfStatus::InvalidArgument;
        }
    };
    let record = match io::parse_record_json(&record_text, "anonymous") {
        Ok(r) => r,
        Err(e) => {
            engine.set_error(e.to_string());
            return RfStatus::ParseError;
        }
    };
    let resolved = match resolve(engine, clustering, normalize) {
        Ok(r) => r,
        Err(status) => return status,
    };
    let clustering_ref = &engine.clusterings[&resolved.clustering_name];
    match explain_local(&engine.ruleset, clustering_ref, &record, resolved.normalize) {
        Ok(report) => {
            *json_out = to_c_string(report.to_json().to_string());
            RfStatus::Ok
        }
        Err(Error::NoActivation { patient_id }) => {
            engine.set_error(format!("no rule activates for record '{patient_id}'"));
            RfStatus::NoActivation
        }
        Err(e) => {
            engine.set_error(e.to_string());
            RfStatus::Internal
        }
    }
}
