//! Test-only brute-force oracle: a literal, loop-by-loop transcription
//! of the scoring pipeline, independent of the engine's implementation.
//!
//! Kept deliberately naive (string maps, no shared code with the crate's
//! relevance module) so it can serve as an equivalence oracle.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::Rng;

/// A rule as the oracle sees it: condition attributes and coverage.
#[derive(Debug, Clone)]
pub struct OracleRule {
    pub id: String,
    pub attrs: Vec<String>,
    pub coverage: u64,
    pub class: String,
}

/// Per-factor oracle output.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleScore {
    pub factor: String,
    pub active: bool,
    pub tfidf: f64,
    pub score: f64,
}

/// Computes every factor's relevance over `scope` (indices into `rules`)
/// by direct evaluation of the formula chain, natural log, with the
/// uniform-weight fallback when total scope coverage is zero and score 0
/// for factors absent from every scoped rule.
pub fn oracle_scores(
    rules: &[OracleRule],
    clustering: &BTreeMap<String, String>,
    scope: &[usize],
) -> BTreeMap<String, OracleScore> {
    assert!(!scope.is_empty());
    let s_all = scope.len();

    let mut c_all: u64 = 0;
    for &j in scope {
        c_all += rules[j].coverage;
    }

    let mut factors: Vec<String> = clustering.values().cloned().collect();
    factors.sort();
    factors.dedup();

    let mut out = BTreeMap::new();
    for factor in &factors {
        // n_ij and s_i
        let mut n: Vec<usize> = Vec::new();
        for &j in scope {
            let mut count = 0;
            for attr in &rules[j].attrs {
                if clustering.get(attr) == Some(factor) {
                    count += 1;
                }
            }
            n.push(count);
        }
        let s_i = n.iter().filter(|&&c| c > 0).count();

        if s_i == 0 {
            out.insert(
                factor.clone(),
                OracleScore { factor: factor.clone(), active: false, tfidf: 0.0, score: 0.0 },
            );
            continue;
        }

        let idf = (s_all as f64 / s_i as f64).ln();
        let mut sum = 0.0;
        for (k, &j) in scope.iter().enumerate() {
            let w = if c_all > 0 {
                rules[j].coverage as f64 / c_all as f64
            } else {
                1.0 / s_all as f64
            };
            let d = rules[j].attrs.len() as f64;
            let tf = w * (n[k] as f64 / d);
            sum += tf * idf;
        }
        let tfidf = sum / s_all as f64;
        let score = 1.0 - 1.0 / (1.0 + (-tfidf).exp());
        out.insert(
            factor.clone(),
            OracleScore { factor: factor.clone(), active: true, tfidf, score },
        );
    }
    out
}

/// A random instance: rules, a total clustering over their attributes,
/// and a nonempty scope.
pub struct RandomInstance {
    pub rules: Vec<OracleRule>,
    pub clustering: BTreeMap<String, String>,
    pub scope: Vec<usize>,
}

/// Draws an instance with <= 10 rules, <= 8 attributes, <= 4 factors,
/// coverages 0..=20. Occasionally forces all-zero coverage to hit the
/// uniform-weight fallback.
pub fn random_instance(rng: &mut StdRng) -> RandomInstance {
    let n_attrs = rng.gen_range(1..=8usize);
    let attrs: Vec<String> = (0..n_attrs).map(|i| format!("A{i}")).collect();
    let n_factors = rng.gen_range(1..=4usize.min(n_attrs));
    let clustering: BTreeMap<String, String> = attrs
        .iter()
        .enumerate()
        .map(|(i, a)| {
            // ensure every factor gets at least one attribute
            let f = if i < n_factors { i } else { rng.gen_range(0..n_factors) };
            (a.clone(), format!("F{f}"))
        })
        .collect();

    let all_zero_coverage = rng.gen_bool(0.15);
    let n_rules = rng.gen_range(1..=10usize);
    let rules: Vec<OracleRule> = (0..n_rules)
        .map(|j| {
            let d = rng.gen_range(1..=4usize);
            let conds: Vec<String> =
                (0..d).map(|_| attrs[rng.gen_range(0..n_attrs)].clone()).collect();
            OracleRule {
                id: format!("r{j}"),
                attrs: conds,
                coverage: if all_zero_coverage { 0 } else { rng.gen_range(0..=20) },
                class: if rng.gen_bool(0.5) { "high".into() } else { "low".into() },
            }
        })
        .collect();

    let scope_len = rng.gen_range(1..=n_rules);
    let mut scope: Vec<usize> = (0..n_rules).collect();
    for i in (1..n_rules).rev() {
        let k = rng.gen_range(0..=i);
        scope.swap(i, k);
    }
    scope.truncate(scope_len);
    scope.sort();

    RandomInstance { rules, clustering, scope }
}

/// Renders the instance's rules in the DSL so the engine parses its input
/// through the production path.
pub fn rules_dsl(rules: &[OracleRule]) -> String {
    let mut out = String::new();
    for rule in rules {
        let conds: Vec<String> = rule.attrs.iter().map(|a| format!("{a} > 0.5")).collect();
        out.push_str(&format!(
            "RULE {} CLASS={} COVERAGE={}: {}\n",
            rule.id,
            rule.class,
            rule.coverage,
            conds.join(" AND ")
        ));
    }
    out
}

/// Renders the clustering in the `.factors` format.
pub fn clustering_doc(clustering: &BTreeMap<String, String>, name: &str) -> String {
    let mut by_factor: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (attr, factor) in clustering {
        by_factor.entry(factor).or_default().push(attr);
    }
    let mut out = format!("[clustering {name}]\n");
    for (factor, attrs) in by_factor {
        out.push_str(&format!("{factor}: {}\n", attrs.join(", ")));
    }
    out
}
