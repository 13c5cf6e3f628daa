//! Rule DSL parsing and serialization.
//!
//! Grammar (one rule per line, `#` starts a comment):
//!
//! ```text
//! rule      := "RULE" id "CLASS=" label "COVERAGE=" uint ":" condition ("AND" condition)*
//! condition := attribute operator number
//! operator  := "<" | "<=" | ">" | ">=" | "==" | "!="
//! attribute := [A-Z][A-Z0-9_]*
//! id, label := [A-Za-z_][A-Za-z0-9_-]*
//! ```

use crate::error::{Error, Result};
use crate::model::{is_valid_attribute, Condition, Operator, Rule, RuleSet};

struct Cursor<'a> {
    line: &'a str,
    line_no: usize,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: &'a str, line_no: usize) -> Self {
        Cursor { line, line_no, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.line[self.pos..]
    }

    fn column(&self) -> usize {
        self.pos + 1
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start_matches([' ', '\t']);
        self.pos = self.line.len() - trimmed.len();
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.line_no, self.column(), message)
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(kw) {
            self.pos += kw.len();
            Ok(())
        } else {
            Err(self.err(format!("expected '{kw}'")))
        }
    }

    fn expect_char(&mut self, c: char) -> Result<()> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(format!("expected '{c}'")))
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let rest = self.rest();
        let end = rest.find(|c| !pred(c)).unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn identifier(&mut self, what: &str) -> Result<&'a str> {
        self.skip_ws();
        let id = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
        if id.is_empty() {
            return Err(self.err(format!("expected {what}")));
        }
        Ok(id)
    }

    fn attribute(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let col = self.column();
        let attr = self.take_while(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_');
        if !is_valid_attribute(attr) {
            return Err(Error::parse(
                self.line_no,
                col,
                "expected attribute name ([A-Z][A-Z0-9_]*)",
            ));
        }
        Ok(attr)
    }

    fn operator(&mut self) -> Result<Operator> {
        self.skip_ws();
        let rest = self.rest();
        // two-char operators first
        for tok in ["<=", ">=", "==", "!="] {
            if rest.starts_with(tok) {
                self.pos += 2;
                return Ok(Operator::parse(tok).unwrap());
            }
        }
        for tok in ["<", ">"] {
            if rest.starts_with(tok) {
                self.pos += 1;
                return Ok(Operator::parse(tok).unwrap());
            }
        }
        Err(self.err("expected comparison operator (<, <=, >, >=, ==, !=)"))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let col = self.column();
        let tok = self.take_while(|c| {
            c.is_ascii_digit() || c == '.' || c == '-' || c == '+' || c == 'e' || c == 'E'
        });
        let value: f64 = tok
            .parse()
            .map_err(|_| Error::parse(self.line_no, col, format!("invalid number '{tok}'")))?;
        if !value.is_finite() {
            return Err(Error::parse(self.line_no, col, format!("non-finite threshold '{tok}'")));
        }
        Ok(value)
    }

    fn uint(&mut self) -> Result<u64> {
        self.skip_ws();
        let col = self.column();
        let tok = self.take_while(|c| c.is_ascii_digit());
        tok.parse()
            .map_err(|_| Error::parse(self.line_no, col, "expected nonnegative integer"))
    }

    fn expect_end(&mut self) -> Result<()> {
        self.skip_ws();
        if self.rest().is_empty() {
            Ok(())
        } else {
            Err(self.err(format!("unexpected trailing input '{}'", self.rest())))
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_rule_line(line: &str, line_no: usize) -> Result<Rule> {
    let mut cur = Cursor::new(line, line_no);
    cur.expect_keyword("RULE")?;
    let id = cur.identifier("rule id")?.to_string();
    cur.expect_keyword("CLASS")?;
    cur.expect_char('=')?;
    let class = cur.identifier("class label")?.to_string();
    cur.expect_keyword("COVERAGE")?;
    cur.expect_char('=')?;
    let coverage = cur.uint()?;
    cur.expect_char(':')?;

    let mut conditions = Vec::new();
    cur.skip_ws();
    if cur.rest().is_empty() {
        return Err(cur.err(format!("rule '{id}' has an empty condition list")));
    }
    loop {
        let attr = cur.attribute()?.to_string();
        let op = cur.operator()?;
        let threshold = cur.number()?;
        conditions.push(
            Condition::new(attr, op, threshold)
                .map_err(|e| cur.err(e.to_string()))?,
        );
        cur.skip_ws();
        if cur.rest().is_empty() {
            break;
        }
        cur.expect_keyword("AND")?;
    }
    cur.expect_end()?;
    Rule::new(id, conditions, class, coverage).map_err(|e| Error::parse(line_no, 1, e.to_string()))
}

/// Parses a rule DSL document into a validated [`RuleSet`].
pub fn parse_rules(text: &str) -> Result<RuleSet> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        if line.trim().is_empty() {
            continue;
        }
        rules.push(parse_rule_line(line, line_no)?);
    }
    if rules.is_empty() {
        return Err(Error::parse(1, 1, "document contains no rules"));
    }
    // surface duplicate-id errors with a position
    let mut seen = std::collections::BTreeSet::new();
    for r in &rules {
        if !seen.insert(r.id.clone()) {
            return Err(Error::parse(1, 1, format!("duplicate rule id '{}'", r.id)));
        }
    }
    RuleSet::new(rules)
}

/// Formats a threshold without trailing noise; round-trips through `parse`.
fn fmt_number(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{:.1}", v)
    } else {
        // shortest representation that round-trips
        let s = format!("{v}");
        s
    }
}

/// Serializes a rule set to its canonical DSL form.
///
/// `parse_rules(serialize_rules(r))` structurally equals `r`.
pub fn serialize_rules(ruleset: &RuleSet) -> String {
    let mut out = String::new();
    for rule in ruleset.rules() {
        out.push_str(&format!(
            "RULE {} CLASS={} COVERAGE={}: ",
            rule.id, rule.predicted_class, rule.coverage
        ));
        let conds: Vec<String> = rule
            .conditions
            .iter()
            .map(|c| format!("{} {} {}", c.attribute, c.operator.as_str(), fmt_number(c.threshold)))
            .collect();
        out.push_str(&conds.join(" AND "));
        out.push('\n');
    }
    out
}
