//! Regular-expression event classes.
//!
//! A rule file is line oriented with tab-separated fields:
//!
//! ```text
//! name  category  source-pattern|-  event-id|-  message-pattern  [priority]
//! ```
//!
//! Lines starting with `#` and blank lines are ignored. A rule without a
//! priority column gets its line number, so earlier lines win. Lower
//! priority wins; equal priorities fall back to file order.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::Regex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::{EventRecord, Severity};
use crate::store::EventStore;

const SENDMAIL_RULES: &str = include_str!("../rules/sendmail.rules");

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Emergency,
    Alert,
    Critical,
    Error,
    Warning,
    Notice,
    Info,
    Debug,
    Security,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::Emergency,
        Category::Alert,
        Category::Critical,
        Category::Error,
        Category::Warning,
        Category::Notice,
        Category::Info,
        Category::Debug,
        Category::Security,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::Emergency => "emergency",
            Category::Alert => "alert",
            Category::Critical => "critical",
            Category::Error => "error",
            Category::Warning => "warning",
            Category::Notice => "notice",
            Category::Info => "info",
            Category::Debug => "debug",
            Category::Security => "security",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.label() == s)
            .ok_or_else(|| format!("unknown category {s:?}"))
    }
}

#[derive(Debug, Clone)]
pub struct ClassificationRule {
    pub name: String,
    pub category: Category,
    pub source_pattern: Option<Regex>,
    pub id_match: Option<u32>,
    pub message_pattern: Regex,
    pub priority: i64,
    /// Line in the rule file, used as the tiebreak.
    pub line: usize,
}

impl ClassificationRule {
    pub fn matches(&self, ev: &EventRecord) -> bool {
        if let Some(id) = self.id_match {
            if ev.event_id != Some(id) {
                return false;
            }
        }
        if let Some(pat) = &self.source_pattern {
            match &ev.source {
                Some(src) if pat.is_match(src) => {}
                _ => return false,
            }
        }
        self.message_pattern.is_match(&ev.message)
    }
}

/// Rules sorted by `(priority, line)`.
#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    rules: Vec<ClassificationRule>,
}

impl RuleSet {
    /// The bundled sendmail ruleset.
    pub fn sendmail() -> RuleSet {
        RuleSet::parse(SENDMAIL_RULES).expect("bundled sendmail ruleset is valid")
    }

    pub fn sendmail_source() -> &'static str {
        SENDMAIL_RULES
    }

    pub fn parse(text: &str) -> Result<RuleSet> {
        let mut rules = Vec::new();
        let mut names = HashSet::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let rule = parse_rule(line, lineno).map_err(|reason| Error::Rule { line: lineno, reason })?;
            if !names.insert(rule.name.clone()) {
                return Err(Error::Rule {
                    line: lineno,
                    reason: format!("duplicate rule name {:?}", rule.name),
                });
            }
            rules.push(rule);
        }
        rules.sort_by_key(|r| (r.priority, r.line));
        Ok(RuleSet { rules })
    }

    pub fn rules(&self) -> &[ClassificationRule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Number of rules per category; every category is present.
    pub fn category_tally(&self) -> BTreeMap<Category, usize> {
        let mut tally: BTreeMap<Category, usize> = Category::ALL.iter().map(|&c| (c, 0)).collect();
        for rule in &self.rules {
            *tally.entry(rule.category).or_default() += 1;
        }
        tally
    }

    pub fn get(&self, name: &str) -> Option<&ClassificationRule> {
        self.rules.iter().find(|r| r.name == name)
    }
}

fn parse_rule(line: &str, lineno: usize) -> std::result::Result<ClassificationRule, String> {
    let fields: Vec<&str> = line.split('\t').collect();
    if !(5..=6).contains(&fields.len()) {
        return Err(format!("expected 5 or 6 tab-separated fields, found {}", fields.len()));
    }
    let name = fields[0].trim();
    if name.is_empty() {
        return Err("empty rule name".into());
    }
    let category: Category = fields[1].trim().parse()?;
    let compile = |pat: &str, what: &str| Regex::new(pat).map_err(|e| format!("bad {what} pattern: {e}"));
    let source_pattern = match fields[2] {
        "-" => None,
        pat => Some(compile(pat, "source")?),
    };
    let id_match = match fields[3].trim() {
        "-" => None,
        id => Some(
            id.parse::<u32>()
                .map_err(|_| format!("event id {id:?} is not an integer"))?,
        ),
    };
    let message_pattern = compile(fields[4], "message")?;
    let priority = match fields.get(5) {
        Some(p) => p
            .trim()
            .parse::<i64>()
            .map_err(|_| format!("priority {p:?} is not an integer"))?,
        None => lineno as i64,
    };
    Ok(ClassificationRule {
        name: name.to_string(),
        category,
        source_pattern,
        id_match,
        message_pattern,
        priority,
        line: lineno,
    })
}

pub fn load_rules(path: &Path) -> Result<RuleSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RuleSet::parse(&text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassMatch {
    pub seq: u64,
    pub rule: String,
    pub category: Category,
}

/// The first rule (in priority order) that matches, if any.
pub fn classify(record: &EventRecord, rules: &RuleSet) -> Option<ClassMatch> {
    rules.rules.iter().find(|r| r.matches(record)).map(|r| ClassMatch {
        seq: record.seq,
        rule: r.name.clone(),
        category: r.category,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClassTally {
    pub total: usize,
    /// `(rule, category, count)` for every rule, in priority order.
    pub per_class: Vec<(String, Category, usize)>,
    pub per_category: BTreeMap<Category, usize>,
    pub unmatched: usize,
    /// Transport severity against assigned category; `None` is unmatched.
    pub cross: BTreeMap<(Severity, Option<Category>), usize>,
    pub matches: BTreeMap<u64, ClassMatch>,
}

impl ClassTally {
    pub fn matched(&self) -> usize {
        self.total - self.unmatched
    }

    pub fn class_count(&self, rule: &str) -> usize {
        self.per_class
            .iter()
            .find(|(name, _, _)| name == rule)
            .map_or(0, |(_, _, n)| *n)
    }

    pub fn cross_cell(&self, sev: Severity, cat: Option<Category>) -> usize {
        self.cross.get(&(sev, cat)).copied().unwrap_or(0)
    }
}

pub fn classify_all(store: &EventStore, rules: &RuleSet) -> ClassTally {
    let mut counts = vec![0usize; rules.len()];
    let index: BTreeMap<&str, usize> = rules
        .rules
        .iter()
        .enumerate()
        .map(|(i, r)| (r.name.as_str(), i))
        .collect();
    let mut tally = ClassTally {
        total: store.len(),
        per_category: Category::ALL.iter().map(|&c| (c, 0)).collect(),
        ..ClassTally::default()
    };
    for ev in store.events() {
        let found = classify(ev, rules);
        let cat = found.as_ref().map(|m| m.category);
        *tally.cross.entry((ev.severity, cat)).or_default() += 1;
        match found {
            Some(m) => {
                counts[index[m.rule.as_str()]] += 1;
                *tally.per_category.entry(m.category).or_default() += 1;
                tally.matches.insert(ev.seq, m);
            }
            None => tally.unmatched += 1,
        }
    }
    tally.per_class = rules
        .rules
        .iter()
        .zip(counts)
        .map(|(r, n)| (r.name.clone(), r.category, n))
        .collect();
    tally
}
