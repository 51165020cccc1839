//! Frequent-token template mining.
//!
//! Every `(position, token)` pair is counted over the masked corpus. Pairs
//! seen at least `support` times are constant candidates. An event's
//! cluster key is its length plus the ordered list of its frequent pairs;
//! clusters with at least `support` members become templates, with the
//! frequent positions fixed and everything else variable. Smaller clusters
//! go to a single outlier bucket.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::store::EventStore;

use super::tokenize::{apply_masks, tokenize, MaskKind, MaskStage, Token, PLACEHOLDER};
use super::vartype::SlotType;

#[derive(Debug, Clone)]
pub struct MinerConfig {
    /// Absolute support threshold; `None` picks `max(2, ceil(0.001 * N))`.
    pub support: Option<usize>,
    /// Fraction of a slot's values that must match a type pattern.
    pub type_threshold: f64,
    /// Normalized slot distance at or below which templates merge.
    pub merge_distance: f64,
    pub stages: Vec<MaskStage>,
}

impl Default for MinerConfig {
    fn default() -> Self {
        MinerConfig {
            support: None,
            type_threshold: 0.9,
            merge_distance: 0.2,
            stages: MaskStage::list(&[MaskKind::Timestamp, MaskKind::Pid]),
        }
    }
}

impl MinerConfig {
    pub fn support_for(&self, corpus_size: usize) -> usize {
        self.support.unwrap_or_else(|| 2.max(corpus_size.div_ceil(1000)))
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(s) = self.support {
            if s < 2 {
                return Err(Error::Argument(format!(
                    "support threshold must be at least 2, got {s}"
                )));
            }
        }
        if !(self.type_threshold > 0.0 && self.type_threshold <= 1.0) {
            return Err(Error::Argument(format!(
                "type threshold must be in (0, 1], got {}",
                self.type_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.merge_distance) {
            return Err(Error::Argument(format!(
                "merge distance must be in [0, 1], got {}",
                self.merge_distance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Slot {
    Const(String),
    Masked(MaskKind),
    /// A mined variable, typed once `type_variables` has looked at it.
    Var(Option<SlotType>),
}

impl Slot {
    /// Const and masked slots pin the token at their position.
    pub fn is_fixed(&self) -> bool {
        !matches!(self, Slot::Var(_))
    }

    fn accepts(&self, token: &Token) -> bool {
        match (self, token) {
            (Slot::Const(text), Token::Word(w)) => text == w,
            (Slot::Masked(kind), Token::Masked(k)) => kind == k,
            (Slot::Var(_), _) => true,
            _ => false,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Const(text) => f.write_str(text),
            Slot::Masked(kind) => f.write_str(kind.symbol()),
            Slot::Var(Some(t)) if t.is_known() => write!(f, "{PLACEHOLDER}:{}", t.ty),
            Slot::Var(_) => f.write_str(PLACEHOLDER),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Template {
    pub id: u32,
    pub slots: Vec<Slot>,
    pub support: usize,
    /// Up to three member events, earliest first.
    pub example_seqs: Vec<u64>,
}

impl Template {
    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn const_count(&self) -> usize {
        self.slots.iter().filter(|s| matches!(s, Slot::Const(_))).count()
    }

    pub fn fixed_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_fixed()).count()
    }

    pub fn matches(&self, tokens: &[Token]) -> bool {
        self.slots.len() == tokens.len() && self.slots.iter().zip(tokens).all(|(s, t)| s.accepts(t))
    }

    pub fn skeleton(&self) -> String {
        let mut out = String::new();
        for (i, slot) in self.slots.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{slot}").expect("write to String");
        }
        out
    }
}

/// Mined templates plus the assignment of every event.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateCatalog {
    templates: Vec<Template>,
    outliers: Vec<u64>,
    assignments: BTreeMap<u64, u32>,
    support_threshold: usize,
    by_len: BTreeMap<usize, Vec<usize>>,
}

impl TemplateCatalog {
    pub(crate) fn new(
        mut templates: Vec<Template>,
        outliers: Vec<u64>,
        assignments: BTreeMap<u64, u32>,
        support_threshold: usize,
    ) -> Self {
        templates.sort_by_key(|t| t.id);
        let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, t) in templates.iter().enumerate() {
            by_len.entry(t.len()).or_default().push(idx);
        }
        TemplateCatalog {
            templates,
            outliers,
            assignments,
            support_threshold,
            by_len,
        }
    }

    pub fn empty() -> Self {
        TemplateCatalog::new(Vec::new(), Vec::new(), BTreeMap::new(), 2)
    }

    /// Templates in id order.
    pub fn templates(&self) -> &[Template] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&Template> {
        self.templates
            .binary_search_by_key(&id, |t| t.id)
            .ok()
            .map(|i| &self.templates[i])
    }

    /// Events that fell into the outlier bucket, by seq.
    pub fn outliers(&self) -> &[u64] {
        &self.outliers
    }

    pub fn outlier_count(&self) -> usize {
        self.outliers.len()
    }

    /// Template id for each assigned event seq.
    pub fn assignments(&self) -> &BTreeMap<u64, u32> {
        &self.assignments
    }

    pub fn template_of(&self, seq: u64) -> Option<u32> {
        self.assignments.get(&seq).copied()
    }

    pub fn support_threshold(&self) -> usize {
        self.support_threshold
    }

    pub fn total_support(&self) -> usize {
        self.templates.iter().map(|t| t.support).sum()
    }

    pub(crate) fn templates_mut(&mut self) -> &mut [Template] {
        &mut self.templates
    }

    /// The best template for an already masked token sequence: equal
    /// length, every fixed slot equal; most fixed slots wins, then lowest id.
    pub fn match_tokens(&self, tokens: &[Token]) -> Option<u32> {
        let candidates = self.by_len.get(&tokens.len())?;
        candidates
            .iter()
            .map(|&i| &self.templates[i])
            .filter(|t| t.matches(tokens))
            .min_by_key(|t| (std::cmp::Reverse(t.fixed_count()), t.id))
            .map(|t| t.id)
    }

    /// Catalog file: one `id<TAB>support<TAB>skeleton` line per template in
    /// id order, then `outliers<TAB>count`.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for t in &self.templates {
            writeln!(out, "{}\t{}\t{}", t.id, t.support, t.skeleton()).expect("write to String");
        }
        writeln!(out, "outliers\t{}", self.outliers.len()).expect("write to String");
        out
    }
}

pub fn match_template(message: &str, catalog: &TemplateCatalog, stages: &[MaskStage]) -> Option<u32> {
    catalog.match_tokens(&apply_masks(&tokenize(message), stages))
}

type ClusterKey = (usize, Vec<(usize, Token)>);

pub fn mine_templates(store: &EventStore, cfg: &MinerConfig) -> Result<TemplateCatalog> {
    cfg.validate()?;
    let support = cfg.support_for(store.len());
    let events = store.time_ordered();
    let sequences: Vec<Vec<Token>> = events
        .iter()
        .map(|e| apply_masks(&tokenize(&e.message), &cfg.stages))
        .collect();

    let mut pair_counts: HashMap<(usize, &Token), usize> = HashMap::new();
    for seq in &sequences {
        for (pos, tok) in seq.iter().enumerate() {
            *pair_counts.entry((pos, tok)).or_default() += 1;
        }
    }

    // Clusters in order of first appearance.
    let mut cluster_index: HashMap<ClusterKey, usize> = HashMap::new();
    let mut clusters: Vec<(ClusterKey, Vec<usize>)> = Vec::new();
    for (event_idx, seq) in sequences.iter().enumerate() {
        let frequent: Vec<(usize, Token)> = seq
            .iter()
            .enumerate()
            .filter(|(pos, tok)| pair_counts[&(*pos, *tok)] >= support)
            .map(|(pos, tok)| (pos, tok.clone()))
            .collect();
        let key = (seq.len(), frequent);
        match cluster_index.get(&key) {
            Some(&c) => clusters[c].1.push(event_idx),
            None => {
                cluster_index.insert(key.clone(), clusters.len());
                clusters.push((key, vec![event_idx]));
            }
        }
    }

    let mut templates = Vec::new();
    let mut outliers = Vec::new();
    let mut assignments = BTreeMap::new();
    for ((len, frequent), members) in clusters {
        let has_const = frequent.iter().any(|(_, t)| matches!(t, Token::Word(_)));
        if members.len() < support || !has_const {
            outliers.extend(members.iter().map(|&i| events[i].seq));
            continue;
        }
        let id = templates.len() as u32 + 1;
        let mut slots = vec![Slot::Var(None); len];
        for (pos, tok) in frequent {
            slots[pos] = match tok {
                Token::Word(w) => Slot::Const(w),
                Token::Masked(k) => Slot::Masked(k),
            };
        }
        for &i in &members {
            assignments.insert(events[i].seq, id);
        }
        templates.push(Template {
            id,
            slots,
            support: members.len(),
            example_seqs: members.iter().take(3).map(|&i| events[i].seq).collect(),
        });
    }
    outliers.sort_unstable();
    Ok(TemplateCatalog::new(templates, outliers, assignments, support))
}
