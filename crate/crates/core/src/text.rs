//! Word and phrase statistics over event messages.
//!
//! Words are `tokenize` outputs lowercased with Unicode case folding; there
//! is no stemming, so English and Polish text are treated alike.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::EventRecord;
use crate::rules::{Category, ClassTally};
use crate::store::EventStore;
use crate::template::tokenize;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordTable {
    total: u64,
    documents: usize,
    counts: BTreeMap<String, u64>,
    doc_counts: BTreeMap<String, usize>,
}

impl WordTable {
    /// Builds a table from `(word, count, documents containing it)` rows.
    pub fn from_parts<S: Into<String>>(documents: usize, rows: impl IntoIterator<Item = (S, u64, usize)>) -> Self {
        let mut table = WordTable {
            documents,
            ..WordTable::default()
        };
        for (word, count, docs) in rows {
            let word = word.into();
            table.total += count;
            *table.counts.entry(word.clone()).or_default() += count;
            *table.doc_counts.entry(word).or_default() += docs;
        }
        table
    }

    fn add_document<I: IntoIterator<Item = String>>(&mut self, words: I) {
        self.documents += 1;
        let mut seen = BTreeSet::new();
        for w in words {
            self.total += 1;
            *self.counts.entry(w.clone()).or_default() += 1;
            seen.insert(w);
        }
        for w in seen {
            *self.doc_counts.entry(w).or_default() += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// Number of messages scanned.
    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn count(&self, word: &str) -> u64 {
        self.counts.get(word).copied().unwrap_or(0)
    }

    /// Messages containing `word` at least once.
    pub fn doc_count(&self, word: &str) -> usize {
        self.doc_counts.get(word).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &BTreeMap<String, u64> {
        &self.counts
    }

    /// Count descending, then word ascending.
    pub fn report(&self) -> Vec<(&str, u64)> {
        let mut rows: Vec<(&str, u64)> = self.counts.iter().map(|(w, &c)| (w.as_str(), c)).collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        rows
    }
}

fn words_of(message: &str) -> impl Iterator<Item = String> + '_ {
    tokenize(message).into_iter().map(|t| t.render().to_lowercase())
}

pub fn word_frequencies(store: &EventStore) -> WordTable {
    word_frequencies_of(store.events())
}

pub fn word_frequencies_of<'a>(events: impl IntoIterator<Item = &'a EventRecord>) -> WordTable {
    let mut table = WordTable::default();
    for ev in events {
        table.add_document(words_of(&ev.message));
    }
    table
}

/// Counts adjacent token pairs whose first word folds to "not".
pub fn negation_scan(store: &EventStore) -> WordTable {
    let mut table = WordTable::default();
    for ev in store.events() {
        let words: Vec<String> = words_of(&ev.message).collect();
        let bigrams = words
            .windows(2)
            .filter(|w| w[0] == "not")
            .map(|w| format!("{} {}", w[0], w[1]));
        table.add_document(bigrams);
    }
    table
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhraseHit {
    pub phrase: String,
    pub seq: u64,
    /// Character (not byte) offset of the match in the message.
    pub offset: usize,
}

/// Lowercases and collapses whitespace runs to one space, remembering for
/// every output char the char index it came from.
fn normalize(text: &str) -> (Vec<char>, Vec<usize>) {
    let mut chars = Vec::new();
    let mut origin = Vec::new();
    let mut in_space = false;
    for (idx, c) in text.chars().enumerate() {
        if c.is_whitespace() {
            if !in_space {
                chars.push(' ');
                origin.push(idx);
            }
            in_space = true;
            continue;
        }
        in_space = false;
        for lower in c.to_lowercase() {
            chars.push(lower);
            origin.push(idx);
        }
    }
    (chars, origin)
}

fn normalize_phrase(phrase: &str) -> Vec<char> {
    normalize(phrase.trim()).0
}

/// Every case-insensitive, whitespace-normalized occurrence of each phrase,
/// overlapping ones included. Ordered by event seq, then phrase order, then
/// offset.
pub fn find_phrases<S: AsRef<str>>(store: &EventStore, phrases: &[S]) -> Result<Vec<PhraseHit>> {
    if phrases.is_empty() {
        return Err(Error::Argument("no phrases given".into()));
    }
    let needles: Vec<Vec<char>> = phrases.iter().map(|p| normalize_phrase(p.as_ref())).collect();
    if needles.iter().any(Vec::is_empty) {
        return Err(Error::Argument("empty phrase".into()));
    }

    let mut hits = Vec::new();
    for ev in store.events() {
        let (hay, origin) = normalize(&ev.message);
        for (phrase, needle) in phrases.iter().zip(&needles) {
            if needle.len() > hay.len() {
                continue;
            }
            for start in 0..=hay.len() - needle.len() {
                if hay[start..start + needle.len()] == needle[..] {
                    hits.push(PhraseHit {
                        phrase: phrase.as_ref().to_string(),
                        seq: ev.seq,
                        offset: origin[start],
                    });
                }
            }
        }
    }
    Ok(hits)
}

/// Whether `phrase` occurs (case-insensitively, whitespace-normalized) at
/// char `offset` of `message`.
pub fn phrase_at(message: &str, phrase: &str, offset: usize) -> bool {
    let needle = normalize_phrase(phrase);
    let tail: String = message.chars().skip(offset).collect();
    let (hay, _) = normalize(&tail);
    !needle.is_empty() && hay.starts_with(&needle)
}

pub const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "an", "the", "of", "in", "on", "at", "to", "for", "from", "by", "with", "into", "onto", "over", "under",
    "about", "as", "and", "or", "but", "is", "are", "was", "be", "this", "that", "it", "w", "z", "na", "do", "od",
    "po", "dla", "o", "i", "przez", "oraz", "lub",
];

#[derive(Debug, Clone)]
pub struct KeywordOptions {
    /// Words in more than this fraction of messages are dropped.
    pub ubiquity: f64,
    pub stopwords: BTreeSet<String>,
}

impl Default for KeywordOptions {
    fn default() -> Self {
        KeywordOptions {
            ubiquity: 0.5,
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Keyword {
    pub word: String,
    pub count: u64,
    pub score: f64,
}

/// Word table over events a tally put into a category other than info.
pub fn focus_table(store: &EventStore, tally: &ClassTally) -> WordTable {
    word_frequencies_of(
        store
            .events()
            .iter()
            .filter(|e| tally.matches.get(&e.seq).is_some_and(|m| m.category != Category::Info)),
    )
}

/// Ranks words by count after dropping stopwords and ubiquitous words.
/// With a `focus` table (see [`focus_table`]) a word's score is multiplied
/// by its focus rate over its corpus rate when that ratio exceeds 1.
pub fn suggest_keywords(table: &WordTable, focus: Option<&WordTable>, opts: &KeywordOptions) -> Result<Vec<Keyword>> {
    if table.is_empty() {
        return Err(Error::Argument("word table is empty".into()));
    }
    let mut out: Vec<Keyword> = table
        .counts
        .iter()
        .filter(|(w, _)| !opts.stopwords.contains(w.as_str()))
        .filter(|(w, _)| table.documents == 0 || (table.doc_count(w) as f64) <= opts.ubiquity * table.documents as f64)
        .map(|(w, &count)| {
            let boost = focus
                .filter(|f| f.total > 0)
                .map(|f| {
                    let focus_rate = f.count(w) as f64 / f.total as f64;
                    let corpus_rate = count as f64 / table.total as f64;
                    (focus_rate / corpus_rate).max(1.0)
                })
                .unwrap_or(1.0);
            Keyword {
                word: w.clone(),
                count,
                score: count as f64 * boost,
            }
        })
        .collect();
    out.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| b.count.cmp(&a.count))
            .then_with(|| a.word.cmp(&b.word))
    });
    Ok(out)
}
