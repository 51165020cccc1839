//! Brute-force reference implementations. Deliberately naive: plain index
//! loops and string scans, sharing no code with the library.
#![allow(dead_code)]

use std::collections::BTreeMap;

/// Adjacent pairs of a stream and how often each first element starts a pair.
pub fn pairs_oracle<T: Ord + Clone>(stream: &[T]) -> (BTreeMap<(T, T), u64>, BTreeMap<T, u64>) {
    let mut pairs = BTreeMap::new();
    let mut starts = BTreeMap::new();
    let mut i = 0;
    while i + 1 < stream.len() {
        *pairs.entry((stream[i].clone(), stream[i + 1].clone())).or_insert(0) += 1;
        *starts.entry(stream[i].clone()).or_insert(0) += 1;
        i += 1;
    }
    (pairs, starts)
}

/// Occurrences of `gram` in `stream`, overlaps included.
pub fn occurrences<T: PartialEq>(stream: &[T], gram: &[T]) -> u64 {
    let mut count = 0;
    for start in 0..stream.len() {
        if start + gram.len() > stream.len() {
            break;
        }
        let mut same = true;
        for k in 0..gram.len() {
            if stream[start + k] != gram[k] {
                same = false;
                break;
            }
        }
        if same {
            count += 1;
        }
    }
    count
}

/// All distinct n-grams of a stream with their overlapping counts.
pub fn ngrams_oracle<T: Ord + Clone>(stream: &[T], n: usize) -> BTreeMap<Vec<T>, u64> {
    let mut out = BTreeMap::new();
    for start in 0..stream.len() {
        if start + n > stream.len() {
            break;
        }
        let gram: Vec<T> = stream[start..start + n].to_vec();
        if let std::collections::btree_map::Entry::Vacant(slot) = out.entry(gram) {
            let c = occurrences(stream, slot.key());
            slot.insert(c);
        }
    }
    out
}

/// One pass over the concatenated text: words are maximal non-whitespace
/// runs, lowercased, with trailing `,.;:` removed; empty results are dropped.
pub fn word_count_oracle<'a>(messages: impl IntoIterator<Item = &'a str>) -> BTreeMap<String, u64> {
    let mut joined = String::new();
    for m in messages {
        joined.push_str(m);
        joined.push('\n');
    }
    let mut counts = BTreeMap::new();
    let mut current = String::new();
    for c in joined.chars() {
        if c.is_whitespace() {
            let mut word = std::mem::take(&mut current);
            while word.ends_with([',', '.', ';', ':']) {
                word.pop();
            }
            if !word.is_empty() {
                *counts.entry(word.to_lowercase()).or_insert(0) += 1;
            }
        } else {
            current.push(c);
        }
    }
    counts
}

/// Character offsets where `phrase` occurs in `message`, comparing ASCII
/// case-insensitively. Only valid for single-spaced ASCII text.
pub fn ascii_phrase_offsets(message: &str, phrase: &str) -> Vec<usize> {
    let hay = message.to_ascii_lowercase();
    let needle = phrase.to_ascii_lowercase();
    (0..hay.len()).filter(|&i| hay[i..].starts_with(&needle)).collect()
}

/// Number of distinct strings after replacing each message's known
/// timestamp with `*` and its known pid with `(...)`.
pub fn masked_distinct(items: &[(String, String, String)]) -> usize {
    let mut seen = std::collections::BTreeSet::new();
    for (message, ts, pid) in items {
        let masked = message
            .replace(ts.as_str(), "*")
            .replace(&format!("pid {pid}"), "pid (...)");
        seen.insert(masked);
    }
    seen.len()
}
