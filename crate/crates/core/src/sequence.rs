//! Adjacent event pairs with confidence ratios, and frequent contiguous
//! n-grams of event keys.
//!
//! Events are keyed by `(source, event id)`, by mined template or by rule
//! class, partitioned by scope (one stream per host by default) and ordered
//! by `(occurred_at, seq)`. A pair is two consecutive keys of one stream;
//! pairs never span streams.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::event::EventRecord;
use crate::rules::{classify, ClassTally, RuleSet};
use crate::store::EventStore;
use crate::template::TemplateCatalog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyMode {
    Id,
    Template,
    Class,
}

impl FromStr for KeyMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "id" => Ok(KeyMode::Id),
            "template" => Ok(KeyMode::Template),
            "class" => Ok(KeyMode::Class),
            other => Err(format!("unknown key mode {other:?} (expected id, template or class)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scope {
    Global,
    #[default]
    Host,
    HostSource,
}

impl FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "global" => Ok(Scope::Global),
            "host" => Ok(Scope::Host),
            "host_source" | "host-source" => Ok(Scope::HostSource),
            other => Err(format!(
                "unknown scope {other:?} (expected global, host or host_source)"
            )),
        }
    }
}

impl Scope {
    fn key_of(self, ev: &EventRecord) -> String {
        match self {
            Scope::Global => "*".to_string(),
            Scope::Host => ev.host.clone(),
            Scope::HostSource => format!("{}/{}", ev.host, ev.source_or_dash()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKey {
    Id { source: Option<String>, id: u32 },
    Template(u32),
    Class(String),
}

impl EventKey {
    pub fn id(id: u32) -> EventKey {
        EventKey::Id { source: None, id }
    }
}

impl fmt::Display for EventKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKey::Id { source: Some(src), id } => write!(f, "{src}:{id}"),
            EventKey::Id { source: None, id } => write!(f, "{id}"),
            EventKey::Template(id) => write!(f, "T{id}"),
            EventKey::Class(name) => f.write_str(name),
        }
    }
}

/// What a key mode needs besides the store.
#[derive(Debug, Clone, Copy)]
pub enum KeySource<'a> {
    Id,
    Template(Option<&'a TemplateCatalog>),
    Class(Option<&'a RuleSet>),
}

impl KeySource<'_> {
    pub fn mode(&self) -> KeyMode {
        match self {
            KeySource::Id => KeyMode::Id,
            KeySource::Template(_) => KeyMode::Template,
            KeySource::Class(_) => KeyMode::Class,
        }
    }
}

/// Per-scope key sequences.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Streams {
    pub streams: BTreeMap<String, Vec<EventKey>>,
    /// Events with no key in the chosen mode (no event id, outlier
    /// template, or no matching rule).
    pub skipped: usize,
}

impl Streams {
    pub fn single(keys: Vec<EventKey>) -> Streams {
        Streams {
            streams: BTreeMap::from([("*".to_string(), keys)]),
            skipped: 0,
        }
    }

    pub fn only(&self, scope: &str) -> Streams {
        Streams {
            streams: self
                .streams
                .get_key_value(scope)
                .map(|(k, v)| (k.clone(), v.clone()))
                .into_iter()
                .collect(),
            skipped: 0,
        }
    }

    fn iter(&self) -> impl Iterator<Item = &[EventKey]> {
        self.streams.values().map(Vec::as_slice)
    }
}

pub fn build_stream(store: &EventStore, keys: KeySource<'_>, scope: Scope) -> Result<Streams> {
    match keys {
        KeySource::Template(None) => return Err(Error::Argument("template keys need a template catalog".into())),
        KeySource::Class(None) => return Err(Error::Argument("class keys need a ruleset".into())),
        _ => {}
    }
    let mut out = Streams::default();
    for ev in store.time_ordered() {
        let key = match keys {
            KeySource::Id => ev.event_id.map(|id| EventKey::Id {
                source: ev.source.clone(),
                id,
            }),
            KeySource::Template(Some(catalog)) => catalog.template_of(ev.seq).map(EventKey::Template),
            KeySource::Class(Some(rules)) => classify(ev, rules).map(|m| EventKey::Class(m.rule)),
            _ => unreachable!("checked above"),
        };
        match key {
            Some(k) => out.streams.entry(scope.key_of(ev)).or_default().push(k),
            None => out.skipped += 1,
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairStat {
    pub antecedent: EventKey,
    pub successor: EventKey,
    pub pair_count: u64,
    /// How often the antecedent starts any pair.
    pub antecedent_total: u64,
}

impl PairStat {
    pub fn confidence(&self) -> Ratio<u64> {
        Ratio::new(self.pair_count, self.antecedent_total)
    }
}

/// Exact ratio rendered with four decimals, rounding half up.
pub fn format_ratio(r: Ratio<u64>) -> String {
    let num = u128::from(*r.numer());
    let den = u128::from(*r.denom());
    let scaled = (num * 20_000 + den) / (2 * den);
    format!("{}.{:04}", scaled / 10_000, scaled % 10_000)
}

/// Parses `0.5`, `1`, `.75` or `3/4` into an exact ratio.
pub fn parse_ratio(text: &str) -> std::result::Result<Ratio<u64>, String> {
    let bad = || format!("invalid ratio {text:?}");
    let text = text.trim();
    if let Some((n, d)) = text.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Ratio::new(n, d));
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if (int.is_empty() && frac.is_empty())
        || frac.len() > 18
        || !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let int: u64 = if int.is_empty() {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let den = 10u64.pow(frac.len() as u32);
    let frac: u64 = if frac.is_empty() {
        0
    } else {
        frac.parse().map_err(|_| bad())?
    };
    let num = int.checked_mul(den).and_then(|v| v.checked_add(frac)).ok_or_else(bad)?;
    Ok(Ratio::new(num, den))
}

/// Counts adjacent pairs within every stream. Ordered by pair count
/// descending, then antecedent, then successor.
pub fn mine_pairs(streams: &Streams) -> Vec<PairStat> {
    let mut pairs: HashMap<(&EventKey, &EventKey), u64> = HashMap::new();
    let mut starts: HashMap<&EventKey, u64> = HashMap::new();
    for stream in streams.iter() {
        for w in stream.windows(2) {
            *pairs.entry((&w[0], &w[1])).or_default() += 1;
            *starts.entry(&w[0]).or_default() += 1;
        }
    }
    let mut out: Vec<PairStat> = pairs
        .into_iter()
        .map(|((a, b), n)| PairStat {
            antecedent: a.clone(),
            successor: b.clone(),
            pair_count: n,
            antecedent_total: starts[a],
        })
        .collect();
    out.sort_by(|x, y| {
        y.pair_count
            .cmp(&x.pair_count)
            .then_with(|| x.antecedent.cmp(&y.antecedent))
            .then_with(|| x.successor.cmp(&y.successor))
    });
    out
}

/// Pairs with confidence at least `min_confidence` whose antecedent starts
/// at least `min_antecedent` pairs. Order is preserved.
pub fn filter_confident(pairs: &[PairStat], min_confidence: Ratio<u64>, min_antecedent: u64) -> Result<Vec<PairStat>> {
    if *min_confidence.numer() == 0 || min_confidence > Ratio::from_integer(1) {
        return Err(Error::Argument(format!(
            "minimum confidence must be in (0, 1], got {}",
            format_ratio(min_confidence)
        )));
    }
    if min_antecedent == 0 {
        return Err(Error::Argument("minimum antecedent support must be at least 1".into()));
    }
    Ok(pairs
        .iter()
        .filter(|p| p.confidence() >= min_confidence && p.antecedent_total >= min_antecedent)
        .cloned()
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceStat {
    pub keys: Vec<EventKey>,
    pub count: u64,
}

impl SequenceStat {
    pub fn n(&self) -> usize {
        self.keys.len()
    }
}

/// Sliding-window counts of every contiguous n-gram, `2 <= n <= n_max`,
/// overlaps included. Keeps those seen at least `min_support` times,
/// ordered by n ascending, count descending, keys ascending.
pub fn mine_ngrams(streams: &Streams, n_max: usize, min_support: u64) -> Result<Vec<SequenceStat>> {
    if n_max < 2 {
        return Err(Error::Argument(format!("n_max must be at least 2, got {n_max}")));
    }
    if min_support == 0 {
        return Err(Error::Argument("min_support must be at least 1".into()));
    }
    let mut out = Vec::new();
    for n in 2..=n_max {
        let mut counts: HashMap<&[EventKey], u64> = HashMap::new();
        for stream in streams.iter() {
            for w in stream.windows(n) {
                *counts.entry(w).or_default() += 1;
            }
        }
        let mut level: Vec<SequenceStat> = counts
            .into_iter()
            .filter(|(_, c)| *c >= min_support)
            .map(|(k, c)| SequenceStat {
                keys: k.to_vec(),
                count: c,
            })
            .collect();
        level.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.keys.cmp(&b.keys)));
        out.extend(level);
    }
    Ok(out)
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("input was UTF-8")
}

/// `A,B,pair_count,antecedent_total,confidence` with a header row.
pub fn pairs_csv(pairs: &[PairStat]) -> String {
    csv_text(
        &["A", "B", "pair_count", "antecedent_total", "confidence"],
        pairs.iter().map(|p| {
            vec![
                p.antecedent.to_string(),
                p.successor.to_string(),
                p.pair_count.to_string(),
                p.antecedent_total.to_string(),
                format_ratio(p.confidence()),
            ]
        }),
    )
}

/// `n,keys,count` with keys joined by `|`.
pub fn ngrams_csv(grams: &[SequenceStat]) -> String {
    csv_text(
        &["n", "keys", "count"],
        grams.iter().map(|g| {
            let keys: Vec<String> = g.keys.iter().map(ToString::to_string).collect();
            vec![g.n().to_string(), keys.join("|"), g.count.to_string()]
        }),
    )
}

#[derive(Debug, Clone)]
pub struct ProfileOptions {
    pub top: usize,
    pub n_max: usize,
    pub min_support: u64,
    /// Antecedent support required for a c = 1 pair to count as deterministic.
    pub deterministic_support: u64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            top: 10,
            n_max: 4,
            min_support: 2,
            deterministic_support: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairRow {
    pub antecedent: String,
    pub successor: String,
    pub pair_count: u64,
    pub antecedent_total: u64,
    pub confidence: String,
}

impl From<&PairStat> for PairRow {
    fn from(p: &PairStat) -> Self {
        PairRow {
            antecedent: p.antecedent.to_string(),
            successor: p.successor.to_string(),
            pair_count: p.pair_count,
            antecedent_total: p.antecedent_total,
            confidence: format_ratio(p.confidence()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NgramRow {
    pub n: usize,
    pub keys: Vec<String>,
    pub count: u64,
}

impl From<&SequenceStat> for NgramRow {
    fn from(s: &SequenceStat) -> Self {
        NgramRow {
            n: s.n(),
            keys: s.keys.iter().map(ToString::to_string).collect(),
            count: s.count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScopeProfile {
    pub scope: String,
    pub events: usize,
    pub distinct_keys: usize,
    pub distinct_pairs: usize,
    pub top_pairs: Vec<PairRow>,
    pub deterministic_pairs: Vec<PairRow>,
    pub top_ngrams: Vec<NgramRow>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClassSummary {
    pub per_category: BTreeMap<String, usize>,
    /// Non-empty classes, count descending then name.
    pub per_class: Vec<(String, usize)>,
    pub unmatched: usize,
}

/// Per-machine characteristics: pairs, deterministic successors and
/// frequent sequences per scope, plus class tallies when available.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Profile {
    pub scopes: Vec<ScopeProfile>,
    pub skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<ClassSummary>,
}

impl Profile {
    pub fn is_empty(&self) -> bool {
        self.scopes.is_empty() && self.classes.is_none()
    }
}

pub fn profile_report(streams: &Streams, tally: Option<&ClassTally>, opts: &ProfileOptions) -> Result<Profile> {
    let mut scopes = Vec::new();
    for (scope, keys) in &streams.streams {
        let one = streams.only(scope);
        let pairs = mine_pairs(&one);
        let deterministic = filter_confident(&pairs, Ratio::from_integer(1), opts.deterministic_support)?;
        let ngrams = mine_ngrams(&one, opts.n_max, opts.min_support)?;
        let mut top_ngrams: Vec<&SequenceStat> = ngrams.iter().collect();
        top_ngrams.sort_by(|a, b| {
            b.count
                .cmp(&a.count)
                .then_with(|| a.n().cmp(&b.n()))
                .then_with(|| a.keys.cmp(&b.keys))
        });
        let mut distinct: Vec<&EventKey> = keys.iter().collect();
        distinct.sort();
        distinct.dedup();
        scopes.push(ScopeProfile {
            scope: scope.clone(),
            events: keys.len(),
            distinct_keys: distinct.len(),
            distinct_pairs: pairs.len(),
            top_pairs: pairs.iter().take(opts.top).map(PairRow::from).collect(),
            deterministic_pairs: deterministic.iter().map(PairRow::from).collect(),
            top_ngrams: top_ngrams.into_iter().take(opts.top).map(NgramRow::from).collect(),
        });
    }

    let classes = tally.filter(|t| t.total > 0).map(|t| {
        let mut per_class: Vec<(String, usize)> = t
            .per_class
            .iter()
            .filter(|(_, _, n)| *n > 0)
            .map(|(name, _, n)| (name.clone(), *n))
            .collect();
        per_class.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ClassSummary {
            per_category: t
                .per_category
                .iter()
                .map(|(c, n)| (c.label().to_string(), *n))
                .collect(),
            per_class,
            unmatched: t.unmatched,
        }
    });

    Ok(Profile {
        scopes,
        skipped: streams.skipped,
        classes,
    })
}
