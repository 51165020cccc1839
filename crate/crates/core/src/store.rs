//! Flat NDJSON event store.
//!
//! Events are kept in ingest order on disk and in memory; time ordering is
//! applied when iterating. One record per line, keys in the fixed order
//! `ts host source id pid sev msg raw seq`, absent options omitted.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{EventRecord, Severity};

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventStore {
    events: Vec<EventRecord>,
    next_seq: u64,
}

/// Summary figures for a store.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StoreMeta {
    pub count: usize,
    pub first: Option<DateTime<Utc>>,
    pub last: Option<DateTime<Utc>>,
    pub hosts: BTreeSet<String>,
    pub sources: BTreeSet<String>,
}

impl EventStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a store from records that already carry sequence numbers.
    /// Sequence numbers must be strictly increasing.
    pub fn from_events(events: Vec<EventRecord>) -> Result<Self> {
        for pair in events.windows(2) {
            if pair[1].seq <= pair[0].seq {
                return Err(Error::Argument(format!(
                    "sequence numbers not increasing: {} then {}",
                    pair[0].seq, pair[1].seq
                )));
            }
        }
        let next_seq = events.last().map_or(0, |e| e.seq + 1);
        Ok(EventStore { events, next_seq })
    }

    /// Appends a record, overwriting its `seq` with the next free number.
    pub fn push(&mut self, mut record: EventRecord) -> u64 {
        let seq = self.next_seq;
        record.seq = seq;
        self.next_seq += 1;
        self.events.push(record);
        seq
    }

    /// Events in ingest (`seq`) order.
    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn meta(&self) -> StoreMeta {
        let mut meta = StoreMeta {
            count: self.events.len(),
            ..StoreMeta::default()
        };
        for ev in &self.events {
            meta.first = Some(meta.first.map_or(ev.occurred_at, |t| t.min(ev.occurred_at)));
            meta.last = Some(meta.last.map_or(ev.occurred_at, |t| t.max(ev.occurred_at)));
            meta.hosts.insert(ev.host.clone());
            if let Some(src) = &ev.source {
                meta.sources.insert(src.clone());
            }
        }
        meta
    }

    /// Events sorted by `(occurred_at, seq)`.
    pub fn time_ordered(&self) -> Vec<&EventRecord> {
        let mut out: Vec<&EventRecord> = self.events.iter().collect();
        out.sort_by_key(|e| (e.occurred_at, e.seq));
        out
    }

    /// Events satisfying every constraint of `filter`, in time order.
    pub fn select(&self, filter: &EventFilter) -> Vec<&EventRecord> {
        let mut out: Vec<&EventRecord> = self.events.iter().filter(|e| filter.matches(e)).collect();
        out.sort_by_key(|e| (e.occurred_at, e.seq));
        out
    }

    /// A new store holding the selected events with their original `seq`.
    pub fn filtered(&self, filter: &EventFilter) -> EventStore {
        let events: Vec<EventRecord> = self.events.iter().filter(|e| filter.matches(e)).cloned().collect();
        EventStore {
            events,
            next_seq: self.next_seq,
        }
    }
}

/// One field constraint of an [`EventFilter`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    Host(String),
    Source(String),
    /// Inclusive range of event IDs; events without an ID never match.
    EventId {
        lo: u32,
        hi: u32,
    },
    Severity(Severity),
    /// Inclusive time range; an open end is unbounded.
    Time {
        from: Option<DateTime<Utc>>,
        to: Option<DateTime<Utc>>,
    },
}

impl Constraint {
    fn matches(&self, ev: &EventRecord) -> bool {
        match self {
            Constraint::Host(h) => ev.host == h.to_lowercase(),
            Constraint::Source(s) => ev.source.as_deref() == Some(s.as_str()),
            Constraint::EventId { lo, hi } => ev.event_id.is_some_and(|id| (*lo..=*hi).contains(&id)),
            Constraint::Severity(s) => ev.severity == *s,
            Constraint::Time { from, to } => {
                from.is_none_or(|f| ev.occurred_at >= f) && to.is_none_or(|t| ev.occurred_at <= t)
            }
        }
    }
}

/// Conjunction of field constraints. The empty filter matches everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EventFilter {
    constraints: Vec<Constraint>,
}

impl EventFilter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, c: Constraint) -> Self {
        self.constraints.push(c);
        self
    }

    pub fn host(self, host: impl Into<String>) -> Self {
        self.with(Constraint::Host(host.into()))
    }

    pub fn source(self, source: impl Into<String>) -> Self {
        self.with(Constraint::Source(source.into()))
    }

    pub fn event_id(self, id: u32) -> Self {
        self.with(Constraint::EventId { lo: id, hi: id })
    }

    pub fn event_ids(self, lo: u32, hi: u32) -> Self {
        self.with(Constraint::EventId { lo, hi })
    }

    pub fn severity(self, sev: Severity) -> Self {
        self.with(Constraint::Severity(sev))
    }

    pub fn between(self, from: Option<DateTime<Utc>>, to: Option<DateTime<Utc>>) -> Self {
        self.with(Constraint::Time { from, to })
    }

    /// Both filters must hold.
    pub fn and(mut self, other: EventFilter) -> Self {
        self.constraints.extend(other.constraints);
        self
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn matches(&self, ev: &EventRecord) -> bool {
        self.constraints.iter().all(|c| c.matches(ev))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SevRepr {
    Code(u8),
    Label(String),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawRepr {
    Text(String),
    Bytes { b64: String },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StoredRecord {
    ts: String,
    host: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pid: Option<u32>,
    sev: SevRepr,
    msg: String,
    raw: RawRepr,
    seq: u64,
}

/// Renders one record in the canonical line layout (no trailing newline).
///
/// `raw` is written as a JSON string when it is valid UTF-8 and as
/// `{"b64": ...}` otherwise, so arbitrary bytes survive the round trip.
pub fn encode_record(ev: &EventRecord) -> String {
    let stored = StoredRecord {
        ts: ev.occurred_at.to_rfc3339_opts(SecondsFormat::AutoSi, true),
        host: ev.host.clone(),
        source: ev.source.clone(),
        id: ev.event_id,
        pid: ev.pid,
        sev: match ev.severity.code() {
            Some(code) => SevRepr::Code(code),
            None => SevRepr::Label(ev.severity.label().to_string()),
        },
        msg: ev.message.clone(),
        raw: match std::str::from_utf8(&ev.raw) {
            Ok(text) => RawRepr::Text(text.to_string()),
            Err(_) => RawRepr::Bytes {
                b64: BASE64.encode(&ev.raw),
            },
        },
        seq: ev.seq,
    };
    serde_json::to_string(&stored).expect("record serializes")
}

/// Parses one canonical line.
pub fn decode_record(line: &str) -> std::result::Result<EventRecord, String> {
    let stored: StoredRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let occurred_at = DateTime::parse_from_rfc3339(&stored.ts)
        .map_err(|e| format!("ts {:?}: {e}", stored.ts))?
        .with_timezone(&Utc);
    let severity = match stored.sev {
        SevRepr::Code(code) => Severity::from_code(code).ok_or_else(|| format!("sev code {code} outside 0..=7"))?,
        SevRepr::Label(label) => match label.as_str() {
            "security" => Severity::Security,
            "unknown" => Severity::Unknown,
            other => return Err(format!("sev label {other:?} is not \"security\" or \"unknown\"")),
        },
    };
    if stored.msg.contains(['\r', '\n']) {
        return Err("msg contains a line terminator".into());
    }
    let raw = match stored.raw {
        RawRepr::Text(text) => text.into_bytes(),
        RawRepr::Bytes { b64 } => BASE64.decode(b64).map_err(|e| format!("raw b64: {e}"))?,
    };
    Ok(EventRecord {
        occurred_at,
        host: stored.host,
        source: stored.source,
        event_id: stored.id,
        pid: stored.pid,
        severity,
        message: stored.msg,
        raw,
        seq: stored.seq,
    })
}

pub fn write_store(store: &EventStore, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for ev in store.events() {
        writeln!(out, "{}", encode_record(ev)).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_store(path: &Path) -> Result<EventStore> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Store {
        path: path.to_path_buf(),
        line: 1 + e.as_bytes()[..e.utf8_error().valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count(),
        reason: "invalid UTF-8".into(),
    })?;
    let store_err = |line: usize, reason: String| Error::Store {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut events = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let ev = decode_record(line).map_err(|reason| store_err(idx + 1, reason))?;
        if let Some(prev) = events.last().map(|p: &EventRecord| p.seq) {
            if ev.seq <= prev {
                return Err(store_err(idx + 1, format!("seq {} does not follow {prev}", ev.seq)));
            }
        }
        events.push(ev);
    }
    EventStore::from_events(events)
}
