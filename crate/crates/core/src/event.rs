//! The normalized event record shared by every analysis in the crate.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};

/// Event severity. Codes 0..=7 are the syslog levels; `Security` and
/// `Unknown` sit outside the syslog range.
///
/// `Unknown` is a real value: it is what a line without a priority (or a
/// Windows level outside the mapping table) gets, never a silent `Info`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Emergency,
    Alert,
    Critical,
    Error,
    Warning,
    Notice,
    Info,
    Debug,
    Security,
    Unknown,
}

impl Severity {
    pub const ALL: [Severity; 10] = [
        Severity::Emergency,
        Severity::Alert,
        Severity::Critical,
        Severity::Error,
        Severity::Warning,
        Severity::Notice,
        Severity::Info,
        Severity::Debug,
        Severity::Security,
        Severity::Unknown,
    ];

    /// Maps a syslog severity code (0..=7).
    pub fn from_code(code: u8) -> Option<Severity> {
        Severity::ALL.get(code as usize).copied().filter(|_| code < 8)
    }

    /// The syslog code, or `None` for `Security` / `Unknown`.
    pub fn code(self) -> Option<u8> {
        match self {
            Severity::Security | Severity::Unknown => None,
            other => Some(other as u8),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Severity::Emergency => "emergency",
            Severity::Alert => "alert",
            Severity::Critical => "critical",
            Severity::Error => "error",
            Severity::Warning => "warning",
            Severity::Notice => "notice",
            Severity::Info => "info",
            Severity::Debug => "debug",
            Severity::Security => "security",
            Severity::Unknown => "unknown",
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Severity {
    type Err = String;

    /// Accepts either a label or a numeric syslog code.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(code) = s.parse::<u8>() {
            return Severity::from_code(code).ok_or_else(|| format!("severity code {code} outside 0..=7"));
        }
        let lower = s.to_ascii_lowercase();
        Severity::ALL
            .iter()
            .copied()
            .find(|sev| sev.label() == lower)
            .ok_or_else(|| format!("unknown severity {s:?}"))
    }
}

/// One normalized log event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventRecord {
    pub occurred_at: DateTime<Utc>,
    /// Lowercased computer or node name.
    pub host: String,
    pub source: Option<String>,
    pub event_id: Option<u32>,
    pub pid: Option<u32>,
    pub severity: Severity,
    /// Single-line message text; never contains `\r` or `\n`.
    pub message: String,
    /// The input line exactly as read, without its trailing `\n`.
    pub raw: Vec<u8>,
    /// Ingest sequence number, assigned by the store.
    pub seq: u64,
}

impl EventRecord {
    /// Display form of the source, `-` when absent.
    pub fn source_or_dash(&self) -> &str {
        self.source.as_deref().unwrap_or("-")
    }
}

/// Collapses every line terminator (`\r\n`, `\n`, `\r`) into a single space.
pub fn flatten_message(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\r' => {
                if chars.peek() == Some(&'\n') {
                    chars.next();
                }
                out.push(' ');
            }
            '\n' => out.push(' '),
            other => out.push(other),
        }
    }
    out
}

/// A sendmail line with its `key=value` body taken apart.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MailEvent {
    pub base: EventRecord,
    pub queue_id: Option<String>,
    /// Keys in first-seen order; a repeated key keeps its position and takes
    /// the last value.
    pub kv: Vec<(String, String)>,
    /// Comma-separated fragments that were not `key=value`.
    pub rest: Vec<String>,
    /// How many keys were seen more than once on this line.
    pub duplicate_keys: usize,
}

impl MailEvent {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}
