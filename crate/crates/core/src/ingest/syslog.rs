//! BSD-style syslog lines: `[<PRI>]Mmm dd hh:mm:ss host tag[pid]: message`.
//!
//! An RFC 3339 timestamp is accepted in place of the BSD one, as written by
//! rsyslog's high-precision template.

use std::sync::OnceLock;

use chrono::{DateTime, FixedOffset, NaiveDate, TimeZone, Utc};
use regex::Regex;

use crate::error::{ParseError, ParseErrorKind};
use crate::event::{flatten_message, EventRecord, Severity};

/// Year and UTC offset needed to place a BSD timestamp, which carries neither.
#[derive(Debug, Clone, Copy)]
pub struct SyslogContext {
    pub year: i32,
    pub offset: FixedOffset,
}

impl SyslogContext {
    pub fn utc(year: i32) -> Self {
        SyslogContext {
            year,
            offset: FixedOffset::east_opt(0).expect("zero offset"),
        }
    }
}

/// Splits a syslog priority into `(facility, severity)`.
pub fn decode_priority(pri: u32) -> Result<(u8, Severity), ParseError> {
    if pri > 191 {
        return Err(ParseErrorKind::PriorityOutOfRange(pri).into());
    }
    let facility = (pri / 8) as u8;
    let severity = Severity::from_code((pri % 8) as u8).expect("pri % 8 is a syslog level");
    Ok((facility, severity))
}

fn header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?x)^
            (?:(?P<bsd>(?P<mon>[A-Z][a-z]{2})\x20+(?P<day>\d{1,2})\x20+(?P<h>\d{2}):(?P<m>\d{2}):(?P<s>\d{2})(?:\.(?P<frac>\d{1,9}))?)
              |(?P<iso>\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}(?:\.\d{1,9})?(?:Z|[+-]\d{2}:\d{2})))
            (?:[\x20\t]+(?P<host>\S+))?
            (?:[\x20\t]+(?P<body>.*))?$",
        )
        .expect("syslog header pattern")
    })
}

fn tag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^(?P<tag>[^\s\[\]:]+)(?:\[(?P<pid>\d+)\])?:(?:[ \t]+|$)(?P<msg>.*)$").expect("syslog tag pattern")
    })
}

fn month_number(name: &str) -> Option<u32> {
    const MONTHS: [&str; 12] = [
        "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec",
    ];
    MONTHS.iter().position(|m| *m == name).map(|i| i as u32 + 1)
}

/// Decodes raw line bytes to text: invalid UTF-8 becomes U+FFFD and one
/// trailing `\r` is dropped.
pub(crate) fn line_text(line: &[u8]) -> String {
    let line = line.strip_suffix(b"\r").unwrap_or(line);
    String::from_utf8_lossy(line).into_owned()
}

/// Parses one syslog line. The returned record has `seq == 0`; the store
/// assigns the real value on append.
pub fn parse_syslog_line(line: &[u8], ctx: &SyslogContext) -> Result<EventRecord, ParseError> {
    let text = line_text(line);
    if text.trim().is_empty() {
        return Err(ParseErrorKind::EmptyLine.into());
    }

    let (severity, rest) = split_priority(&text)?;
    let caps = header_re()
        .captures(rest)
        .ok_or_else(|| ParseErrorKind::BadTimestamp(rest.chars().take(32).collect()))?;

    let occurred_at = if caps.name("bsd").is_some() {
        bsd_timestamp(&caps, ctx)?
    } else {
        let iso = &caps["iso"];
        DateTime::parse_from_rfc3339(iso)
            .map_err(|_| ParseErrorKind::BadTimestamp(iso.to_string()))?
            .with_timezone(&Utc)
    };

    let host = caps
        .name("host")
        .ok_or(ParseErrorKind::MissingHost)?
        .as_str()
        .to_lowercase();
    let body = caps.name("body").map_or("", |m| m.as_str());

    let (source, pid, message) = match tag_re().captures(body) {
        Some(tag) => (
            Some(tag["tag"].to_string()),
            tag.name("pid").and_then(|p| p.as_str().parse().ok()),
            tag.name("msg").map_or("", |m| m.as_str()),
        ),
        None => (None, None, body),
    };
    if message.trim().is_empty() {
        return Err(ParseErrorKind::EmptyMessage.into());
    }

    Ok(EventRecord {
        occurred_at,
        host,
        source,
        event_id: None,
        pid,
        severity,
        message: flatten_message(message),
        raw: line.to_vec(),
        seq: 0,
    })
}

fn split_priority(text: &str) -> Result<(Severity, &str), ParseError> {
    let Some(after) = text.strip_prefix('<') else {
        return Ok((Severity::Unknown, text));
    };
    let close = after
        .find('>')
        .ok_or_else(|| ParseErrorKind::BadPriority(text.chars().take(6).collect()))?;
    let digits = &after[..close];
    if digits.is_empty() || digits.len() > 3 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ParseErrorKind::BadPriority(digits.to_string()).into());
    }
    let pri: u32 = digits.parse().expect("ascii digits");
    let (_facility, severity) = decode_priority(pri)?;
    Ok((severity, &after[close + 1..]))
}

fn bsd_timestamp(caps: &regex::Captures<'_>, ctx: &SyslogContext) -> Result<DateTime<Utc>, ParseError> {
    let bad = || ParseError::from(ParseErrorKind::BadTimestamp(caps["bsd"].to_string()));
    let month = month_number(&caps["mon"]).ok_or_else(bad)?;
    let day: u32 = caps["day"].parse().map_err(|_| bad())?;
    let hour: u32 = caps["h"].parse().map_err(|_| bad())?;
    let min: u32 = caps["m"].parse().map_err(|_| bad())?;
    let sec: u32 = caps["s"].parse().map_err(|_| bad())?;
    let nanos = match caps.name("frac") {
        Some(frac) => {
            let digits = frac.as_str();
            let value: u32 = digits.parse().map_err(|_| bad())?;
            value * 10u32.pow(9 - digits.len() as u32)
        }
        None => 0,
    };
    let naive = NaiveDate::from_ymd_opt(ctx.year, month, day)
        .and_then(|d| d.and_hms_nano_opt(hour, min, sec, nanos))
        .ok_or_else(bad)?;
    let local = ctx.offset.from_local_datetime(&naive).single().ok_or_else(bad)?;
    Ok(local.with_timezone(&Utc))
}
