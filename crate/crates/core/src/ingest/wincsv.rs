//! Rows of a Windows Event Viewer CSV export.

use chrono::{DateTime, FixedOffset, NaiveDateTime, TimeZone, Utc};

use crate::error::{ParseError, ParseErrorKind};
use crate::event::{flatten_message, EventRecord, Severity};

/// Column positions resolved from the header row. Header names are matched
/// exactly, ignoring ASCII case and surrounding whitespace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    pub level: usize,
    pub date_time: usize,
    pub source: usize,
    pub event_id: usize,
    pub message: usize,
    pub task_category: Option<usize>,
    pub computer: Option<usize>,
    /// Host used when the export has no computer column.
    pub default_host: String,
}

impl ColumnMap {
    /// Resolves the header. On failure returns the name of the first missing
    /// required column.
    pub fn from_header<S: AsRef<str>>(header: &[S], default_host: &str) -> Result<ColumnMap, &'static str> {
        let find = |name: &str| {
            header.iter().position(|h| {
                let h = h.as_ref().trim_start_matches('\u{feff}').trim();
                h.eq_ignore_ascii_case(name)
            })
        };
        let required = |name: &'static str| find(name).ok_or(name);
        Ok(ColumnMap {
            level: required("Level")?,
            date_time: required("Date and Time")?,
            source: required("Source")?,
            event_id: required("Event ID")?,
            message: required("Message")?,
            task_category: find("Task Category"),
            computer: find("Computer").or_else(|| find("Computer Name")),
            default_host: default_host.to_lowercase(),
        })
    }
}

/// Windows level names to severities; anything else is `Unknown`.
pub fn map_level(level: &str) -> Severity {
    match level.trim().to_ascii_lowercase().as_str() {
        "error" => Severity::Error,
        "warning" => Severity::Warning,
        "information" => Severity::Info,
        _ => Severity::Unknown,
    }
}

const LOCAL_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M:%S%.f",
    "%Y-%m-%dT%H:%M:%S%.f",
    "%m/%d/%Y %I:%M:%S %p",
    "%m/%d/%Y %H:%M:%S",
    "%d.%m.%Y %H:%M:%S",
];

fn parse_date_time(text: &str, offset: FixedOffset) -> Option<DateTime<Utc>> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Some(dt.with_timezone(&Utc));
    }
    LOCAL_FORMATS.iter().find_map(|fmt| {
        let naive = NaiveDateTime::parse_from_str(text, fmt).ok()?;
        Some(offset.from_local_datetime(&naive).single()?.with_timezone(&Utc))
    })
}

/// Parses one CSV row (cells already unescaped). `raw` is set to the row
/// re-encoded as CSV; ingest replaces it with the original bytes.
pub fn parse_windows_csv_row<S: AsRef<str>>(
    row: &[S],
    map: &ColumnMap,
    offset: FixedOffset,
) -> Result<EventRecord, ParseError> {
    let cell = |idx: usize, name: &'static str| {
        row.get(idx)
            .map(|c| c.as_ref())
            .ok_or(ParseError::from(ParseErrorKind::MissingField(name)))
    };

    let severity = map_level(cell(map.level, "Level")?);
    let when = cell(map.date_time, "Date and Time")?;
    let occurred_at = parse_date_time(when, offset).ok_or_else(|| ParseErrorKind::BadTimestamp(when.to_string()))?;
    let source = cell(map.source, "Source")?.trim();
    let id_text = cell(map.event_id, "Event ID")?.trim();
    let event_id = if id_text.is_empty() {
        None
    } else {
        Some(
            id_text
                .parse::<u32>()
                .map_err(|_| ParseErrorKind::BadEventId(id_text.to_string()))?,
        )
    };
    let message = flatten_message(cell(map.message, "Message")?.trim());
    if message.trim().is_empty() {
        return Err(ParseErrorKind::EmptyMessage.into());
    }
    let host = map
        .computer
        .and_then(|idx| row.get(idx))
        .map(|c| c.as_ref().trim().to_lowercase())
        .filter(|h| !h.is_empty())
        .unwrap_or_else(|| map.default_host.clone());

    Ok(EventRecord {
        occurred_at,
        host,
        source: (!source.is_empty()).then(|| source.to_string()),
        event_id,
        pid: None,
        severity,
        message,
        raw: reencode(row),
        seq: 0,
    })
}

fn reencode<S: AsRef<str>>(row: &[S]) -> Vec<u8> {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // Writing to a Vec cannot fail.
    writer
        .write_record(row.iter().map(|c| c.as_ref()))
        .expect("in-memory csv");
    let mut out = writer.into_inner().expect("in-memory csv");
    if out.last() == Some(&b'\n') {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utc() -> FixedOffset {
        FixedOffset::east_opt(0).unwrap()
    }

    fn map() -> ColumnMap {
        ColumnMap::from_header(
            &[
                "Level",
                "Date and Time",
                "Source",
                "Event ID",
                "Task Category",
                "Message",
            ],
            "laptop",
        )
        .unwrap()
    }

    #[test]
    fn information_row() {
        let row = [
            "Information",
            "2012-01-10 08:00:00",
            "MsiInstaller",
            "1033",
            "None",
            "Product installed",
        ];
        let ev = parse_windows_csv_row(&row, &map(), utc()).unwrap();
        assert_eq!(ev.severity, Severity::Info);
        assert_eq!(ev.event_id, Some(1033));
        assert_eq!(ev.source.as_deref(), Some("MsiInstaller"));
        assert_eq!(ev.host, "laptop");
        assert_eq!(ev.occurred_at.to_rfc3339(), "2012-01-10T08:00:00+00:00");
    }

    #[test]
    fn error_row_and_multiline_message() {
        let row = [
            "Error",
            "1/10/2012 8:00:00 PM",
            "Application Error",
            "1000",
            "(100)",
            "Faulting application\r\nwinword.exe",
        ];
        let ev = parse_windows_csv_row(&row, &map(), utc()).unwrap();
        assert_eq!(ev.severity, Severity::Error);
        assert_eq!(ev.message, "Faulting application winword.exe");
        assert_eq!(ev.occurred_at.to_rfc3339(), "2012-01-10T20:00:00+00:00");
    }

    #[test]
    fn bad_event_id() {
        let row = ["Warning", "2012-01-10 08:00:00", "x", "abc", "", "m"];
        let err = parse_windows_csv_row(&row, &map(), utc()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::BadEventId("abc".into()));
    }

    #[test]
    fn level_mapping() {
        assert_eq!(map_level("Warning"), Severity::Warning);
        assert_eq!(map_level("Critical"), Severity::Unknown);
        assert_eq!(map_level("Audit Success"), Severity::Unknown);
    }

    #[test]
    fn header_is_case_insensitive_and_order_free() {
        let m = ColumnMap::from_header(
            &[
                "\u{feff}message",
                "EVENT ID",
                "source",
                "date and time",
                "level",
                "Computer",
            ],
            "x",
        )
        .unwrap();
        assert_eq!((m.message, m.event_id, m.level, m.computer), (0, 1, 4, Some(5)));
        assert_eq!(
            ColumnMap::from_header(&["Level", "Date and Time", "Source", "Event ID"], "x").unwrap_err(),
            "Message"
        );
    }

    #[test]
    fn short_row() {
        let err = parse_windows_csv_row(&["Error", "2012-01-10 08:00:00"], &map(), utc()).unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingField("Source"));
    }
}
