//! Reading log files into an [`EventStore`].

mod sendmail;
mod syslog;
mod wincsv;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::FixedOffset;

pub use sendmail::{is_mailer_tag, parse_mail_body, parse_sendmail_line, MailBody};
pub use syslog::{decode_priority, parse_syslog_line, SyslogContext};
pub use wincsv::{map_level, parse_windows_csv_row, ColumnMap};

use crate::error::{Error, ParseError, ParseErrorKind, Result};
use crate::event::EventRecord;
use crate::store::{decode_record, EventStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Syslog,
    WinCsv,
    Sendmail,
    Ndjson,
}

impl Format {
    pub fn name(self) -> &'static str {
        match self {
            Format::Syslog => "syslog",
            Format::WinCsv => "wincsv",
            Format::Sendmail => "sendmail",
            Format::Ndjson => "ndjson",
        }
    }

    /// BSD timestamps carry no year, so these formats need one supplied.
    pub fn needs_year(self) -> bool {
        matches!(self, Format::Syslog | Format::Sendmail)
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "syslog" => Ok(Format::Syslog),
            "wincsv" => Ok(Format::WinCsv),
            "sendmail" => Ok(Format::Sendmail),
            "ndjson" => Ok(Format::Ndjson),
            other => Err(format!(
                "unknown format {other:?} (expected syslog, wincsv, sendmail or ndjson)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub format: Format,
    pub year: Option<i32>,
    pub offset: FixedOffset,
}

impl IngestOptions {
    pub fn new(format: Format) -> Self {
        IngestOptions {
            format,
            year: None,
            offset: FixedOffset::east_opt(0).expect("zero offset"),
        }
    }

    pub fn year(mut self, year: i32) -> Self {
        self.year = Some(year);
        self
    }
}

/// A line (or CSV record) that did not parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub file: PathBuf,
    pub line: usize,
    pub reason: String,
    pub raw: Vec<u8>,
}

impl Reject {
    /// Tab-separated rejects-file line: file, line number, reason, raw bytes.
    pub fn to_tsv(&self) -> Vec<u8> {
        let mut out = format!("{}\t{}\t{}\t", self.file.display(), self.line, self.reason).into_bytes();
        out.extend_from_slice(&self.raw);
        out
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileSummary {
    pub path: PathBuf,
    pub accepted: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestSummary {
    pub accepted: usize,
    pub rejected: usize,
    pub files: Vec<FileSummary>,
    pub rejects: Vec<Reject>,
    /// Repeated `key=` occurrences seen in sendmail bodies.
    pub duplicate_keys: usize,
}

/// Splits file bytes into lines on `\n`. A final newline does not start an
/// extra empty line.
fn split_lines(bytes: &[u8]) -> impl Iterator<Item = &[u8]> {
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let empty = bytes.is_empty();
    body.split(|&b| b == b'\n').filter(move |_| !empty)
}

fn default_host_for(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().to_lowercase())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "localhost".to_string())
}

/// Parses every file in argument order and appends accepted events to
/// `store` in file order, then line order. Per-line failures are tallied in
/// the summary; an unreadable file or a CSV header without the required
/// columns aborts the whole call before anything is appended.
pub fn ingest_files<P: AsRef<Path>>(
    store: &mut EventStore,
    paths: &[P],
    opts: &IngestOptions,
) -> Result<IngestSummary> {
    let ctx = match (opts.format.needs_year(), opts.year) {
        (true, None) => {
            return Err(Error::Argument(format!("format {} needs a year", opts.format)));
        }
        (_, year) => SyslogContext {
            year: year.unwrap_or(1970),
            offset: opts.offset,
        },
    };

    let mut parsed = Vec::with_capacity(paths.len());
    for path in paths {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        parsed.push(parse_file(path, &bytes, opts.format, &ctx)?);
    }

    let mut summary = IngestSummary::default();
    for (path, file) in paths.iter().zip(parsed) {
        let mut fs = FileSummary {
            path: path.as_ref().to_path_buf(),
            ..FileSummary::default()
        };
        for outcome in file.outcomes {
            match outcome {
                Ok(ev) => {
                    store.push(ev);
                    fs.accepted += 1;
                }
                Err((err, raw)) => {
                    fs.rejected += 1;
                    summary.rejects.push(Reject {
                        file: fs.path.clone(),
                        line: err.line,
                        reason: err.kind.to_string(),
                        raw,
                    });
                }
            }
        }
        summary.accepted += fs.accepted;
        summary.rejected += fs.rejected;
        summary.duplicate_keys += file.duplicate_keys;
        summary.files.push(fs);
    }
    Ok(summary)
}

type Outcome = std::result::Result<EventRecord, (ParseError, Vec<u8>)>;

struct ParsedFile {
    outcomes: Vec<Outcome>,
    duplicate_keys: usize,
}

fn parse_file(path: &Path, bytes: &[u8], format: Format, ctx: &SyslogContext) -> Result<ParsedFile> {
    let mut duplicate_keys = 0;
    let outcomes = match format {
        Format::WinCsv => parse_csv_file(path, bytes, ctx.offset)?,
        Format::Syslog | Format::Sendmail | Format::Ndjson => split_lines(bytes)
            .enumerate()
            .map(|(idx, line)| {
                let result = match format {
                    Format::Syslog => parse_syslog_line(line, ctx),
                    Format::Sendmail => parse_sendmail_line(line, ctx).map(|mail| {
                        duplicate_keys += mail.duplicate_keys;
                        mail.base
                    }),
                    _ => parse_ndjson_line(line),
                };
                result.map_err(|e| (e.at_line(idx + 1), line.to_vec()))
            })
            .collect(),
    };
    Ok(ParsedFile {
        outcomes,
        duplicate_keys,
    })
}

fn parse_ndjson_line(line: &[u8]) -> std::result::Result<EventRecord, ParseError> {
    let text = std::str::from_utf8(line).map_err(|e| ParseErrorKind::Json(e.to_string()))?;
    if text.trim().is_empty() {
        return Err(ParseErrorKind::EmptyLine.into());
    }
    decode_record(text).map_err(|e| ParseErrorKind::Json(e).into())
}

fn parse_csv_file(path: &Path, bytes: &[u8], offset: FixedOffset) -> Result<Vec<Outcome>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .has_headers(true)
        .from_reader(bytes);
    let header: Vec<String> = reader
        .byte_headers()
        .map_err(|e| Error::Config {
            path: path.to_path_buf(),
            reason: format!("unreadable CSV header: {e}"),
        })?
        .iter()
        .map(|c| String::from_utf8_lossy(c).into_owned())
        .collect();
    let map = ColumnMap::from_header(&header, &default_host_for(path)).map_err(|missing| Error::Config {
        path: path.to_path_buf(),
        reason: format!("CSV header has no {missing:?} column"),
    })?;

    let mut outcomes = Vec::new();
    let mut record = csv::ByteRecord::new();
    loop {
        let start = reader.position().clone();
        let read = reader.read_byte_record(&mut record);
        let end = reader.position().byte() as usize;
        let raw = trim_terminator(&bytes[start.byte() as usize..end]).to_vec();
        let line = record.position().map_or(start.line() as usize, |p| p.line() as usize);
        match read {
            Ok(false) => break,
            Ok(true) => {
                let cells: Vec<String> = record.iter().map(|c| String::from_utf8_lossy(c).into_owned()).collect();
                let parsed = parse_windows_csv_row(&cells, &map, offset)
                    .map(|mut ev| {
                        ev.raw = raw.clone();
                        ev
                    })
                    .map_err(|e| (e.at_line(line), raw));
                outcomes.push(parsed);
            }
            Err(err) => {
                outcomes.push(Err((
                    ParseError::new(ParseErrorKind::Csv(err.to_string())).at_line(line),
                    raw,
                )));
                if reader.position().byte() == start.byte() {
                    break;
                }
            }
        }
    }
    Ok(outcomes)
}

fn trim_terminator(bytes: &[u8]) -> &[u8] {
    let bytes = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    bytes.strip_suffix(b"\r").unwrap_or(bytes)
}
