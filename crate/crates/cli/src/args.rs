use std::path::PathBuf;

use chrono::{DateTime, FixedOffset, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use logmorph_core::ingest::Format;
use logmorph_core::sequence::{parse_ratio, KeyMode, Scope};
use logmorph_core::template::{parse_stage_list, MaskKind};
use logmorph_core::Severity;
use num_rational::Ratio;

/// Explore application event logs: ingest, classify, mine templates,
/// word statistics and event sequences.
#[derive(Parser, Debug)]
#[command(name = "logmorph", version, arg_required_else_help = true)]
pub struct Cli {
    /// Event store (NDJSON).
    #[arg(long, global = true, default_value = "events.ndjson")]
    pub store: PathBuf,

    /// Directory for reports.
    #[arg(long, global = true, env = "LOGMORPH_OUT", default_value = "logmorph-reports")]
    pub out: PathBuf,

    /// Layout of tabular reports.
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Csv)]
    pub output_format: OutputFormat,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Ndjson,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Parse log files into the event store.
    Ingest(IngestArgs),
    /// Classify events with regular-expression rules.
    Classify(ClassifyArgs),
    /// Mine message templates.
    Templates(TemplateArgs),
    /// Word frequencies, negation bigrams and keyword suggestions.
    Words(WordsArgs),
    /// Locate phrases in event messages.
    Phrases(PhrasesArgs),
    /// Adjacent event pairs with confidence.
    Pairs(PairsArgs),
    /// Frequent contiguous event sequences.
    Ngrams(NgramArgs),
    /// Per-machine profile document.
    Profile(ProfileArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,

    #[arg(long, value_parser = parse_format)]
    pub format: Format,

    /// Year for timestamps that carry none (required for syslog and sendmail).
    #[arg(long)]
    pub year: Option<i32>,

    /// UTC offset of timestamps without one, e.g. +02:00.
    #[arg(long, value_parser = parse_offset, default_value = "+00:00")]
    pub tz: FixedOffset,

    /// Add to an existing store instead of replacing it.
    #[arg(long)]
    pub append: bool,
}

/// Restricts which events an analysis sees.
#[derive(Args, Debug, Default, Clone)]
pub struct FilterArgs {
    #[arg(long)]
    pub host: Option<String>,

    #[arg(long)]
    pub source: Option<String>,

    /// Event id or inclusive range such as 4624-4634.
    #[arg(long, value_parser = parse_id_range)]
    pub id: Option<(u32, u32)>,

    /// Severity label (e.g. error) or code.
    #[arg(long)]
    pub severity: Option<Severity>,

    /// Earliest timestamp (RFC 3339).
    #[arg(long)]
    pub from: Option<DateTime<Utc>>,

    /// Latest timestamp (RFC 3339).
    #[arg(long)]
    pub to: Option<DateTime<Utc>>,
}

#[derive(Args, Debug, Clone)]
pub struct RulesArg {
    /// Rule file; the bundled sendmail rules when omitted.
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct MinerArgs {
    /// Mask stages, comma-separated: timestamp, pid, host, ip, number, hex.
    #[arg(long, value_parser = parse_stages, default_value = "timestamp,pid")]
    pub mask: Stages,

    /// Absolute support threshold; max(2, ceil(0.001 * N)) when omitted.
    #[arg(long)]
    pub support: Option<usize>,

    #[arg(long, default_value_t = 0.9)]
    pub type_threshold: f64,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub rules: RulesArg,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Args, Debug)]
pub struct TemplateArgs {
    #[command(flatten)]
    pub miner: MinerArgs,

    /// Merge templates whose slot distance is at most this.
    #[arg(long)]
    pub merge_distance: Option<f64>,

    /// Stage list per refinement step, e.g. --refine ts,pid --refine ts,pid,host.
    /// The last catalog is then merged at --merge-distance (default 0.2).
    #[arg(long, value_parser = parse_stages)]
    pub refine: Vec<Stages>,

    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Args, Debug)]
pub struct WordsArgs {
    /// Rows per table; 0 keeps all.
    #[arg(long, default_value_t = 0)]
    pub top: usize,

    /// Drop words present in more than this fraction of messages from keywords.
    #[arg(long, default_value_t = 0.5)]
    pub ubiquity: f64,

    #[command(flatten)]
    pub rules: RulesArg,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Args, Debug)]
pub struct PhrasesArgs {
    #[arg(required = true)]
    pub phrases: Vec<String>,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Args, Debug, Clone)]
pub struct KeyArgs {
    #[arg(long, value_parser = parse_mode, default_value = "id")]
    pub mode: KeyMode,

    #[arg(long, value_parser = parse_scope, default_value = "host")]
    pub scope: Scope,

    #[command(flatten)]
    pub miner: MinerArgs,
    #[command(flatten)]
    pub rules: RulesArg,
    #[command(flatten)]
    pub filter: FilterArgs,
}

#[derive(Args, Debug)]
pub struct PairsArgs {
    /// Keep pairs with confidence at least this (decimal or fraction).
    #[arg(long, value_parser = parse_confidence, default_value = "0.5")]
    pub min_confidence: Ratio<u64>,

    /// Keep pairs whose antecedent starts at least this many pairs.
    #[arg(long, default_value_t = 1)]
    pub min_antecedent: u64,

    #[command(flatten)]
    pub keys: KeyArgs,
}

#[derive(Args, Debug)]
pub struct NgramArgs {
    #[arg(long, default_value_t = 4)]
    pub n_max: usize,

    #[arg(long, default_value_t = 2)]
    pub min_support: u64,

    #[command(flatten)]
    pub keys: KeyArgs,
}

#[derive(Args, Debug)]
pub struct ProfileArgs {
    /// Entries per list.
    #[arg(long, default_value_t = 10)]
    pub top: usize,

    #[arg(long, default_value_t = 4)]
    pub n_max: usize,

    #[arg(long, default_value_t = 2)]
    pub min_support: u64,

    #[command(flatten)]
    pub keys: KeyArgs,
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

/// A comma-separated mask stage list as one argument value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Stages(pub Vec<MaskKind>);

impl Stages {
    pub fn label(&self) -> String {
        let names: Vec<&str> = self.0.iter().map(|k| k.name()).collect();
        names.join(",")
    }
}

fn parse_stages(s: &str) -> Result<Stages, String> {
    parse_stage_list(s).map(Stages)
}

fn parse_mode(s: &str) -> Result<KeyMode, String> {
    s.parse()
}

fn parse_scope(s: &str) -> Result<Scope, String> {
    s.parse()
}

fn parse_confidence(s: &str) -> Result<Ratio<u64>, String> {
    let r = parse_ratio(s)?;
    if *r.numer() == 0 || r > Ratio::from_integer(1) {
        return Err(format!("confidence must be in (0, 1], got {s}"));
    }
    Ok(r)
}

fn parse_offset(s: &str) -> Result<FixedOffset, String> {
    match s {
        "Z" | "z" | "UTC" | "utc" => Ok(FixedOffset::east_opt(0).expect("zero offset")),
        _ => s
            .parse()
            .map_err(|_| format!("invalid offset {s:?} (expected e.g. +02:00)")),
    }
}

fn parse_id_range(s: &str) -> Result<(u32, u32), String> {
    let bad = || format!("invalid event id or range {s:?}");
    match s.split_once('-') {
        Some((lo, hi)) => {
            let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
            let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
            if lo > hi {
                return Err(bad());
            }
            Ok((lo, hi))
        }
        None => {
            let id: u32 = s.trim().parse().map_err(|_| bad())?;
            Ok((id, id))
        }
    }
}
