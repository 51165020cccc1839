use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::Serialize;

use crate::store::EventStore;

/// Volatile field kinds that masking abstracts away.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskKind {
    Timestamp,
    Pid,
    Host,
    Ip,
    Number,
    Hex,
}

impl MaskKind {
    pub const ALL: [MaskKind; 6] = [
        MaskKind::Timestamp,
        MaskKind::Pid,
        MaskKind::Host,
        MaskKind::Ip,
        MaskKind::Number,
        MaskKind::Hex,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MaskKind::Timestamp => "timestamp",
            MaskKind::Pid => "pid",
            MaskKind::Host => "host",
            MaskKind::Ip => "ip",
            MaskKind::Number => "number",
            MaskKind::Hex => "hex",
        }
    }

    /// Timestamps render as the wildcard `*`; everything else as `(...)`.
    pub fn symbol(self) -> &'static str {
        match self {
            MaskKind::Timestamp => WILDCARD,
            _ => PLACEHOLDER,
        }
    }
}

pub const WILDCARD: &str = "*";
pub const PLACEHOLDER: &str = "(...)";

impl fmt::Display for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "timestamp" | "ts" | "time" => Ok(MaskKind::Timestamp),
            "pid" => Ok(MaskKind::Pid),
            "host" | "node" => Ok(MaskKind::Host),
            "ip" => Ok(MaskKind::Ip),
            "number" | "num" => Ok(MaskKind::Number),
            "hex" => Ok(MaskKind::Hex),
            other => Err(format!("unknown mask stage {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Token {
    Word(String),
    Masked(MaskKind),
}

impl Token {
    pub fn word(text: &str) -> Token {
        Token::Word(text.to_string())
    }

    pub fn render(&self) -> &str {
        match self {
            Token::Word(w) => w,
            Token::Masked(kind) => kind.symbol(),
        }
    }
}

pub type TokenSeq = Vec<Token>;

/// Splits on whitespace runs and strips trailing `,` `.` `;` `:` from each
/// word. Words that are nothing but that punctuation disappear.
pub fn tokenize(message: &str) -> TokenSeq {
    tokenize_words(message).map(|w| Token::Word(w.to_string())).collect()
}

pub(crate) fn tokenize_words(message: &str) -> impl Iterator<Item = &str> {
    message
        .split_whitespace()
        .map(|w| w.trim_end_matches([',', '.', ';', ':']))
        .filter(|w| !w.is_empty())
}

/// Joins rendered tokens with single spaces.
pub fn render(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(t.render());
    }
    out
}

/// One masking stage: a token is masked when it matches `pattern` in full,
/// or when it matches the `after` token pattern and the preceding word
/// matches the `after` context pattern.
#[derive(Debug, Clone)]
pub struct MaskStage {
    pub kind: MaskKind,
    pattern: Regex,
    after: Option<(Regex, Regex)>,
}

fn anchored(pattern: &str) -> Regex {
    Regex::new(&format!("^(?:{pattern})$")).expect("mask pattern compiles")
}

impl MaskStage {
    pub fn new(kind: MaskKind, pattern: &str) -> Result<MaskStage, regex::Error> {
        Ok(MaskStage {
            kind,
            pattern: Regex::new(&format!("^(?:{pattern})$"))?,
            after: None,
        })
    }

    /// Adds a contextual rule: `token` is masked when the previous word
    /// matches `previous`.
    pub fn with_context(mut self, previous: &str, token: &str) -> Result<MaskStage, regex::Error> {
        self.after = Some((
            Regex::new(&format!("^(?:{previous})$"))?,
            Regex::new(&format!("^(?:{token})$"))?,
        ));
        Ok(self)
    }

    pub fn builtin(kind: MaskKind) -> MaskStage {
        let (pattern, after) = builtin_parts(kind);
        MaskStage {
            kind,
            pattern: anchored(&pattern),
            after: after.map(|(prev, tok)| (anchored(prev), anchored(tok))),
        }
    }

    /// A host stage that masks the given names (case-insensitive) as well
    /// as anything the built-in host pattern recognizes.
    pub fn hosts<I, S>(names: I) -> MaskStage
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut names: Vec<String> = names
            .into_iter()
            .map(|n| regex::escape(n.as_ref()))
            .filter(|n| !n.is_empty())
            .collect();
        names.sort();
        names.dedup();
        if names.is_empty() {
            return MaskStage::builtin(MaskKind::Host);
        }
        let (base, _) = builtin_parts(MaskKind::Host);
        MaskStage {
            kind: MaskKind::Host,
            pattern: anchored(&format!("(?i:{})|{base}", names.join("|"))),
            after: None,
        }
    }

    /// Built-in stages for `kinds`, in the given order.
    pub fn list(kinds: &[MaskKind]) -> Vec<MaskStage> {
        kinds.iter().map(|&k| MaskStage::builtin(k)).collect()
    }

    fn applies(&self, previous: Option<&str>, word: &str) -> bool {
        if self.pattern.is_match(word) {
            return true;
        }
        match (&self.after, previous) {
            (Some((ctx, tok)), Some(prev)) => ctx.is_match(prev) && tok.is_match(word),
            _ => false,
        }
    }
}

type Context = Option<(&'static str, &'static str)>;

fn builtin_parts(kind: MaskKind) -> (String, Context) {
    let br = |p: &str| format!(r"[\[(<]?(?:{p})[\])>]?");
    match kind {
        MaskKind::Timestamp => (
            br(concat!(
                r"\d{1,2}:\d{2}:\d{2}(?:[.,]\d+)?",
                r"|\d{4}-\d{2}-\d{2}(?:[T_]\d{2}:\d{2}(?::\d{2}(?:[.,]\d+)?)?)?(?:Z|[+-]\d{2}:?\d{2})?",
                r"|\d{4}/\d{2}/\d{2}|\d{1,2}/\d{1,2}/\d{4}|\d{1,2}\.\d{1,2}\.\d{4}",
            )),
            None,
        ),
        MaskKind::Pid => (
            r"(?i)pid[=:#]?\d+|\[\d+\]|[A-Za-z][\w./-]*\[\d+\]".to_string(),
            Some((r"(?i)pid|process|proc", r"\d+")),
        ),
        MaskKind::Host => (
            r"(?i)[a-z][a-z_-]*\d+(?:[.-][a-z0-9-]+)*|(?:[a-z0-9-]+\.){2,}[a-z]{2,}\.?".to_string(),
            None,
        ),
        MaskKind::Ip => (
            br(concat!(
                r"(?:\d{1,3}\.){3}\d{1,3}(?::\d{1,5})?",
                r"|(?i:(?:[0-9a-f]{1,4}:){7}[0-9a-f]{1,4}",
                r"|(?:[0-9a-f]{1,4}(?::[0-9a-f]{1,4})*)?::(?:[0-9a-f]{1,4}(?::[0-9a-f]{1,4})*)?)",
            )),
            None,
        ),
        MaskKind::Number => (r"[-+]?\d+(?:\.\d+)?".to_string(), None),
        MaskKind::Hex => (r"0[xX][0-9a-fA-F]+|[0-9a-fA-F]{8,}".to_string(), None),
    }
}

/// Parses a comma-separated stage list such as `timestamp,pid`.
pub fn parse_stage_list(text: &str) -> Result<Vec<MaskKind>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let kind: MaskKind = part.parse()?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    Ok(out)
}

/// Replaces each word matched by a stage with `Masked(kind)` of the first
/// such stage. Context rules look at the previous token's original text.
pub fn apply_masks(tokens: &[Token], stages: &[MaskStage]) -> TokenSeq {
    let mut out = Vec::with_capacity(tokens.len());
    let mut previous: Option<&str> = None;
    for token in tokens {
        match token {
            Token::Word(word) => {
                let masked = stages.iter().find(|s| s.applies(previous, word));
                out.push(match masked {
                    Some(stage) => Token::Masked(stage.kind),
                    None => token.clone(),
                });
                previous = Some(word);
            }
            Token::Masked(_) => {
                out.push(token.clone());
                previous = None;
            }
        }
    }
    out
}

/// Masked, rendered form of one message.
pub fn skeleton(message: &str, stages: &[MaskStage]) -> String {
    render(&apply_masks(&tokenize(message), stages))
}

/// Number of distinct skeletons over the store's messages.
pub fn unique_skeleton_count(store: &EventStore, stages: &[MaskStage]) -> usize {
    store
        .events()
        .iter()
        .map(|e| skeleton(&e.message, stages))
        .collect::<HashSet<_>>()
        .len()
}
