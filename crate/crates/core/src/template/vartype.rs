//! Guessing what a variable slot holds from the values it absorbed.

use std::collections::HashMap;
use std::fmt;
use std::sync::OnceLock;

use regex::Regex;
use serde::Serialize;

use crate::store::EventStore;

use super::miner::{Slot, TemplateCatalog};
use super::tokenize::tokenize_words;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum VariableType {
    Port,
    WebAddress,
    VersionNumber,
    FileName,
    ErrorCode,
    Number,
    Unknown,
}

impl VariableType {
    /// Candidate types in tiebreak order.
    pub const CANDIDATES: [VariableType; 6] = [
        VariableType::Port,
        VariableType::WebAddress,
        VariableType::VersionNumber,
        VariableType::FileName,
        VariableType::ErrorCode,
        VariableType::Number,
    ];
}

impl fmt::Display for VariableType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// The type assigned to a slot and the fraction of its values that match it.
/// For `Unknown` the ratio is the best any candidate reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlotType {
    pub ty: VariableType,
    pub ratio: f64,
}

impl SlotType {
    pub fn is_known(&self) -> bool {
        self.ty != VariableType::Unknown
    }
}

struct Patterns {
    web: Regex,
    version: Regex,
    extension: Regex,
    hex: Regex,
    keyed_code: Regex,
    signed: Regex,
    number: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        web: Regex::new(r"(?i)^(?:[a-z][a-z0-9+.-]*://\S+|www\.\S+)$").unwrap(),
        version: Regex::new(r"^\d+(?:\.\d+)+$").unwrap(),
        extension: Regex::new(r"^[^./\\]\S*\.[A-Za-z][A-Za-z0-9]{0,7}$").unwrap(),
        hex: Regex::new(r"^0[xX][0-9a-fA-F]+$").unwrap(),
        keyed_code: Regex::new(r"(?i)^(?:error|code)[=:](?:[-+]?\d+|0x[0-9a-f]+)$").unwrap(),
        signed: Regex::new(r"^[-+]?\d+$").unwrap(),
        number: Regex::new(r"^[-+]?\d+(?:\.\d+)?$").unwrap(),
    })
}

/// Whether `value` has the shape of `ty`. `previous` is the word before
/// the value in its message; error codes may be introduced by "error" or
/// "code".
pub fn value_matches(ty: VariableType, value: &str, previous: Option<&str>) -> bool {
    let p = patterns();
    match ty {
        VariableType::Port => {
            !value.is_empty()
                && value.len() <= 5
                && value.bytes().all(|b| b.is_ascii_digit())
                && value.parse::<u32>().is_ok_and(|v| v <= 65_535)
        }
        VariableType::WebAddress => p.web.is_match(value),
        VariableType::VersionNumber => p.version.is_match(value),
        VariableType::FileName => value.contains('/') || value.contains('\\') || p.extension.is_match(value),
        VariableType::ErrorCode => {
            p.hex.is_match(value)
                || p.keyed_code.is_match(value)
                || (p.signed.is_match(value)
                    && previous.is_some_and(|w| {
                        let w = w.to_lowercase();
                        w == "error" || w == "code"
                    }))
        }
        VariableType::Number => p.number.is_match(value),
        VariableType::Unknown => false,
    }
}

/// Picks the candidate with the highest match ratio over `values`
/// (`(previous word, value)` pairs); it wins only when the ratio reaches
/// `threshold`. Ties go to the earlier candidate.
pub fn infer_type(values: &[(Option<&str>, &str)], threshold: f64) -> SlotType {
    if values.is_empty() {
        return SlotType {
            ty: VariableType::Unknown,
            ratio: 0.0,
        };
    }
    let mut best = (VariableType::Unknown, 0.0f64);
    for ty in VariableType::CANDIDATES {
        let hits = values.iter().filter(|(prev, v)| value_matches(ty, v, *prev)).count();
        let ratio = hits as f64 / values.len() as f64;
        if ratio > best.1 {
            best = (ty, ratio);
        }
    }
    if best.1 >= threshold {
        SlotType {
            ty: best.0,
            ratio: best.1,
        }
    } else {
        SlotType {
            ty: VariableType::Unknown,
            ratio: best.1,
        }
    }
}

/// Types every variable slot from the unmasked tokens of the events
/// assigned to its template.
pub fn type_variables(catalog: &TemplateCatalog, store: &EventStore, threshold: f64) -> TemplateCatalog {
    let by_seq: HashMap<u64, &str> = store.events().iter().map(|e| (e.seq, e.message.as_str())).collect();
    let mut members: HashMap<u32, Vec<Vec<&str>>> = HashMap::new();
    for (seq, id) in catalog.assignments() {
        if let Some(msg) = by_seq.get(seq) {
            members.entry(*id).or_default().push(tokenize_words(msg).collect());
        }
    }

    let mut out = catalog.clone();
    for template in out.templates_mut() {
        let rows = members.get(&template.id).map(Vec::as_slice).unwrap_or(&[]);
        for (pos, slot) in template.slots.iter_mut().enumerate() {
            if let Slot::Var(ty) = slot {
                let values: Vec<(Option<&str>, &str)> = rows
                    .iter()
                    .filter(|words| words.len() > pos)
                    .map(|words| (pos.checked_sub(1).map(|p| words[p]), words[pos]))
                    .collect();
                *ty = Some(infer_type(&values, threshold));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plain<'a>(vals: &[&'a str]) -> Vec<(Option<&'a str>, &'a str)> {
        vals.iter().map(|v| (None, *v)).collect()
    }

    #[test]
    fn ports() {
        let t = infer_type(&plain(&["80", "443", "8080"]), 0.9);
        assert_eq!(t.ty, VariableType::Port);
        assert_eq!(t.ratio, 1.0);
        assert_eq!(infer_type(&plain(&["70000", "80000"]), 0.9).ty, VariableType::Number);
    }

    #[test]
    fn file_names() {
        let t = infer_type(&plain(&["/etc/passwd", r"C:\a.txt"]), 0.9);
        assert_eq!(t.ty, VariableType::FileName);
        assert!(value_matches(VariableType::FileName, "report.docx", None));
        assert!(!value_matches(VariableType::FileName, "1.2.3", None));
    }

    #[test]
    fn below_threshold_is_unknown() {
        let t = infer_type(&plain(&["alpha", "80"]), 0.9);
        assert_eq!(t.ty, VariableType::Unknown);
        assert_eq!(t.ratio, 0.5);
        assert!(!t.is_known());
    }

    #[test]
    fn other_types() {
        assert_eq!(
            infer_type(&plain(&["http://a.b/c", "www.x.org"]), 0.9).ty,
            VariableType::WebAddress
        );
        assert_eq!(
            infer_type(&plain(&["14.0.4762.1000", "2.1"]), 0.9).ty,
            VariableType::VersionNumber
        );
        assert_eq!(
            infer_type(&plain(&["0x80070005", "0x1F"]), 0.9).ty,
            VariableType::ErrorCode
        );
        assert_eq!(
            infer_type(&[(Some("error"), "-5"), (Some("Code"), "70000")], 0.9).ty,
            VariableType::ErrorCode
        );
        assert_eq!(infer_type(&plain(&["-5", "3.25"]), 0.9).ty, VariableType::Number);
        assert_eq!(infer_type(&[], 0.9).ty, VariableType::Unknown);
    }
}
