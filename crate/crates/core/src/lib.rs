//! Exploration toolkit for application event logs.
//!
//! The pipeline: [`ingest`] raw files into an [`EventStore`], then
//! [`rules`] classify events with regular expressions, [`template`] mines
//! message templates (constant text plus variable slots), [`text`] gathers
//! word and phrase statistics, and [`sequence`] mines adjacent event pairs
//! and frequent n-grams into per-machine profiles.

pub mod error;
pub mod event;
pub mod ingest;
pub mod rules;
pub mod sequence;
pub mod store;
pub mod synth;
pub mod template;
pub mod text;

pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use event::{EventRecord, MailEvent, Severity};
pub use store::{read_store, write_store, EventFilter, EventStore, StoreMeta};
