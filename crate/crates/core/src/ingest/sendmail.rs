//! sendmail maillog lines: a syslog line whose body is
//! `[queue-id: ]key=value, key=value, ...`.

use crate::error::{ParseError, ParseErrorKind};
use crate::event::MailEvent;

use super::syslog::{parse_syslog_line, SyslogContext};

/// Syslog tags sendmail logs under.
pub fn is_mailer_tag(tag: &str) -> bool {
    tag == "sendmail" || tag.starts_with("sm-")
}

fn is_queue_id(token: &str) -> bool {
    token.len() >= 8 && token.bytes().all(|b| b.is_ascii_alphanumeric())
}

fn split_kv(fragment: &str) -> Option<(&str, &str)> {
    let (key, value) = fragment.split_once('=')?;
    let key_ok = !key.is_empty()
        && key
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-' || b == b'.');
    key_ok.then_some((key, value))
}

/// The parsed body of a mailer message.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MailBody {
    pub queue_id: Option<String>,
    pub kv: Vec<(String, String)>,
    pub rest: Vec<String>,
    pub duplicate_keys: usize,
}

/// Splits a mailer message body. Fields are separated by `", "`; recipient
/// lists inside `to=` use a bare comma and stay in one value.
pub fn parse_mail_body(message: &str) -> MailBody {
    let mut body = MailBody::default();
    let mut text = message.trim();

    if let Some((first, after)) = text.split_once(char::is_whitespace) {
        if let Some(id) = first.strip_suffix(':') {
            if is_queue_id(id) {
                body.queue_id = Some(id.to_string());
                text = after.trim_start();
            }
        }
    } else if let Some(id) = text.strip_suffix(':') {
        if is_queue_id(id) {
            body.queue_id = Some(id.to_string());
            text = "";
        }
    }

    for fragment in text.split(", ").map(str::trim).filter(|f| !f.is_empty()) {
        match split_kv(fragment) {
            Some((key, value)) => {
                if let Some(slot) = body.kv.iter_mut().find(|(k, _)| k == key) {
                    slot.1 = value.to_string();
                    body.duplicate_keys += 1;
                } else {
                    body.kv.push((key.to_string(), value.to_string()));
                }
            }
            None => body.rest.push(fragment.to_string()),
        }
    }
    body
}

pub fn parse_sendmail_line(line: &[u8], ctx: &SyslogContext) -> Result<MailEvent, ParseError> {
    let base = parse_syslog_line(line, ctx)?;
    let tag = base.source.as_deref().unwrap_or("");
    if !is_mailer_tag(tag) {
        return Err(ParseErrorKind::NotMailer(tag.to_string()).into());
    }
    let MailBody {
        queue_id,
        kv,
        rest,
        duplicate_keys,
    } = parse_mail_body(&base.message);
    Ok(MailEvent {
        base,
        queue_id,
        kv,
        rest,
        duplicate_keys,
    })
}
