//! Seeded fixture generators with known ground truth.
//!
//! Used by tests, benchmarks and demos. The same seed always produces the
//! same corpus.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::event::{EventRecord, Severity};
use crate::store::EventStore;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn epoch() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 3, 1, 0, 0, 0).unwrap()
}

fn record(host: &str, source: Option<&str>, at: DateTime<Utc>, message: String) -> EventRecord {
    EventRecord {
        occurred_at: at,
        host: host.to_string(),
        source: source.map(str::to_string),
        event_id: None,
        pid: None,
        severity: Severity::Info,
        raw: message.as_bytes().to_vec(),
        message,
        seq: 0,
    }
}

/// Parameter slot kinds for generated messages.
#[derive(Debug, Clone, Copy)]
enum Param {
    User,
    Word,
    Num,
    Port,
    Ip,
    Hex,
    Path,
    Fqdn,
    Clock,
}

fn letters(rng: &mut ChaCha8Rng, n: usize) -> String {
    (0..n).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
}

fn fill(rng: &mut ChaCha8Rng, p: Param) -> String {
    match p {
        Param::User => format!("u{}", letters(rng, 6)),
        Param::Word => letters(rng, 7),
        Param::Num => rng.gen_range(0..1_000_000u32).to_string(),
        Param::Port => rng.gen_range(1024..=65535u32).to_string(),
        Param::Ip => format!(
            "10.{}.{}.{}",
            rng.gen_range(0..=255u8),
            rng.gen_range(0..=255u8),
            rng.gen_range(1..=254u8)
        ),
        Param::Hex => format!("0x{:010x}", rng.gen_range(0..1u64 << 40)),
        Param::Path => format!("/etc/{}/{}.conf", letters(rng, 5), letters(rng, 6)),
        Param::Fqdn => format!("{}.example.net", letters(rng, 8)),
        Param::Clock => format!(
            "{:02}:{:02}:{:02}",
            rng.gen_range(0..24u8),
            rng.gen_range(0..60u8),
            rng.gen_range(0..60u8)
        ),
    }
}

/// Message shapes for the template-recovery fixture. `{}` marks a
/// parameter; parameters are drawn from spaces large enough that no value
/// repeats often enough to look constant.
const SKELETONS: [(&str, &[Param]); 12] = [
    ("session opened for user {} by uid {}", &[Param::User, Param::Num]),
    ("connection from {} port {} closed", &[Param::Ip, Param::Port]),
    ("disk {} usage at {} percent", &[Param::Word, Param::Num]),
    (
        "failed password for {} from {} port {} ssh2",
        &[Param::User, Param::Ip, Param::Port],
    ),
    ("service {} started with pid {}", &[Param::Word, Param::Num]),
    ("backup job {} finished in {} seconds", &[Param::Hex, Param::Num]),
    ("cache miss for key {}", &[Param::Hex]),
    (
        "queue {} length {} exceeds limit {}",
        &[Param::Word, Param::Num, Param::Num],
    ),
    ("usb device {} attached on bus {}", &[Param::Num, Param::Num]),
    ("config file {} reloaded", &[Param::Path]),
    ("scheduled task {} completed at {}", &[Param::Word, Param::Clock]),
    ("dns lookup for {} timed out after {} ms", &[Param::Fqdn, Param::Num]),
];

pub const SKELETON_COUNT: usize = SKELETONS.len();

/// Rendered shape of skeleton `i` with `(...)` for every parameter.
pub fn skeleton_shape(i: usize) -> String {
    SKELETONS[i].0.replace("{}", "(...)")
}

fn instantiate(rng: &mut ChaCha8Rng, i: usize) -> String {
    let (shape, params) = SKELETONS[i];
    let mut out = String::new();
    let mut parts = shape.split("{}");
    out.push_str(parts.next().unwrap_or(""));
    for (part, p) in parts.zip(params.iter()) {
        out.push_str(&fill(rng, *p));
        out.push_str(part);
    }
    out
}

/// A store plus the generating skeleton of every event, indexed by seq.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    pub store: EventStore,
    pub labels: Vec<usize>,
}

/// `n` events drawn uniformly from the twelve skeletons, one per second.
pub fn template_corpus(seed: u64, n: usize) -> LabeledCorpus {
    let mut rng = rng(seed);
    let mut store = EventStore::new();
    let mut labels = Vec::with_capacity(n);
    for k in 0..n {
        let i = rng.gen_range(0..SKELETON_COUNT);
        let msg = instantiate(&mut rng, i);
        let at = epoch() + Duration::seconds(k as i64);
        let seq = store.push(record("node01", Some("app"), at, msg));
        debug_assert_eq!(seq as usize, labels.len());
        labels.push(i);
    }
    LabeledCorpus { store, labels }
}

const ADJECTIVES: [&str; 10] = [
    "primary", "backup", "remote", "local", "shared", "cached", "mirrored", "archived", "pending", "default",
];
const NOUNS: [&str; 10] = [
    "volume", "mailbox", "printer", "spooler", "tunnel", "journal", "index", "socket", "profile", "license",
];
const VERBS: [&str; 5] = ["mounted", "refreshed", "rotated", "verified", "released"];

/// One generated message with the volatile fields it contains.
#[derive(Debug, Clone)]
pub struct MaskedMessage {
    pub message: String,
    pub timestamp: String,
    pub pid: String,
}

/// 500 distinct skeletons, each emitted twice with a different timestamp
/// and PID, so masking both halves the number of distinct messages.
pub fn masking_corpus(seed: u64) -> (EventStore, Vec<MaskedMessage>) {
    let mut rng = rng(seed);
    let mut store = EventStore::new();
    let mut fields = Vec::with_capacity(1000);
    let mut k = 0i64;
    for adj in ADJECTIVES {
        for noun in NOUNS {
            for verb in VERBS {
                let secs = rng.gen_range(0..86_399u32);
                let pid = rng.gen_range(100..30_000u32);
                for variant in 0..2u32 {
                    let s = secs + variant;
                    let ts = format!("{:02}:{:02}:{:02}", s / 3600, s / 60 % 60, s % 60);
                    let pid = (pid + variant * 7).to_string();
                    let message = format!("{adj} {noun} {verb} at {ts} pid {pid}");
                    store.push(record(
                        "node01",
                        Some("svc"),
                        epoch() + Duration::seconds(k),
                        message.clone(),
                    ));
                    k += 1;
                    fields.push(MaskedMessage {
                        message,
                        timestamp: ts,
                        pid,
                    });
                }
            }
        }
    }
    (store, fields)
}

pub const INJECTED_SEQUENCE: [u32; 4] = [900, 1066, 902, 1003];

const NOISE_IDS: [u32; 14] = [
    4624, 4634, 4648, 4672, 4688, 5379, 6005, 6006, 7036, 7040, 10016, 1074, 1014, 8198,
];

/// Event ids of a noise stream of `noise` events with `INJECTED_SEQUENCE`
/// inserted exactly `injections` times at random points. Noise never uses
/// the injected ids.
pub fn injected_ids(seed: u64, noise: usize, injections: usize) -> Vec<u32> {
    let mut rng = rng(seed);
    let mut points: Vec<usize> = (0..injections).map(|_| rng.gen_range(0..=noise)).collect();
    points.sort_unstable();
    let mut out = Vec::with_capacity(noise + 4 * injections);
    let mut next = points.iter().peekable();
    for i in 0..=noise {
        while next.peek() == Some(&&i) {
            out.extend_from_slice(&INJECTED_SEQUENCE);
            next.next();
        }
        if i < noise {
            out.push(*NOISE_IDS.choose(&mut rng).expect("non-empty"));
        }
    }
    out
}

/// `injected_ids` as a single-host store of Security events.
pub fn sequence_store(seed: u64, noise: usize, injections: usize) -> EventStore {
    let mut store = EventStore::new();
    for (k, id) in injected_ids(seed, noise, injections).into_iter().enumerate() {
        let mut ev = record(
            "ws01",
            Some("Security"),
            epoch() + Duration::seconds(k as i64),
            format!("event {id}"),
        );
        ev.event_id = Some(id);
        store.push(ev);
    }
    store
}

pub const PLANTED_PHRASES: [&str; 2] = ["not able", "no user action is required"];

const FILLER: [&str; 24] = [
    "the",
    "server",
    "was",
    "unable",
    "to",
    "start",
    "service",
    "disk",
    "check",
    "completed",
    "update",
    "failed",
    "driver",
    "loaded",
    "user",
    "action",
    "required",
    "network",
    "adapter",
    "reset",
    "is",
    "capable",
    "retry",
    "later",
];

/// A planted phrase occurrence: which phrase, in which event, at which
/// character offset of the message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Planted {
    pub phrase: usize,
    pub seq: u64,
    pub offset: usize,
}

fn shuffle_case(rng: &mut ChaCha8Rng, text: &str) -> String {
    match rng.gen_range(0..3) {
        0 => text.to_string(),
        1 => text.to_uppercase(),
        _ => text
            .chars()
            .map(|c| if rng.gen_bool(0.5) { c.to_ascii_uppercase() } else { c })
            .collect(),
    }
}

/// `n` messages of filler words, some carrying trailing punctuation, with
/// the two phrases planted in random case at random word boundaries. The
/// filler never contains "not", "no" or "able", so planted hits are the
/// only hits.
pub fn phrase_corpus(seed: u64, n: usize) -> (EventStore, Vec<Planted>) {
    let mut rng = rng(seed);
    let mut store = EventStore::new();
    let mut planted = Vec::new();
    for k in 0..n {
        let words = rng.gen_range(3..14);
        let mut msg = String::new();
        let mut offset = 0usize;
        let mut pending = Vec::new();
        for w in 0..words {
            if w > 0 {
                msg.push(' ');
                offset += 1;
            }
            let piece = if rng.gen_bool(0.08) {
                let phrase = rng.gen_range(0..PLANTED_PHRASES.len());
                pending.push((phrase, offset));
                shuffle_case(&mut rng, PLANTED_PHRASES[phrase])
            } else {
                let filler = FILLER.choose(&mut rng).expect("non-empty");
                let mut word = shuffle_case(&mut rng, filler);
                if rng.gen_bool(0.1) {
                    word.push(*[',', '.', ';', ':'].choose(&mut rng).expect("non-empty"));
                }
                word
            };
            offset += piece.chars().count();
            msg.push_str(&piece);
        }
        let seq = store.push(record(
            "desk07",
            Some("app"),
            epoch() + Duration::seconds(k as i64),
            msg,
        ));
        planted.extend(
            pending
                .into_iter()
                .map(|(phrase, offset)| Planted { phrase, seq, offset }),
        );
    }
    (store, planted)
}

/// Syslog lines from a small mail relay: sendmail traffic mixed with
/// unrelated daemons. Timestamps lack a year, as in real BSD syslog.
pub fn maillog_lines(seed: u64, n: usize) -> Vec<String> {
    let mut rng = rng(seed);
    let start = epoch();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let at = start + Duration::seconds(k as i64 * 3);
        let stamp = at.format("%b %e %H:%M:%S");
        let host = ["mx1", "mx2"][rng.gen_range(0..2)];
        let pid = rng.gen_range(1000..40_000u32);
        let qid = format!(
            "{}{:06}",
            letters(&mut rng, 8).to_uppercase(),
            rng.gen_range(0..1_000_000u32)
        );
        let user = letters(&mut rng, 6);
        let (tag, body) = match rng.gen_range(0..10) {
            0..=2 => (
                "sm-mta",
                format!(
                    "{qid}: from=<{user}@example.org>, size={}, class=0, nrcpts=1, msgid=<{}@example.org>, proto=ESMTP, daemon=MTA, relay=localhost [127.0.0.1]",
                    rng.gen_range(300..90_000u32),
                    letters(&mut rng, 10)
                ),
            ),
            3..=5 => (
                "sm-mta",
                format!(
                    "{qid}: to=<{user}@example.com>, delay=00:00:0{}, xdelay=00:00:01, mailer=esmtp, pri=120{}, relay=mail.example.com. [192.0.2.{}], dsn=2.0.0, stat=Sent (ok)",
                    rng.gen_range(0..10u8),
                    rng.gen_range(100..999u32),
                    rng.gen_range(1..255u8)
                ),
            ),
            6 => ("sm-mta", format!("{qid}: <{user}@example.com>... User unknown")),
            7 => (
                "sendmail",
                format!("{qid}: to=<{user}@example.net>, delay=00:01:00, mailer=esmtp, stat=Deferred: Connection refused by mx.example.net."),
            ),
            8 => ("sshd", format!("Accepted publickey for {user} from 192.0.2.{} port {}", rng.gen_range(1..255u8), rng.gen_range(1024..65535u32))),
            _ => ("cron", format!("({user}) CMD (run-parts /etc/cron.hourly)")),
        };
        let pri = 8 * 2 + rng.gen_range(5..7);
        out.push(format!("<{pri}>{stamp} {host} {tag}[{pid}]: {body}"));
    }
    out
}

/// `template_corpus` plus heartbeat messages naming one of eight nodes and
/// three near-identical printer messages. Masking hosts folds the eight
/// heartbeat templates into one; merging at d >= 1/6 folds the printer ones.
pub fn refinement_corpus(seed: u64, n: usize) -> EventStore {
    let base = template_corpus(seed, n);
    let mut rng = rng(seed ^ 0x5eed);
    let mut store = base.store;
    let extra = n / 4;
    let start = epoch() + Duration::seconds(n as i64);
    for k in 0..extra {
        let msg = if rng.gen_bool(0.5) {
            format!(
                "heartbeat from node{:02} missed at {}",
                rng.gen_range(1..=8u8),
                fill(&mut rng, Param::Clock)
            )
        } else {
            let queue = ["alpha", "beta", "gamma"][rng.gen_range(0..3)];
            format!(
                "printer queue {queue} paused by operator {}",
                fill(&mut rng, Param::User)
            )
        };
        store.push(record("node01", Some("app"), start + Duration::seconds(k as i64), msg));
    }
    store
}
