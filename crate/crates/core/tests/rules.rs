use std::collections::BTreeMap;

use logmorph_core::ingest::{parse_sendmail_line, SyslogContext};
use logmorph_core::rules::{classify, classify_all, load_rules, Category, ClassTally, RuleSet};
use logmorph_core::{EventRecord, EventStore, Severity};
use proptest::prelude::*;

fn mail(line: &str) -> EventRecord {
    parse_sendmail_line(line.as_bytes(), &SyslogContext::utc(2024))
        .unwrap()
        .base
}

fn class_of(line: &str) -> Option<String> {
    classify(&mail(line), &RuleSet::sendmail()).map(|m| m.rule)
}

#[test]
fn sendmail_samples() {
    let cases = [
        (
            "<22>Mar  1 10:00:00 mx sm-mta[1]: u2A1B2C3004567: <bob@example.com>... User unknown",
            "user-unknown",
        ),
        (
            "<22>Mar  1 10:00:00 mx sendmail[1]: u2A1B2C3004567: invalid root address",
            "invalid-root-address",
        ),
        (
            "<22>Mar  1 10:00:00 mx sendmail[1]: u2A1B2C3004567: Syntax error in mailbox address",
            "syntax-error",
        ),
        (
            "<22>Mar  1 10:00:00 mx sendmail[1]: u2A1B2C3004567: message size exceeds fixed maximum message size",
            "message-size-exceeded",
        ),
        (
            "<22>Mar  1 10:00:00 mx sm-mta[1]: u2A1B2C3004567: to=<a@b.c>, delay=00:00:01, mailer=local, stat=Sent",
            "sent-local",
        ),
        (
            "<22>Mar  1 10:00:00 mx sm-mta[1]: u2A1B2C3004567: to=<a@b.c>, mailer=esmtp, stat=Sent (ok)",
            "sent-relay",
        ),
        (
            "<22>Mar  1 10:00:00 mx sm-mta[1]: u2A1B2C3004567: from=<a@b.c>, size=10, class=0, nrcpts=1",
            "from-envelope",
        ),
        (
            "<22>Mar  1 10:00:00 mx sm-mta[1]: u2A1B2C3004567: from=<>, size=10, class=0, nrcpts=1",
            "from-null-sender",
        ),
        (
            "<22>Mar  1 10:00:00 mx sm-mta[1]: u2A1B2C3004567: to=<a@b.c>, stat=Deferred: Connection refused by x.",
            "deferred-connection-refused",
        ),
        (
            "<22>Mar  1 10:00:00 mx sm-mta[1]: u2A1B2C3004567: SYSERR(root): collect: I/O error",
            "syserr",
        ),
        (
            "<22>Mar  1 10:00:00 mx sm-mta[1]: possible SMTP attack: command=HELO, count=5",
            "possible-smtp-attack",
        ),
        (
            "<22>Mar  1 10:00:00 mx sm-mta[1]: starting daemon (8.15.2): SMTP+queueing@00:10:00",
            "daemon-start",
        ),
    ];
    for (line, want) in cases {
        assert_eq!(class_of(line).as_deref(), Some(want), "{line}");
    }
    assert_eq!(
        class_of("<22>Mar  1 10:00:00 mx sm-mta[1]: nothing recognisable here"),
        None
    );
}

#[test]
fn source_pattern_restricts_rules() {
    let mut ev = mail("<22>Mar  1 10:00:00 mx sm-mta[1]: u2A1B2C3004567: <bob@x>... User unknown");
    ev.source = Some("postfix".into());
    assert!(classify(&ev, &RuleSet::sendmail()).is_none());
}

#[test]
fn bundled_rules_load_from_file() {
    let dir = tempfile::TempDir::new().unwrap();
    let path = dir.path().join("sendmail.rules");
    std::fs::write(&path, RuleSet::sendmail_source()).unwrap();
    let rules = load_rules(&path).unwrap();
    assert_eq!(rules.len(), RuleSet::sendmail().len());
}

#[test]
fn load_errors_name_the_line() {
    for (text, line) in [
        ("a\tinfo\t-\t-\tx\na\tinfo\t-\t-\ty\n", 2),
        ("# c\nbad\tinfo\t-\t-\t(unclosed\n", 2),
        ("x\tnonsense\t-\t-\ty\n", 1),
    ] {
        let err = RuleSet::parse(text).unwrap_err();
        assert!(err.to_string().contains(&format!("line {line}")), "{err}");
    }
    let empty = RuleSet::parse("# nothing\n").unwrap();
    assert!(empty.is_empty());
    assert!(empty.category_tally().values().all(|&n| n == 0));
}

#[test]
fn explicit_priority_beats_file_order() {
    let rules = RuleSet::parse("late\tinfo\t-\t-\tdisk\t9\nearly\tcritical\t-\t-\tdisk\t5\n").unwrap();
    let mut ev = mail("<22>Mar  1 10:00:00 mx sm-mta[1]: disk failure");
    ev.seq = 4;
    let m = classify(&ev, &rules).unwrap();
    assert_eq!((m.rule.as_str(), m.category, m.seq), ("early", Category::Critical, 4));
}

type CrossTab = BTreeMap<(Severity, Option<Category>), usize>;

fn brute_tally(store: &EventStore, rules: &RuleSet) -> (BTreeMap<String, usize>, usize, CrossTab) {
    let mut per_class = BTreeMap::new();
    let mut unmatched = 0;
    let mut cross = BTreeMap::new();
    for ev in store.events() {
        let mut best: Option<(i64, usize, String, Category)> = None;
        for r in rules.rules() {
            if !r.message_pattern.is_match(&ev.message) {
                continue;
            }
            if r.source_pattern
                .as_ref()
                .is_some_and(|p| !ev.source.as_deref().is_some_and(|s| p.is_match(s)))
            {
                continue;
            }
            if r.id_match.is_some_and(|id| ev.event_id != Some(id)) {
                continue;
            }
            let cand = (r.priority, r.line, r.name.clone(), r.category);
            if best.as_ref().is_none_or(|b| (cand.0, cand.1) < (b.0, b.1)) {
                best = Some(cand);
            }
        }
        match best {
            Some((_, _, name, cat)) => {
                *per_class.entry(name).or_insert(0) += 1;
                *cross.entry((ev.severity, Some(cat))).or_insert(0) += 1;
            }
            None => {
                unmatched += 1;
                *cross.entry((ev.severity, None)).or_insert(0) += 1;
            }
        }
    }
    (per_class, unmatched, cross)
}

fn maillog_store(seed: u64, n: usize) -> EventStore {
    let mut store = EventStore::new();
    for line in logmorph_core::synth::maillog_lines(seed, n) {
        let mut ev = logmorph_core::ingest::parse_syslog_line(line.as_bytes(), &SyslogContext::utc(2024)).unwrap();
        ev.seq = 0;
        store.push(ev);
    }
    store
}

fn check_against_oracle(store: &EventStore, rules: &RuleSet, tally: &ClassTally) {
    let (per_class, unmatched, cross) = brute_tally(store, rules);
    let got: BTreeMap<String, usize> = tally
        .per_class
        .iter()
        .filter(|(_, _, n)| *n > 0)
        .map(|(r, _, n)| (r.clone(), *n))
        .collect();
    assert_eq!(got, per_class);
    assert_eq!(tally.unmatched, unmatched);
    assert_eq!(tally.cross, cross);
    let sum: usize = tally.per_class.iter().map(|(_, _, n)| n).sum();
    assert_eq!(sum + tally.unmatched, store.len());
    assert_eq!(tally.per_category.values().sum::<usize>(), tally.matched());
}

#[test]
fn tally_matches_brute_force() {
    let store = maillog_store(11, 2000);
    let rules = RuleSet::sendmail();
    let tally = classify_all(&store, &rules);
    check_against_oracle(&store, &rules, &tally);
    assert!(tally.unmatched > 0 && tally.matched() > 0);
}

#[test]
fn info_events_in_critical_class() {
    let rules = RuleSet::parse("crash\tcritical\t-\t-\tpanic\n").unwrap();
    let mut store = EventStore::new();
    for msg in ["kernel panic", "panic again", "all good"] {
        let mut ev = mail("<22>Mar  1 10:00:00 mx sm-mta[1]: x");
        ev.message = msg.into();
        ev.severity = Severity::Info;
        store.push(ev);
    }
    let tally = classify_all(&store, &rules);
    assert_eq!(tally.cross_cell(Severity::Info, Some(Category::Critical)), 2);
    assert_eq!(tally.cross_cell(Severity::Info, None), 1);
    assert!(classify_all(&EventStore::new(), &rules)
        .per_class
        .iter()
        .all(|(_, _, n)| *n == 0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Adding a rule anywhere never lowers the matched count, and tallies
    // always agree with the oracle.
    #[test]
    fn adding_rules_is_monotone(keep in prop::collection::vec(any::<bool>(), 54), extra in 0usize..54, seed in 0u64..1000) {
        let all: Vec<&str> = RuleSet::sendmail_source().lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).collect();
        let subset: Vec<&str> = all.iter().zip(&keep).filter(|(_, k)| **k).map(|(l, _)| *l).collect();
        let mut bigger = subset.clone();
        if !subset.contains(&all[extra]) {
            bigger.insert(0, all[extra]);
        }
        let store = maillog_store(seed, 120);
        let small_rules = RuleSet::parse(&subset.join("\n")).unwrap();
        let big_rules = RuleSet::parse(&bigger.join("\n")).unwrap();
        let small = classify_all(&store, &small_rules);
        let big = classify_all(&store, &big_rules);
        prop_assert!(big.matched() >= small.matched());
        check_against_oracle(&store, &big_rules, &big);
    }
}
