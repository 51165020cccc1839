//! Acceptance checks, one line of output per criterion. Runs without the
//! libtest harness so the lines always show up; exits non-zero on failure.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use logmorph_core::ingest::decode_priority;
use logmorph_core::rules::{classify_all, Category, RuleSet};
use logmorph_core::sequence::*;
use logmorph_core::synth;
use logmorph_core::template::*;
use logmorph_core::text::{find_phrases, word_frequencies};
use num_rational::Ratio;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

const RECOVERY_EVENTS: usize = 10_000;
const RECOVERY_BUDGET: Duration = Duration::from_secs(5);

fn template_recovery() -> Outcome {
    let corpus = synth::template_corpus(20_240_301, RECOVERY_EVENTS);
    let start = Instant::now();
    let catalog = mine_templates(&corpus.store, &MinerConfig::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(
        catalog.len() == synth::SKELETON_COUNT,
        "{} templates, want {}",
        catalog.len(),
        synth::SKELETON_COUNT
    );
    let mut mapping: BTreeMap<usize, u32> = BTreeMap::new();
    for (seq, label) in corpus.labels.iter().enumerate() {
        let Some(id) = catalog.template_of(seq as u64) else {
            return Err(format!("event {seq} not assigned"));
        };
        let first = *mapping.entry(*label).or_insert(id);
        ensure!(first == id, "skeleton {label} split across templates {first} and {id}");
    }
    let distinct: BTreeSet<u32> = mapping.values().copied().collect();
    ensure!(distinct.len() == synth::SKELETON_COUNT, "skeletons share templates");
    ensure!(
        elapsed < RECOVERY_BUDGET,
        "took {elapsed:?}, budget {RECOVERY_BUDGET:?}"
    );
    Ok(format!(
        "{} templates, {}/{} events assigned to their skeleton, {:.0} ms",
        catalog.len(),
        RECOVERY_EVENTS,
        RECOVERY_EVENTS,
        elapsed.as_secs_f64() * 1e3
    ))
}

fn masking_reduction() -> Outcome {
    let (store, fields) = synth::masking_corpus(7);
    let stages = MaskStage::list(&[MaskKind::Timestamp, MaskKind::Pid]);
    let before = unique_skeleton_count(&store, &[]);
    let after = unique_skeleton_count(&store, &stages);
    let items: Vec<(String, String, String)> = fields
        .iter()
        .map(|f| (f.message.clone(), f.timestamp.clone(), f.pid.clone()))
        .collect();
    let oracle = common::masked_distinct(&items);
    ensure!(before == 1000, "unmasked {before}, want 1000");
    ensure!(oracle == 500, "oracle {oracle}, want 500");
    ensure!(after == oracle, "masked {after}, oracle {oracle}");
    Ok(format!("unique skeletons {before} -> {after} (oracle {oracle})"))
}

const PAIR_CASES: u32 = 1000;

fn pair_confidence() -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases: PAIR_CASES,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&prop::collection::vec(0u32..3, 0..=20), |stream| {
            let keys: Vec<EventKey> = stream.into_iter().map(EventKey::id).collect();
            let pairs = mine_pairs(&Streams::single(keys.clone()));
            let (want, starts) = common::pairs_oracle(&keys);
            let got: BTreeMap<(EventKey, EventKey), u64> = pairs
                .iter()
                .map(|p| ((p.antecedent.clone(), p.successor.clone()), p.pair_count))
                .collect();
            prop_assert_eq!(&got, &want);
            for a in starts.keys() {
                let sum: Ratio<u64> = pairs
                    .iter()
                    .filter(|p| &p.antecedent == a)
                    .map(PairStat::confidence)
                    .sum();
                prop_assert_eq!(sum, Ratio::from_integer(1));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!(
        "{PAIR_CASES} random streams: pairs equal oracle, confidences sum to exactly 1"
    ))
}

fn injected_sequence() -> Outcome {
    let store = synth::sequence_store(1066, 9_000, 300);
    let streams = build_stream(&store, KeySource::Id, Scope::Host).map_err(|e| e.to_string())?;
    let grams = mine_ngrams(&streams, 4, 100).map_err(|e| e.to_string())?;
    let target: Vec<EventKey> = synth::INJECTED_SEQUENCE
        .iter()
        .map(|&id| EventKey::Id {
            source: Some("Security".into()),
            id,
        })
        .collect();
    let Some(hit) = grams.iter().find(|g| g.keys == target) else {
        return Err("4-gram <900,1066,902,1003> not reported".into());
    };
    ensure!(hit.count == 300, "count {}, want 300", hit.count);
    Ok("<900,1066,902,1003> reported with count 300 (n_max 4, min_support 100)".into())
}

fn ruleset_fixture() -> Outcome {
    let rules = RuleSet::sendmail();
    let tally = rules.category_tally();
    let want = [
        (Category::Info, 26),
        (Category::Notice, 18),
        (Category::Debug, 2),
        (Category::Alert, 2),
        (Category::Warning, 1),
        (Category::Critical, 4),
        (Category::Security, 1),
    ];
    for (cat, n) in want {
        ensure!(tally[&cat] == n, "{cat}: {} rules, want {n}", tally[&cat]);
    }
    let others: usize = tally
        .iter()
        .filter(|(c, _)| !want.iter().any(|(w, _)| w == *c))
        .map(|(_, n)| n)
        .sum();
    ensure!(others == 0, "{others} rules outside the expected categories");
    let listed: usize = want.iter().map(|(_, n)| n).sum();
    ensure!(
        rules.len() == listed,
        "{} rules, category counts sum to {listed}",
        rules.len()
    );
    Ok(format!(
        "{} rules: info 26, notice 18, debug 2, alert 2, warning 1, critical 4, security 1 (the stated total of 53 disagrees with this breakdown, which sums to {listed})",
        rules.len()
    ))
}

fn priority_decoding() -> Outcome {
    for pri in 0..=191u32 {
        let (facility, sev) = decode_priority(pri).map_err(|e| format!("pri {pri}: {e}"))?;
        let code = sev
            .code()
            .ok_or_else(|| format!("pri {pri}: severity without a code"))?;
        ensure!(facility <= 23, "pri {pri}: facility {facility}");
        ensure!(
            8 * u32::from(facility) + u32::from(code) == pri,
            "pri {pri} decoded as ({facility}, {code})"
        );
    }
    ensure!(decode_priority(192).is_err(), "192 accepted");
    Ok("all 192 priorities decode to 8*facility + severity".into())
}

fn word_phrase_stats() -> Outcome {
    let (store, planted) = synth::phrase_corpus(7, 1000);
    let table = word_frequencies(&store);
    let oracle = common::word_count_oracle(store.events().iter().map(|e| e.message.as_str()));
    ensure!(table.counts() == &oracle, "word table differs from brute-force counter");
    let hits = find_phrases(&store, &synth::PLANTED_PHRASES).map_err(|e| e.to_string())?;
    let got: BTreeSet<(String, u64, usize)> = hits.iter().map(|h| (h.phrase.clone(), h.seq, h.offset)).collect();
    let want: BTreeSet<(String, u64, usize)> = planted
        .iter()
        .map(|p| (synth::PLANTED_PHRASES[p.phrase].to_string(), p.seq, p.offset))
        .collect();
    ensure!(hits.len() == got.len(), "duplicate hits");
    ensure!(got == want, "{} hits, {} planted", got.len(), want.len());
    Ok(format!(
        "{} words ({} distinct) equal the oracle; {} planted phrases found at their offsets",
        table.total(),
        table.distinct(),
        want.len()
    ))
}

fn mining_outputs(store: &logmorph_core::EventStore) -> Result<Vec<String>, String> {
    let err = |e: logmorph_core::Error| e.to_string();
    let cfg = MinerConfig::default();
    let catalog = mine_templates(store, &cfg).map_err(err)?;
    let typed = type_variables(&catalog, store, cfg.type_threshold);
    let merged = merge_templates(&typed, cfg.merge_distance);
    let rules = RuleSet::sendmail();
    let tally = classify_all(store, &rules);
    let streams = build_stream(store, KeySource::Template(Some(&catalog)), Scope::Host).map_err(err)?;
    let pairs = mine_pairs(&streams);
    let grams = mine_ngrams(&streams, 4, 2).map_err(err)?;
    let profile = profile_report(&streams, Some(&tally), &ProfileOptions::default()).map_err(err)?;
    let words: Vec<String> = word_frequencies(store)
        .report()
        .iter()
        .map(|(w, c)| format!("{w}\t{c}"))
        .collect();
    Ok(vec![
        catalog.render(),
        typed.render(),
        merged.render(),
        format!("{:?}", tally.per_class),
        pairs_csv(&pairs),
        ngrams_csv(&grams),
        serde_json::to_string_pretty(&profile).map_err(|e| e.to_string())?,
        words.join("\n"),
    ])
}

fn determinism_conservation() -> Outcome {
    let store = synth::refinement_corpus(99, 4_000);
    let first = mining_outputs(&store)?;
    let second = mining_outputs(&store)?;
    ensure!(first == second, "mining outputs differ between runs");

    let catalog = mine_templates(&store, &MinerConfig::default()).map_err(|e| e.to_string())?;
    ensure!(
        catalog.total_support() + catalog.outlier_count() == store.len(),
        "templates {} + outliers {} != {}",
        catalog.total_support(),
        catalog.outlier_count(),
        store.len()
    );
    let mut mail = logmorph_core::EventStore::new();
    for line in synth::maillog_lines(3, 2_000) {
        let ctx = logmorph_core::ingest::SyslogContext::utc(2024);
        mail.push(logmorph_core::ingest::parse_syslog_line(line.as_bytes(), &ctx).map_err(|e| e.to_string())?);
    }
    let tally = classify_all(&mail, &RuleSet::sendmail());
    let classes: usize = tally.per_class.iter().map(|(_, _, n)| n).sum();
    ensure!(
        classes + tally.unmatched == mail.len(),
        "classes {classes} + unmatched {} != {}",
        tally.unmatched,
        mail.len()
    );

    let stage_lists = vec![
        (
            "ts,pid".to_string(),
            MaskStage::list(&[MaskKind::Timestamp, MaskKind::Pid]),
        ),
        (
            "ts,pid,host".to_string(),
            MaskStage::list(&[MaskKind::Timestamp, MaskKind::Pid, MaskKind::Host]),
        ),
    ];
    let (steps, _) = refinement_curve(&store, &MinerConfig::default(), &stage_lists).map_err(|e| e.to_string())?;
    let curve: Vec<usize> = steps.iter().map(|s| s.classes).collect();
    ensure!(
        curve.windows(2).all(|w| w[1] <= w[0]),
        "refinement curve {curve:?} increases"
    );
    Ok(format!(
        "{} outputs byte-identical across reruns; supports+outliers = {}; classes+unmatched = {}; refinement curve {:?}",
        first.len(),
        store.len(),
        mail.len(),
        curve
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 8] = [
        ("template recovery", template_recovery),
        ("masking reduction", masking_reduction),
        ("pair confidence", pair_confidence),
        ("sequence fixture", injected_sequence),
        ("ruleset fixture", ruleset_fixture),
        ("priority decoding", priority_decoding),
        ("word/phrase stats", word_phrase_stats),
        ("determinism and conservation", determinism_conservation),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS criterion {} ({name}): {detail}", i + 1),
            Err(reason) => {
                failed += 1;
                println!("FAIL criterion {} ({name}): {reason}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
