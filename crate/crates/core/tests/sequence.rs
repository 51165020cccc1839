mod common;

use logmorph_core::sequence::*;
use logmorph_core::synth;
use num_rational::Ratio;
use proptest::prelude::*;

fn keys(symbols: &[u8]) -> Vec<EventKey> {
    symbols.iter().map(|&s| EventKey::id(u32::from(s))).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn pairs_match_oracle(stream in prop::collection::vec(0u8..3, 0..=20)) {
        let ks = keys(&stream);
        let pairs = mine_pairs(&Streams::single(ks.clone()));
        let (want, starts) = common::pairs_oracle(&ks);
        let got: std::collections::BTreeMap<_, _> = pairs
            .iter()
            .map(|p| ((p.antecedent.clone(), p.successor.clone()), p.pair_count))
            .collect();
        prop_assert_eq!(&got, &want);
        for p in &pairs {
            prop_assert_eq!(p.antecedent_total, starts[&p.antecedent]);
        }
        for a in starts.keys() {
            let sum: Ratio<u64> = pairs.iter().filter(|p| &p.antecedent == a).map(PairStat::confidence).sum();
            prop_assert_eq!(sum, Ratio::from_integer(1));
        }
        prop_assert_eq!(pairs.iter().map(|p| p.pair_count).sum::<u64>(), ks.len().saturating_sub(1) as u64);
    }

    #[test]
    fn ngrams_match_oracle(stream in prop::collection::vec(0u8..3, 0..=24), n_max in 2usize..5, min_support in 1u64..4) {
        let ks = keys(&stream);
        let grams = mine_ngrams(&Streams::single(ks.clone()), n_max, min_support).unwrap();
        let mut want = Vec::new();
        for n in 2..=n_max {
            let mut level: Vec<(Vec<EventKey>, u64)> = common::ngrams_oracle(&ks, n)
                .into_iter()
                .filter(|(_, c)| *c >= min_support)
                .collect();
            level.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            want.extend(level);
        }
        let got: Vec<(Vec<EventKey>, u64)> = grams.iter().map(|g| (g.keys.clone(), g.count)).collect();
        prop_assert_eq!(&got, &want);
        // A gram is never more frequent than any of its contiguous parts.
        let all = mine_ngrams(&Streams::single(ks.clone()), n_max, 1).unwrap();
        for g in &all {
            if g.n() > 2 {
                for part in [&g.keys[1..], &g.keys[..g.n() - 1]] {
                    prop_assert!(common::occurrences(&ks, part) >= g.count);
                }
            }
        }
    }

    #[test]
    fn pairs_never_cross_streams(a in prop::collection::vec(0u8..3, 0..10), b in prop::collection::vec(0u8..3, 0..10)) {
        let mut s = Streams::default();
        s.streams.insert("x".into(), keys(&a));
        s.streams.insert("y".into(), keys(&b));
        let total: u64 = mine_pairs(&s).iter().map(|p| p.pair_count).sum();
        prop_assert_eq!(total, (a.len().saturating_sub(1) + b.len().saturating_sub(1)) as u64);
    }
}

#[test]
fn injected_sequence_is_counted_exactly() {
    let store = synth::sequence_store(300, 9_000, 300);
    assert_eq!(store.len(), 9_000 + 4 * 300);
    let streams = build_stream(&store, KeySource::Id, Scope::Host).unwrap();
    let grams = mine_ngrams(&streams, 4, 100).unwrap();
    let target: Vec<String> = synth::INJECTED_SEQUENCE
        .iter()
        .map(|id| format!("Security:{id}"))
        .collect();
    let hit = grams
        .iter()
        .find(|g| g.keys.iter().map(ToString::to_string).collect::<Vec<_>>() == target)
        .expect("injected 4-gram reported");
    assert_eq!(hit.count, 300);
}

#[test]
fn confident_pairs_in_injected_stream() {
    let store = synth::sequence_store(1, 2_000, 50);
    let streams = build_stream(&store, KeySource::Id, Scope::Global).unwrap();
    let pairs = mine_pairs(&streams);
    let sure = filter_confident(&pairs, Ratio::from_integer(1), 2).unwrap();
    let names: Vec<(String, String)> = sure
        .iter()
        .map(|p| (p.antecedent.to_string(), p.successor.to_string()))
        .collect();
    for w in synth::INJECTED_SEQUENCE.windows(2) {
        assert!(names.contains(&(format!("Security:{}", w[0]), format!("Security:{}", w[1]))));
    }
}

#[test]
fn profile_is_deterministic() {
    let store = synth::sequence_store(5, 500, 20);
    let streams = build_stream(&store, KeySource::Id, Scope::Host).unwrap();
    let a = serde_json::to_string(&profile_report(&streams, None, &ProfileOptions::default()).unwrap()).unwrap();
    let b = serde_json::to_string(&profile_report(&streams, None, &ProfileOptions::default()).unwrap()).unwrap();
    assert_eq!(a, b);
}
