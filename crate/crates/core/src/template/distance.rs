use std::collections::BTreeMap;

use super::miner::{Slot, Template, TemplateCatalog};
use super::tokenize::Token;

/// Unit-cost token edit distance divided by the longer length. Masked
/// tokens equal masked tokens of the same kind. Two empty sequences are at
/// distance 0.
pub fn token_distance(a: &[Token], b: &[Token]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    edit_distance(a, b) as f64 / longest as f64
}

/// Levenshtein distance over tokens, two-row table.
pub fn edit_distance(a: &[Token], b: &[Token]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ta) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let substitute = prev[j] + usize::from(ta != tb);
            cur[j + 1] = substitute.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn slot_cost(a: &Slot, b: &Slot) -> usize {
    match (a, b) {
        (Slot::Var(_), Slot::Var(_)) => 0,
        (Slot::Const(x), Slot::Const(y)) => usize::from(x != y),
        (Slot::Masked(x), Slot::Masked(y)) => usize::from(x != y),
        _ => 1,
    }
}

/// Positional distance between two equal-length templates, normalized by
/// length. `None` for different lengths.
pub fn slot_distance(a: &Template, b: &Template) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    if a.is_empty() {
        return Some(0.0);
    }
    let cost: usize = a.slots.iter().zip(&b.slots).map(|(x, y)| slot_cost(x, y)).sum();
    Some(cost as f64 / a.len() as f64)
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

fn merged_slots(members: &[&Template]) -> Vec<Slot> {
    let first = members[0];
    (0..first.len())
        .map(|pos| {
            let slot = &first.slots[pos];
            let uniform = slot.is_fixed() && members.iter().all(|m| &m.slots[pos] == slot);
            if uniform {
                slot.clone()
            } else {
                Slot::Var(None)
            }
        })
        .collect()
}

/// Single-link merge of equal-length templates whose slot distance is at
/// most `max_distance`. A merged template keeps the smallest member id and
/// the summed support; positions where members disagree become untyped
/// variables. A component whose merge would leave no constant slot is kept
/// unmerged.
pub fn merge_templates(catalog: &TemplateCatalog, max_distance: f64) -> TemplateCatalog {
    let templates = catalog.templates();
    let mut parent: Vec<usize> = (0..templates.len()).collect();

    let mut by_len: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, t) in templates.iter().enumerate() {
        by_len.entry(t.len()).or_default().push(i);
    }
    for group in by_len.values() {
        for (k, &i) in group.iter().enumerate() {
            for &j in &group[k + 1..] {
                let d = slot_distance(&templates[i], &templates[j]).expect("same length");
                if d <= max_distance {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    if ri != rj {
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                }
            }
        }
    }

    let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..templates.len() {
        let root = find(&mut parent, i);
        components.entry(root).or_default().push(i);
    }

    let mut remap: BTreeMap<u32, u32> = BTreeMap::new();
    let mut out = Vec::new();
    for members in components.values() {
        let refs: Vec<&Template> = members.iter().map(|&i| &templates[i]).collect();
        if refs.len() == 1 {
            out.push(refs[0].clone());
            continue;
        }
        let slots = merged_slots(&refs);
        if !slots.iter().any(|s| matches!(s, Slot::Const(_))) {
            out.extend(refs.iter().map(|t| (*t).clone()));
            continue;
        }
        let id = refs.iter().map(|t| t.id).min().expect("non-empty component");
        let mut examples: Vec<u64> = refs.iter().flat_map(|t| t.example_seqs.iter().copied()).collect();
        examples.sort_unstable();
        examples.truncate(3);
        for t in &refs {
            remap.insert(t.id, id);
        }
        out.push(Template {
            id,
            slots,
            support: refs.iter().map(|t| t.support).sum(),
            example_seqs: examples,
        });
    }

    let assignments = catalog
        .assignments()
        .iter()
        .map(|(&seq, &id)| (seq, remap.get(&id).copied().unwrap_or(id)))
        .collect();
    TemplateCatalog::new(
        out,
        catalog.outliers().to_vec(),
        assignments,
        catalog.support_threshold(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::tokenize::MaskKind;

    fn toks(s: &str) -> Vec<Token> {
        s.split_whitespace().map(Token::word).collect()
    }

    fn tpl(id: u32, slots: &[&str], support: usize) -> Template {
        Template {
            id,
            slots: slots
                .iter()
                .map(|s| match *s {
                    "_" => Slot::Var(None),
                    "*" => Slot::Masked(MaskKind::Timestamp),
                    c => Slot::Const(c.to_string()),
                })
                .collect(),
            support,
            example_seqs: vec![u64::from(id)],
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(token_distance(&toks("a b c"), &toks("a b c")), 0.0);
        assert!((token_distance(&toks("a b c"), &toks("a x c")) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(token_distance(&[], &toks("a b")), 1.0);
        assert_eq!(token_distance(&[], &[]), 0.0);
        let m = vec![Token::Masked(MaskKind::Pid)];
        assert_eq!(token_distance(&m, &m), 0.0);
        assert_eq!(token_distance(&m, &[Token::Masked(MaskKind::Ip)]), 1.0);
        assert_eq!(edit_distance(&toks("kitten sat"), &toks("sat")), 1);
    }

    #[test]
    fn merge_identity_at_zero() {
        let cat = TemplateCatalog::new(
            vec![tpl(1, &["a", "b", "c", "d"], 5), tpl(2, &["a", "x", "c", "d"], 3)],
            vec![],
            BTreeMap::new(),
            2,
        );
        assert_eq!(merge_templates(&cat, 0.0), cat);
    }

    #[test]
    fn merge_one_differing_const() {
        let assignments = BTreeMap::from([(10, 1), (11, 2)]);
        let cat = TemplateCatalog::new(
            vec![tpl(1, &["a", "b", "c", "d"], 5), tpl(2, &["a", "x", "c", "d"], 3)],
            vec![99],
            assignments,
            2,
        );
        let merged = merge_templates(&cat, 0.25);
        assert_eq!(merged.len(), 1);
        let t = &merged.templates()[0];
        assert_eq!(t.id, 1);
        assert_eq!(t.support, 8);
        assert_eq!(t.skeleton(), "a (...) c d");
        assert_eq!(merged.template_of(11), Some(1));
        assert_eq!(merged.outliers(), &[99]);
        assert_eq!(merge_templates(&cat, 0.24).len(), 2);
    }

    #[test]
    fn lengths_never_merge() {
        let cat = TemplateCatalog::new(
            vec![tpl(1, &["a", "b"], 2), tpl(2, &["a", "b", "c"], 2)],
            vec![],
            BTreeMap::new(),
            2,
        );
        assert_eq!(merge_templates(&cat, 1.0).len(), 2);
    }

    #[test]
    fn var_matches_var_and_constless_merge_refused() {
        let a = tpl(1, &["a", "_", "*"], 2);
        let b = tpl(2, &["a", "_", "*"], 2);
        assert_eq!(slot_distance(&a, &b), Some(0.0));
        let c = tpl(3, &["x", "_"], 2);
        let d = tpl(4, &["y", "_"], 2);
        let cat = TemplateCatalog::new(vec![c, d], vec![], BTreeMap::new(), 2);
        assert_eq!(merge_templates(&cat, 1.0).len(), 2);
    }
}
