use std::fs;

use anyhow::{bail, Context, Result};
use logmorph_core::ingest::{ingest_files, IngestOptions};
use logmorph_core::rules::{classify_all, load_rules, Category, RuleSet};
use logmorph_core::sequence::{
    build_stream, filter_confident, format_ratio, mine_ngrams, mine_pairs, profile_report, KeyMode, KeySource,
    ProfileOptions, Scope, Streams,
};
use logmorph_core::template::{
    merge_templates, mine_templates, refinement_curve, type_variables, unique_skeleton_count, MaskStage, MinerConfig,
    TemplateCatalog,
};
use logmorph_core::text::{
    find_phrases, focus_table, negation_scan, suggest_keywords, word_frequencies, KeywordOptions, WordTable,
};
use logmorph_core::{read_store, write_store, EventFilter, EventStore};
use num_rational::Ratio;
use serde_json::json;

use crate::args::*;
use crate::report::{Header, Input, Table, Writer};

pub struct Env<'a> {
    pub cli: &'a Cli,
    pub writer: Writer,
}

impl Env<'_> {
    fn header(&self, command: &'static str) -> Header {
        let mut h = Header::new(command);
        h.set("store", self.cli.store.display());
        h.set("output_format", format!("{:?}", self.cli.output_format).to_lowercase());
        h
    }

    /// Loads the store, applies the filter and records the store digest.
    fn load(&self, filter: &FilterArgs, header: &mut Header) -> Result<EventStore> {
        let path = &self.cli.store;
        let bytes = fs::read(path).with_context(|| format!("cannot read store {}", path.display()))?;
        header.inputs.push(Input::of_bytes(path, &bytes));
        let store = read_store(path)?;
        let f = event_filter(filter, header);
        Ok(if f.is_empty() { store } else { store.filtered(&f) })
    }
}

fn event_filter(args: &FilterArgs, header: &mut Header) -> EventFilter {
    let mut f = EventFilter::new();
    if let Some(h) = &args.host {
        header.set("filter.host", h);
        f = f.host(h.as_str());
    }
    if let Some(s) = &args.source {
        header.set("filter.source", s);
        f = f.source(s.as_str());
    }
    if let Some((lo, hi)) = args.id {
        header.set("filter.id", format!("{lo}-{hi}"));
        f = f.event_ids(lo, hi);
    }
    if let Some(sev) = args.severity {
        header.set("filter.severity", sev);
        f = f.severity(sev);
    }
    if args.from.is_some() || args.to.is_some() {
        let show = |t: Option<chrono::DateTime<chrono::Utc>>| t.map_or("-".to_string(), |t| t.to_rfc3339());
        header.set("filter.time", format!("{}..{}", show(args.from), show(args.to)));
        f = f.between(args.from, args.to);
    }
    f
}

fn rules(arg: &RulesArg, header: &mut Header) -> Result<RuleSet> {
    match &arg.rules {
        Some(path) => {
            let bytes = fs::read(path).with_context(|| format!("cannot read rules {}", path.display()))?;
            header.inputs.push(Input::of_bytes(path, &bytes));
            header.set("rules", path.display());
            Ok(load_rules(path)?)
        }
        None => {
            header.set("rules", "bundled:sendmail");
            Ok(RuleSet::sendmail())
        }
    }
}

fn miner_config(args: &MinerArgs, merge_distance: Option<f64>, header: &mut Header) -> Result<MinerConfig> {
    let cfg = MinerConfig {
        support: args.support,
        type_threshold: args.type_threshold,
        merge_distance: merge_distance.unwrap_or(MinerConfig::default().merge_distance),
        stages: MaskStage::list(&args.mask.0),
    };
    cfg.validate()?;
    header.set("mask", args.mask.label());
    header.set("support", args.support.map_or("auto".to_string(), |s| s.to_string()));
    header.set("type_threshold", args.type_threshold);
    Ok(cfg)
}

pub fn ingest(ctx: &Env, args: &IngestArgs) -> Result<()> {
    let mut header = ctx.header("ingest");
    header.set("format", args.format);
    header.set("year", args.year.map_or("-".to_string(), |y| y.to_string()));
    header.set("tz", args.tz);
    header.set("append", args.append);
    for f in &args.files {
        let bytes = fs::read(f).with_context(|| format!("cannot read {}", f.display()))?;
        header.inputs.push(Input::of_bytes(f, &bytes));
    }

    let store_path = &ctx.cli.store;
    let mut store = if args.append && store_path.exists() {
        read_store(store_path)?
    } else {
        EventStore::new()
    };
    let before = store.len();
    let opts = IngestOptions {
        format: args.format,
        year: args.year,
        offset: args.tz,
    };
    let summary = ingest_files(&mut store, &args.files, &opts)?;
    if let Some(dir) = store_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    write_store(&store, store_path)?;

    let mut rejects = Vec::new();
    for r in &summary.rejects {
        rejects.extend(r.to_tsv());
        rejects.push(b'\n');
    }
    ctx.writer.raw("rejects.tsv", &rejects)?;

    let mut table = Table::new("ingest", &["file", "accepted", "rejected"]);
    for f in &summary.files {
        table.push(vec![
            json!(f.path.display().to_string()),
            json!(f.accepted),
            json!(f.rejected),
        ]);
    }
    table.note("accepted", summary.accepted);
    table.note("rejected", summary.rejected);
    table.note("duplicate_keys", summary.duplicate_keys);
    table.note("store_events", store.len());
    ctx.writer.table(&header, &table)?;

    println!(
        "ingested {} events ({} rejected) into {}; store holds {} (was {before})",
        summary.accepted,
        summary.rejected,
        store_path.display(),
        store.len()
    );
    Ok(())
}

pub fn classify(ctx: &Env, args: &ClassifyArgs) -> Result<()> {
    let mut header = ctx.header("classify");
    let rules = rules(&args.rules, &mut header)?;
    let store = ctx.load(&args.filter, &mut header)?;
    let tally = classify_all(&store, &rules);

    let mut classes = Table::new("classes", &["rule", "category", "count"]);
    for (name, cat, n) in &tally.per_class {
        classes.push(vec![json!(name), json!(cat.label()), json!(n)]);
    }
    classes.note("events", tally.total);
    classes.note("matched", tally.matched());
    classes.note("unmatched", tally.unmatched);
    classes.note("rules", rules.len());
    ctx.writer.table(&header, &classes)?;

    let mut cats = Table::new("categories", &["category", "rules", "count"]);
    let rule_tally = rules.category_tally();
    for cat in Category::ALL {
        cats.push(vec![
            json!(cat.label()),
            json!(rule_tally[&cat]),
            json!(tally.per_category[&cat]),
        ]);
    }
    cats.push(vec![json!("unmatched"), json!(0), json!(tally.unmatched)]);
    ctx.writer.table(&header, &cats)?;

    let mut cross = Table::new("crosstab", &["severity", "category", "count"]);
    for ((sev, cat), n) in &tally.cross {
        cross.push(vec![
            json!(sev.label()),
            json!(cat.map_or("unmatched", Category::label)),
            json!(n),
        ]);
    }
    ctx.writer.table(&header, &cross)?;

    println!(
        "classified {} events: {} matched, {} unmatched",
        tally.total,
        tally.matched(),
        tally.unmatched
    );
    Ok(())
}

pub fn templates(ctx: &Env, args: &TemplateArgs) -> Result<()> {
    let mut header = ctx.header("templates");
    let cfg = miner_config(&args.miner, args.merge_distance, &mut header)?;
    if let Some(d) = args.merge_distance {
        if !(0.0..=1.0).contains(&d) {
            bail!("merge distance must be in [0, 1], got {d}");
        }
    }
    if args.merge_distance.is_some() || !args.refine.is_empty() {
        header.set("merge_distance", cfg.merge_distance);
    }
    if !args.refine.is_empty() {
        let steps: Vec<String> = args.refine.iter().map(Stages::label).collect();
        header.set("refine", steps.join(";"));
    }
    let store = ctx.load(&args.filter, &mut header)?;

    let unmasked = unique_skeleton_count(&store, &[]);
    let masked = unique_skeleton_count(&store, &cfg.stages);
    let reduction = format!("unique messages: {unmasked} → {masked} after masking");

    let mut summary = vec![("reduction".to_string(), reduction.clone())];
    let catalog: TemplateCatalog = if args.refine.is_empty() {
        let mined = mine_templates(&store, &cfg)?;
        match args.merge_distance {
            Some(d) => merge_templates(&mined, d),
            None => mined,
        }
    } else {
        let lists: Vec<(String, Vec<MaskStage>)> =
            args.refine.iter().map(|s| (s.label(), MaskStage::list(&s.0))).collect();
        let (steps, merged) = refinement_curve(&store, &cfg, &lists)?;
        let mut curve = Table::new("refinement", &["step", "label", "classes", "templates", "outliers"]);
        for (i, s) in steps.iter().enumerate() {
            curve.push(vec![
                json!(i + 1),
                json!(s.label),
                json!(s.classes),
                json!(s.templates),
                json!(s.outliers),
            ]);
        }
        ctx.writer.table(&header, &curve)?;
        let shape: Vec<String> = steps.iter().map(|s| s.classes.to_string()).collect();
        summary.push(("refinement".to_string(), shape.join(" → ")));
        println!("refinement classes: {}", shape.join(" → "));
        merged
    };
    let catalog = type_variables(&catalog, &store, cfg.type_threshold);

    summary.push(("templates".to_string(), catalog.len().to_string()));
    summary.push(("outliers".to_string(), catalog.outlier_count().to_string()));
    summary.push(("support_threshold".to_string(), catalog.support_threshold().to_string()));
    let path = ctx.writer.text("templates.txt", &header, &summary, &catalog.render())?;

    println!("{reduction}");
    println!(
        "{} templates, {} outliers -> {}",
        catalog.len(),
        catalog.outlier_count(),
        path.display()
    );
    Ok(())
}

fn limited<T>(items: &[T], top: usize) -> &[T] {
    if top == 0 {
        items
    } else {
        &items[..top.min(items.len())]
    }
}

fn word_rows(name: &'static str, table: &WordTable, top: usize) -> Table {
    let mut out = Table::new(name, &["word", "count", "documents"]);
    let report = table.report();
    for (w, c) in limited(&report, top) {
        out.push(vec![json!(w), json!(c), json!(table.doc_count(w))]);
    }
    out.note("words", table.total());
    out.note("distinct", table.distinct());
    out.note("documents", table.documents());
    out
}

pub fn words(ctx: &Env, args: &WordsArgs) -> Result<()> {
    let mut header = ctx.header("words");
    header.set("top", args.top);
    header.set("ubiquity", args.ubiquity);
    if !(0.0..=1.0).contains(&args.ubiquity) {
        bail!("ubiquity must be in [0, 1], got {}", args.ubiquity);
    }
    let rules = rules(&args.rules, &mut header)?;
    let store = ctx.load(&args.filter, &mut header)?;

    let table = word_frequencies(&store);
    ctx.writer.table(&header, &word_rows("words", &table, args.top))?;
    ctx.writer
        .table(&header, &word_rows("negations", &negation_scan(&store), args.top))?;

    let mut keywords = Table::new("keywords", &["word", "count", "score"]);
    if !table.is_empty() {
        let tally = classify_all(&store, &rules);
        let focus = focus_table(&store, &tally);
        let opts = KeywordOptions {
            ubiquity: args.ubiquity,
            ..KeywordOptions::default()
        };
        let ranked = suggest_keywords(&table, Some(&focus), &opts)?;
        for k in limited(&ranked, args.top) {
            keywords.push(vec![json!(k.word), json!(k.count), json!(format!("{:.4}", k.score))]);
        }
        keywords.note("focus_events", focus.documents());
    }
    ctx.writer.table(&header, &keywords)?;

    println!(
        "{} words, {} distinct, over {} messages",
        table.total(),
        table.distinct(),
        table.documents()
    );
    Ok(())
}

pub fn phrases(ctx: &Env, args: &PhrasesArgs) -> Result<()> {
    let mut header = ctx.header("phrases");
    header.set("phrases", args.phrases.join("|"));
    let store = ctx.load(&args.filter, &mut header)?;
    let hits = find_phrases(&store, &args.phrases)?;

    let mut table = Table::new("phrases", &["phrase", "seq", "offset", "host", "message"]);
    let by_seq: std::collections::HashMap<u64, &logmorph_core::EventRecord> =
        store.events().iter().map(|e| (e.seq, e)).collect();
    for h in &hits {
        let ev = by_seq[&h.seq];
        table.push(vec![
            json!(h.phrase),
            json!(h.seq),
            json!(h.offset),
            json!(ev.host),
            json!(ev.message),
        ]);
    }
    for p in &args.phrases {
        let n = hits.iter().filter(|h| &h.phrase == p).count();
        table.note(&format!("hits[{p}]"), n);
        println!("{p}: {n}");
    }
    ctx.writer.table(&header, &table)?;
    Ok(())
}

/// Builds keyed streams, mining templates or loading rules when the mode
/// needs them.
fn streams(ctx: &Env, args: &KeyArgs, header: &mut Header) -> Result<(EventStore, Streams, Option<RuleSet>)> {
    header.set("mode", mode_name(args.mode));
    header.set("scope", scope_name(args.scope));
    match args.mode {
        KeyMode::Id => {
            let store = ctx.load(&args.filter, header)?;
            let s = build_stream(&store, KeySource::Id, args.scope)?;
            Ok((store, s, None))
        }
        KeyMode::Template => {
            let cfg = miner_config(&args.miner, None, header)?;
            let store = ctx.load(&args.filter, header)?;
            let catalog = mine_templates(&store, &cfg)?;
            let s = build_stream(&store, KeySource::Template(Some(&catalog)), args.scope)?;
            Ok((store, s, None))
        }
        KeyMode::Class => {
            let rules = rules(&args.rules, header)?;
            let store = ctx.load(&args.filter, header)?;
            let s = build_stream(&store, KeySource::Class(Some(&rules)), args.scope)?;
            Ok((store, s, Some(rules)))
        }
    }
}

fn mode_name(m: KeyMode) -> &'static str {
    match m {
        KeyMode::Id => "id",
        KeyMode::Template => "template",
        KeyMode::Class => "class",
    }
}

fn scope_name(s: Scope) -> &'static str {
    match s {
        Scope::Global => "global",
        Scope::Host => "host",
        Scope::HostSource => "host_source",
    }
}

pub fn pairs(ctx: &Env, args: &PairsArgs) -> Result<()> {
    let mut header = ctx.header("pairs");
    header.set("min_confidence", format_ratio(args.min_confidence));
    header.set("min_antecedent", args.min_antecedent);
    let (_, streams, _) = streams(ctx, &args.keys, &mut header)?;
    let all = mine_pairs(&streams);
    let kept = filter_confident(&all, args.min_confidence, args.min_antecedent)?;
    let deterministic = filter_confident(&all, Ratio::from_integer(1), 2)?;

    let mut table = Table::new("pairs", &["A", "B", "pair_count", "antecedent_total", "confidence"]);
    for p in &kept {
        table.push(vec![
            json!(p.antecedent.to_string()),
            json!(p.successor.to_string()),
            json!(p.pair_count),
            json!(p.antecedent_total),
            json!(format_ratio(p.confidence())),
        ]);
    }
    table.note("streams", streams.streams.len());
    table.note("skipped_events", streams.skipped);
    table.note("distinct_pairs", all.len());
    table.note("kept_pairs", kept.len());
    table.note("deterministic_pairs", deterministic.len());
    let path = ctx.writer.table(&header, &table)?;

    println!(
        "{} distinct pairs, {} kept, {} deterministic -> {}",
        all.len(),
        kept.len(),
        deterministic.len(),
        path.display()
    );
    Ok(())
}

pub fn ngrams(ctx: &Env, args: &NgramArgs) -> Result<()> {
    let mut header = ctx.header("ngrams");
    header.set("n_max", args.n_max);
    header.set("min_support", args.min_support);
    let (_, streams, _) = streams(ctx, &args.keys, &mut header)?;
    let grams = mine_ngrams(&streams, args.n_max, args.min_support)?;

    let mut table = Table::new("ngrams", &["n", "keys", "count"]);
    for g in &grams {
        let keys: Vec<String> = g.keys.iter().map(ToString::to_string).collect();
        table.push(vec![json!(g.n()), json!(keys.join("|")), json!(g.count)]);
    }
    table.note("streams", streams.streams.len());
    table.note("skipped_events", streams.skipped);
    table.note("sequences", grams.len());
    let path = ctx.writer.table(&header, &table)?;
    println!("{} frequent sequences -> {}", grams.len(), path.display());
    Ok(())
}

pub fn profile(ctx: &Env, args: &ProfileArgs) -> Result<()> {
    let mut header = ctx.header("profile");
    header.set("top", args.top);
    header.set("n_max", args.n_max);
    header.set("min_support", args.min_support);
    let (store, streams, class_rules) = streams(ctx, &args.keys, &mut header)?;
    let rules = match class_rules {
        Some(r) => r,
        None => rules(&args.keys.rules, &mut header)?,
    };
    let tally = classify_all(&store, &rules);
    let opts = ProfileOptions {
        top: args.top,
        n_max: args.n_max,
        min_support: args.min_support,
        ..ProfileOptions::default()
    };
    let profile = profile_report(&streams, Some(&tally), &opts)?;
    let summary = vec![
        ("events".to_string(), store.len().to_string()),
        ("scopes".to_string(), profile.scopes.len().to_string()),
    ];
    let path = ctx.writer.json(
        "profile.json",
        &header,
        &summary,
        "profile",
        serde_json::to_value(&profile)?,
    )?;
    println!(
        "profile of {} events over {} scopes -> {}",
        store.len(),
        profile.scopes.len(),
        path.display()
    );
    Ok(())
}
