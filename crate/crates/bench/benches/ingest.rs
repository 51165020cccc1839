use std::fs;

use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use logmorph_core::ingest::{ingest_files, parse_syslog_line, Format, IngestOptions, SyslogContext};
use logmorph_core::{read_store, write_store, EventStore};

fn parse(c: &mut Criterion) {
    let lines = logmorph_core::synth::maillog_lines(3, 10_000);
    let ctx = SyslogContext::utc(2024);
    let mut group = c.benchmark_group("ingest");
    group.throughput(Throughput::Elements(lines.len() as u64));
    group.bench_function("syslog_lines", |b| {
        b.iter(|| {
            lines
                .iter()
                .filter(|l| parse_syslog_line(l.as_bytes(), &ctx).is_ok())
                .count()
        })
    });

    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("maillog");
    fs::write(&log, lines.join("\n")).unwrap();
    let opts = IngestOptions::new(Format::Sendmail).year(2024);
    group.bench_function("sendmail_file", |b| {
        b.iter(|| {
            let mut store = EventStore::new();
            ingest_files(&mut store, &[&log], &opts).unwrap()
        })
    });

    let mut store = EventStore::new();
    ingest_files(&mut store, &[&log], &IngestOptions::new(Format::Syslog).year(2024)).unwrap();
    let path = dir.path().join("events.ndjson");
    group.bench_function("store_roundtrip", |b| {
        b.iter(|| {
            write_store(&store, &path).unwrap();
            read_store(&path).unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, parse);
criterion_main!(benches);
