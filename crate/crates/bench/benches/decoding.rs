use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use langbeam_bench::fixture;
use langbeam_core::{beam_search, libs_decode, DecodeConfig};

fn decoding(c: &mut Criterion) {
    let f = fixture(4);
    let mut group = c.benchmark_group("decode_sentence");
    for b in [5usize, 20] {
        let cfg = DecodeConfig::new("l2").with_beam(b).with_source_lang("l1");
        group.bench_with_input(BenchmarkId::new("baseline", b), &cfg, |bench, cfg| {
            bench.iter(|| {
                for item in &f.testset.items {
                    beam_search(&f.model, &item.source, cfg).unwrap();
                }
            })
        });
        group.bench_with_input(BenchmarkId::new("libs", b), &cfg, |bench, cfg| {
            bench.iter(|| {
                for item in &f.testset.items {
                    libs_decode(&f.model, &f.lid, &item.source, cfg).unwrap();
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, decoding);
criterion_main!(benches);
