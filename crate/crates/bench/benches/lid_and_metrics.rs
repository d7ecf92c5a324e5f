use criterion::{criterion_group, criterion_main, Criterion};

use langbeam_bench::fixture;
use langbeam_core::analysis::{chrf2, corpus_bleu};

fn lid(c: &mut Criterion) {
    let f = fixture(100);
    let texts: Vec<&str> = f.lid_corpus.iter().take(200).map(|(t, _)| t.as_str()).collect();
    c.bench_function("lid_logprob_single", |b| b.iter(|| f.lid.logprob(texts[0], "l2").unwrap()));
    c.bench_function("lid_logprob_batch_200", |b| b.iter(|| f.lid.logprob_batch(&texts, "l2").unwrap()));
}

fn metrics(c: &mut Criterion) {
    let f = fixture(100);
    let hyps: Vec<&str> = f.testset.items.iter().map(|i| i.source.as_str()).collect();
    let refs: Vec<&str> = f.testset.items.iter().map(|i| i.reference.as_str()).collect();
    c.bench_function("corpus_bleu_100", |b| b.iter(|| corpus_bleu(&refs, &refs).unwrap()));
    c.bench_function("chrf2_100", |b| {
        b.iter(|| hyps.iter().zip(&refs).map(|(h, r)| chrf2(h, r).unwrap()).sum::<f64>())
    });
}

criterion_group!(benches, lid, metrics);
criterion_main!(benches);
