use std::hint::black_box;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lexind::candidates::{fracture, lics};
use lexind::corpus::{load_corpus, BackgroundLexicon, CorpusFormat};
use lexind::learner::{learn_lexicon, LearnerConfig};
use lexind::synth::{gen_corpus, gen_gold_lexicon, GenConfig};
use lexind::{count_interpretations, parse_term};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/worked_example").join(name)
}

fn worked_example(c: &mut Criterion) {
    let corpus = load_corpus(&fixture("corpus.txt"), CorpusFormat::PairedLines, true).unwrap();
    let bg = BackgroundLexicon::load(Some(&fixture("background.tsv")), Some(&fixture("stoplist.txt"))).unwrap();
    let cfg = LearnerConfig::default();
    c.bench_function("learn/worked_example", |b| b.iter(|| learn_lexicon(black_box(&corpus), &bg, &cfg).unwrap()));
}

fn synthetic(c: &mut Criterion) {
    let mut group = c.benchmark_group("learn/synthetic");
    group.sample_size(10);
    for ambiguity in [1.0, 1.25] {
        let cfg = GenConfig {
            ambiguity,
            ..GenConfig::default()
        };
        let gold = gen_gold_lexicon(&cfg).unwrap();
        let corpus = gen_corpus(&gold, 500, &cfg).unwrap();
        let bg = BackgroundLexicon::default();
        group.bench_with_input(BenchmarkId::new("ambiguity", ambiguity), &corpus, |b, corpus| {
            b.iter(|| learn_lexicon(corpus, &bg, &LearnerConfig::default()).unwrap())
        });
    }
    group.finish();
}

fn meanings(c: &mut Criterion) {
    let a = parse_term("answer(C,(capital(S,C),largest(P,(state(S),population(S,P)))))").unwrap();
    let b = parse_term("answer(P,(high_point(S,P),largest(A,(state(S),area(S,A)))))").unwrap();
    c.bench_function("lics/query_pair", |bench| bench.iter(|| lics(black_box(&a), black_box(&b))));
    let t = parse_term("g1(g2(g4(g8,g9),g5(g10,g11)),g3(g6(g12,g13),g7(g14,g15)))").unwrap();
    c.bench_function("fracture/binary_15", |bench| bench.iter(|| fracture(black_box(&t), u128::MAX).unwrap()));
    c.bench_function("count_interpretations/60x60", |bench| bench.iter(|| count_interpretations(black_box(60), black_box(60))));
}

criterion_group!(benches, worked_example, synthetic, meanings);
criterion_main!(benches);
