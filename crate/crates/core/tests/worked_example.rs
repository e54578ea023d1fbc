use std::path::PathBuf;

use lexind::corpus::{load_corpus, BackgroundLexicon, CorpusFormat, Example};
use lexind::learner::{learn_lexicon, lexicon_from_tsv, LearnerConfig};
use lexind::meaning::iso_equal;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/worked_example").join(name)
}

fn fixture() -> (Vec<Example>, BackgroundLexicon) {
    let corpus = load_corpus(&data("corpus.txt"), CorpusFormat::PairedLines, true).unwrap();
    let bg = BackgroundLexicon::load(Some(&data("background.tsv")), Some(&data("stoplist.txt"))).unwrap();
    (corpus, bg)
}

#[test]
fn learns_the_ten_entry_lexicon() {
    let (corpus, bg) = fixture();
    let out = learn_lexicon(&corpus, &bg, &LearnerConfig::default()).unwrap();
    let expected = lexicon_from_tsv(&std::fs::read_to_string(data("expected_lexicon.tsv")).unwrap(), "x").unwrap();
    assert_eq!(out.lexicon.len(), expected.len());
    for e in &expected {
        assert!(out.lexicon.iter().any(|l| l.phrase == e.phrase && iso_equal(&l.meaning, &e.meaning)), "{} {}", e.phrase, e.meaning);
    }
    assert!(out.uncovered.is_empty());
}
