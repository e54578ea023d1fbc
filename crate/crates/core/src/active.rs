//! Certainty-based selective sampling.
//!
//! A sentence's certainty is derived from the selection scores of the lexicon
//! entries its phrases would use; the least certain pool sentences are
//! annotated next. Only the tokens of pool sentences are ever read.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{extract_phrases, BackgroundLexicon, Example, Phrase};
use crate::error::{Error, Result};
use crate::eval::{lexicon_stats, score_lexicon, Frequencies, Metrics};
use crate::learner::{learn_lexicon, LearnerConfig, LexiconEntry};
use crate::rng;

#[derive(Clone, Debug, PartialEq)]
pub struct ActiveConfig {
    pub n_bootstrap: usize,
    pub batch_k: usize,
    pub rounds: usize,
    pub seed: u64,
}

impl Default for ActiveConfig {
    fn default() -> Self {
        ActiveConfig {
            n_bootstrap: 25,
            batch_k: 10,
            rounds: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Active,
    Random,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "active" => Ok(Strategy::Active),
            "random" => Ok(Strategy::Random),
            other => Err(Error::InvalidArgument(format!("unknown strategy '{other}'"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Active => "active",
            Strategy::Random => "random",
        })
    }
}

/// Mean selection score of the entries of each learned phrase.
pub struct CertaintyModel<'a> {
    scores: HashMap<&'a Phrase, f64>,
    bg: &'a BackgroundLexicon,
    max_len: usize,
}

impl<'a> CertaintyModel<'a> {
    pub fn new(lexicon: &'a [LexiconEntry], bg: &'a BackgroundLexicon, max_len: usize) -> Self {
        let mut sums: HashMap<&Phrase, (f64, usize)> = HashMap::new();
        for e in lexicon {
            let s = sums.entry(&e.phrase).or_insert((0.0, 0));
            s.0 += e.score;
            s.1 += 1;
        }
        CertaintyModel {
            scores: sums.into_iter().map(|(p, (s, n))| (p, s / n as f64)).collect(),
            bg,
            max_len: max_len.max(1),
        }
    }

    /// Average certainty over the counted phrases of the sentence, once
    /// background phrases and stop phrases are removed. A known phrase counts
    /// with the mean score of its entries, an unknown single word counts as
    /// zero, and unknown longer phrases are skipped.
    pub fn sentence_certainty(&self, tokens: &[String]) -> f64 {
        let tokens = self.strip_known(tokens);
        let mut total = 0.0;
        let mut counted = 0usize;
        for p in extract_phrases(&tokens, self.max_len) {
            if let Some(&s) = self.scores.get(&p) {
                total += s;
                counted += 1;
            } else if p.len() == 1 {
                counted += 1;
            }
        }
        if counted == 0 {
            0.0
        } else {
            total / counted as f64
        }
    }

    /// Removes background phrases (longest first, leftmost first) and stop
    /// phrases using the tokens alone.
    fn strip_known(&self, tokens: &[String]) -> Vec<String> {
        let mut tokens = tokens.to_vec();
        let mut order: Vec<&Phrase> = self.bg.entries.iter().map(|(p, _)| p).collect();
        order.sort_by_key(|p| std::cmp::Reverse(p.len()));
        let known: HashSet<&Phrase> = order.iter().copied().collect();
        let longest = order.first().map_or(0, |p| p.len());
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        'outer: while i < tokens.len() {
            for n in (1..=longest.min(tokens.len() - i)).rev() {
                if known.contains(&Phrase(tokens[i..i + n].to_vec())) {
                    i += n;
                    continue 'outer;
                }
            }
            out.push(std::mem::take(&mut tokens[i]));
            i += 1;
        }
        self.bg.strip_stop_phrases(&out)
    }
}

pub fn sentence_certainty(tokens: &[String], lexicon: &[LexiconEntry], bg: &BackgroundLexicon, max_len: usize) -> f64 {
    CertaintyModel::new(lexicon, bg, max_len).sentence_certainty(tokens)
}

/// The `k` least certain pool sentences. Ties are ordered by a seeded
/// shuffle of the pool.
pub fn select_batch(
    pool: &[usize],
    corpus: &[Example],
    model: &CertaintyModel<'_>,
    k: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if pool.is_empty() {
        return Err(Error::InvalidArgument("cannot select from an empty pool".into()));
    }
    let mut order = pool.to_vec();
    order.shuffle(&mut rng::stream(seed, 0x005e_1ec7));
    let certainty: Vec<f64> = order
        .par_iter()
        .map(|&i| model.sentence_certainty(&corpus[i].tokens))
        .collect();
    let mut ranked: Vec<(f64, usize)> = certainty.into_iter().zip(order).collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ranked.into_iter().take(k).map(|(_, i)| i).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub n_annotated: usize,
    pub metrics: Metrics,
}

/// One selective-sampling run. A seeded bootstrap sample is annotated first;
/// each round then annotates `batch_k` more pool examples (the least certain
/// ones, or random ones), retrains from scratch and evaluates against `gold`.
/// The bootstrap depends only on the seed, so the two strategies share it.
pub fn run_trial(
    corpus: &[Example],
    gold: &[LexiconEntry],
    freq: &Frequencies,
    bg: &BackgroundLexicon,
    cfg: &ActiveConfig,
    strategy: Strategy,
    learner: &LearnerConfig,
) -> Result<Vec<CurvePoint>> {
    if cfg.n_bootstrap == 0 || cfg.batch_k == 0 {
        return Err(Error::InvalidArgument("bootstrap and batch sizes must be at least 1".into()));
    }
    if corpus.len() < cfg.n_bootstrap + cfg.batch_k {
        return Err(Error::InvalidArgument(format!(
            "corpus of {} examples is smaller than bootstrap plus one batch",
            corpus.len()
        )));
    }
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    order.shuffle(&mut rng::stream(cfg.seed, 0xb007));
    let mut annotated: Vec<usize> = order[..cfg.n_bootstrap].to_vec();
    let mut pool: Vec<usize> = order[cfg.n_bootstrap..].to_vec();
    let mut curve = Vec::with_capacity(cfg.rounds + 1);
    for round in 0..=cfg.rounds {
        let train: Vec<Example> = annotated.iter().map(|&i| corpus[i].clone()).collect();
        let out = learn_lexicon(&train, bg, learner)?;
        let report = score_lexicon(&out.lexicon, gold, freq);
        let stats = lexicon_stats(&out.lexicon, train.len(), &out.uncovered);
        curve.push(CurvePoint {
            n_annotated: annotated.len(),
            metrics: Metrics::from_run(&report, &stats),
        });
        if round == cfg.rounds || pool.is_empty() {
            break;
        }
        let round_seed = rng::derive_seed(cfg.seed, round as u64);
        let k = cfg.batch_k.min(pool.len());
        let batch = match strategy {
            Strategy::Active => {
                let model = CertaintyModel::new(&out.lexicon, bg, learner.max_phrase_len);
                select_batch(&pool, corpus, &model, k, round_seed)?
            }
            Strategy::Random => {
                let mut p = pool.clone();
                p.shuffle(&mut rng::stream(round_seed, 0x7a4d));
                p.truncate(k);
                p
            }
        };
        let chosen: HashSet<usize> = batch.iter().copied().collect();
        pool.retain(|i| !chosen.contains(i));
        annotated.extend(batch);
    }
    Ok(curve)
}

/// Area under a curve of (annotated examples, value) points, trapezoidal.
pub fn area_under(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

/// Fewest annotated examples at which `curve` reaches `level`, if ever.
pub fn examples_to_reach(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    curve.iter().find(|(_, v)| *v >= level - 1e-12).map(|(n, _)| *n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meaning::parse_term;

    fn entry(p: &str, score: f64) -> LexiconEntry {
        LexiconEntry {
            phrase: Phrase::parse(p),
            meaning: parse_term("f").unwrap(),
            score,
        }
    }

    fn toks(s: &str) -> Vec<String> {
        crate::corpus::tokenize(s)
    }

    #[test]
    fn all_unknown_is_zero() {
        let bg = BackgroundLexicon::default();
        assert_eq!(sentence_certainty(&toks("x y z"), &[entry("a", 5.0)], &bg, 2), 0.0);
        assert_eq!(sentence_certainty(&[], &[], &bg, 2), 0.0);
    }

    #[test]
    fn single_entries_average_to_their_score() {
        let bg = BackgroundLexicon::default();
        let lex = [entry("a", 7.0), entry("b", 7.0)];
        assert_eq!(sentence_certainty(&toks("a b"), &lex, &bg, 2), 7.0);
        let amb = [entry("a", 4.0), entry("a", 8.0)];
        assert_eq!(sentence_certainty(&toks("a"), &amb, &bg, 2), 6.0);
    }

    #[test]
    fn unknown_words_lower_certainty() {
        let bg = BackgroundLexicon::default();
        let lex = [entry("a", 7.0), entry("b", 7.0)];
        let short = sentence_certainty(&toks("a b"), &lex, &bg, 2);
        let long = sentence_certainty(&toks("a b c d"), &lex, &bg, 2);
        assert!(long < short);
    }

    #[test]
    fn background_phrases_are_not_counted() {
        let bg = BackgroundLexicon {
            entries: vec![(Phrase::parse("utah"), parse_term("eq(_,stateid(utah))").unwrap())],
            stop_list: [Phrase::parse("la")].into_iter().collect(),
        };
        let lex = [entry("a", 7.0)];
        assert_eq!(sentence_certainty(&toks("a utah la"), &lex, &bg, 2), 7.0);
    }

    fn corpus(sentences: &[&str]) -> Vec<Example> {
        sentences
            .iter()
            .enumerate()
            .map(|(i, s)| Example {
                id: i,
                tokens: toks(s),
                meaning: parse_term("f").unwrap(),
            })
            .collect()
    }

    #[test]
    fn unknown_sentence_selected_first() {
        let c = corpus(&["a b", "a", "zz", "b"]);
        let lex = [entry("a", 5.0), entry("b", 9.0)];
        let bg = BackgroundLexicon::default();
        let model = CertaintyModel::new(&lex, &bg, 2);
        let pool = [0, 1, 2, 3];
        assert_eq!(select_batch(&pool, &c, &model, 1, 1).unwrap(), [2]);
        let all = select_batch(&pool, &c, &model, 4, 1).unwrap();
        assert_eq!(all.len(), 4);
        assert!(select_batch(&[], &c, &model, 1, 1).is_err());
    }

    #[test]
    fn selection_is_invariant_under_positive_scaling() {
        let c = corpus(&["a b", "a c", "b", "c a", "a"]);
        let lex = [entry("a", 5.0), entry("b", 9.0), entry("c", 2.0)];
        let scaled: Vec<LexiconEntry> = lex
            .iter()
            .map(|e| LexiconEntry {
                score: e.score * 3.5,
                ..e.clone()
            })
            .collect();
        let bg = BackgroundLexicon::default();
        let pool = [0, 1, 2, 3, 4];
        let a = select_batch(&pool, &c, &CertaintyModel::new(&lex, &bg, 2), 2, 9).unwrap();
        let b = select_batch(&pool, &c, &CertaintyModel::new(&scaled, &bg, 2), 2, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn curve_helpers() {
        let c = [(0.0, 0.0), (10.0, 1.0), (20.0, 1.0)];
        assert_eq!(area_under(&c), 15.0);
        assert_eq!(examples_to_reach(&c, 1.0), Some(10.0));
        assert_eq!(examples_to_reach(&c, 2.0), None);
    }
}
