//! Scoring learned lexicons against a gold lexicon, lexicon statistics and
//! learning curves.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{BackgroundLexicon, Example, Phrase};
use crate::error::{Error, Result};
use crate::learner::{learn_lexicon, LearnerConfig, LexiconEntry, Uncovered};
use crate::rng;

/// Phrase frequencies used to weight pairs; absent phrases weigh zero.
pub type Frequencies = BTreeMap<Phrase, usize>;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub n_correct: usize,
    pub n_learned: usize,
    pub n_gold: usize,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Distinct non-empty pairs, keyed by phrase and canonical meaning.
fn pair_set(entries: &[LexiconEntry]) -> BTreeSet<(Phrase, String)> {
    entries
        .iter()
        .filter(|e| !e.meaning.is_empty())
        .map(|e| (e.phrase.clone(), e.meaning.key()))
        .collect()
}

/// A learned pair is correct when the gold lexicon holds the same phrase with
/// an isomorphic meaning. Pairs with the empty meaning are not scored.
/// Weighted variants weigh each pair by the frequency of its phrase.
pub fn score_lexicon(learned: &[LexiconEntry], gold: &[LexiconEntry], freq: &Frequencies) -> EvalReport {
    let learned = pair_set(learned);
    let gold = pair_set(gold);
    let weight = |p: &Phrase| freq.get(p).copied().unwrap_or(0) as f64;
    let correct: Vec<&(Phrase, String)> = learned.iter().filter(|p| gold.contains(p)).collect();
    let w_correct: f64 = correct.iter().map(|(p, _)| weight(p)).fold(0.0, |a, w| a + w);
    let w_learned: f64 = learned.iter().map(|(p, _)| weight(p)).fold(0.0, |a, w| a + w);
    let w_gold: f64 = gold.iter().map(|(p, _)| weight(p)).fold(0.0, |a, w| a + w);
    EvalReport {
        precision: ratio(correct.len() as f64, learned.len() as f64),
        recall: ratio(correct.len() as f64, gold.len() as f64),
        weighted_precision: ratio(w_correct, w_learned),
        weighted_recall: ratio(w_correct, w_gold),
        n_correct: correct.len(),
        n_learned: learned.len(),
        n_gold: gold.len(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LexiconStats {
    pub coverage_pct: f64,
    /// Entries per distinct phrase.
    pub ambiguity: f64,
    pub n_entries: usize,
}

pub fn lexicon_stats(learned: &[LexiconEntry], n_examples: usize, uncovered: &[Uncovered]) -> LexiconStats {
    let phrases: BTreeSet<&Phrase> = learned.iter().map(|e| &e.phrase).collect();
    let coverage_pct = if n_examples == 0 {
        100.0
    } else {
        100.0 * n_examples.saturating_sub(uncovered.len()) as f64 / n_examples as f64
    };
    LexiconStats {
        coverage_pct,
        ambiguity: ratio(learned.len() as f64, phrases.len() as f64),
        n_entries: learned.len(),
    }
}

/// Mean and standard deviation of each metric at one training-set size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveRow {
    pub size: usize,
    pub trials: usize,
    pub mean: Metrics,
    pub std: Metrics,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub coverage_pct: f64,
    pub n_entries: f64,
}

impl Metrics {
    pub fn from_run(r: &EvalReport, s: &LexiconStats) -> Self {
        Metrics {
            precision: r.precision,
            recall: r.recall,
            weighted_precision: r.weighted_precision,
            weighted_recall: r.weighted_recall,
            coverage_pct: s.coverage_pct,
            n_entries: s.n_entries as f64,
        }
    }

    fn fields(&self) -> [f64; 6] {
        [
            self.precision,
            self.recall,
            self.weighted_precision,
            self.weighted_recall,
            self.coverage_pct,
            self.n_entries,
        ]
    }

    fn from_fields(f: [f64; 6]) -> Self {
        Metrics {
            precision: f[0],
            recall: f[1],
            weighted_precision: f[2],
            weighted_recall: f[3],
            coverage_pct: f[4],
            n_entries: f[5],
        }
    }

    /// Mean and population standard deviation.
    pub fn summarize(runs: &[Metrics]) -> (Metrics, Metrics) {
        let n = runs.len().max(1) as f64;
        let mut mean = [0.0; 6];
        for r in runs {
            for (m, v) in mean.iter_mut().zip(r.fields()) {
                *m += v / n;
            }
        }
        let mut var = [0.0; 6];
        for r in runs {
            for ((s, v), m) in var.iter_mut().zip(r.fields()).zip(mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        (Metrics::from_fields(mean), Metrics::from_fields(var.map(f64::sqrt)))
    }
}

/// Trains on increasing prefixes of seeded shuffles of `corpus` and scores
/// each lexicon against `gold`, weighting by `freq` (normally taken from the
/// whole corpus).
#[allow(clippy::too_many_arguments)]
pub fn learning_curve(
    corpus: &[Example],
    gold: &[LexiconEntry],
    freq: &Frequencies,
    bg: &BackgroundLexicon,
    sizes: &[usize],
    trials: usize,
    seed: u64,
    learner: &LearnerConfig,
) -> Result<Vec<CurveRow>> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if let Some(&s) = sizes.iter().find(|&&s| s > corpus.len()) {
        return Err(Error::InvalidArgument(format!(
            "training size {s} exceeds corpus size {}",
            corpus.len()
        )));
    }
    let orders: Vec<Vec<usize>> = (0..trials)
        .map(|t| {
            let mut order: Vec<usize> = (0..corpus.len()).collect();
            order.shuffle(&mut rng::stream(seed, t as u64));
            order
        })
        .collect();
    let jobs: Vec<(usize, usize)> = (0..trials).flat_map(|t| sizes.iter().map(move |&s| (t, s))).collect();
    let results: Vec<Result<Metrics>> = jobs
        .par_iter()
        .map(|&(t, size)| {
            let train: Vec<Example> = orders[t][..size].iter().map(|&i| corpus[i].clone()).collect();
            let out = learn_lexicon(&train, bg, learner)?;
            let report = score_lexicon(&out.lexicon, gold, freq);
            let stats = lexicon_stats(&out.lexicon, train.len(), &out.uncovered);
            Ok(Metrics::from_run(&report, &stats))
        })
        .collect();
    let results: Vec<Metrics> = results.into_iter().collect::<Result<_>>()?;
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(si, &size)| {
            let runs: Vec<Metrics> = (0..trials).map(|t| results[t * sizes.len() + si]).collect();
            let (mean, std) = Metrics::summarize(&runs);
            CurveRow {
                size,
                trials,
                mean,
                std,
            }
        })
        .collect())
}

/// Tab-separated rendering with a header line.
pub fn curve_to_tsv(rows: &[CurveRow]) -> String {
    let mut out = String::from(
        "size\ttrials\tprecision\trecall\tweighted_precision\tweighted_recall\tcoverage_pct\tn_entries\t\
         sd_precision\tsd_recall\tsd_weighted_precision\tsd_weighted_recall\tsd_coverage_pct\tsd_n_entries\n",
    );
    for r in rows {
        let cells: Vec<String> = r
            .mean
            .fields()
            .iter()
            .chain(r.std.fields().iter())
            .map(|v| format!("{v:.4}"))
            .collect();
        out.push_str(&format!("{}\t{}\t{}\n", r.size, r.trials, cells.join("\t")));
    }
    out
}

/// Parses `phrase TAB count` lines.
pub fn frequencies_from_tsv(text: &str, source: &str) -> Result<Frequencies> {
    let mut out = Frequencies::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Record {
            path: source.to_string(),
            record: out.len() + 1,
            msg: format!("line {}: expected 'phrase<TAB>count'", ln + 1),
        };
        let (p, c) = line.rsplit_once('\t').ok_or_else(bad)?;
        let c: usize = c.trim().parse().map_err(|_| bad())?;
        *out.entry(Phrase::parse(p)).or_insert(0) += c;
    }
    Ok(out)
}

pub fn frequencies_to_tsv(freq: &Frequencies) -> String {
    freq.iter().map(|(p, c)| format!("{p}\t{c}\n")).collect()
}
