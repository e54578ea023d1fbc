//! Greedy covering: score candidate (phrase, meaning) pairs, commit the best
//! one, mark what it covers, and generalize the remaining candidates.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::candidates::{candidate_meanings, fracture, lics, CandidateMode, SamplerConfig};
use crate::corpus::{extract_phrase_positions, preprocess, BackgroundLexicon, Example, Phrase};
use crate::error::{Error, Result};
use crate::meaning::{embeds, first_occurrence, occurrences, parse_term, Forest, NodeId};
use crate::rng;

const SCORE_EPS: f64 = 1e-9;
/// Embeddings inspected per candidate and example when generalizing.
const MAX_GENERALIZING_EMBEDDINGS: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HeuristicWeights {
    pub w_fit: f64,
    pub w_gen: f64,
}

impl Default for HeuristicWeights {
    fn default() -> Self {
        HeuristicWeights {
            w_fit: 10.0,
            w_gen: 1.0,
        }
    }
}

/// `w_fit * support^2 / phrase_count - w_gen * vertex_count`, where
/// `support` counts the examples pairing the phrase with the meaning and
/// `phrase_count` the examples with an uncovered occurrence of the phrase.
pub fn heuristic_value(support: usize, phrase_count: usize, vertex_count: usize, w: HeuristicWeights) -> f64 {
    let fit = if phrase_count == 0 {
        0.0
    } else {
        (support * support) as f64 / phrase_count as f64
    };
    w.w_fit * fit - w.w_gen * vertex_count as f64
}

#[derive(Clone, Debug, PartialEq)]
pub struct LearnerConfig {
    pub max_phrase_len: usize,
    pub sampler: SamplerConfig,
    pub weights: HeuristicWeights,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        LearnerConfig {
            max_phrase_len: 2,
            sampler: SamplerConfig::default(),
            weights: HeuristicWeights::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LexiconEntry {
    pub phrase: Phrase,
    pub meaning: Forest,
    /// Heuristic value when the entry was selected; zero for entries read
    /// from a file.
    pub score: f64,
}

/// Renders `phrase TAB term` lines in order.
pub fn lexicon_to_tsv(entries: &[LexiconEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{}\t{}", e.phrase, e.meaning.render());
    }
    out
}

/// Parses `phrase TAB term` lines; an empty term is the empty meaning.
pub fn lexicon_from_tsv(text: &str, source: &str) -> Result<Vec<LexiconEntry>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::Record {
            path: source.to_string(),
            record: out.len() + 1,
            msg: format!("line {}: {msg}", ln + 1),
        };
        let (phrase, term) = line
            .split_once('\t')
            .ok_or_else(|| err("expected 'phrase<TAB>term'".into()))?;
        let meaning = if term.trim().is_empty() {
            Forest::empty()
        } else {
            parse_term(term).map_err(|e| err(e.to_string()))?
        };
        out.push(LexiconEntry {
            phrase: Phrase::parse(phrase),
            meaning,
            score: 0.0,
        });
    }
    Ok(out)
}

/// One commitment of a learned entry inside one example.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Application {
    pub example: usize,
    /// Token span in the preprocessed sentence.
    pub start: usize,
    pub len: usize,
    /// Covered vertices of the preprocessed meaning.
    pub vertices: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    pub phrase: String,
    pub meaning: String,
    pub score: f64,
    pub support: usize,
    pub phrase_count: usize,
    /// Whether fresh candidates had to be derived after this selection.
    pub regenerated: bool,
    pub applications: Vec<Application>,
    /// Examples whose meaning became fully covered by this selection.
    pub newly_covered: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Uncovered {
    pub example: usize,
    pub remainder: String,
}

#[derive(Clone, Debug)]
pub struct LearnOutcome {
    pub lexicon: Vec<LexiconEntry>,
    pub trace: Vec<TraceStep>,
    pub uncovered: Vec<Uncovered>,
    /// The corpus after background and stop-list processing.
    pub prepared: Vec<Example>,
    /// Number of candidate pairs produced by the initial generation phase.
    pub initial_candidates: usize,
}

impl LearnOutcome {
    /// Percentage of training examples left with no uncovered vertex.
    pub fn coverage_pct(&self) -> f64 {
        if self.prepared.is_empty() {
            return 100.0;
        }
        let covered = self.prepared.len() - self.uncovered.len();
        100.0 * covered as f64 / self.prepared.len() as f64
    }
}

/// A scored candidate as it stands at some point of the search.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredCandidate {
    pub phrase: Phrase,
    pub meaning: Forest,
    pub support: usize,
    pub phrase_count: usize,
    pub score: f64,
}

pub fn learn_lexicon(corpus: &[Example], bg: &BackgroundLexicon, cfg: &LearnerConfig) -> Result<LearnOutcome> {
    let mut learner = Learner::new(corpus, bg, cfg)?;
    learner.run();
    Ok(learner.finish())
}

/// Initial candidates for every phrase of the preprocessed corpus, scored.
pub fn initial_candidates(corpus: &[Example], bg: &BackgroundLexicon, cfg: &LearnerConfig) -> Result<Vec<ScoredCandidate>> {
    Ok(Learner::new(corpus, bg, cfg)?.scored())
}

struct Ex {
    id: usize,
    meaning: Forest,
    covered: Vec<bool>,
    consumed: Vec<bool>,
    rem: Forest,
    /// Remainder vertex id to meaning vertex id.
    origin: Vec<NodeId>,
    /// Distinct phrases occurring in the example, by first position.
    phrases: Vec<usize>,
}

impl Ex {
    fn refresh(&mut self) {
        let keep: Vec<bool> = self.covered.iter().map(|c| !c).collect();
        let (rem, origin) = self.meaning.induced(&keep);
        self.rem = rem.normalized();
        self.origin = origin;
    }
}

#[derive(Clone, Debug)]
struct Cand {
    meaning: Forest,
    key: String,
    vertices: usize,
    support: BTreeSet<usize>,
}

struct Learner<'c> {
    cfg: &'c LearnerConfig,
    exs: Vec<Ex>,
    prepared: Vec<Example>,
    phrases: Vec<Phrase>,
    /// Occurrences of each phrase: (example index, start), in corpus order.
    occ: Vec<Vec<(usize, usize)>>,
    /// Distinct examples containing each phrase, in order.
    occ_ex: Vec<Vec<usize>>,
    count: Vec<usize>,
    cands: Vec<Vec<Cand>>,
    lexicon: Vec<LexiconEntry>,
    trace: Vec<TraceStep>,
    initial: usize,
}

impl<'c> Learner<'c> {
    fn new(corpus: &[Example], bg: &BackgroundLexicon, cfg: &'c LearnerConfig) -> Result<Self> {
        let prepared: Vec<Example> = corpus.par_iter().map(|e| preprocess(e, bg).0).collect();
        let mut index: HashMap<Phrase, usize> = HashMap::new();
        let mut phrases = Vec::new();
        let mut occ: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut exs = Vec::with_capacity(prepared.len());
        for (i, e) in prepared.iter().enumerate() {
            let mut seen = Vec::new();
            for (p, start) in extract_phrase_positions(&e.tokens, cfg.max_phrase_len.max(1)) {
                let pid = *index.entry(p.clone()).or_insert_with(|| {
                    phrases.push(p);
                    occ.push(Vec::new());
                    phrases.len() - 1
                });
                occ[pid].push((i, start));
                if !seen.contains(&pid) {
                    seen.push(pid);
                }
            }
            let n = e.meaning.vertex_count();
            let mut ex = Ex {
                id: e.id,
                meaning: e.meaning.clone(),
                covered: vec![false; n],
                consumed: vec![false; e.tokens.len()],
                rem: Forest::empty(),
                origin: Vec::new(),
                phrases: seen,
            };
            ex.refresh();
            exs.push(ex);
        }
        let occ_ex: Vec<Vec<usize>> = occ
            .iter()
            .map(|o| {
                let mut v: Vec<usize> = o.iter().map(|&(e, _)| e).collect();
                v.dedup();
                v
            })
            .collect();
        let count = occ_ex.iter().map(Vec::len).collect();
        let mut learner = Learner {
            cfg,
            exs,
            prepared,
            phrases,
            occ,
            occ_ex,
            count,
            cands: Vec::new(),
            lexicon: Vec::new(),
            trace: Vec::new(),
            initial: 0,
        };
        learner.generate_initial()?;
        Ok(learner)
    }

    fn generate_initial(&mut self) -> Result<()> {
        let this = &*self;
        let generated: Vec<Result<Vec<Cand>>> = (0..this.phrases.len())
            .into_par_iter()
            .map(|pid| {
                let sources: Vec<&Forest> = this.occ_ex[pid].iter().map(|&e| &this.exs[e].rem).collect();
                let meanings = candidate_meanings(&sources, &this.phrases[pid].to_string(), &this.cfg.sampler)?;
                Ok(meanings.into_iter().map(|m| this.new_cand(pid, m)).collect())
            })
            .collect();
        self.cands = generated.into_iter().collect::<Result<_>>()?;
        for c in &mut self.cands {
            c.retain(|c| !c.support.is_empty());
        }
        self.initial = self.cands.iter().map(Vec::len).sum();
        Ok(())
    }

    fn new_cand(&self, pid: usize, meaning: Forest) -> Cand {
        let support = self.occ_ex[pid]
            .iter()
            .copied()
            .filter(|&e| self.available(pid, e) && embeds(&meaning, &self.exs[e].rem))
            .collect();
        Cand {
            key: meaning.key(),
            vertices: meaning.vertex_count(),
            meaning,
            support,
        }
    }

    fn available_at(&self, pid: usize, e: usize) -> Option<usize> {
        let len = self.phrases[pid].len();
        let ex = &self.exs[e];
        self.occ[pid]
            .iter()
            .filter(|&&(x, _)| x == e)
            .map(|&(_, s)| s)
            .find(|&s| ex.consumed[s..s + len].iter().all(|c| !c))
    }

    fn available(&self, pid: usize, e: usize) -> bool {
        self.available_at(pid, e).is_some()
    }

    fn score(&self, pid: usize, c: &Cand) -> f64 {
        heuristic_value(c.support.len(), self.count[pid], c.vertices, self.cfg.weights)
    }

    fn scored(&self) -> Vec<ScoredCandidate> {
        let mut out = Vec::new();
        for (pid, cs) in self.cands.iter().enumerate() {
            for c in cs {
                out.push(ScoredCandidate {
                    phrase: self.phrases[pid].clone(),
                    meaning: c.meaning.clone(),
                    support: c.support.len(),
                    phrase_count: self.count[pid],
                    score: self.score(pid, c),
                });
            }
        }
        out
    }

    /// Highest score; ties go to phrases with fewer candidates, then shorter
    /// phrases, then the phrase occurring first in the corpus, then the
    /// smaller canonical meaning.
    fn select(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (pid, cs) in self.cands.iter().enumerate() {
            for (ci, c) in cs.iter().enumerate() {
                let s = self.score(pid, c);
                let better = match best {
                    None => true,
                    Some((bp, bc, bs)) => {
                        if s > bs + SCORE_EPS {
                            true
                        } else if s < bs - SCORE_EPS {
                            false
                        } else {
                            let mine = (cs.len(), self.phrases[pid].len(), self.occ[pid][0]);
                            let theirs = (self.cands[bp].len(), self.phrases[bp].len(), self.occ[bp][0]);
                            mine.cmp(&theirs)
                                .then_with(|| c.key.cmp(&self.cands[bp][bc].key))
                                .is_lt()
                        }
                    }
                };
                if better {
                    best = Some((pid, ci, s));
                }
            }
        }
        best.map(|(p, c, _)| (p, c))
    }

    fn all_covered(&self) -> bool {
        self.exs.iter().all(|e| e.rem.is_empty())
    }

    fn run(&mut self) {
        loop {
            if self.all_covered() {
                break;
            }
            let Some((pid, ci)) = self.select() else {
                let all: Vec<usize> = (0..self.exs.len()).collect();
                if self.regenerate_orphans(&all, "sweep") {
                    continue;
                }
                break;
            };
            self.commit(pid, ci);
        }
    }

    fn commit(&mut self, pid: usize, ci: usize) {
        let cand = self.cands[pid][ci].clone();
        let score = self.score(pid, &cand);
        let phrase_count = self.count[pid];
        let len = self.phrases[pid].len();
        let mut applications = Vec::new();
        let mut old_rems: BTreeMap<usize, (Forest, Vec<NodeId>)> = BTreeMap::new();
        let mut fresh: BTreeMap<usize, Vec<bool>> = BTreeMap::new();
        for &e in &self.occ_ex[pid].clone() {
            while let Some(start) = self.available_at(pid, e) {
                let Some(emb) = first_occurrence(&cand.meaning, &self.exs[e].rem) else { break };
                let ex = &mut self.exs[e];
                old_rems
                    .entry(e)
                    .or_insert_with(|| (ex.rem.clone(), ex.origin.clone()));
                let newly = fresh.entry(e).or_insert_with(|| vec![false; ex.covered.len()]);
                let mut vertices: Vec<NodeId> = emb.map.iter().map(|&v| ex.origin[v]).collect();
                vertices.sort_unstable();
                for &v in &vertices {
                    debug_assert!(!ex.covered[v], "exclusivity");
                    ex.covered[v] = true;
                    newly[v] = true;
                }
                for c in &mut ex.consumed[start..start + len] {
                    *c = true;
                }
                ex.refresh();
                applications.push(Application {
                    example: ex.id,
                    start,
                    len,
                    vertices,
                });
            }
        }
        self.lexicon.push(LexiconEntry {
            phrase: self.phrases[pid].clone(),
            meaning: cand.meaning.clone(),
            score,
        });
        let affected: Vec<usize> = old_rems.keys().copied().collect();
        let newly_covered = affected
            .iter()
            .filter(|&&e| self.exs[e].rem.is_empty())
            .map(|&e| self.exs[e].id)
            .collect();
        self.update(&affected, &old_rems, &fresh);
        let regenerated = self.regenerate_orphans(&affected, &format!("step{}", self.trace.len()));
        self.trace.push(TraceStep {
            step: self.trace.len() + 1,
            phrase: self.phrases[pid].to_string(),
            meaning: cand.meaning.render(),
            score,
            support: cand.support.len(),
            phrase_count,
            regenerated,
            applications,
            newly_covered,
        });
    }

    /// Rescore and generalize the candidates of every phrase occurring in an
    /// affected example.
    fn update(
        &mut self,
        affected: &[usize],
        old_rems: &BTreeMap<usize, (Forest, Vec<NodeId>)>,
        fresh: &BTreeMap<usize, Vec<bool>>,
    ) {
        let mut touched: BTreeSet<usize> = BTreeSet::new();
        for &e in affected {
            touched.extend(self.exs[e].phrases.iter().copied());
        }
        for pid in touched {
            let in_affected: Vec<usize> = self.occ_ex[pid]
                .iter()
                .copied()
                .filter(|e| old_rems.contains_key(e))
                .collect();
            self.count[pid] = self.occ_ex[pid].iter().filter(|&&e| self.available(pid, e)).count();
            let mut generalized: Vec<Forest> = Vec::new();
            let mut cands = std::mem::take(&mut self.cands[pid]);
            for c in &mut cands {
                for &e in &in_affected {
                    let avail = self.available(pid, e);
                    let now = avail && embeds(&c.meaning, &self.exs[e].rem);
                    if c.support.contains(&e) && !now && avail {
                        let (old, origin) = &old_rems[&e];
                        generalized.extend(generalize(&c.meaning, old, origin, &fresh[&e]));
                    }
                    if now {
                        c.support.insert(e);
                    } else {
                        c.support.remove(&e);
                    }
                }
            }
            cands.retain(|c| !c.support.is_empty());
            for m in generalized {
                let key = m.key();
                if cands.iter().any(|c| c.key == key) {
                    continue;
                }
                let c = self.new_cand(pid, m);
                if !c.support.is_empty() {
                    cands.push(c);
                }
            }
            self.cands[pid] = cands;
        }
    }

    /// For every phrase still available in one of `examples` but without a
    /// candidate meaning there, derive new candidates from that example's
    /// remainder. Returns whether any candidate was added.
    fn regenerate_orphans(&mut self, examples: &[usize], tag: &str) -> bool {
        let mut added = false;
        for &e in examples {
            if self.exs[e].rem.is_empty() {
                continue;
            }
            for pid in self.exs[e].phrases.clone() {
                if !self.available(pid, e) || self.cands[pid].iter().any(|c| c.support.contains(&e)) {
                    continue;
                }
                let key = format!("{}#{tag}#{e}", self.phrases[pid]);
                for m in self.fresh_meanings(pid, e, &key) {
                    let k = m.key();
                    if self.cands[pid].iter().any(|c| c.key == k) {
                        continue;
                    }
                    let c = self.new_cand(pid, m);
                    if !c.support.is_empty() {
                        self.cands[pid].push(c);
                        added = true;
                    }
                }
            }
        }
        added
    }

    fn fresh_meanings(&self, pid: usize, e: usize, key: &str) -> Vec<Forest> {
        let rem = &self.exs[e].rem;
        let sampler = &self.cfg.sampler;
        if sampler.mode == CandidateMode::Fracture {
            if let Ok(pieces) = fracture(rem, sampler.fracture_cap) {
                return pieces.into_iter().filter(|f| !f.is_empty()).collect();
            }
            return vec![rem.clone()];
        }
        let others: Vec<usize> = self.occ_ex[pid]
            .iter()
            .copied()
            .filter(|&o| o != e && !self.exs[o].rem.is_empty() && self.available(pid, o))
            .collect();
        let budget = sampler.pairs_per_phrase.max(1);
        let chosen: Vec<usize> = if others.len() <= budget {
            others
        } else {
            let mut rng = rng::keyed_stream(sampler.seed, key);
            let mut picks = rand::seq::index::sample(&mut rng, others.len(), budget).into_vec();
            picks.sort_unstable();
            picks.into_iter().map(|i| others[i]).collect()
        };
        let mut found: BTreeMap<String, Forest> = BTreeMap::new();
        for o in chosen {
            for f in lics(rem, &self.exs[o].rem) {
                found.entry(f.key()).or_insert(f);
            }
        }
        if found.is_empty() {
            return vec![rem.clone()];
        }
        found.into_values().collect()
    }

    fn finish(self) -> LearnOutcome {
        let uncovered = self
            .exs
            .iter()
            .filter(|e| !e.rem.is_empty())
            .map(|e| Uncovered {
                example: e.id,
                remainder: e.rem.render(),
            })
            .collect();
        LearnOutcome {
            lexicon: self.lexicon,
            trace: self.trace,
            uncovered,
            prepared: self.prepared,
            initial_candidates: self.initial,
        }
    }
}

/// The parts of `pattern` left uncovered, for each embedding of `pattern`
/// into the old remainder that touches a newly covered vertex.
fn generalize(pattern: &Forest, old: &Forest, origin: &[NodeId], fresh: &[bool]) -> Vec<Forest> {
    let mut out = Vec::new();
    for emb in occurrences(pattern, old).into_iter().take(MAX_GENERALIZING_EMBEDDINGS) {
        let hit: Vec<bool> = emb.map.iter().map(|&v| fresh[origin[v]]).collect();
        if !hit.iter().any(|&h| h) {
            continue;
        }
        let keep: Vec<bool> = hit.iter().map(|h| !h).collect();
        let m = pattern.induced(&keep).0.normalized();
        if !m.is_empty() {
            out.push(m);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meaning::iso_equal;

    #[test]
    fn heuristic_examples() {
        let w = HeuristicWeights::default();
        assert!((heuristic_value(5, 5, 1, w) - 49.0).abs() < 1e-9);
        assert!((heuristic_value(2, 3, 2, w) - 34.0 / 3.0).abs() < 1e-9);
        assert!((heuristic_value(1, 1, 2, w) - 8.0).abs() < 1e-9);
    }

    #[test]
    fn single_example_single_token() {
        let corpus = vec![Example {
            id: 0,
            tokens: vec!["w1".into()],
            meaning: parse_term("f1").unwrap(),
        }];
        let out = learn_lexicon(&corpus, &BackgroundLexicon::default(), &LearnerConfig::default()).unwrap();
        assert_eq!(out.lexicon.len(), 1);
        assert_eq!(out.lexicon[0].phrase, Phrase::parse("w1"));
        assert!(iso_equal(&out.lexicon[0].meaning, &parse_term("f1").unwrap()));
        assert!(out.uncovered.is_empty());
    }

    #[test]
    fn empty_corpus() {
        let out = learn_lexicon(&[], &BackgroundLexicon::default(), &LearnerConfig::default()).unwrap();
        assert!(out.lexicon.is_empty());
        assert_eq!(out.coverage_pct(), 100.0);
    }

    #[test]
    fn background_covering_everything() {
        let corpus = vec![Example {
            id: 0,
            tokens: vec!["utah".into()],
            meaning: parse_term("eq(_,stateid(utah))").unwrap(),
        }];
        let bg = BackgroundLexicon {
            entries: vec![(Phrase::parse("utah"), parse_term("eq(_,stateid(utah))").unwrap())],
            stop_list: Default::default(),
        };
        let out = learn_lexicon(&corpus, &bg, &LearnerConfig::default()).unwrap();
        assert!(out.lexicon.is_empty());
        assert!(out.uncovered.is_empty());
    }

    #[test]
    fn tsv_round_trip() {
        let entries = vec![
            LexiconEntry {
                phrase: Phrase::parse("punta"),
                meaning: parse_term("high_point(_,_)").unwrap(),
                score: 19.0,
            },
            LexiconEntry {
                phrase: Phrase::parse("the"),
                meaning: Forest::empty(),
                score: 0.0,
            },
        ];
        let text = lexicon_to_tsv(&entries);
        assert_eq!(text, "punta\thigh_point(_,_)\nthe\t\n");
        let back = lexicon_from_tsv(&text, "x").unwrap();
        assert_eq!(back.len(), 2);
        assert!(back[1].meaning.is_empty());
        assert!(lexicon_from_tsv("oops", "x").is_err());
    }
}
