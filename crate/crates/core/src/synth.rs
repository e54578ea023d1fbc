//! Artificial gold lexicons and corpora.
//!
//! Words are noun-like (variable-free meanings), verb-like (meanings with one
//! or more open argument positions) or function words (empty meaning). An
//! utterance is a verb followed by one noun per open position of the verb's
//! sense, with a few function words mixed in; its meaning is the verb's
//! sense with the nouns' senses plugged into the open positions.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::RangeInclusive;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::corpus::{extract_phrases, Example, Phrase};
use crate::error::{Error, Result};
use crate::learner::LexiconEntry;
use crate::meaning::{embeds, Arg, Builder, Forest, Functor, NodeId};
use crate::rng;

/// Random draws allowed per requested distinct meaning before giving up.
const ATTEMPTS_PER_MEANING: usize = 200;
const LEXICON_STREAM: u64 = 0x6c65_7869_636f_6e00;
const CORPUS_STREAM: u64 = 0x636f_7270_7573_0000;

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub n_words: usize,
    pub n_symbols: usize,
    /// Mean meanings per word.
    pub ambiguity: f64,
    /// Mean words per (non-empty) meaning.
    pub synonymy: f64,
    pub noun_frac: f64,
    pub verb_frac: f64,
    pub empty_frac: f64,
    pub max_depth: usize,
    pub max_arity: usize,
    pub max_vars: usize,
    pub zipf_exponent: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_words: 100,
            n_symbols: 25,
            ambiguity: 1.0,
            synonymy: 1.0,
            noun_frac: 0.475,
            verb_frac: 0.475,
            empty_frac: 0.05,
            max_depth: 2,
            max_arity: 2,
            max_vars: 3,
            zipf_exponent: 1.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Infeasible(m.to_string()));
        if self.n_symbols == 0 {
            return bad("n_symbols must be at least 1");
        }
        if self.ambiguity < 1.0 || self.synonymy < 1.0 {
            return bad("ambiguity and synonymy must be at least 1");
        }
        let fr = [self.noun_frac, self.verb_frac, self.empty_frac];
        if fr.iter().any(|f| !(0.0..=1.0).contains(f)) || (fr.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return bad("word-class fractions must be in [0,1] and sum to 1");
        }
        if self.max_arity == 0 || self.max_vars == 0 {
            return bad("verb-like meanings need max_arity >= 1 and max_vars >= 1");
        }
        if self.zipf_exponent < 0.0 {
            return bad("zipf_exponent must be non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum WordClass {
    Noun,
    Verb,
    Function,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoldEntry {
    pub word: String,
    pub meaning: Forest,
    pub class: WordClass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GoldLexicon {
    pub entries: Vec<GoldEntry>,
    /// Words of each class in Zipf rank order.
    pub nouns: Vec<String>,
    pub verbs: Vec<String>,
    pub function_words: Vec<String>,
    senses: HashMap<String, Vec<usize>>,
}

impl GoldLexicon {
    fn new(entries: Vec<GoldEntry>, nouns: Vec<String>, verbs: Vec<String>, function_words: Vec<String>) -> Self {
        let mut senses: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in entries.iter().enumerate() {
            senses.entry(e.word.clone()).or_default().push(i);
        }
        GoldLexicon {
            entries,
            nouns,
            verbs,
            function_words,
            senses,
        }
    }

    pub fn senses(&self, word: &str) -> Vec<&Forest> {
        self.senses
            .get(word)
            .map(|ix| ix.iter().map(|&i| &self.entries[i].meaning).collect())
            .unwrap_or_default()
    }

    pub fn n_words(&self) -> usize {
        self.senses.len()
    }

    /// Entries per distinct word.
    pub fn ambiguity(&self) -> f64 {
        self.entries.len() as f64 / self.n_words().max(1) as f64
    }

    /// Non-empty entries per distinct non-empty meaning.
    pub fn synonymy(&self) -> f64 {
        let content: Vec<&GoldEntry> = self.entries.iter().filter(|e| !e.meaning.is_empty()).collect();
        let distinct: BTreeSet<String> = content.iter().map(|e| e.meaning.key()).collect();
        content.len() as f64 / distinct.len().max(1) as f64
    }

    /// The gold pairs as lexicon entries, function words included.
    pub fn lexicon(&self) -> Vec<LexiconEntry> {
        self.entries
            .iter()
            .map(|e| LexiconEntry {
                phrase: Phrase::new(&[e.word.as_str()]),
                meaning: e.meaning.clone(),
                score: 0.0,
            })
            .collect()
    }
}

/// Rank in `1..=n_ranks`, drawn with probability proportional to
/// `1 / rank^exponent`.
pub fn zipf_pick(n_ranks: usize, exponent: f64, rng: &mut impl Rng) -> usize {
    assert!(n_ranks >= 1, "zipf_pick needs at least one rank");
    if n_ranks == 1 {
        return 1;
    }
    let z = Zipf::new(n_ranks as f64, exponent).expect("valid Zipf parameters");
    (z.sample(rng) as usize).clamp(1, n_ranks)
}

fn split_counts(n: usize, cfg: &GenConfig) -> (usize, usize, usize) {
    let empty = (cfg.empty_frac * n as f64).round() as usize;
    let nouns = ((cfg.noun_frac * n as f64).round() as usize).min(n - empty);
    (nouns, n - empty - nouns, empty)
}

pub fn gen_gold_lexicon(cfg: &GenConfig) -> Result<GoldLexicon> {
    cfg.validate()?;
    let mut rng = rng::stream(cfg.seed, LEXICON_STREAM);
    let (w_noun, w_verb, w_empty) = split_counts(cfg.n_words, cfg);
    if w_noun == 0 || w_verb == 0 {
        return Err(Error::Infeasible("need at least one noun-like and one verb-like word".into()));
    }
    let total_entries = (cfg.ambiguity * cfg.n_words as f64).round() as usize;
    let content = total_entries.saturating_sub(w_empty).max(w_noun + w_verb);
    let e_noun = ((content as f64 * w_noun as f64 / (w_noun + w_verb) as f64).round() as usize).clamp(w_noun, content - w_verb);
    let e_verb = content - e_noun;
    let d_noun = ((e_noun as f64 / cfg.synonymy).round() as usize).clamp(1, e_noun);
    let d_verb = ((e_verb as f64 / cfg.synonymy).round() as usize).clamp(1, e_verb);

    let noun_roots = functors(cfg, 0..=if cfg.max_depth == 0 { 0 } else { cfg.max_arity });
    let verb_roots = functors(cfg, 1..=cfg.max_arity);
    let mut accepted = Vec::new();
    let noun_meanings = distinct_meanings(d_noun, noun_roots, &mut accepted, &mut rng, |f, r| random_noun(cfg, f, r))?;
    let verb_meanings = distinct_meanings(d_verb, verb_roots, &mut accepted, &mut rng, |f, r| random_verb(cfg, f, r))?;

    let mut names: Vec<String> = (1..=cfg.n_words).map(|i| format!("w{i}")).collect();
    names.shuffle(&mut rng);
    let function_words: Vec<String> = names.split_off(w_noun + w_verb);
    let verbs: Vec<String> = names.split_off(w_noun);
    let nouns = names;

    let mut entries = Vec::new();
    for (words, meanings, n_entries, class) in [
        (&nouns, &noun_meanings, e_noun, WordClass::Noun),
        (&verbs, &verb_meanings, e_verb, WordClass::Verb),
    ] {
        for (wi, mi) in assign(words.len(), meanings.len(), n_entries, &mut rng) {
            entries.push(GoldEntry {
                word: words[wi].clone(),
                meaning: meanings[mi].clone(),
                class,
            });
        }
    }
    for w in &function_words {
        entries.push(GoldEntry {
            word: w.clone(),
            meaning: Forest::empty(),
            class: WordClass::Function,
        });
    }
    Ok(GoldLexicon::new(entries, nouns, verbs, function_words))
}

/// Draws `n` meanings of one word class. A meaning is rejected when it
/// repeats a functor, duplicates an earlier meaning, or embeds into (or
/// receives) any meaning drawn so far, nouns and verbs alike. Root functors are
/// handed out least-used first, so roots are only shared once every functor of
/// the class heads some meaning.
fn distinct_meanings(
    n: usize,
    roots: Vec<Functor>,
    accepted: &mut Vec<Forest>,
    rng: &mut ChaCha8Rng,
    mut draw: impl FnMut(&Functor, &mut ChaCha8Rng) -> Forest,
) -> Result<Vec<Forest>> {
    let mut uses = vec![0usize; roots.len()];
    let mut exhausted = vec![false; roots.len()];
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let open: Vec<usize> = (0..roots.len()).filter(|&i| !exhausted[i]).collect();
        let Some(least) = open.iter().map(|&i| uses[i]).min() else {
            return Err(Error::Infeasible(format!(
                "could not draw {n} distinct meanings from the symbol space (got {})",
                out.len()
            )));
        };
        let tied: Vec<usize> = open.into_iter().filter(|&i| uses[i] == least).collect();
        let r = tied[rng.random_range(0..tied.len())];
        let found = (0..ATTEMPTS_PER_MEANING)
            .map(|_| draw(&roots[r], rng))
            .find(|m| !repeats_functor(m) && accepted.iter().all(|x| !embeds(m, x) && !embeds(x, m)));
        match found {
            Some(m) => {
                uses[r] += 1;
                accepted.push(m.clone());
                out.push(m);
            }
            None => exhausted[r] = true,
        }
    }
    Ok(out)
}

fn repeats_functor(f: &Forest) -> bool {
    let mut seen = BTreeSet::new();
    f.nodes().iter().any(|n| !seen.insert(&n.functor))
}

fn functors(cfg: &GenConfig, arities: RangeInclusive<usize>) -> Vec<Functor> {
    arities
        .flat_map(|a| (1..=cfg.n_symbols).map(move |s| Functor::new(&format!("f{s}"), a)))
        .collect()
}

/// `n_entries` distinct (word, meaning) index pairs in which every word and
/// every meaning takes part at least once.
fn assign(n_words: usize, n_meanings: usize, n_entries: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut pairs = BTreeSet::new();
    let mut out = Vec::with_capacity(n_entries);
    for i in 0..n_words.max(n_meanings) {
        let p = (i % n_words, i % n_meanings);
        if pairs.insert(p) {
            out.push(p);
        }
    }
    let target = n_entries.min(n_words * n_meanings);
    while out.len() < target {
        let p = (rng.random_range(0..n_words), rng.random_range(0..n_meanings));
        if pairs.insert(p) {
            out.push(p);
        }
    }
    out
}

fn symbol(cfg: &GenConfig, arity: usize, rng: &mut ChaCha8Rng) -> Functor {
    Functor::new(&format!("f{}", rng.random_range(1..=cfg.n_symbols)), arity)
}

/// A ground tree of depth at most `max_depth` under the given root.
fn random_noun(cfg: &GenConfig, root: &Functor, rng: &mut ChaCha8Rng) -> Forest {
    fn grow(
        cfg: &GenConfig,
        f: Functor,
        depth: usize,
        b: &mut Builder,
        parent: Option<(NodeId, usize)>,
        rng: &mut ChaCha8Rng,
    ) -> NodeId {
        let arity = f.arity;
        let id = b.push(f, parent);
        for i in 0..arity {
            let child_arity = if depth + 1 < cfg.max_depth {
                rng.random_range(0..=cfg.max_arity)
            } else {
                0
            };
            let c = grow(cfg, symbol(cfg, child_arity, rng), depth + 1, b, Some((id, i)), rng);
            b.set_arg(id, i, Arg::Sub(vec![c]));
        }
        id
    }
    let mut b = Builder::default();
    let r = grow(cfg, root.clone(), 0, &mut b, None, rng);
    b.finish(vec![r])
}

/// A tree of depth at most `max_depth` under the given root, with between one
/// and `max_vars` open argument positions.
fn random_verb(cfg: &GenConfig, root: &Functor, rng: &mut ChaCha8Rng) -> Forest {
    fn grow(
        cfg: &GenConfig,
        f: Functor,
        depth: usize,
        b: &mut Builder,
        parent: Option<(NodeId, usize)>,
        rng: &mut ChaCha8Rng,
    ) -> NodeId {
        let arity = f.arity;
        let id = b.push(f, parent);
        for i in 0..arity {
            if depth < cfg.max_depth && rng.random_bool(0.5) {
                let f = symbol(cfg, rng.random_range(0..=cfg.max_arity), rng);
                let c = grow(cfg, f, depth + 1, b, Some((id, i)), rng);
                b.set_arg(id, i, Arg::Sub(vec![c]));
            }
        }
        id
    }
    loop {
        let mut b = Builder::default();
        let r = grow(cfg, root.clone(), 0, &mut b, None, rng);
        let f = b.finish(vec![r]);
        if (1..=cfg.max_vars).contains(&open_positions(&f).len()) {
            return f;
        }
    }
}

/// Free argument positions in preorder.
pub fn open_positions(f: &Forest) -> Vec<(NodeId, usize)> {
    let mut out = Vec::new();
    for id in f.preorder() {
        for (i, a) in f.node(id).args.iter().enumerate() {
            if *a == Arg::Free {
                out.push((id, i));
            }
        }
    }
    out
}

/// `verb` with its open positions filled, in preorder, by `args`.
pub fn compose(verb: &Forest, args: &[&Forest]) -> Forest {
    let open = open_positions(verb);
    assert_eq!(open.len(), args.len(), "one argument per open position");
    let slot: BTreeMap<(NodeId, usize), &Forest> = open.into_iter().zip(args.iter().copied()).collect();
    let mut b = Builder::default();
    fn copy_tree(src: &Forest, id: NodeId, b: &mut Builder, parent: Option<(NodeId, usize)>) -> NodeId {
        let n = src.node(id);
        let new = b.push(n.functor.clone(), parent);
        for (i, a) in n.args.iter().enumerate() {
            if let Arg::Sub(c) = a {
                let kids = c.iter().map(|&x| copy_tree(src, x, b, Some((new, i)))).collect();
                b.set_arg(new, i, Arg::Sub(kids));
            }
        }
        new
    }
    fn copy_verb(
        verb: &Forest,
        id: NodeId,
        slot: &BTreeMap<(NodeId, usize), &Forest>,
        b: &mut Builder,
        parent: Option<(NodeId, usize)>,
    ) -> NodeId {
        let n = verb.node(id);
        let new = b.push(n.functor.clone(), parent);
        for (i, a) in n.args.iter().enumerate() {
            let kids: Vec<NodeId> = match a {
                Arg::Sub(c) => c.iter().map(|&x| copy_verb(verb, x, slot, b, Some((new, i)))).collect(),
                _ => match slot.get(&(id, i)) {
                    Some(arg) => arg.roots().iter().map(|&r| copy_tree(arg, r, b, Some((new, i)))).collect(),
                    None => Vec::new(),
                },
            };
            if !kids.is_empty() {
                b.set_arg(new, i, Arg::Sub(kids));
            }
        }
        new
    }
    let roots = verb.roots().iter().map(|&r| copy_verb(verb, r, &slot, &mut b, None)).collect();
    b.finish(roots)
}

/// `n_examples` utterances; example `i` depends only on the gold lexicon,
/// the configuration and `i`.
pub fn gen_corpus(gold: &GoldLexicon, n_examples: usize, cfg: &GenConfig) -> Result<Vec<Example>> {
    if gold.verbs.is_empty() || gold.nouns.is_empty() {
        return Err(Error::Infeasible("gold lexicon needs verb-like and noun-like words".into()));
    }
    Ok((0..n_examples).map(|i| gen_example(gold, i, cfg)).collect())
}

fn gen_example(gold: &GoldLexicon, i: usize, cfg: &GenConfig) -> Example {
    let mut rng = rng::stream(cfg.seed ^ CORPUS_STREAM, i as u64);
    let pick_sense = |words: &[String], rng: &mut ChaCha8Rng| {
        let w = &words[zipf_pick(words.len(), cfg.zipf_exponent, rng) - 1];
        let senses = gold.senses(w);
        let m = senses[rng.random_range(0..senses.len())].clone();
        (w.clone(), m)
    };
    let (verb_word, verb) = pick_sense(&gold.verbs, &mut rng);
    let n_args = open_positions(&verb).len();
    let mut tokens = vec![verb_word];
    let mut args = Vec::with_capacity(n_args);
    for _ in 0..n_args {
        let (w, m) = pick_sense(&gold.nouns, &mut rng);
        tokens.push(w);
        args.push(m);
    }
    if !gold.function_words.is_empty() {
        for _ in 0..rng.random_range(0..=2) {
            let w = &gold.function_words[zipf_pick(gold.function_words.len(), cfg.zipf_exponent, &mut rng) - 1];
            let at = rng.random_range(0..=tokens.len());
            tokens.insert(at, w.clone());
        }
    }
    let arg_refs: Vec<&Forest> = args.iter().collect();
    Example {
        id: i,
        tokens,
        meaning: compose(&verb, &arg_refs),
    }
}

/// Occurrence counts of every phrase of up to `max_len` tokens.
pub fn phrase_frequencies(corpus: &[Example], max_len: usize) -> BTreeMap<Phrase, usize> {
    let mut out = BTreeMap::new();
    for ex in corpus {
        for p in extract_phrases(&ex.tokens, max_len) {
            *out.entry(p).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meaning::{iso_equal, parse_term};

    #[test]
    fn baseline_composition() {
        let cfg = GenConfig::default();
        let gold = gen_gold_lexicon(&cfg).unwrap();
        assert_eq!(gold.entries.len(), 100);
        assert_eq!(gold.nouns.len(), 48);
        assert_eq!(gold.verbs.len(), 47);
        assert_eq!(gold.function_words.len(), 5);
        assert!((gold.ambiguity() - 1.0).abs() < 1e-9);
        assert!((gold.synonymy() - 1.0).abs() < 1e-9);
        for e in &gold.entries {
            match e.class {
                WordClass::Noun => assert!(open_positions(&e.meaning).is_empty()),
                WordClass::Verb => assert!((1..=3).contains(&open_positions(&e.meaning).len())),
                WordClass::Function => assert!(e.meaning.is_empty()),
            }
            assert!(e.meaning.depth().unwrap_or(0) <= cfg.max_depth);
        }
    }

    #[test]
    fn ambiguous_configuration_rates() {
        let cfg = GenConfig {
            n_words: 1000,
            n_symbols: 250,
            ambiguity: 1.68,
            synonymy: 1.3,
            ..GenConfig::default()
        };
        let gold = gen_gold_lexicon(&cfg).unwrap();
        assert_eq!(gold.entries.len(), 1680);
        assert!((gold.ambiguity() - 1.68).abs() <= 0.05);
        assert!((gold.synonymy() - 1.3).abs() <= 0.05);
    }

    #[test]
    fn bijection_without_function_words() {
        let cfg = GenConfig {
            noun_frac: 0.5,
            verb_frac: 0.5,
            empty_frac: 0.0,
            ..GenConfig::default()
        };
        let gold = gen_gold_lexicon(&cfg).unwrap();
        let words: BTreeSet<&str> = gold.entries.iter().map(|e| e.word.as_str()).collect();
        let meanings: BTreeSet<String> = gold.entries.iter().map(|e| e.meaning.key()).collect();
        assert_eq!(words.len(), 100);
        assert_eq!(meanings.len(), 100);
    }

    #[test]
    fn infeasible_configurations() {
        let tiny = GenConfig {
            n_symbols: 1,
            max_depth: 0,
            ..GenConfig::default()
        };
        assert!(matches!(gen_gold_lexicon(&tiny), Err(Error::Infeasible(_))));
        let bad = GenConfig {
            noun_frac: 0.9,
            ..GenConfig::default()
        };
        assert!(gen_gold_lexicon(&bad).is_err());
    }

    #[test]
    fn composition_fills_open_positions() {
        let verb = parse_term("f10(A,f15(B))").unwrap().normalized();
        let a = parse_term("f23(f2(f14))").unwrap();
        let b = parse_term("f3").unwrap();
        let m = compose(&verb, &[&a, &b]);
        assert!(iso_equal(&m, &parse_term("f10(f23(f2(f14)),f15(f3))").unwrap()));
    }

    #[test]
    fn degenerate_grammar() {
        let entries = vec![
            GoldEntry {
                word: "w1".into(),
                meaning: parse_term("f1(_)").unwrap(),
                class: WordClass::Verb,
            },
            GoldEntry {
                word: "w2".into(),
                meaning: parse_term("f2").unwrap(),
                class: WordClass::Noun,
            },
        ];
        let gold = GoldLexicon::new(entries, vec!["w2".into()], vec!["w1".into()], vec![]);
        let corpus = gen_corpus(&gold, 5, &GenConfig::default()).unwrap();
        for ex in corpus {
            assert_eq!(ex.tokens, ["w1", "w2"]);
            assert_eq!(ex.meaning.render(), "f1(f2)");
        }
    }

    #[test]
    fn corpus_is_seed_deterministic_and_compositional() {
        let cfg = GenConfig::default();
        let gold = gen_gold_lexicon(&cfg).unwrap();
        let a = gen_corpus(&gold, 50, &cfg).unwrap();
        let b = gen_corpus(&gold, 50, &cfg).unwrap();
        assert_eq!(a, b);
        for ex in &a {
            let words: Vec<&String> = ex.tokens.iter().filter(|t| !gold.function_words.contains(t)).collect();
            assert!(gold.verbs.contains(words[0]));
            let total: usize = words.iter().map(|w| gold.senses(w)[0].vertex_count()).sum();
            assert_eq!(total, ex.meaning.vertex_count());
        }
    }

    #[test]
    fn zipf_single_rank() {
        let mut r = rng::stream(1, 1);
        for _ in 0..100 {
            assert_eq!(zipf_pick(1, 1.0, &mut r), 1);
        }
    }

    #[test]
    fn zipf_two_ranks_ratio() {
        let mut r = rng::stream(3, 3);
        let n = 100_000;
        let ones = (0..n).filter(|_| zipf_pick(2, 1.0, &mut r) == 1).count() as f64;
        // P(1) = 2/3; three standard deviations.
        let p = 2.0 / 3.0;
        let sd = (p * (1.0 - p) / n as f64).sqrt();
        assert!((ones / n as f64 - p).abs() < 3.0 * sd);
    }
}
