//! Corpora, phrases, background knowledge and preprocessing.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::meaning::{first_occurrence, parse_term_with, Forest, ParseOptions};

/// A contiguous token sequence. Equality is token-wise.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Phrase(pub Vec<String>);

impl Phrase {
    pub fn new<S: AsRef<str>>(tokens: &[S]) -> Self {
        Phrase(tokens.iter().map(|t| t.as_ref().to_string()).collect())
    }

    /// Tokenizes `text` the same way sentences are tokenized.
    pub fn parse(text: &str) -> Self {
        Phrase(tokenize(text))
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Positions where the phrase starts in `tokens`.
    pub fn positions_in<'a>(&'a self, tokens: &'a [String]) -> impl Iterator<Item = usize> + 'a {
        let n = self.0.len();
        (0..(tokens.len() + 1).saturating_sub(n)).filter(move |&i| tokens[i..i + n] == self.0[..])
    }
}

impl fmt::Display for Phrase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(" "))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Example {
    pub id: usize,
    pub tokens: Vec<String>,
    pub meaning: Forest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CorpusFormat {
    /// Sentence line, term line, blank separator.
    #[default]
    PairedLines,
    /// One JSON object per line with `sentence` and `meaning` fields.
    RecordJson,
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paired-lines" => Ok(CorpusFormat::PairedLines),
            "record-json" => Ok(CorpusFormat::RecordJson),
            other => Err(Error::InvalidArgument(format!("unknown corpus format '{other}'"))),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::PairedLines => "paired-lines",
            CorpusFormat::RecordJson => "record-json",
        })
    }
}

/// Lowercases and splits on whitespace, detaching punctuation into tokens of
/// its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() || c == '_' || c == '\'' || c == '-' {
            word.extend(c.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            out.push(c.to_lowercase().collect());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

#[derive(Deserialize, Serialize)]
struct JsonRecord {
    sentence: String,
    meaning: String,
}

/// Drops the clause-terminating period of a Prolog query, if present.
fn clause_body(term: &str) -> &str {
    let t = term.trim();
    t.strip_suffix('.').unwrap_or(t)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|error| Error::Io {
        path: path.to_path_buf(),
        error,
    })
}

pub fn load_corpus(path: &Path, format: CorpusFormat, strip_answer: bool) -> Result<Vec<Example>> {
    parse_corpus(&read(path)?, format, strip_answer, &path.display().to_string())
}

/// Parses corpus text. `source` names the input in error messages.
pub fn parse_corpus(
    text: &str,
    format: CorpusFormat,
    strip_answer: bool,
    source: &str,
) -> Result<Vec<Example>> {
    let opts = ParseOptions {
        allow_empty: false,
        strip_answer,
    };
    let record_err = |record: usize, msg: String| Error::Record {
        path: source.to_string(),
        record,
        msg,
    };
    let mut out = Vec::new();
    match format {
        CorpusFormat::PairedLines => {
            let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
            while let Some((ln, sentence)) = lines.next() {
                let record = out.len() + 1;
                let Some((tln, term)) = lines.next() else {
                    return Err(record_err(
                        record,
                        format!("line {}: sentence without a meaning line", ln + 1),
                    ));
                };
                let meaning = parse_term_with(clause_body(term), opts)
                    .map_err(|e| record_err(record, format!("line {}: {e}", tln + 1)))?;
                out.push(Example {
                    id: out.len(),
                    tokens: tokenize(sentence),
                    meaning,
                });
            }
        }
        CorpusFormat::RecordJson => {
            for (ln, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record = out.len() + 1;
                let r: JsonRecord = serde_json::from_str(line)
                    .map_err(|e| record_err(record, format!("line {}: {e}", ln + 1)))?;
                let meaning = parse_term_with(clause_body(&r.meaning), opts)
                    .map_err(|e| record_err(record, format!("line {}: {e}", ln + 1)))?;
                out.push(Example {
                    id: out.len(),
                    tokens: tokenize(&r.sentence),
                    meaning,
                });
            }
        }
    }
    Ok(out)
}

/// Serializes a corpus; tokens are joined by single spaces.
pub fn write_corpus(examples: &[Example], format: CorpusFormat) -> String {
    let mut out = String::new();
    for ex in examples {
        let sentence = ex.tokens.join(" ");
        match format {
            CorpusFormat::PairedLines => {
                out.push_str(&sentence);
                out.push('\n');
                out.push_str(&ex.meaning.render());
                out.push_str("\n\n");
            }
            CorpusFormat::RecordJson => {
                let r = JsonRecord {
                    sentence,
                    meaning: ex.meaning.render(),
                };
                out.push_str(&serde_json::to_string(&r).expect("plain strings serialize"));
                out.push('\n');
            }
        }
    }
    out
}

/// Phrases with known meanings: database constants and the like, plus a
/// stop-list of phrases whose meaning is empty.
#[derive(Clone, Debug, Default)]
pub struct BackgroundLexicon {
    pub entries: Vec<(Phrase, Forest)>,
    pub stop_list: HashSet<Phrase>,
}

impl BackgroundLexicon {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty() && self.stop_list.is_empty()
    }

    /// Parses `phrase TAB term` lines.
    pub fn parse_entries(text: &str, source: &str) -> Result<Vec<(Phrase, Forest)>> {
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
            let phrase = Phrase::parse(phrase);
            if phrase.is_empty() {
                return Err(err("empty phrase".into()));
            }
            let meaning = parse_term_with(term, ParseOptions::default()).map_err(|e| err(e.to_string()))?;
            out.push((phrase, meaning));
        }
        Ok(out)
    }

    pub fn parse_stop_list(text: &str) -> HashSet<Phrase> {
        text.lines()
            .map(Phrase::parse)
            .filter(|p| !p.is_empty())
            .collect()
    }

    pub fn load(background: Option<&Path>, stop_list: Option<&Path>) -> Result<Self> {
        let mut bg = BackgroundLexicon::default();
        if let Some(p) = background {
            bg.entries = Self::parse_entries(&read(p)?, &p.display().to_string())?;
        }
        if let Some(p) = stop_list {
            bg.stop_list = Self::parse_stop_list(&read(p)?);
        }
        Ok(bg)
    }

    /// Removes stop-list phrases, longest first, leftmost first.
    pub fn strip_stop_phrases(&self, tokens: &[String]) -> Vec<String> {
        if self.stop_list.is_empty() {
            return tokens.to_vec();
        }
        let longest = self.stop_list.iter().map(Phrase::len).max().unwrap_or(0);
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        'outer: while i < tokens.len() {
            for n in (1..=longest.min(tokens.len() - i)).rev() {
                if self.stop_list.contains(&Phrase(tokens[i..i + n].to_vec())) {
                    i += n;
                    continue 'outer;
                }
            }
            out.push(tokens[i].clone());
            i += 1;
        }
        out
    }
}

/// A background entry consumed while preprocessing one example.
#[derive(Clone, Debug, PartialEq)]
pub struct BackgroundUse {
    pub phrase: Phrase,
    pub meaning: Forest,
}

/// Applies the background lexicon, then the stop-list, and normalizes the
/// remaining meaning.
///
/// Background entries are applied one at a time: among the entries whose
/// phrase occurs in the remaining tokens and whose meaning embeds in the
/// remaining meaning, the longest phrase wins, then the leftmost occurrence,
/// then file order. The tokens are removed and one embedding subtracted.
pub fn preprocess(ex: &Example, bg: &BackgroundLexicon) -> (Example, Vec<BackgroundUse>) {
    let mut tokens = ex.tokens.clone();
    let mut meaning = ex.meaning.clone().normalized();
    let mut used = Vec::new();
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for (k, (phrase, m)) in bg.entries.iter().enumerate() {
            let Some(pos) = phrase.positions_in(&tokens).next() else {
                continue;
            };
            let rank = (usize::MAX - phrase.len(), pos, k);
            if best.is_some_and(|b| b <= rank) {
                continue;
            }
            if first_occurrence(m, &meaning).is_some() {
                best = Some(rank);
            }
        }
        let Some((_, pos, k)) = best else { break };
        let (phrase, m) = &bg.entries[k];
        let emb = first_occurrence(m, &meaning).expect("checked above");
        meaning = meaning.subtract(&emb).expect("embedding into the same forest");
        tokens.drain(pos..pos + phrase.len());
        used.push(BackgroundUse {
            phrase: phrase.clone(),
            meaning: m.clone(),
        });
    }
    let tokens = bg.strip_stop_phrases(&tokens);
    (
        Example {
            id: ex.id,
            tokens,
            meaning: meaning.normalized(),
        },
        used,
    )
}

/// Every contiguous subsequence of 1..=max_len tokens, by start position and
/// then length.
pub fn extract_phrases(tokens: &[String], max_len: usize) -> Vec<Phrase> {
    extract_phrase_positions(tokens, max_len)
        .into_iter()
        .map(|(p, _)| p)
        .collect()
}

pub fn extract_phrase_positions(tokens: &[String], max_len: usize) -> Vec<(Phrase, usize)> {
    let mut out = Vec::new();
    for i in 0..tokens.len() {
        for n in 1..=max_len.min(tokens.len() - i) {
            out.push((Phrase(tokens[i..i + n].to_vec()), i));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meaning::{iso_equal, parse_term};

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenization_detaches_punctuation() {
        assert_eq!(
            toks("¿En que estado se encuentra Texarkana?"),
            ["¿", "en", "que", "estado", "se", "encuentra", "texarkana", "?"]
        );
        assert_eq!(toks("  "), Vec::<String>::new());
    }

    #[test]
    fn phrases_of_three_tokens() {
        let ps = extract_phrases(&toks("punta mas alta"), 2);
        let rendered: Vec<String> = ps.iter().map(|p| p.to_string()).collect();
        assert_eq!(rendered, ["punta", "punta mas", "mas", "mas alta", "alta"]);
        assert_eq!(extract_phrases(&toks("w1"), 2).len(), 1);
        assert_eq!(extract_phrases(&toks("a b c d e"), 5).len(), 15);
    }

    #[test]
    fn paired_lines_round_trip() {
        let text = "¿En que estado se encuentra Texarkana?\n\
                    answer(S, (state(S), eq(C,cityid(texarkana,_)), loc(C,S))).\n\n";
        let c = parse_corpus(text, CorpusFormat::PairedLines, true, "t").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].meaning.vertex_count(), 5);
        let again = parse_corpus(
            &write_corpus(&c, CorpusFormat::PairedLines),
            CorpusFormat::PairedLines,
            false,
            "t",
        )
        .unwrap();
        assert!(iso_equal(&again[0].meaning, &c[0].meaning));
        assert_eq!(again[0].tokens, c[0].tokens);
    }

    #[test]
    fn json_round_trip_and_multiset_semantics() {
        let line = r#"{"sentence":"w1 w2","meaning":"f1(f2)"}"#;
        let text = format!("{line}\n{line}\n");
        let c = parse_corpus(&text, CorpusFormat::RecordJson, false, "t").unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c[1].id, 1);
        assert_eq!(write_corpus(&c, CorpusFormat::RecordJson), text);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        assert!(parse_corpus("", CorpusFormat::PairedLines, false, "t").unwrap().is_empty());
        assert!(parse_corpus("\n\n", CorpusFormat::RecordJson, false, "t").unwrap().is_empty());
    }

    #[test]
    fn malformed_record_is_named() {
        let text = "a b\nf(a\n\n";
        match parse_corpus(text, CorpusFormat::PairedLines, false, "c.txt").unwrap_err() {
            Error::Record { record, path, .. } => {
                assert_eq!(record, 1);
                assert_eq!(path, "c.txt");
            }
            e => panic!("unexpected {e}"),
        }
        assert!(parse_corpus("a b\n", CorpusFormat::PairedLines, false, "t").is_err());
        assert!(parse_corpus("{\"sentence\":1}\n", CorpusFormat::RecordJson, false, "t").is_err());
    }

    fn sentence_three() -> Example {
        Example {
            id: 2,
            tokens: toks("¿En que estado se encuentra Texarkana?"),
            meaning: parse_term("(state(S), eq(C,cityid(texarkana,_)), loc(C,S))").unwrap(),
        }
    }

    #[test]
    fn preprocessing_sentence_three() {
        let bg = BackgroundLexicon {
            entries: vec![(
                Phrase::parse("texarkana"),
                parse_term("eq(_,cityid(texarkana,_))").unwrap(),
            )],
            stop_list: ["¿", "en", "que", "se", "?"].iter().map(|s| Phrase::parse(s)).collect(),
        };
        let (ex, used) = preprocess(&sentence_three(), &bg);
        assert_eq!(ex.tokens, ["estado", "encuentra"]);
        assert!(iso_equal(&ex.meaning, &parse_term("(state(S),loc(_,S))").unwrap()));
        assert_eq!(used.len(), 1);
        // Idempotent.
        let (again, used) = preprocess(&ex, &bg);
        assert_eq!(again, ex);
        assert!(used.is_empty());
    }

    #[test]
    fn background_needs_both_phrase_and_meaning() {
        let ex = sentence_three();
        let bg = BackgroundLexicon {
            entries: vec![(Phrase::parse("texarkana"), parse_term("eq(_,stateid(utah))").unwrap())],
            stop_list: HashSet::new(),
        };
        let (out, used) = preprocess(&ex, &bg);
        assert!(used.is_empty());
        assert_eq!(out.tokens, ex.tokens);
        assert!(iso_equal(&out.meaning, &ex.meaning));
        let (unchanged, _) = preprocess(&ex, &BackgroundLexicon::default());
        assert_eq!(unchanged.tokens, ex.tokens);
    }

    #[test]
    fn longest_background_phrase_first() {
        let ex = Example {
            id: 0,
            tokens: toks("area de los estados unitos"),
            meaning: parse_term("(area(C,_), eq(C,countryid(usa)))").unwrap(),
        };
        let bg = BackgroundLexicon {
            entries: vec![
                (Phrase::parse("estados"), parse_term("state(_)").unwrap()),
                (Phrase::parse("estados unitos"), parse_term("eq(_,countryid(usa))").unwrap()),
            ],
            stop_list: HashSet::new(),
        };
        let (out, used) = preprocess(&ex, &bg);
        assert_eq!(used.len(), 1);
        assert_eq!(out.tokens, ["area", "de", "los"]);
        assert_eq!(out.meaning.render(), "area(_,_)");
    }

    #[test]
    fn multi_token_stop_phrases() {
        let bg = BackgroundLexicon {
            entries: vec![],
            stop_list: [Phrase::parse("de los"), Phrase::parse("de")].into_iter().collect(),
        };
        assert_eq!(bg.strip_stop_phrases(&toks("area de los de x")), ["area", "x"]);
    }

    #[test]
    fn background_file_format() {
        let entries =
            BackgroundLexicon::parse_entries("estados unitos\teq(_,countryid(usa))\n\n", "bg").unwrap();
        assert_eq!(entries[0].0, Phrase::new(&["estados", "unitos"]));
        assert!(BackgroundLexicon::parse_entries("no tab here", "bg").is_err());
        assert!(BackgroundLexicon::parse_entries("x\tf(", "bg").is_err());
    }
}
